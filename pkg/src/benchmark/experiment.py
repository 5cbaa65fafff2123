"""
Multi-trial benchmark runner and C / gamma sweep.

A benchmark trial k:
1. Shuffles the rows and splits train/test with seed base_seed + k
2. Splits the attributes into normal/privileged views with the same seed
   (or replays a recorded split)
3. Fits the input normaliser and the target encoding on the training rows
4. Trains every requested variant on the same matrices with the same seed
5. Scores train and test rows through the normal view only

Statistics are folded in trial order, so parallel and sequential runs
produce the same records.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from scipy.stats import loguniform
from sklearn.model_selection import ParameterGrid, ParameterSampler

from src.data.dataset import (
    DataTable,
    EncodedTargets,
    FeatureSplit,
    NormalizationParams,
    apply_normalizer,
    encode_targets,
    fit_normalizer,
    load_csv,
    load_split,
    split_privileged,
    split_train_test,
)
from src.data.synthetic import make_synthetic
from src.errors import DataError, ExperimentError, TrainingAbortedError
from src.learner.trainers import TrainReport, predict, predict_labels, train
from src.models.network import Model
from src.models.schemas import (
    ExperimentConfig,
    FixedMode,
    LupiParams,
    Metric,
    SweepGrid,
    SweepMode,
    TaskKind,
    Variant,
)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one variant in one trial."""

    trial: int
    seed: int
    variant: Variant
    train_metric: float
    test_metric: float
    final_L: int
    split_hash: str
    train_hash: str
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class TrialStats:
    """
    Aggregate of one variant over the surviving trials.

    ave/dev describe the test metric, train_ave/train_dev the training
    metric. dev uses the sample standard deviation and is 0 for a single
    trial. ave_nodes is only set in fixed_epsilon mode.
    """

    variant: Variant
    ave: float
    dev: float
    train_ave: float
    train_dev: float
    ave_nodes: Optional[float]
    per_trial: List[TrialRecord]
    curve: List[float] = field(default_factory=list)
    n_failed: int = 0


@dataclass
class TrialData:
    """Matrices shared by every variant of one trial."""

    trial: int
    seed: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    split: FeatureSplit
    targets: EncodedTargets
    X_train: np.ndarray
    X_tilde_train: np.ndarray
    normal_normalization: NormalizationParams

    @property
    def T_train(self) -> np.ndarray:
        return self.targets.T[self.train_rows]


@dataclass
class _TrialOutcome:
    trial: int
    records: List[TrialRecord]
    histories: Dict[Variant, List[float]]
    failed: List[Variant]


@dataclass
class SweepResult:
    """Every evaluated (C, γ) pair with its rank; rank 1 is the recommendation."""

    surface: pd.DataFrame
    metric: Metric

    @property
    def recommended(self) -> Tuple[float, float]:
        best = self.surface.loc[self.surface["rank"] == 1].iloc[0]
        return float(best["C"]), float(best["gamma"])


def _index_hash(rows: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(rows, dtype=np.int64).tobytes()).hexdigest()[:16]


def sample_std(values: List[float]) -> float:
    """Sample standard deviation (divisor n - 1); 0 for a single value."""
    if len(values) < 2:
        return 0.0
    return float(np.std(np.asarray(values, dtype=np.float64), ddof=1))


def load_experiment_table(config: ExperimentConfig) -> DataTable:
    """Load the CSV named by the config, or build its synthetic dataset."""
    if config.synthetic is not None:
        logger.info(f"Using synthetic dataset '{config.synthetic}' (seed {config.base_seed})")
        return make_synthetic(config.synthetic, seed=config.base_seed)
    return load_csv(config.dataset_path, target_spec=config.target_column)


def prepare_trial(
    table: DataTable,
    config: ExperimentConfig,
    trial: int,
    split: Optional[FeatureSplit] = None,
) -> TrialData:
    """
    Build the train matrices of trial `trial`.

    Args:
        table: Full dataset
        config: Experiment settings
        trial: Trial index k; the trial seed is base_seed + k
        split: Recorded feature split to replay instead of drawing one

    Returns:
        TrialData
    """
    seed = config.base_seed + trial
    train_rows, test_rows = split_train_test(table, config.n_train, seed)
    if split is None:
        split = split_privileged(table, seed)

    params = fit_normalizer(table, train_rows)
    normal = list(split.normal_indices)
    privileged = list(split.privileged_indices)
    normal_params = params.select(normal)

    train_features = table.features[train_rows]
    X_train = apply_normalizer(normal_params, train_features[:, normal])
    if privileged:
        X_tilde_train = apply_normalizer(params.select(privileged), train_features[:, privileged])
    else:
        X_tilde_train = np.zeros((len(train_rows), 0))

    targets = encode_targets(table, config.task_kind, fit_rows=train_rows)
    return TrialData(
        trial=trial,
        seed=seed,
        train_rows=train_rows,
        test_rows=test_rows,
        split=split,
        targets=targets,
        X_train=X_train,
        X_tilde_train=X_tilde_train,
        normal_normalization=normal_params,
    )


def score(model: Model, table: DataTable, targets: EncodedTargets, rows: np.ndarray) -> float:
    """
    Accuracy in percent for classification, RMSE on the normalised target
    scale for regression. Only raw normal-view attributes reach the model.
    """
    features = table.features[rows]
    if model.task_kind is TaskKind.CLASSIFICATION:
        predicted = predict_labels(model, features)
        truth = np.array([str(v) for v in table.targets_raw[rows]], dtype=object)
        return float(np.mean(predicted == truth) * 100.0)
    residual = predict(model, features) - targets.T[rows]
    return float(np.sqrt(np.mean(residual * residual)))


def evaluate_model(model: Model, table: DataTable) -> float:
    """
    Score a trained model on a labelled table with the model's own target
    encoding (no refitting).

    Raises:
        DataError: If the table has no targets or non-numeric regression targets
    """
    if not table.has_targets:
        raise DataError("Cannot evaluate a model on a table without targets")
    if model.task_kind is TaskKind.CLASSIFICATION:
        predicted = predict_labels(model, table.features)
        truth = np.array([str(v) for v in table.targets_raw], dtype=object)
        return float(np.mean(predicted == truth) * 100.0)
    try:
        values = np.array([float(v) for v in table.targets_raw], dtype=np.float64)
    except ValueError as e:
        raise DataError(f"Regression targets must be numeric: {e}")
    T = values.reshape(-1, 1)
    if model.target_params is not None:
        T = apply_normalizer(model.target_params, T, clip=False)
    residual = predict(model, table.features) - T
    return float(np.sqrt(np.mean(residual * residual)))


def train_variant(
    data: TrialData, config: ExperimentConfig, variant: Variant
) -> Tuple[Model, TrainReport]:
    """Train one variant on the matrices of a prepared trial."""
    train_config = config.train_config_for(variant, seed=data.seed)
    return train(
        data.X_train,
        data.T_train,
        train_config,
        X_tilde=data.X_tilde_train if variant.uses_privileged else None,
        task_kind=config.task_kind,
        normalization=data.normal_normalization,
        split=data.split,
        class_labels=data.targets.class_labels,
        target_params=data.targets.target_params,
    )


def _run_trial(
    table: DataTable,
    config: ExperimentConfig,
    trial: int,
    split: Optional[FeatureSplit],
) -> _TrialOutcome:
    data = prepare_trial(table, config, trial, split)
    split_hash = data.split.fingerprint()
    train_hash = _index_hash(data.train_rows)

    records: List[TrialRecord] = []
    histories: Dict[Variant, List[float]] = {}
    failed: List[Variant] = []
    for variant in config.variants:
        try:
            model, report = train_variant(data, config, variant)
        except TrainingAbortedError as e:
            logger.warning(f"Trial {trial} ({variant.value}) aborted: {e}")
            failed.append(variant)
            continue
        records.append(
            TrialRecord(
                trial=trial,
                seed=data.seed,
                variant=variant,
                train_metric=score(model, table, data.targets, data.train_rows),
                test_metric=score(model, table, data.targets, data.test_rows),
                final_L=report.final_L,
                split_hash=split_hash,
                train_hash=train_hash,
                wall_time=report.wall_time,
            )
        )
        histories[variant] = list(report.rmse_history)
    logger.debug(f"Trial {trial} finished ({len(records)} variants)")
    return _TrialOutcome(trial=trial, records=records, histories=histories, failed=failed)


def _mean_curve(histories: List[List[float]]) -> List[float]:
    """
    Mean training RMSE per node count.

    A trial that stopped early keeps its final RMSE for the remaining node
    counts, since its network no longer changes.
    """
    histories = [h for h in histories if h]
    if not histories:
        return []
    length = max(len(h) for h in histories)
    rows = [
        {"trial": i, "L": L + 1, "rmse": h[min(L, len(h) - 1)]}
        for i, h in enumerate(histories)
        for L in range(length)
    ]
    frame = pd.DataFrame(rows)
    return frame.groupby("L")["rmse"].mean().sort_index().tolist()


def run_trials(
    config: ExperimentConfig, table: Optional[DataTable] = None
) -> Dict[Variant, TrialStats]:
    """
    Run config.trials seeded trials of every requested variant.

    Args:
        config: Experiment settings
        table: Preloaded dataset (default: load from config)

    Returns:
        TrialStats per variant, in config.variants order

    Raises:
        ExperimentError: If a variant keeps fewer than min_survival of its trials
    """
    if table is None:
        table = load_experiment_table(config)

    split = None
    if config.split_path is not None:
        split = load_split(config.split_path)
        split.check_covers(table.n_attributes)
        logger.info(f"Replaying feature split from {config.split_path}")

    logger.info(
        f"Running {config.trials} trials of {[v.value for v in config.variants]} "
        f"({config.fixed_mode.value}, jobs={config.jobs})"
    )
    outcomes = Parallel(n_jobs=config.jobs)(
        delayed(_run_trial)(table, config, trial, split) for trial in range(config.trials)
    )
    outcomes = sorted(outcomes, key=lambda o: o.trial)

    results: Dict[Variant, TrialStats] = {}
    for variant in config.variants:
        records = [r for o in outcomes for r in o.records if r.variant is variant]
        n_failed = sum(variant in o.failed for o in outcomes)
        survival = len(records) / config.trials
        if n_failed:
            logger.warning(
                f"{variant.value}: {n_failed} of {config.trials} trials excluded after aborting"
            )
        if survival < config.min_survival:
            raise ExperimentError(
                f"{variant.value}: only {len(records)} of {config.trials} trials survived "
                f"(need {config.min_survival:.0%})"
            )

        test = [r.test_metric for r in records]
        train_values = [r.train_metric for r in records]
        nodes = [r.final_L for r in records]
        stats = TrialStats(
            variant=variant,
            ave=float(np.mean(test)),
            dev=sample_std(test),
            train_ave=float(np.mean(train_values)),
            train_dev=sample_std(train_values),
            ave_nodes=float(np.mean(nodes))
            if config.fixed_mode is FixedMode.FIXED_EPSILON
            else None,
            per_trial=records,
            curve=_mean_curve([o.histories[variant] for o in outcomes if variant in o.histories]),
            n_failed=n_failed,
        )
        results[variant] = stats
        nodes_text = f" L={stats.ave_nodes:.2f}" if stats.ave_nodes is not None else ""
        logger.info(
            f"{variant.value}: test {config.metric.value} {stats.ave:.4f} ± {stats.dev:.4f}"
            f"{nodes_text}"
        )
    return results


def sweep_pairs(grid: SweepGrid, seed: int) -> List[Tuple[float, float]]:
    """(C, γ) pairs to evaluate: the full grid, or log-uniform random draws."""
    if grid.mode is SweepMode.RANDOM:
        space = {
            "C": loguniform(*grid.C_bounds),
            "gamma": loguniform(*grid.gamma_bounds),
        }
        sampler = ParameterSampler(
            space, n_iter=grid.draws, random_state=np.random.RandomState(seed)
        )
        return [(float(p["C"]), float(p["gamma"])) for p in sampler]
    return [
        (float(p["C"]), float(p["gamma"]))
        for p in ParameterGrid({"C": grid.C_values, "gamma": grid.gamma_values})
    ]


def rank_surface(surface: pd.DataFrame, metric: Metric) -> pd.DataFrame:
    """
    Add a 1-based rank column: best test metric first, ties broken by the
    training metric, remaining ties by evaluation order.
    """
    ascending = not metric.higher_is_better
    order = surface.sort_values(
        ["test_metric", "train_metric"], ascending=[ascending, ascending], kind="mergesort"
    ).index
    ranked = surface.copy()
    ranked.loc[order, "rank"] = np.arange(1, len(order) + 1)
    ranked["rank"] = ranked["rank"].astype(int)
    return ranked


def hyper_search(
    config: ExperimentConfig, grid: SweepGrid, table: Optional[DataTable] = None
) -> SweepResult:
    """
    Evaluate SCN+ over a C / γ search space.

    Each pair runs grid.trials trials (the benchmark trial count is not used).

    Args:
        config: Experiment settings; its train config supplies everything but C and γ
        grid: Search space
        table: Preloaded dataset (default: load from config)

    Returns:
        SweepResult with columns C, gamma, train_metric, test_metric, rank

    Raises:
        ExperimentError: On an empty search space or a failed pair
    """
    pairs = sweep_pairs(grid, config.base_seed)
    if not pairs:
        raise ExperimentError("The C / gamma search space is empty")
    if table is None:
        table = load_experiment_table(config)

    logger.info(f"Sweeping {len(pairs)} (C, gamma) pairs with {grid.trials} trials each")
    rows = []
    for C, gamma in pairs:
        pair_config = config.model_copy(
            update={
                "trials": grid.trials,
                "variants": [Variant.SCN_PLUS],
                "train": config.train.for_variant(
                    Variant.SCN_PLUS, lupi=LupiParams(C=C, gamma=gamma)
                ),
            }
        )
        stats = run_trials(pair_config, table)[Variant.SCN_PLUS]
        rows.append(
            {"C": C, "gamma": gamma, "train_metric": stats.train_ave, "test_metric": stats.ave}
        )
        logger.info(f"C={C:g} gamma={gamma:g}: test {stats.ave:.4f} train {stats.train_ave:.4f}")

    surface = rank_surface(pd.DataFrame(rows), config.metric)
    result = SweepResult(surface=surface, metric=config.metric)
    C, gamma = result.recommended
    logger.info(f"Recommended C={C:g}, gamma={gamma:g}")
    return result
