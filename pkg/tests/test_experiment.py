import math

import numpy as np
import pandas as pd
import pytest

from src.benchmark import experiment
from src.benchmark.experiment import (
    evaluate_model,
    hyper_search,
    prepare_trial,
    rank_surface,
    run_trials,
    sample_std,
    sweep_pairs,
    train_variant,
)
from src.data.dataset import save_split, split_privileged
from src.errors import ExperimentError, TrainingAbortedError
from src.models.schemas import (
    ExperimentConfig,
    FixedMode,
    Metric,
    SweepGrid,
    SweepMode,
    TaskKind,
    TrainConfig,
    Variant,
)


def regression_config(**updates):
    values = dict(
        synthetic="sine",
        task_kind=TaskKind.REGRESSION,
        n_train=150,
        trials=3,
        base_seed=5,
        irvfl_L_max=60,
        train=TrainConfig(L_max=40, epsilon=0.1),
    )
    values.update(updates)
    return ExperimentConfig(**values)


def classification_config(**updates):
    values = dict(
        synthetic="blobs",
        task_kind=TaskKind.CLASSIFICATION,
        n_train=100,
        trials=2,
        train=TrainConfig(L_max=8),
    )
    values.update(updates)
    return ExperimentConfig(**values)


def test_run_trials_covers_every_variant(sine_table):
    stats = run_trials(regression_config(), sine_table)
    assert list(stats) == list(Variant)
    for variant, s in stats.items():
        assert [r.trial for r in s.per_trial] == [0, 1, 2]
        assert [r.seed for r in s.per_trial] == [5, 6, 7]
        assert s.ave_nodes == pytest.approx(np.mean([r.final_L for r in s.per_trial]))
        assert s.curve and len(s.curve) == max(r.final_L for r in s.per_trial)


def test_variants_share_splits_within_a_trial(sine_table):
    stats = run_trials(regression_config(), sine_table)
    for trial in range(3):
        split_hashes = {s.per_trial[trial].split_hash for s in stats.values()}
        train_hashes = {s.per_trial[trial].train_hash for s in stats.values()}
        assert len(split_hashes) == 1
        assert len(train_hashes) == 1


def test_rerun_reproduces_records(sine_table):
    first = run_trials(regression_config(), sine_table)
    second = run_trials(regression_config(), sine_table)
    for variant in Variant:
        assert first[variant].per_trial == second[variant].per_trial


def test_parallel_trials_match_sequential(sine_table):
    sequential = run_trials(regression_config(variants=[Variant.SCN]), sine_table)
    parallel = run_trials(regression_config(variants=[Variant.SCN], jobs=2), sine_table)
    assert sequential[Variant.SCN].per_trial == parallel[Variant.SCN].per_trial


def test_statistics_match_two_pass_recomputation(sine_table):
    stats = run_trials(regression_config(trials=4, variants=[Variant.SCN_PLUS]), sine_table)
    s = stats[Variant.SCN_PLUS]
    values = [r.test_metric for r in s.per_trial]
    mean = math.fsum(values) / len(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    assert s.ave == pytest.approx(mean, abs=1e-12)
    assert s.dev == pytest.approx(math.sqrt(variance), abs=1e-12)


def test_single_trial_has_zero_dev(sine_table):
    s = run_trials(regression_config(trials=1, variants=[Variant.SCN]), sine_table)[Variant.SCN]
    assert s.dev == 0.0
    assert s.train_dev == 0.0
    assert sample_std([3.0]) == 0.0


def test_classification_reports_accuracy_without_nodes(blobs_table):
    config = classification_config()
    assert config.fixed_mode is FixedMode.FIXED_L_MAX
    stats = run_trials(config, blobs_table)
    for s in stats.values():
        assert s.ave_nodes is None
        assert all(0.0 <= r.test_metric <= 100.0 for r in s.per_trial)
        assert all(r.final_L == 8 for r in s.per_trial)


def test_aborted_trials_are_excluded(sine_table, monkeypatch):
    real = experiment.train_variant

    def flaky(data, config, variant):
        if variant is Variant.SCN and data.trial == 0:
            raise TrainingAbortedError("no usable candidate")
        return real(data, config, variant)

    monkeypatch.setattr(experiment, "train_variant", flaky)
    config = regression_config(trials=4, variants=[Variant.SCN], min_survival=0.5)
    s = run_trials(config, sine_table)[Variant.SCN]
    assert s.n_failed == 1
    assert [r.trial for r in s.per_trial] == [1, 2, 3]

    with pytest.raises(ExperimentError):
        run_trials(regression_config(trials=4, variants=[Variant.SCN]), sine_table)


def test_recorded_split_is_replayed(sine_table, tmp_path):
    split = split_privileged(sine_table, 99)
    save_split(split, tmp_path / "split.json")
    config = regression_config(split_path=str(tmp_path / "split.json"), variants=[Variant.SCN])
    s = run_trials(config, sine_table)[Variant.SCN]
    assert {r.split_hash for r in s.per_trial} == {split.fingerprint()}


def test_trial_matrices_use_training_rows_only(sine_table):
    data = prepare_trial(sine_table, regression_config(), trial=0)
    assert data.X_train.shape == (150, len(data.split.normal_indices))
    assert data.X_train.min() == 0.0 and data.X_train.max() == 1.0
    assert data.T_train.min() == 0.0 and data.T_train.max() == 1.0
    assert set(data.train_rows).isdisjoint(data.test_rows)


def test_evaluate_model_on_training_rows_matches_trial_score(sine_table):
    config = regression_config()
    data = prepare_trial(sine_table, config, trial=0)
    model, report = train_variant(data, config, Variant.SCN)
    score = experiment.score(model, sine_table, data.targets, data.train_rows)
    assert score == pytest.approx(report.rmse_history[-1], abs=1e-12)
    assert evaluate_model(model, sine_table) >= 0.0


def test_sweep_pairs_grid_order():
    grid = SweepGrid(C_values=[0.1, 1.0], gamma_values=[1e2, 1e3])
    assert sweep_pairs(grid, seed=0) == [(0.1, 1e2), (0.1, 1e3), (1.0, 1e2), (1.0, 1e3)]


def test_sweep_pairs_random_mode_is_seeded_and_bounded():
    grid = SweepGrid(mode=SweepMode.RANDOM, draws=15)
    pairs = sweep_pairs(grid, seed=4)
    assert pairs == sweep_pairs(grid, seed=4)
    assert len(pairs) == 15
    assert all(1e-2 <= C <= 1e1 and 1e2 <= gamma <= 1e6 for C, gamma in pairs)


def test_rank_surface_prefers_test_then_train():
    surface = pd.DataFrame(
        {
            "C": [1.0, 2.0, 3.0],
            "gamma": [1e2, 1e2, 1e2],
            "train_metric": [90.0, 95.0, 99.0],
            "test_metric": [80.0, 85.0, 85.0],
        }
    )
    ranked = rank_surface(surface, Metric.ACCURACY)
    assert ranked["rank"].tolist() == [3, 2, 1]
    ranked = rank_surface(surface, Metric.RMSE)
    assert ranked["rank"].tolist() == [1, 2, 3]


def test_rank_ignores_gamma_labels_when_gamma_is_constant():
    surface = pd.DataFrame(
        {"C": [0.1, 1.0, 10.0], "gamma": [1e3] * 3,
         "train_metric": [0.2, 0.1, 0.3], "test_metric": [0.3, 0.2, 0.4]}
    )
    relabelled = surface.assign(gamma=[1e5] * 3)
    assert (
        rank_surface(surface, Metric.RMSE)["rank"].tolist()
        == rank_surface(relabelled, Metric.RMSE)["rank"].tolist()
    )


def test_single_point_sweep_recommends_that_point(blobs_table):
    grid = SweepGrid(C_values=[0.1], gamma_values=[1e5], trials=2)
    result = hyper_search(classification_config(), grid, blobs_table)
    assert result.recommended == (0.1, 1e5)
    assert len(result.surface) == 1
    assert result.surface["rank"].tolist() == [1]


def test_sweep_surface_covers_grid(blobs_table):
    grid = SweepGrid(C_values=[0.01, 1.0], gamma_values=[1e2, 1e5], trials=1)
    result = hyper_search(classification_config(), grid, blobs_table)
    assert len(result.surface) == 4
    assert sorted(result.surface["rank"]) == [1, 2, 3, 4]
    assert result.recommended in sweep_pairs(grid, 0)
