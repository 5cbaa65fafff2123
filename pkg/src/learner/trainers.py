"""
Incremental trainers for SCN, SCN+, IRVFL and IRVFL+.

All four share one constructive loop:
1. Start from the empty network, e_0 = T
2. For each new node, draw candidates scale by scale from Υ
3. Supervised variants keep only candidates with min_q ξ_{L,q} >= 0 whose
   node also gives ‖e_{L,q}‖² <= (r + μ_L)‖e_{L-1,q}‖², and install the one
   with the largest Σ_q ξ_{L,q}; if no scale yields one, r is renewed
   (r ← r + τ, τ ~ U(0, 1 - r)) and the search repeats
4. Unsupervised variants install the first usable candidate
5. Output weights come from the projection rule (SCN, IRVFL) or the
   privileged closed form (SCN+, IRVFL+); the residual is updated
6. Stop when the training error is within ε or L reaches L_max
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.data.dataset import FeatureSplit, NormalizationParams
from src.errors import DataError, DegenerateCandidateError, TrainingAbortedError
from src.learner.random_config import (
    CandidateNode,
    RandomStream,
    candidate_stream_id,
    hidden_output,
    renewal_generator,
    sample_candidate,
)
from src.learner.solvers import (
    lupi_beta,
    mu_schedule,
    scn_beta,
    xi_scn,
    xi_scn_plus,
)
from src.models.network import Model
from src.models.schemas import TaskKind, ToleranceNorm, TrainConfig

CONTRACTION_SLACK = 1e-10


class StopReason(str, Enum):
    TOLERANCE_MET = "tolerance_met"
    L_MAX_REACHED = "L_max_reached"


@dataclass
class ResidualState:
    """Current training residual e (N×m) and its summaries."""

    e: np.ndarray
    sq_norm_per_dim: np.ndarray
    rmse: float

    @classmethod
    def from_residual(cls, e: np.ndarray) -> "ResidualState":
        sq = np.sum(e * e, axis=0)
        rmse = float(np.sqrt(sq.sum() / e.size)) if e.size else 0.0
        return cls(e=e, sq_norm_per_dim=sq, rmse=rmse)

    @property
    def sq_norm(self) -> float:
        return float(self.sq_norm_per_dim.sum())

    def error(self, norm: ToleranceNorm) -> float:
        """The quantity compared against ε."""
        if norm is ToleranceNorm.FROBENIUS:
            return float(np.sqrt(self.sq_norm))
        return self.rmse


@dataclass(frozen=True)
class NodeRecord:
    """How one node was chosen; r, mu and xi_total are NaN for unsupervised variants."""

    L: int
    r: float
    mu: float
    lambda_used: float
    xi_total: float
    supervised: bool
    renewals: int
    sq_norm_before: float
    sq_norm_after: float


@dataclass
class TrainReport:
    final_L: int
    rmse_history: List[float]
    r_renewals: int
    candidates_evaluated: int
    stop_reason: StopReason
    nodes: List[NodeRecord] = field(default_factory=list)
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class _Scored:
    candidate: CandidateNode
    h: np.ndarray
    h_tilde: Optional[np.ndarray]
    beta: np.ndarray
    beta_tilde: Optional[np.ndarray]
    xi: np.ndarray
    contracts: bool = True

    @property
    def score(self) -> float:
        return float(self.xi.sum())

    @property
    def admissible(self) -> bool:
        return self.contracts and bool(self.xi.min() >= 0)


def _contracts(e: np.ndarray, gain: np.ndarray, r: float, mu: float) -> bool:
    """Per output dimension: ‖e - gain‖² <= (r + μ_L)‖e‖² + CONTRACTION_SLACK."""
    before = np.sum(e * e, axis=0)
    after = np.sum((e - gain) ** 2, axis=0)
    return bool(np.all(after <= (r + mu) * before + CONTRACTION_SLACK))


class IncrementalTrainer:
    """One training run of one variant on fixed training matrices."""

    def __init__(
        self,
        X: np.ndarray,
        T: np.ndarray,
        config: TrainConfig,
        X_tilde: Optional[np.ndarray] = None,
    ):
        """
        Args:
            X: Normalised normal-view inputs, N×n
            T: Encoded targets, N×m
            config: Training settings
            X_tilde: Normalised privileged inputs, N×d (SCN+ / IRVFL+ only)
        """
        X = np.asarray(X, dtype=np.float64)
        T = np.asarray(T, dtype=np.float64)
        if T.ndim == 1:
            T = T.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != T.shape[0]:
            raise DataError(f"X has shape {X.shape} but T has {T.shape[0]} rows")

        variant = config.variant
        if variant.uses_privileged:
            if X_tilde is None:
                raise DataError(f"{variant.value} needs privileged features")
            X_tilde = np.asarray(X_tilde, dtype=np.float64)
            if X_tilde.ndim != 2 or X_tilde.shape[0] != X.shape[0] or X_tilde.shape[1] < 1:
                raise DataError(
                    f"X_tilde has shape {X_tilde.shape}, expected ({X.shape[0]}, d>=1)"
                )
        else:
            X_tilde = None

        self.X = X
        self.T = T
        self.X_tilde = X_tilde
        self.config = config
        self.n = X.shape[1]
        self.d = X_tilde.shape[1] if X_tilde is not None else 0

    def _score(self, candidate: CandidateNode, e: np.ndarray, r: float, mu: float) -> _Scored:
        config = self.config
        h, h_tilde = hidden_output(candidate, self.X, self.X_tilde, config.activation)

        if config.variant.uses_privileged:
            beta, beta_tilde = lupi_beta(e, h, h_tilde, config.lupi)
            if not config.variant.supervised:
                xi = np.full(e.shape[1], np.nan)
                return _Scored(candidate, h, h_tilde, beta, beta_tilde, xi)
            xi = xi_scn_plus(e, h, h_tilde, beta, beta_tilde, r, mu)
            # The slack term can grow the residual even when every ξ_q >= 0.
            gain = np.outer(h, beta) + np.outer(h_tilde, beta_tilde)
            contracts = _contracts(e, gain, r, mu)
            return _Scored(candidate, h, h_tilde, beta, beta_tilde, xi, contracts)

        if config.variant.supervised:
            xi = xi_scn(e, h, r, mu)
        else:
            xi = np.full(e.shape[1], np.nan)
        # Raises DegenerateCandidateError for a zero-norm h.
        beta = scn_beta(e, h)
        return _Scored(candidate, h, None, beta, None, xi)

    def _draw(self, L: int, scale_index: int, index: int, lam: float, epoch: int) -> CandidateNode:
        stream = RandomStream(
            self.config.seed, candidate_stream_id(L, scale_index, index), epoch=epoch
        )
        return sample_candidate(stream, lam, self.n, self.d, index)

    def _configure_node(self, L: int, e: np.ndarray) -> Tuple[_Scored, float, float, bool, int, int]:
        """
        Choose node L.

        Returns:
            (chosen candidate, r used, μ_L used, admitted under supervision,
             renewals, candidates evaluated)
        """
        config = self.config
        schedule = config.schedule
        supervised = config.variant.supervised
        renewals_rng = renewal_generator(config.seed, L)

        r = config.r_init
        evaluated = 0
        degenerate = 0
        best_seen: Optional[_Scored] = None

        try:
            for epoch in range(config.renewal_cap + 1):
                mu = mu_schedule(r, L) if supervised else float("nan")
                for scale_index, lam in enumerate(schedule.lambda_values):
                    pool: List[_Scored] = []
                    for index in range(schedule.t_max):
                        candidate = self._draw(L, scale_index, index, lam, epoch)
                        evaluated += 1
                        try:
                            scored = self._score(candidate, e, r, mu)
                        except DegenerateCandidateError:
                            degenerate += 1
                            continue

                        if not supervised:
                            return scored, float("nan"), mu, False, epoch, evaluated

                        if best_seen is None or scored.score > best_seen.score:
                            best_seen = scored
                        if scored.admissible:
                            pool.append(scored)

                    if pool:
                        # max keeps the first maximum, i.e. the lowest candidate index
                        chosen = max(pool, key=lambda s: s.score)
                        logger.debug(
                            f"L={L}: λ={lam} pool={len(pool)} ξ={chosen.score:.4e} r={r:.6f}"
                        )
                        return chosen, r, mu, True, epoch, evaluated

                if epoch < config.renewal_cap and supervised:
                    tau = renewals_rng.uniform(0.0, 1.0 - r)
                    r = r + tau
                    logger.debug(f"L={L}: no admissible candidate, renewing r to {r:.6f}")

            if best_seen is None:
                raise TrainingAbortedError(
                    f"Node {L}: all {evaluated} candidates were degenerate "
                    f"after {config.renewal_cap} renewals"
                )
            logger.warning(
                f"Node {L}: renewal cap {config.renewal_cap} reached, accepting best "
                f"candidate with ξ={best_seen.score:.4e} (infeasible)"
            )
            return best_seen, r, mu, False, config.renewal_cap, evaluated
        finally:
            if degenerate:
                logger.warning(
                    f"Node {L}: discarded {degenerate} of {evaluated} candidates "
                    f"as degenerate"
                )

    def run(
        self,
        task_kind: TaskKind = TaskKind.REGRESSION,
        normalization: Optional[NormalizationParams] = None,
        split: Optional[FeatureSplit] = None,
        class_labels: Optional[Sequence[str]] = None,
        target_params: Optional[NormalizationParams] = None,
    ) -> Tuple[Model, TrainReport]:
        config = self.config
        started = time.perf_counter()

        state = ResidualState.from_residual(self.T.copy())
        W, b, beta = [], [], []
        W_tilde, b_tilde, beta_tilde = [], [], []
        rmse_history: List[float] = []
        records: List[NodeRecord] = []
        renewals_total = 0
        evaluated_total = 0

        L = 0
        while L < config.L_max and state.error(config.tolerance_norm) > config.epsilon:
            L += 1
            chosen, r, mu, admitted, renewals, evaluated = self._configure_node(L, state.e)
            renewals_total += renewals
            evaluated_total += evaluated

            gain = np.outer(chosen.h, chosen.beta)
            if chosen.h_tilde is not None:
                gain += np.outer(chosen.h_tilde, chosen.beta_tilde)
            new_state = ResidualState.from_residual(state.e - gain)

            candidate = chosen.candidate
            W.append(candidate.w)
            b.append(candidate.b)
            beta.append(chosen.beta)
            if config.variant.uses_privileged:
                W_tilde.append(candidate.w_tilde)
                b_tilde.append(candidate.b_tilde)
                beta_tilde.append(chosen.beta_tilde)

            records.append(
                NodeRecord(
                    L=L,
                    r=r,
                    mu=mu,
                    lambda_used=candidate.lambda_used,
                    xi_total=chosen.score,
                    supervised=admitted,
                    renewals=renewals,
                    sq_norm_before=state.sq_norm,
                    sq_norm_after=new_state.sq_norm,
                )
            )
            rmse_history.append(new_state.rmse)
            state = new_state
            logger.debug(f"{config.variant.value} L={L} rmse={state.rmse:.6f}")

        stop_reason = (
            StopReason.TOLERANCE_MET
            if state.error(config.tolerance_norm) <= config.epsilon
            else StopReason.L_MAX_REACHED
        )
        m = self.T.shape[1]
        model = Model(
            variant=config.variant,
            activation=config.activation,
            task_kind=task_kind,
            W=np.array(W, dtype=np.float64).reshape(L, self.n),
            b=np.array(b, dtype=np.float64),
            beta=np.array(beta, dtype=np.float64).reshape(L, m),
            W_tilde=np.array(W_tilde, dtype=np.float64).reshape(len(W_tilde), self.d),
            b_tilde=np.array(b_tilde, dtype=np.float64),
            beta_tilde=np.array(beta_tilde, dtype=np.float64).reshape(len(beta_tilde), m),
            normalization=normalization,
            split=split,
            class_labels=tuple(class_labels) if class_labels is not None else None,
            target_params=target_params,
        )
        report = TrainReport(
            final_L=L,
            rmse_history=rmse_history,
            r_renewals=renewals_total,
            candidates_evaluated=evaluated_total,
            stop_reason=stop_reason,
            nodes=records,
            wall_time=time.perf_counter() - started,
        )
        logger.info(
            f"{config.variant.value}: L={L} rmse={state.rmse:.6f} "
            f"stop={stop_reason.value} renewals={renewals_total} "
            f"candidates={evaluated_total}"
        )
        return model, report


def train(
    X: np.ndarray,
    T: np.ndarray,
    config: TrainConfig,
    X_tilde: Optional[np.ndarray] = None,
    task_kind: TaskKind = TaskKind.REGRESSION,
    normalization: Optional[NormalizationParams] = None,
    split: Optional[FeatureSplit] = None,
    class_labels: Optional[Sequence[str]] = None,
    target_params: Optional[NormalizationParams] = None,
) -> Tuple[Model, TrainReport]:
    """
    Build a network node by node on normalised training matrices.

    Args:
        X: Normal-view inputs, N×n
        T: Encoded targets, N×m
        config: Training settings (variant, budget, tolerance, seed, ...)
        X_tilde: Privileged inputs, N×d, required by SCN+ and IRVFL+
        task_kind: Stored on the model for decoding
        normalization: Normal-view input normaliser stored for prediction
        split: Attribute split stored for prediction on raw data
        class_labels: Label order for classification models
        target_params: Regression target normaliser

    Returns:
        (Model, TrainReport)

    Raises:
        DataError: On dimension mismatches
        TrainingAbortedError: If a node finds no usable candidate at all
    """
    trainer = IncrementalTrainer(X, T, config, X_tilde)
    return trainer.run(
        task_kind=task_kind,
        normalization=normalization,
        split=split,
        class_labels=class_labels,
        target_params=target_params,
    )


def predict(model: Model, Z: np.ndarray) -> np.ndarray:
    """
    Network output on raw attributes.

    Only the normal view is read: the model selects its normal columns,
    applies the stored normaliser and evaluates H(Z)·β.

    Raises:
        DataError: If Z has the wrong attribute count
    """
    return model.output(model.prepare(Z))


def decode_labels(model: Model, outputs: np.ndarray) -> np.ndarray:
    """argmax over output columns; ties go to the lowest class index."""
    if model.task_kind is not TaskKind.CLASSIFICATION or model.class_labels is None:
        raise ValueError("label decoding needs a classification model")
    labels = np.array(model.class_labels, dtype=object)
    return labels[np.argmax(outputs, axis=1)]


def predict_labels(model: Model, Z: np.ndarray) -> np.ndarray:
    """
    Class labels for raw attributes.

    Raises:
        ValueError: If the model is a regression model
    """
    if model.task_kind is not TaskKind.CLASSIFICATION:
        raise ValueError("predict_labels called on a regression model")
    return decode_labels(model, predict(model, Z))
