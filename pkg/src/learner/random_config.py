"""
Random configuration of candidate hidden nodes.

Every candidate is drawn from its own substream, keyed by the run seed and a
stream id derived from (node, scale, candidate) indices. Candidates can
therefore be generated in any order, or in parallel, and still reproduce the
sequential run exactly.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import expit

from src.models.schemas import Activation

CANDIDATE_DOMAIN = 0
RENEWAL_DOMAIN = 1

_NODE_STRIDE = 10**6
_SCALE_STRIDE = 10**3

ACTIVATIONS: Dict[Activation, Callable[[np.ndarray], np.ndarray]] = {
    Activation.SIGMOID: expit,
    Activation.TANH: np.tanh,
}


@dataclass(frozen=True)
class RandomStream:
    """
    Address of one independent random substream.

    epoch separates repeated draws for the same candidate slot (the retries
    that follow an r renewal).
    """

    seed: int
    stream_id: int
    epoch: int = 0

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            self.seed, spawn_key=(CANDIDATE_DOMAIN, self.stream_id, self.epoch)
        )
        return np.random.Generator(np.random.PCG64(sequence))


def candidate_stream_id(node_index: int, scale_index: int, candidate_index: int) -> int:
    """node_index·10⁶ + scale_index·10³ + candidate_index."""
    if not 0 <= scale_index < 1000 or not 0 <= candidate_index < 1000:
        raise ValueError(
            f"scale_index and candidate_index must be in [0, 1000), "
            f"got {scale_index}, {candidate_index}"
        )
    return node_index * _NODE_STRIDE + scale_index * _SCALE_STRIDE + candidate_index


def renewal_generator(seed: int, node_index: int) -> np.random.Generator:
    """Stream for the τ draws of one node's r renewals."""
    sequence = np.random.SeedSequence(seed, spawn_key=(RENEWAL_DOMAIN, node_index))
    return np.random.Generator(np.random.PCG64(sequence))


@dataclass(frozen=True)
class CandidateNode:
    """One randomly configured hidden node with its privileged twin."""

    w: np.ndarray
    b: float
    w_tilde: np.ndarray
    b_tilde: Optional[float]
    lambda_used: float
    candidate_index: int

    @property
    def has_privileged(self) -> bool:
        return self.b_tilde is not None

    def max_abs(self) -> float:
        """Largest absolute parameter, normal and privileged halves together."""
        parts = [np.abs(self.w), [abs(self.b)]]
        if self.has_privileged:
            parts += [np.abs(self.w_tilde), [abs(self.b_tilde)]]
        return float(np.max(np.concatenate(parts)))


def sample_candidate(
    stream: RandomStream, lam: float, n: int, d: int, index: int
) -> CandidateNode:
    """
    Draw ω, b from [-λ, λ]^n × [-λ, λ] and ω̃, b̃ from [-λ, λ]^d × [-λ, λ].

    d = 0 yields a candidate without a privileged part.

    Raises:
        ValueError: If λ is not positive or n < 1
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")

    rng = stream.generator()
    size = n + 1 + (d + 1 if d > 0 else 0)
    draws = rng.uniform(-lam, lam, size=size)
    w, b = draws[:n], float(draws[n])
    if d > 0:
        w_tilde, b_tilde = draws[n + 1 : n + 1 + d], float(draws[n + 1 + d])
    else:
        w_tilde, b_tilde = np.empty(0), None
    return CandidateNode(
        w=w,
        b=b,
        w_tilde=w_tilde,
        b_tilde=b_tilde,
        lambda_used=float(lam),
        candidate_index=index,
    )


def activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    return ACTIVATIONS[Activation(activation)](z)


def hidden_output(
    candidate: CandidateNode,
    X: np.ndarray,
    X_tilde: Optional[np.ndarray],
    activation: Activation = Activation.SIGMOID,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Hidden-node outputs on the normal and privileged views.

    Returns:
        (h, h_tilde) with h_i = G(<w, x_i> + b); h_tilde is None when the
        candidate or the data has no privileged part

    Raises:
        ValueError: On a dimension mismatch
    """
    if X.ndim != 2 or X.shape[1] != candidate.w.shape[0]:
        raise ValueError(
            f"X has shape {X.shape}, candidate expects {candidate.w.shape[0]} columns"
        )
    h = activate(X @ candidate.w + candidate.b, activation)

    if not candidate.has_privileged or X_tilde is None:
        return h, None
    if X_tilde.shape != (X.shape[0], candidate.w_tilde.shape[0]):
        raise ValueError(
            f"X_tilde has shape {X_tilde.shape}, expected "
            f"({X.shape[0]}, {candidate.w_tilde.shape[0]})"
        )
    h_tilde = activate(X_tilde @ candidate.w_tilde + candidate.b_tilde, activation)
    return h, h_tilde
