"""
Closed-form output weights and supervisory quantities.

Residuals e are N×m matrices; hidden outputs h, h_tilde are N-vectors.
Weights for one node are returned as length-m rows, one entry per output
dimension. All inner products are sums over samples, taken per output
dimension.

Weight rules:
- scn_beta: projection of each residual column onto h
- lupi_beta: closed-form solution of the privileged objective for (β, β̃)
- joint_solve: the same objective solved as a regularised 2×2 system with a
  pseudo-inverse, used as an independent oracle for lupi_beta
"""

from typing import Tuple

import numpy as np
from numpy.linalg import pinv

from src.errors import DegenerateCandidateError
from src.models.schemas import LupiParams

# Reject a candidate when |D| <= DEGENERACY_RTOL · (1 + hᵀh)(γ + h̃ᵀh̃).
DEGENERACY_RTOL = 1e-12


def _check_r(r: float) -> None:
    if not 0 < r < 1:
        raise ValueError(f"r must be in (0, 1), got {r}")


def _vector(h: np.ndarray, n_rows: int, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    if h.shape[0] != n_rows:
        raise ValueError(f"{name} has length {h.shape[0]}, residual has {n_rows} rows")
    return h


def _residual(e_prev: np.ndarray) -> np.ndarray:
    e = np.asarray(e_prev, dtype=np.float64)
    return e.reshape(-1, 1) if e.ndim == 1 else e


def mu_schedule(r: float, L: int) -> float:
    """μ_L = (1 - r) / (L + 1)."""
    _check_r(r)
    if L < 1:
        raise ValueError(f"node index L must be >= 1, got {L}")
    return (1.0 - r) / (L + 1)


def delta_threshold(e_prev: np.ndarray, r: float, mu_L: float) -> float:
    """δ_L = (1 - r - μ_L)·‖e_{L-1}‖²."""
    _check_r(r)
    if mu_L < 0 or mu_L > (1.0 - r) * (1 + 1e-12):
        raise ValueError(f"mu_L must be in [0, 1 - r] = [0, {1 - r}], got {mu_L}")
    e = _residual(e_prev)
    return max(0.0, 1.0 - r - mu_L) * float(np.sum(e * e))


def scn_beta(e_prev: np.ndarray, h: np.ndarray) -> np.ndarray:
    """
    β_{L,q} = <e_q, h> / <h, h>.

    Raises:
        DegenerateCandidateError: If h has zero norm
    """
    e = _residual(e_prev)
    h = _vector(h, e.shape[0], "h")
    s_h = float(h @ h)
    if not s_h > 0 or not np.isfinite(s_h):
        raise DegenerateCandidateError("hidden output has zero norm")
    return (h @ e) / s_h


def lupi_beta(
    e_prev: np.ndarray, h: np.ndarray, h_tilde: np.ndarray, params: LupiParams
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form (β_L, β̃_L) of the privileged objective.

    With s_h = hᵀh, s_t = h̃ᵀh̃, s_c = hᵀh̃ and the all-ones slack matrix l,
    each output column solves

        (1 + s_h)·β + s_c·β̃ = hᵀe
        s_c·β + (γ + s_t)·β̃ = h̃ᵀe - C·h̃ᵀl

    whose determinant is D = (1 + s_h)(γ + s_t) - s_c².

    Returns:
        (beta, beta_tilde), each of length m

    Raises:
        DegenerateCandidateError: If |D| is within tolerance of zero
    """
    e = _residual(e_prev)
    h = _vector(h, e.shape[0], "h")
    ht = _vector(h_tilde, e.shape[0], "h_tilde")
    C, gamma = params.C, params.gamma

    s_h = float(h @ h)
    s_t = float(ht @ ht)
    s_c = float(h @ ht)
    D = (1.0 + s_h) * (gamma + s_t) - s_c * s_c
    scale = (1.0 + s_h) * (gamma + s_t)
    if not np.isfinite(D) or abs(D) <= DEGENERACY_RTOL * scale:
        raise DegenerateCandidateError(f"degenerate LUPI system, |D|={abs(D):.3e}")

    he = h @ e
    te = ht @ e
    tl = np.full(e.shape[1], ht.sum())  # h̃ᵀl, one entry per output column

    beta = ((gamma + s_t) * he - s_c * te + C * s_c * tl) / D
    beta_tilde = ((1.0 + s_h) * te - s_c * he - C * (1.0 + s_h) * tl) / D
    return beta, beta_tilde


def joint_blocks(
    h: np.ndarray, h_tilde: np.ndarray, params: LupiParams
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A = diag(1, γ), B = diag(0, C) and ΔH = [h, h̃]."""
    A = np.diag([1.0, params.gamma])
    B = np.diag([0.0, params.C])
    delta_H = np.column_stack([np.ravel(h), np.ravel(h_tilde)])
    return A, B, delta_H


def joint_solve(
    e_prev: np.ndarray, h: np.ndarray, h_tilde: np.ndarray, params: LupiParams
) -> np.ndarray:
    """
    Δβ = (A + ΔHᵀΔH)† (ΔHᵀe - B·ΔHᵀl).

    Returns:
        2×m matrix whose rows are β_L and β̃_L
    """
    e = _residual(e_prev)
    A, B, delta_H = joint_blocks(h, h_tilde, params)
    if delta_H.shape[0] != e.shape[0]:
        raise ValueError(f"hidden outputs have {delta_H.shape[0]} rows, residual has {e.shape[0]}")
    ones = np.ones_like(e)
    rhs = delta_H.T @ e - B @ (delta_H.T @ ones)
    return pinv(A + delta_H.T @ delta_H) @ rhs


def stationarity_residuals(
    e_prev: np.ndarray,
    h: np.ndarray,
    h_tilde: np.ndarray,
    beta: np.ndarray,
    beta_tilde: np.ndarray,
    params: LupiParams,
) -> np.ndarray:
    """
    Gradients of the privileged objective at (β, β̃); zero at the optimum.

    Returns:
        2×m matrix: row 0 is ∂f/∂β, row 1 is ∂f/∂β̃
    """
    e = _residual(e_prev)
    h = _vector(h, e.shape[0], "h")
    ht = _vector(h_tilde, e.shape[0], "h_tilde")
    beta = np.ravel(beta)
    beta_tilde = np.ravel(beta_tilde)
    misfit = np.outer(h, beta) + np.outer(ht, beta_tilde) - e
    d_beta = beta + h @ misfit
    d_beta_tilde = params.gamma * beta_tilde + ht @ misfit + params.C * (ht @ np.ones_like(e))
    return np.vstack([d_beta, d_beta_tilde])


def xi_scn(e_prev: np.ndarray, h: np.ndarray, r: float, mu_L: float) -> np.ndarray:
    """
    ξ_{L,q} = <e_q, h>² / <h, h> - (1 - r - μ_L)·‖e_q‖².

    The candidate is admissible iff min_q ξ_{L,q} >= 0.

    Raises:
        DegenerateCandidateError: If h has zero norm
    """
    e = _residual(e_prev)
    h = _vector(h, e.shape[0], "h")
    s_h = float(h @ h)
    if not s_h > 0 or not np.isfinite(s_h):
        raise DegenerateCandidateError("hidden output has zero norm")
    projection = (h @ e) ** 2 / s_h
    return projection - (1.0 - r - mu_L) * np.sum(e * e, axis=0)


def xi_scn_plus(
    e_prev: np.ndarray,
    h: np.ndarray,
    h_tilde: np.ndarray,
    beta: np.ndarray,
    beta_tilde: np.ndarray,
    r: float,
    mu_L: float,
) -> np.ndarray:
    """
    ξ_{L,q} = <e_q, h·β_q + h̃·β̃_q> - (1 - r - μ_L)·‖e_q‖².

    β and β̃ must come from lupi_beta for the same candidate. The sum over q
    is the score used to rank admissible candidates.
    """
    e = _residual(e_prev)
    h = _vector(h, e.shape[0], "h")
    ht = _vector(h_tilde, e.shape[0], "h_tilde")
    gain = np.outer(h, np.ravel(beta)) + np.outer(ht, np.ravel(beta_tilde))
    return np.sum(e * gain, axis=0) - (1.0 - r - mu_L) * np.sum(e * e, axis=0)
