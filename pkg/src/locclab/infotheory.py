"""Shannon-information scalar functions, base 2 throughout.

The ``0 * log 0 = 0`` convention applies everywhere.
"""

from __future__ import annotations

import numpy as np

#: Probability vectors must carry unit mass to this absolute tolerance.
PROB_ATOL = 1e-12


class DistributionError(ValueError):
    """Input is not a valid (joint) probability distribution."""


def _neg_xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mask = x > 0.0
    out[mask] = -x[mask] * np.log2(x[mask])
    return out


def check_prob_vec(p, atol: float = PROB_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DistributionError("probability vector must be a nonempty 1-D array")
    if np.any(p < -atol):
        raise DistributionError("probabilities must be nonnegative")
    if abs(float(p.sum()) - 1.0) > atol:
        raise DistributionError(f"probabilities sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x), with h(0) = h(1) = 0."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DistributionError(f"binary entropy argument {x} outside [0, 1]")
    return float(_neg_xlog2x(np.array([x, 1.0 - x])).sum())


def shannon_entropy(p, atol: float = PROB_ATOL) -> float:
    """Entropy in bits of a probability vector."""
    return float(_neg_xlog2x(check_prob_vec(p, atol=atol)).sum())


def mutual_information(joint, atol: float = 1e-10) -> float:
    """Mutual information in bits of a joint distribution given as a matrix.

    Computed as H(row marginal) + H(column marginal) - H(joint); the result
    is clipped at zero to absorb rounding.
    """
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2 or j.size == 0:
        raise DistributionError("joint distribution must be a nonempty matrix")
    if np.any(j < -atol):
        raise DistributionError("joint distribution entries must be nonnegative")
    if abs(float(j.sum()) - 1.0) > atol:
        raise DistributionError(f"joint distribution has mass {j.sum()!r}, not 1")
    j = np.clip(j, 0.0, None)
    h_rows = float(_neg_xlog2x(j.sum(axis=1)).sum())
    h_cols = float(_neg_xlog2x(j.sum(axis=0)).sum())
    h_joint = float(_neg_xlog2x(j).sum())
    return max(h_rows + h_cols - h_joint, 0.0)
