"""Dense complex linear algebra over small Hilbert spaces.

Everything works on plain numpy arrays: kets are 1-D complex arrays,
operators are 2-D complex arrays.  Dimensions stay tiny (a few dozen at
most), so clarity wins over sparsity or asymptotic speed everywhere.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

#: Tolerance for structural predicates: orthogonality, positivity, rank.
ATOL_STRUCTURAL = 1e-10
#: Tolerance for algebraic identities: norms, Gram entries, completeness sums.
ATOL_ALGEBRAIC = 1e-12


class DimensionMismatchError(ValueError):
    """Operands do not live in compatible Hilbert spaces."""


def ket(entries: Iterable[complex]) -> np.ndarray:
    """Complex column vector (as a 1-D array) from a sequence of amplitudes."""
    v = np.asarray(tuple(entries), dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("a ket must be a nonempty 1-D sequence of amplitudes")
    if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
        raise ValueError("ket amplitudes must be finite")
    return v


def basis_ket(dim: int, index: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} outside dimension {dim}")
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def normalized(v: np.ndarray) -> np.ndarray:
    v = ket(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=np.complex128).conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product; the first factor carries the most significant index.

    For vectors ``kron(u, v)[i*dim_v + j] == u[i] * v[j]``; for matrices the
    ``(i1 i2, j1 j2)`` entry is ``a[i1, j1] * b[i2, j2]``.
    """
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    if len(factors) == 0:
        raise ValueError("need at least one tensor factor")
    return reduce(kron, factors)


def gram(states: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of pairwise inner products ``G[i, j] = <state_i|state_j>``."""
    if len(states) == 0:
        raise ValueError("need at least one state")
    dims = {np.asarray(s).shape for s in states}
    if len(dims) != 1:
        raise DimensionMismatchError(f"states of mixed shapes {sorted(dims)}")
    stack = np.stack([ket(s) for s in states])
    return stack.conj() @ stack.T


def is_hermitian(m: np.ndarray, atol: float = ATOL_ALGEBRAIC) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m))) <= atol


def is_psd(m: np.ndarray, atol: float = ATOL_STRUCTURAL) -> bool:
    """Positive semidefiniteness up to a small negative eigenvalue allowance."""
    if not is_hermitian(m, atol=max(atol, ATOL_ALGEBRAIC)):
        return False
    return float(np.linalg.eigvalsh(m).min()) >= -atol


def projector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Orthogonal projector onto the span of the given vectors."""
    stack = np.stack([ket(v) for v in vectors]).T
    q, _ = np.linalg.qr(stack)
    return q @ dagger(q)


def schmidt_coefficients(state: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    v = ket(state)
    if v.size != dim_a * dim_b:
        raise DimensionMismatchError(
            f"state of dimension {v.size} cannot split as {dim_a} x {dim_b}"
        )
    return np.linalg.svd(v.reshape(dim_a, dim_b), compute_uv=False)


def schmidt_rank(state: np.ndarray, dim_a: int, dim_b: int, atol: float = ATOL_STRUCTURAL) -> int:
    """Rank of the bipartite coefficient matrix; 1 exactly for product states."""
    v = normalized(state)
    return int(np.sum(schmidt_coefficients(v, dim_a, dim_b) > atol))
