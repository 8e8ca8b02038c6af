"""
Dense complex linear algebra shared by the Psi assembly and the estimators.

``vec`` stacks columns everywhere in this codebase.
"""

import warnings

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning


def as_complex_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-D complex array, rejecting NaN and Inf entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got an array with {m.ndim} dimension(s)")
    if not np.isfinite(m).all():
        raise ValueError("matrix has non-finite entries")
    return m


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def kron(a, b) -> np.ndarray:
    """Kronecker product; vec(B X A^T) == kron(A, B) @ vec(X)."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def commutation_matrix(m: int, n: int) -> np.ndarray:
    """
    The mn x mn permutation K with K @ vec(X) == vec(X.T) for any m x n X.

    Entry X[i, j] sits at i + j*m in vec(X) and at j + i*n in vec(X.T).
    """
    if m < 0 or n < 0:
        raise ValueError(f"commutation matrix dimensions must be non-negative, got ({m}, {n})")
    i, j = np.indices((m, n))
    k = np.zeros((m * n, m * n), dtype=np.complex128)
    k[(j + i * n).ravel(), (i + j * m).ravel()] = 1.0
    return k


def log_abs_det_sq(m, singular_rtol: float = 0.0) -> float:
    """
    log |det M|^2 from a partial-pivot LU factorization.

    Returns -inf when a pivot is exactly zero, underflows, or falls at or
    below ``singular_rtol`` times the largest pivot magnitude.

    Raises:
        ValueError: if ``m`` is not square or has non-finite entries.
    """
    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"determinant needs a square matrix, got {m.shape[0]}x{m.shape[1]}")
    if m.size == 0:
        return 0.0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, _ = scipy.linalg.lu_factor(m, check_finite=False)

    pivots = np.abs(np.diagonal(lu))
    smallest = pivots.min()
    if smallest <= np.finfo(np.float64).tiny or smallest <= singular_rtol * pivots.max():
        return float("-inf")
    return 2.0 * float(np.log(pivots).sum())


def singular_values(m) -> np.ndarray:
    """Singular values in descending order."""
    m = as_complex_matrix(m)
    if m.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(m, check_finite=False)
