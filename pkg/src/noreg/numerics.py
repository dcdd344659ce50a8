"""Dense linear-algebra kernel shared by every other module.

Matrices are plain float64 ``numpy.ndarray`` values with row-major
semantics; spectra are 1-d complex arrays, multiplicity inclusive.
Everything here is a pure function, safe to call concurrently.

Eigenvalues come from LAPACK's QR iteration on the real Schur form
(``numpy.linalg.eigvals``); the matrix exponential uses scaling and
squaring with a degree-13 Pade approximant (``scipy.linalg.expm``),
which keeps stiff closed loops exact instead of merely stable.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as _sla

from .errors import DimensionMismatch, InconsistentSystem

#: Default relative cutoff for numerical rank / null-space decisions.
#: Chosen small because application matrices mix entries from 1e-3 to 1e7.
KERNEL_TOL = 1e-9

#: Relative residual bound for an "exact" linear solve.
SOLVE_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float (or complex) array and require finite entries."""
    arr = np.asarray(a)
    dtype = complex if np.iscomplexobj(arr) else float
    m = np.atleast_2d(arr.astype(dtype))
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def require_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def spectrum(a) -> np.ndarray:
    """Eigenvalues of a square matrix, multiplicity inclusive."""
    a = require_square(a)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(a)


def kernel_basis(a, tol: float = KERNEL_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``a``.

    Columns span the right singular directions whose singular values fall
    below ``tol`` times the largest one.  May be empty (shape ``(n, 0)``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_matrix(a)
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    _, s, vt = np.linalg.svd(a)
    if s.size == 0:
        return vt.conj().T
    rank = int(np.sum(s > tol * s[0]))
    return vt[rank:].conj().T


def expm(a) -> np.ndarray:
    """Matrix exponential via Pade scaling and squaring."""
    a = require_square(a)
    if a.shape[0] == 0:
        return a.copy()
    return _sla.expm(a)


def solve_linear(a, b, mode: str = "exact") -> np.ndarray:
    """Solve ``a x = b`` for matrix or vector right-hand sides.

    mode="exact" returns a solution with relative residual below
    ``SOLVE_TOL`` or raises InconsistentSystem.  mode="min_norm" always
    returns the least-squares minimum-norm solution.
    """
    if mode not in ("exact", "min_norm"):
        raise ValueError(f"unknown mode {mode!r}")
    a = as_matrix(a, "a")
    b_arr = np.asarray(b, dtype=float)
    b2 = b_arr.reshape(-1, 1) if b_arr.ndim == 1 else as_matrix(b_arr, "b")
    if a.shape[0] != b2.shape[0]:
        raise DimensionMismatch(
            f"a has {a.shape[0]} rows but b has {b2.shape[0]}"
        )
    x, _, _, _ = np.linalg.lstsq(a, b2, rcond=None)
    if mode == "exact":
        residual = np.linalg.norm(a @ x - b2)
        if residual > SOLVE_TOL * max(np.linalg.norm(b2), 1e-300):
            raise InconsistentSystem(
                f"residual {residual:.3e} exceeds {SOLVE_TOL:.0e} * |b|"
            )
    return x[:, 0] if b_arr.ndim == 1 else x


def matrix_rank(a, tol: float = KERNEL_TOL) -> int:
    """Numerical rank with the same relative cutoff as kernel_basis."""
    a = as_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))
