"""Dense symmetric-matrix services.

Everything downstream (spectral flow, crossing forms, isotypic splits) goes
through these helpers so that tolerances are applied in one place.

Tolerances
----------
SYM_TOL
    Relative asymmetry accepted before a matrix is rejected.
EIG_TOL
    Relative accuracy expected from the eigensolver.
ZERO_TOL_REL
    Default zero tolerance relative to the spectral norm.
GAP_FACTOR
    A numerical kernel must be separated from the rest of the spectrum by
    this factor.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    AmbiguousKernelError,
    AsymmetricMatrixError,
    BoundaryEigenvalueError,
    DegenerateFormError,
    EigensolverError,
    NearKernelAmbiguityError,
)

SYM_TOL = 1e-12
EIG_TOL = 1e-10
ZERO_TOL_REL = 1e-8
GAP_FACTOR = 10.0

# banded LAPACK path pays off only for thin bands on non-tiny matrices
_BANDED_MIN_N = 64
_BANDED_MAX_RATIO = 8


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def asymmetry(M: np.ndarray) -> float:
    """Relative asymmetry ``max|M - M^T| / (1 + max|M|)``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.abs(M - M.T).max() / (1.0 + np.abs(M).max()))


def as_symmetric(M, sym_tol: float = SYM_TOL) -> np.ndarray:
    """Return ``(M + M^T) / 2`` after checking the asymmetry residual."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    res = asymmetry(M)
    if res > sym_tol:
        raise AsymmetricMatrixError(f"matrix asymmetry {res:.3e} exceeds sym_tol={sym_tol:.1e}")
    return 0.5 * (M + M.T)


def norm_bound(M: np.ndarray) -> float:
    """Max absolute row sum; an upper bound for the spectral norm of a symmetric matrix."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.abs(M).sum(axis=1).max())


def bandwidth(M: np.ndarray) -> int:
    """Largest ``|i - j|`` with ``M[i, j] != 0``."""
    rows, cols = np.nonzero(M)
    if rows.size == 0:
        return 0
    return int(np.abs(rows - cols).max())


def _lower_band(M: np.ndarray, b: int) -> np.ndarray:
    n = M.shape[0]
    ab = np.zeros((b + 1, n))
    for k in range(b + 1):
        ab[k, : n - k] = np.diagonal(M, -k)
    return ab


def eigvalsh(M: np.ndarray, bandwidth_hint: int | None = None) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    Thin-banded matrices are routed to the LAPACK band solver, which is much
    cheaper for the block-tridiagonal operators produced by finite
    differences.  ``bandwidth_hint`` skips the band detection scan.
    """
    n = M.shape[0]
    if n == 0:
        return np.zeros(0)
    try:
        if n >= _BANDED_MIN_N:
            b = bandwidth(M) if bandwidth_hint is None else bandwidth_hint
            if b * _BANDED_MAX_RATIO <= n:
                return sla.eigvals_banded(_lower_band(M, b), lower=True)
        return np.linalg.eigvalsh(M)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise EigensolverError(str(exc)) from exc


def eig_sym(M: np.ndarray) -> EigenDecomposition:
    """Full eigendecomposition, eigenvalues ascending, eigenvectors as columns."""
    M = as_symmetric(M)
    if M.shape[0] == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    return EigenDecomposition(w, V)


def spectral_norm_from(eigenvalues: np.ndarray) -> float:
    return float(np.abs(eigenvalues).max()) if eigenvalues.size else 0.0


def default_zero_tol(eigenvalues: np.ndarray) -> float:
    return ZERO_TOL_REL * spectral_norm_from(eigenvalues)


def spectral_count(
    M: np.ndarray,
    lo: float,
    hi: float,
    gap_guard: float | None = None,
    eigenvalues: np.ndarray | None = None,
) -> int:
    """Number of eigenvalues in ``[lo, hi]``, with multiplicity.

    Infinite bounds are replaced by ``+-(2 ||M||_inf + 1)``.  Raises
    :class:`BoundaryEigenvalueError` when an eigenvalue lies within
    ``gap_guard`` of a finite bound.
    """
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    w = eigvalsh(np.asarray(M, dtype=float)) if eigenvalues is None else eigenvalues
    if gap_guard is None:
        gap_guard = default_zero_tol(w)
    proxy = 2.0 * norm_bound(M) + 1.0
    finite_bounds = [x for x in (lo, hi) if np.isfinite(x)]
    lo = max(lo, -proxy)
    hi = min(hi, proxy)
    for bound in finite_bounds:
        close = np.abs(w - bound) < gap_guard
        if np.any(close):
            raise BoundaryEigenvalueError(
                f"eigenvalue {w[close][0]:.3e} within {gap_guard:.1e} of bound {bound}")
    return int(np.count_nonzero((w >= lo) & (w <= hi)))


def morse_index(M: np.ndarray, zero_tol: float | None = None, strict: bool = True,
                eigenvalues: np.ndarray | None = None) -> int:
    """Number of eigenvalues below ``-zero_tol``.

    With ``strict`` the count is refused when an eigenvalue falls in
    ``[-zero_tol, zero_tol)``, since its sign is not numerically meaningful.
    """
    w = eigvalsh(np.asarray(M, dtype=float)) if eigenvalues is None else eigenvalues
    if zero_tol is None:
        zero_tol = default_zero_tol(w)
    if strict:
        near = (w >= -zero_tol) & (w < zero_tol)
        if np.any(near):
            raise NearKernelAmbiguityError(
                f"eigenvalue {w[near][0]:.3e} within zero_tol={zero_tol:.1e} of zero")
    return int(np.count_nonzero(w < -zero_tol))


def kernel_basis(M: np.ndarray, zero_tol: float | None = None,
                 gap_factor: float = GAP_FACTOR) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspaces with ``|mu| <= zero_tol``.

    Raises :class:`AmbiguousKernelError` if some eigenvalue lies in
    ``(zero_tol, gap_factor * zero_tol)``.
    """
    w, V = eig_sym(M)
    if zero_tol is None:
        zero_tol = default_zero_tol(w)
    a = np.abs(w)
    grey = (a > zero_tol) & (a < gap_factor * zero_tol)
    if np.any(grey):
        raise AmbiguousKernelError(
            f"eigenvalue {w[grey][0]:.3e} between zero_tol={zero_tol:.1e} "
            f"and {gap_factor:g}*zero_tol")
    return V[:, a <= zero_tol]


def signature(Q: np.ndarray, zero_tol: float | None = None) -> int:
    """Signature (#positive - #negative eigenvalues) of a non-degenerate form."""
    Q = as_symmetric(Q)
    if Q.shape[0] == 0:
        return 0
    w = np.linalg.eigvalsh(Q)
    if zero_tol is None:
        zero_tol = default_zero_tol(w)
    if np.any(np.abs(w) <= zero_tol):
        raise DegenerateFormError(
            f"form has eigenvalue {w[np.argmin(np.abs(w))]:.3e} within zero_tol={zero_tol:.1e}")
    return int(np.count_nonzero(w > 0) - np.count_nonzero(w < 0))


def eigenpairs_in_window(M: np.ndarray, lo: float, hi: float,
                         bandwidth_hint: int | None = None,
                         eigenvalues: np.ndarray | None = None) -> EigenDecomposition:
    """Eigenpairs with eigenvalue in ``[lo, hi]``.

    Large banded matrices use shift-invert Lanczos around the window centre;
    the number of wanted pairs is known from the eigenvalues, so the nearest
    ``k`` Ritz pairs are exactly the ones inside the window.
    """
    n = M.shape[0]
    w = eigvalsh(M, bandwidth_hint) if eigenvalues is None else eigenvalues
    k = int(np.count_nonzero((w >= lo) & (w <= hi)))
    if k == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((n, 0)))
    if n < 400 or k > n // 4:
        vals, vecs = sla.eigh(M, subset_by_value=(np.nextafter(lo, -np.inf), hi))
        keep = (vals >= lo) & (vals <= hi)
        return EigenDecomposition(vals[keep], vecs[:, keep])
    sigma = 0.5 * (lo + hi)
    v0 = np.full(n, 1.0 / np.sqrt(n))  # fixed start vector keeps runs reproducible
    vals, vecs = spla.eigsh(sp.csc_matrix(M), k=k, sigma=sigma, which="LM", v0=v0)
    order = np.argsort(vals)
    return EigenDecomposition(vals[order], vecs[:, order])
