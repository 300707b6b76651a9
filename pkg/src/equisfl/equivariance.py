"""Z2 actions by orthogonal involutions and the isotypic splitting they induce.

For an orthogonal involution ``sigma`` the space splits orthogonally into the
fixed space ``ker(sigma - I)`` and its complement ``ker(sigma + I)``; every
operator commuting with ``sigma`` is block diagonal in that splitting.

Diagonal involutions (signs on coordinates) are stored as a vector; their
isotypic bases are coordinate selections, which lets path restriction slice
matrices instead of multiplying by dense bases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NotAnInvolutionError, NotEquivariantError, SubspaceNotInvariantError
from .linalg import EIG_TOL, SYM_TOL, eig_sym, norm_bound
from .paths import OperatorPath

INVARIANCE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Involution:
    """Orthogonal matrix with ``sigma @ sigma == I``.

    ``sigma`` may be given as a full matrix or, for coordinate sign flips,
    as the vector of diagonal entries.
    """

    sigma: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim == 2 and s.shape[0] == s.shape[1] and s.size and not np.any(s - np.diag(np.diagonal(s))):
            s = np.diagonal(s).copy()
        object.__setattr__(self, "sigma", s)
        if s.ndim == 1:
            if not np.all(np.isin(s, (-1.0, 1.0))):
                raise NotAnInvolutionError("diagonal involution entries must be +-1")
            return
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise NotAnInvolutionError(f"involution must be square, got shape {s.shape}")
        eye = np.eye(s.shape[0])
        orth = np.abs(s.T @ s - eye).max() if s.size else 0.0
        invol = np.abs(s @ s - eye).max() if s.size else 0.0
        # 1e-12 is too strict for matrices read from text files; scale with n
        tol = SYM_TOL * max(1, s.shape[0]) * 10
        if orth > tol or invol > tol:
            raise NotAnInvolutionError(
                f"not an orthogonal involution: |s^T s - I|={orth:.2e}, |s^2 - I|={invol:.2e}")

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.sigma.ndim == 1

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.sigma) if self.is_diagonal else self.sigma

    def commutator(self, M: np.ndarray) -> np.ndarray:
        """``M sigma - sigma M``."""
        if self.is_diagonal:
            s = self.sigma
            return M * s[None, :] - s[:, None] * M
        return M @ self.sigma - self.sigma @ M

    @classmethod
    def identity(cls, n: int) -> Involution:
        return cls(np.ones(n))


@dataclass(frozen=True, eq=False)
class IsotypicSplit:
    """Orthonormal bases (columns) of the fixed space and of its complement.

    ``fixed_index`` / ``anti_index`` are set when the bases are coordinate
    selections.
    """

    basis_fixed: np.ndarray
    basis_anti: np.ndarray
    fixed_index: np.ndarray | None = None
    anti_index: np.ndarray | None = None

    @property
    def dim_fixed(self) -> int:
        return self.basis_fixed.shape[1]

    @property
    def dim_anti(self) -> int:
        return self.basis_anti.shape[1]


def isotypic_split(sigma: Involution) -> IsotypicSplit:
    """Split into the ``+1`` and ``-1`` eigenspaces of ``sigma``."""
    if sigma.is_diagonal:
        eye = np.eye(sigma.n)
        fixed = np.flatnonzero(sigma.sigma > 0)
        anti = np.flatnonzero(sigma.sigma < 0)
        return IsotypicSplit(eye[:, fixed], eye[:, anti], fixed, anti)
    w, V = eig_sym(sigma.matrix)
    off = np.minimum(np.abs(w - 1.0), np.abs(w + 1.0))
    if off.size and off.max() > 1e-8:
        raise NotAnInvolutionError(f"eigenvalue {w[np.argmax(off)]:.6g} of sigma is not +-1")
    return IsotypicSplit(V[:, w > 0], V[:, w < 0])


def check_equivariance(M: np.ndarray, sigma: Involution, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether ``M`` commutes with ``sigma``; returns ``(ok, residual)``.

    ``residual = ||M sigma - sigma M|| / (1 + ||M||)`` in the max-row-sum norm.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (sigma.n, sigma.n):
        raise ValueError(f"dimension mismatch: matrix {M.shape}, involution {sigma.n}")
    residual = norm_bound(sigma.commutator(M)) / (1.0 + norm_bound(M))
    return residual <= tol, residual


def _coordinate_selection(B: np.ndarray) -> np.ndarray | None:
    """Indices ``idx`` with ``B == I[:, idx]``, or None."""
    if B.ndim != 2 or B.shape[1] == 0:
        return None
    rows = np.argmax(np.abs(B), axis=0)
    if not np.array_equal(B[rows, np.arange(B.shape[1])], np.ones(B.shape[1])):
        return None
    if np.count_nonzero(B) != B.shape[1]:
        return None
    return rows


def _sample_lambdas(path: OperatorPath, count: int = 9) -> np.ndarray:
    return np.linspace(path.lam0, path.lam1, count)


def restrict_path(path: OperatorPath, basis: np.ndarray,
                  check_lambdas: np.ndarray | None = None) -> OperatorPath:
    """Compress ``path`` to the span of orthonormal ``basis``: ``B^T L B``.

    Invariance of the span is verified at ``check_lambdas`` (default: nine
    equally spaced points) with residual threshold ``1e-8 (1 + ||L||)``.
    Samplers exposing a ``restrict(indices)`` method build the compressed
    matrix directly when the basis is a coordinate selection.
    """
    basis = np.asarray(basis, dtype=float)
    n = basis.shape[0]
    idx = _coordinate_selection(basis)
    lams = _sample_lambdas(path) if check_lambdas is None else check_lambdas
    for lam in lams:
        L = path(lam)
        if L.shape[0] != n:
            raise ValueError(f"basis has {n} rows, path dimension is {L.shape[0]}")
        if idx is not None:
            comp = np.setdiff1d(np.arange(n), idx)
            leak = L[np.ix_(comp, idx)]
        else:
            LB = L @ basis
            leak = LB - basis @ (basis.T @ LB)
        residual = norm_bound(leak)
        if residual > INVARIANCE_TOL * (1.0 + norm_bound(L)):
            raise SubspaceNotInvariantError(
                f"subspace not invariant at lambda={lam}: residual {residual:.3e}",
                lam=float(lam), residual=residual)

    def compress(M: np.ndarray) -> np.ndarray:
        if idx is not None:
            return M[np.ix_(idx, idx)]
        return basis.T @ M @ basis

    restrict = getattr(path.sampler, "restrict", None)
    if idx is not None and callable(restrict):
        sampler = restrict(idx)
    else:
        inner = path.sampler

        def sampler(lam: float) -> np.ndarray:
            return compress(np.asarray(inner(lam), dtype=float))

    derivative = None
    if path.derivative is not None:
        d_restrict = getattr(path.derivative, "restrict", None)
        if idx is not None and callable(d_restrict):
            derivative = d_restrict(idx)
        else:
            d_inner = path.derivative

            def derivative(lam: float) -> np.ndarray:
                return compress(np.asarray(d_inner(lam), dtype=float))

    # a coordinate selection cannot widen the band; a restricting sampler may know better
    bandwidth = None if idx is None else getattr(sampler, "bandwidth", path.bandwidth)
    return replace(path, sampler=sampler, derivative=derivative, involution=None,
                   bandwidth=bandwidth)


def check_path_equivariance(path: OperatorPath, sigma: Involution,
                            lams: np.ndarray | None = None,
                            tol: float = INVARIANCE_TOL) -> float:
    """Largest commutator residual over sampled parameters; raises if above ``tol``."""
    worst = 0.0
    for lam in (_sample_lambdas(path) if lams is None else lams):
        ok, residual = check_equivariance(path(lam), sigma, tol)
        worst = max(worst, residual)
        if not ok:
            raise NotEquivariantError(
                f"path does not commute with the involution at lambda={lam}: "
                f"residual {residual:.3e}")
    return worst


__all__ = [
    "Involution",
    "IsotypicSplit",
    "isotypic_split",
    "check_equivariance",
    "check_path_equivariance",
    "restrict_path",
    "EIG_TOL",
]
