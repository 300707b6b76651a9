"""Parametrised families of symmetric matrices."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .linalg import SYM_TOL, asymmetry, norm_bound
from .errors import AsymmetricMatrixError

Sampler = Callable[[float], np.ndarray]

# optimal central-difference step for a first derivative
_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass
class OperatorPath:
    """A path ``lam -> L(lam)`` of symmetric ``n x n`` matrices on ``[lam0, lam1]``.

    ``derivative`` is the analytic ``dL/dlam`` if known; otherwise central
    differences are used.  ``involution`` (an :class:`~equisfl.equivariance.Involution`)
    marks the path as Z2-equivariant.  ``bandwidth`` is an optional hint
    forwarded to the eigensolver.

    Samplers must be pure functions of ``lam`` so they can be evaluated from
    several threads at once.
    """

    sampler: Sampler
    lambda_range: tuple[float, float]
    derivative: Sampler | None = None
    involution: object | None = None
    bandwidth: int | None = None
    name: str = ""
    check_symmetry: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        lam0, lam1 = (float(x) for x in self.lambda_range)
        if not lam0 < lam1:
            raise ValueError(f"degenerate lambda range [{lam0}, {lam1}]")
        self.lambda_range = (lam0, lam1)

    @property
    def lam0(self) -> float:
        return self.lambda_range[0]

    @property
    def lam1(self) -> float:
        return self.lambda_range[1]

    @property
    def length(self) -> float:
        return self.lam1 - self.lam0

    def __call__(self, lam: float) -> np.ndarray:
        M = np.asarray(self.sampler(float(lam)), dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"sampler returned shape {M.shape} at lambda={lam}")
        if self.check_symmetry:
            res = asymmetry(M)
            if res > SYM_TOL:
                raise AsymmetricMatrixError(
                    f"sampler output at lambda={lam} has asymmetry {res:.3e}")
        return M

    @property
    def dim(self) -> int:
        return self(self.lam0).shape[0]

    def derivative_at(self, lam: float) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(float(lam)), dtype=float)
        h = _FD_STEP * (1.0 + abs(lam))
        D = (np.asarray(self.sampler(lam + h)) - np.asarray(self.sampler(lam - h))) / (2.0 * h)
        return 0.5 * (D + D.T)

    def difference_norm(self, lam_a: float, lam_b: float) -> float:
        """Bound on ``||L(lam_b) - L(lam_a)||``.

        Samplers may provide an exact ``difference_norm`` method; the default
        is the max-row-sum bound.
        """
        hook = getattr(self.sampler, "difference_norm", None)
        if callable(hook):
            return float(hook(float(lam_a), float(lam_b)))
        return norm_bound(self(lam_b) - self(lam_a))

    # -- path algebra -------------------------------------------------------

    def reversed(self) -> OperatorPath:
        """The path ``lam -> L(lam0 + lam1 - lam)`` on the same interval."""
        lam0, lam1 = self.lambda_range
        s = self.sampler
        d = self.derivative
        return replace(
            self,
            sampler=lambda lam: s(lam0 + lam1 - lam),
            derivative=None if d is None else (lambda lam: -np.asarray(d(lam0 + lam1 - lam))),
            name=f"reversed({self.name})" if self.name else "",
        )

    def on(self, lam0: float, lam1: float) -> OperatorPath:
        """Same sampler, restricted to the sub-interval ``[lam0, lam1]``."""
        return replace(self, lambda_range=(lam0, lam1))


def concatenate(first: OperatorPath, second: OperatorPath, tol: float = 1e-12) -> OperatorPath:
    """Run ``first`` then ``second``; ``first`` must end where ``second`` starts.

    The result is parametrised on ``[first.lam0, first.lam0 + len1 + len2]``.
    """
    A = first(first.lam1)
    B = second(second.lam0)
    if A.shape != B.shape or np.abs(A - B).max() > tol * (1.0 + np.abs(A).max()):
        raise ValueError("paths do not match at the junction")
    split = first.lam1
    shift = second.lam0 - split

    def sampler(lam: float) -> np.ndarray:
        return first.sampler(lam) if lam <= split else second.sampler(lam + shift)

    derivative = None
    if first.derivative is not None and second.derivative is not None:
        d1, d2 = first.derivative, second.derivative

        def derivative(lam: float) -> np.ndarray:
            return d1(lam) if lam <= split else d2(lam + shift)

    bw = None
    if first.bandwidth is not None and second.bandwidth is not None:
        bw = max(first.bandwidth, second.bandwidth)
    return OperatorPath(
        sampler=sampler,
        lambda_range=(first.lam0, split + second.length),
        derivative=derivative,
        involution=first.involution,
        bandwidth=bw,
        name=f"{first.name}*{second.name}" if first.name or second.name else "",
    )


def constant_path(M: np.ndarray, lambda_range=(0.0, 1.0), involution=None) -> OperatorPath:
    M = np.asarray(M, dtype=float)
    zero = np.zeros_like(M)
    return OperatorPath(lambda lam: M, lambda_range, derivative=lambda lam: zero,
                        involution=involution, name="constant")


def affine_path(A: np.ndarray, B: np.ndarray, lambda_range=(0.0, 1.0),
                involution=None) -> OperatorPath:
    """``lam -> A + lam * B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return OperatorPath(lambda lam: A + lam * B, lambda_range, derivative=lambda lam: B,
                        involution=involution, name="affine")
