"""Homoclinic problems ``J u' + A(lam, t) u = 0`` on the real line.

Two independent computations of the spectral flow of the Hessians
``L_lam = J d/dt + A(lam, .)`` are implemented.

Shooting
    Stable and unstable frames at ``t = 0`` are integrated from the
    hyperbolic limits at ``t = +-T``.  Zeros of ``det[E_s(0) | E_u(0)]`` are
    the crossings; each kernel is reconstructed from the frame trajectories
    and its crossing form ``int <dA/dlam u, u> dt`` is evaluated by adaptive
    quadrature.

Truncated matrix path
    ``J d/dt`` is discretised on ``m`` interior points of ``[-T, T]`` with
    zero boundary values by central differences, plus a Wilson term
    ``(h/2) (-Delta_h) (x) K`` with ``K = diag(I, -I)``.  The Wilson term
    is ``O(h)`` on smooth functions and removes the spurious zero mode of
    the central-difference operator at the highest grid frequency.

On a closed loop of matrices the spectral flow is always zero: whatever
flows through zero in the bulk of the interval flows back through states
bound to the artificial boundary at ``+-T``.  The matrix pathway therefore
also reports a *bulk* spectral flow, which weighs each eigenvector by its
mass in ``|t| <= T/2``; this is the quantity that converges to the spectral
flow on the line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .equivariance import Involution
from .errors import (
    HyperbolicityError,
    IntegrationError,
    PathwayDisagreementError,
    QuadratureError,
    SpectralFlowError,
)
from .families import TimeFamily, make_time_family
from .linalg import eigenpairs_in_window, eigvalsh
from .paths import OperatorPath
from .repring import RepRingElement
from .sflcore import (
    Verdict,
    _pmap,
    sfl_via_morse,
    spectral_flow_partition,
)

RTOL = 1e-10
ATOL = 1e-12
CHUNK = 1.0
HYPERBOLICITY_MARGIN = 1e-6
DET_TOL = 1e-8
LAMBDA_TOL_REL = 1e-10
SHOOTING_GRID = 32
WILSON = 1.0
BULK_FRACTION = 0.5
BULK_ROUNDING_LIMIT = 0.25


def symplectic_J(n: int) -> np.ndarray:
    """``[[0, -I_n], [I_n, 0]]``."""
    Z, I = np.zeros((n, n)), np.eye(n)
    return np.block([[Z, -I], [I, Z]])


def wilson_K(n: int) -> np.ndarray:
    """``diag(I_n, -I_n)``, which anticommutes with :func:`symplectic_J`."""
    return np.diag(np.r_[np.ones(n), -np.ones(n)])


# -- coefficient matrices ------------------------------------------------------


class EntryMatrix:
    """Symmetric ``d x d`` matrix function of ``(lam, t)`` built from entries.

    ``entries`` maps ``(i, j)`` with ``i <= j`` to a pair of
    :class:`~equisfl.families.TimeFamily`, used for ``t < 0`` and ``t >= 0``.
    Missing entries are zero.
    """

    def __init__(self, d: int, entries: dict[tuple[int, int], tuple[TimeFamily, TimeFamily]]):
        self.d = d
        self.entries = {}
        for (i, j), pair in entries.items():
            if not (0 <= i < d and 0 <= j < d):
                raise ValueError(f"entry ({i}, {j}) outside a {d}x{d} matrix")
            self.entries[(min(i, j), max(i, j))] = pair

    def _fill(self, lam: float, t: np.ndarray, deriv: bool) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, self.d, self.d))
        neg = t < 0
        for (i, j), (fn, fp) in self.entries.items():
            if deriv:
                v = np.where(neg, fn.dlam(lam, t), fp.dlam(lam, t))
            else:
                v = np.where(neg, fn(lam, t), fp(lam, t))
            out[:, i, j] = v
            out[:, j, i] = v
        return out

    def __call__(self, lam: float, t) -> np.ndarray:
        return self._fill(lam, t, deriv=False)

    def derivative(self, lam: float, t) -> np.ndarray:
        return self._fill(lam, t, deriv=True)

    def limits(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros((self.d, self.d))
        hi = np.zeros((self.d, self.d))
        for (i, j), (fn, fp) in self.entries.items():
            lo[i, j] = lo[j, i] = fn.limit(lam, -1)
            hi[i, j] = hi[j, i] = fp.limit(lam, +1)
        return lo, hi

    def at(self, lam: float) -> Callable[[float], np.ndarray]:
        """Fast scalar-``t`` evaluator with the ``lam`` factors frozen."""
        neg = [(i, j, fn.lam_part(lam), fn.t_part) for (i, j), (fn, _) in self.entries.items()]
        pos = [(i, j, fp.lam_part(lam), fp.t_part) for (i, j), (_, fp) in self.entries.items()]
        d = self.d

        def A(t: float) -> np.ndarray:
            M = np.zeros((d, d))
            for i, j, c, g in (neg if t < 0 else pos):
                if c:
                    M[i, j] = M[j, i] = c * float(g(t))
            return M

        return A

    def restrict(self, comps: Sequence[int]) -> EntryMatrix:
        pos = {c: k for k, c in enumerate(comps)}
        sub = {(pos[i], pos[j]): pair for (i, j), pair in self.entries.items()
               if i in pos and j in pos}
        return EntryMatrix(len(comps), sub)

    def reflected(self) -> EntryMatrix:
        """``(lam, t) -> A(-lam, t)``."""
        return EntryMatrix(self.d, {k: (fn.reflected(), fp.reflected())
                                    for k, (fn, fp) in self.entries.items()})


@dataclass
class HamiltonianProblem:
    """Linear homoclinic problem ``J u' + A(lam, t) u = 0``, ``u(+-inf) = 0``.

    ``A`` is an :class:`EntryMatrix` (or any object with the same methods:
    ``__call__(lam, t_array)``, ``derivative``, ``limits``, ``at``,
    ``restrict``, ``reflected``).  ``involution`` is the diagonal of a
    coordinate sign action commuting with ``J``.
    """

    A: EntryMatrix
    lambda_range: tuple[float, float]
    truncation: float = 8.0
    grid: int = 400
    involution: np.ndarray | None = None
    name: str = ""
    hyperbolicity_margin: float = HYPERBOLICITY_MARGIN

    def __post_init__(self) -> None:
        lam0, lam1 = (float(x) for x in self.lambda_range)
        if not lam0 < lam1:
            raise ValueError(f"degenerate lambda range [{lam0}, {lam1}]")
        self.lambda_range = (lam0, lam1)
        if self.A.d % 2:
            raise ValueError("phase space dimension must be even")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        if self.grid < 2 or self.grid % 2:
            raise ValueError("grid must be an even integer >= 2")
        if self.involution is not None:
            rho = np.asarray(self.involution, dtype=float)
            Involution(rho)  # validates +-1 entries
            if rho.shape != (self.dim,):
                raise ValueError("involution must be a diagonal of length dim")
            Jm = self.J
            if np.abs(rho[:, None] * Jm - Jm * rho[None, :]).max() > 0:
                raise ValueError("involution does not commute with J")
            self.involution = rho

    @property
    def dim(self) -> int:
        return self.A.d

    @property
    def n(self) -> int:
        return self.A.d // 2

    @property
    def J(self) -> np.ndarray:
        return symplectic_J(self.n)

    @property
    def lam0(self) -> float:
        return self.lambda_range[0]

    @property
    def lam1(self) -> float:
        return self.lambda_range[1]

    def with_resolution(self, truncation: float, grid: int) -> HamiltonianProblem:
        return HamiltonianProblem(self.A, self.lambda_range, truncation, grid,
                                  self.involution, self.name, self.hyperbolicity_margin)

    def on(self, lam0: float, lam1: float) -> HamiltonianProblem:
        return HamiltonianProblem(self.A, (lam0, lam1), self.truncation, self.grid,
                                  self.involution, self.name, self.hyperbolicity_margin)

    def restrict(self, comps: Sequence[int], name: str = "") -> HamiltonianProblem:
        """Sub-system on coordinates ``comps`` (must be a symplectic sub-block)."""
        comps = list(comps)
        Jm = self.J
        sub = Jm[np.ix_(comps, comps)]
        k = len(comps)
        if k % 2 or not np.array_equal(sub, symplectic_J(k // 2)):
            raise ValueError(f"coordinates {comps} do not form a symplectic block")
        return HamiltonianProblem(self.A.restrict(comps), self.lambda_range, self.truncation,
                                  self.grid, None, name or self.name, self.hyperbolicity_margin)

    def blocks(self) -> tuple[HamiltonianProblem, HamiltonianProblem]:
        """Fixed and anti-invariant sub-systems of the involution."""
        if self.involution is None:
            raise ValueError("problem has no involution")
        fixed = [i for i in range(self.dim) if self.involution[i] > 0]
        anti = [i for i in range(self.dim) if self.involution[i] < 0]
        return self.restrict(fixed, "fixed"), self.restrict(anti, "anti")

    def reversed_parameter(self) -> HamiltonianProblem:
        """The family ``lam -> A(-lam, .)`` on the reflected interval."""
        return HamiltonianProblem(self.A.reflected(), (-self.lam1, -self.lam0), self.truncation,
                                  self.grid, self.involution, self.name, self.hyperbolicity_margin)

    def check_hyperbolicity(self, lam: float) -> float:
        """Smallest ``|Re mu|`` over the spectra of ``J A(lam, +-inf)``."""
        margin = math.inf
        for Ainf in self.A.limits(lam):
            mu = np.linalg.eigvals(self.J @ Ainf)
            margin = min(margin, float(np.abs(mu.real).min()))
        if margin < self.hyperbolicity_margin:
            raise HyperbolicityError(
                f"J A({lam:.6g}, +-inf) has an eigenvalue with |Re| = {margin:.3e}")
        return margin

    def limit_residual(self, lam: float) -> float:
        """``max |A(lam, +-T) - A(lam, +-inf)|``, the truncation error of the coefficients."""
        lo, hi = self.A.limits(lam)
        At = self.A(lam, np.array([-self.truncation, self.truncation]))
        return float(max(np.abs(At[0] - lo).max(), np.abs(At[1] - hi).max()))


# -- shooting ------------------------------------------------------------------


class FrameTrajectory:
    """Solution frame ``Y(t)`` on a half line, normalised so that ``Y(0)`` is orthonormal."""

    def __init__(self, pieces: list[tuple[float, float, object, np.ndarray]], d: int, k: int):
        self.pieces = pieces  # (t_lo, t_hi, dense solution, right factor)
        self.d = d
        self.k = k

    @property
    def at_zero(self) -> np.ndarray:
        return self(0.0)

    def __call__(self, t: float) -> np.ndarray:
        for lo, hi, sol, G in self.pieces:
            if lo <= t <= hi:
                return sol(t).reshape(self.d, self.k) @ G
        raise ValueError(f"t={t} outside the integrated range")


def _stable_frame(M: np.ndarray, n: int, stable: bool) -> np.ndarray:
    """Orthonormal basis of the stable (Re < 0) or unstable invariant subspace of ``M``."""
    T, Z, sdim = sla.schur(M, output="real", sort="lhp" if stable else "rhp")
    if sdim != n:
        raise HyperbolicityError(f"expected {n} eigenvalues in the half plane, found {sdim}")
    return Z[:, :n]


def _integrate_frame(p: HamiltonianProblem, lam: float, forward: bool) -> FrameTrajectory:
    """Unstable frame forward from ``-T`` (``forward``) or stable frame backward from ``+T``."""
    n, d, T = p.n, p.dim, p.truncation
    p.check_hyperbolicity(lam)
    lo_lim, hi_lim = p.A.limits(lam)
    Jm = p.J
    if forward:
        Q = _stable_frame(Jm @ lo_lim, n, stable=False)
        knots = np.linspace(-T, 0.0, max(1, int(math.ceil(T / CHUNK))) + 1)
    else:
        Q = _stable_frame(Jm @ hi_lim, n, stable=True)
        knots = np.linspace(T, 0.0, max(1, int(math.ceil(T / CHUNK))) + 1)
    knots[-1] = 0.0
    A = p.A.at(lam)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return (Jm @ A(t) @ y.reshape(d, n)).ravel()

    raw = []
    Rs = []
    for a, b in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(rhs, (a, b), Q.ravel(), method="RK45", rtol=RTOL, atol=ATOL,
                        dense_output=True)
        if not sol.success:
            raise IntegrationError(f"frame integration failed at lambda={lam}: {sol.message}")
        Y = sol.y[:, -1].reshape(d, n)
        Q, R = np.linalg.qr(Y)
        s = np.sign(np.diag(R))
        s[s == 0] = 1.0
        Q, R = Q * s, s[:, None] * R
        raw.append((min(a, b), max(a, b), sol.sol))
        Rs.append(R)
    # right factors so that the last piece ends at the orthonormal Q
    G = np.eye(n)
    pieces = [None] * len(raw)
    for j in range(len(raw) - 1, -1, -1):
        G = np.linalg.solve(Rs[j], G)
        pieces[j] = (*raw[j], G)
    return FrameTrajectory(pieces, d, n)


def _align(F: np.ndarray, ref: np.ndarray | None) -> np.ndarray:
    """Re-basis ``F`` by the orthogonal matrix bringing it closest to ``ref``."""
    if ref is None:
        return F
    U, _, Vt = np.linalg.svd(F.T @ ref)
    return F @ (U @ Vt)


def stable_unstable_frames(p: HamiltonianProblem, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal frames of ``E^s(lam, 0)`` and ``E^u(lam, 0)`` (as columns)."""
    return (_integrate_frame(p, lam, forward=False).at_zero,
            _integrate_frame(p, lam, forward=True).at_zero)


@dataclass
class HomoclinicCrossing:
    lambda_star: float
    t: np.ndarray
    values: np.ndarray  # (len(t), dim, k): kernel basis sampled on t
    kernel: Callable[[float], np.ndarray]  # t -> (dim, k)
    tangential: bool = False
    form: np.ndarray | None = None
    signature: int | None = None

    @property
    def dim(self) -> int:
        return self.values.shape[2]


def _time_grid(p: HamiltonianProblem) -> np.ndarray:
    return np.linspace(-p.truncation, p.truncation, p.grid + 1)


def _trapezoid_gram(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Discrete ``L^2`` Gram matrix of columns sampled on a uniform grid."""
    w = np.full(t.size, t[1] - t[0])
    w[0] = w[-1] = 0.5 * (t[1] - t[0])
    return np.einsum("t,tik,til->kl", w, values, values)


def reconstruct_kernel(p: HamiltonianProblem, lam: float, tangential: bool = False,
                       tol: float = 1e-6) -> HomoclinicCrossing:
    """Kernel solutions at ``lam`` from the stable and unstable frame trajectories."""
    Ys = _integrate_frame(p, lam, forward=False)
    Yu = _integrate_frame(p, lam, forward=True)
    M = np.hstack([Ys.at_zero, -Yu.at_zero])
    _, s, Vt = np.linalg.svd(M)
    k = max(1, int(np.count_nonzero(s < tol)))
    C = Vt[-k:].T  # (2n, k), orthonormal
    cs, cu = C[: p.n], C[p.n:]

    def kernel(t: float) -> np.ndarray:
        return Ys(t) @ cs if t >= 0 else Yu(t) @ cu

    t = _time_grid(p)
    values = np.stack([kernel(float(x)) for x in t])
    # orthonormalise in the trapezoidal L^2 product
    G = _trapezoid_gram(t, values)
    w, V = np.linalg.eigh(G)
    Bmat = V / np.sqrt(w)
    u0 = (values[np.argmin(np.abs(t))] @ Bmat)
    # sign convention: largest component at t = 0 positive
    for j in range(k):
        i = int(np.argmax(np.abs(u0[:, j])))
        if u0[i, j] < 0:
            Bmat[:, j] = -Bmat[:, j]
    values = values @ Bmat

    def normalized(t: float) -> np.ndarray:
        return kernel(t) @ Bmat

    return HomoclinicCrossing(lam, t, values, normalized, tangential)


class _DetScanner:
    def __init__(self, p: HamiltonianProblem):
        self.p = p

    def frames(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        return stable_unstable_frames(self.p, lam)

    @staticmethod
    def det(Es: np.ndarray, Eu: np.ndarray) -> float:
        return float(np.linalg.det(np.hstack([Es, Eu])))


def detect_homoclinic_crossings(p: HamiltonianProblem, grid: int = SHOOTING_GRID, *,
                                lambda_tol: float | None = None, parallel: int = 1,
                                ) -> list[HomoclinicCrossing]:
    """Zeros of ``det[E_s(0) | E_u(0)]`` on the parameter interval, with kernels.

    Frames are sign-aligned between neighbouring parameters so that the
    determinant is continuous.  Sign changes are refined with Brent's
    bracketing method to ``lambda_tol``; local minima of ``|det|`` without
    a sign change are reported as tangential zeros.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if lambda_tol is None:
        lambda_tol = LAMBDA_TOL_REL * (p.lam1 - p.lam0)
    scan = _DetScanner(p)
    lams = np.linspace(p.lam0, p.lam1, grid + 1)
    frames = _pmap(scan.frames, [float(x) for x in lams], parallel)
    aligned = []
    prev = (None, None)
    for Es, Eu in frames:
        Es, Eu = _align(Es, prev[0]), _align(Eu, prev[1])
        aligned.append((Es, Eu))
        prev = (Es, Eu)
    dets = np.array([scan.det(Es, Eu) for Es, Eu in aligned])

    def det_near(lam: float, ref: tuple[np.ndarray, np.ndarray]) -> float:
        Es, Eu = scan.frames(lam)
        return scan.det(_align(Es, ref[0]), _align(Eu, ref[1]))

    found: list[tuple[float, bool]] = []
    for i in range(grid):
        a, b = float(lams[i]), float(lams[i + 1])
        da, db = dets[i], dets[i + 1]
        if da == 0.0:
            if 0 < i:
                found.append((a, False))
            continue
        if da * db < 0:
            ref = aligned[i]
            found.append((brentq(lambda x: det_near(x, ref), a, b, xtol=lambda_tol), False))
    for i in range(1, grid):
        dp, dc, dn = dets[i - 1], dets[i], dets[i + 1]
        if dp * dc <= 0 or dc * dn <= 0:
            continue
        if not (abs(dc) <= abs(dp) and abs(dc) <= abs(dn)):
            continue
        if abs(dc) > 2.0 * max(abs(dp - dc), abs(dn - dc)):
            continue
        ref = aligned[i]
        s = np.sign(dc)
        res = minimize_scalar(lambda x: s * det_near(x, ref), bounds=(lams[i - 1], lams[i + 1]),
                              method="bounded", options={"xatol": lambda_tol})
        if res.fun <= DET_TOL:
            found.append((float(res.x), True))
    found.sort()
    return [reconstruct_kernel(p, lam, tangential) for lam, tangential in found]


def homoclinic_crossing_form(p: HamiltonianProblem, lambda_star: float, kernel) -> np.ndarray:
    """``Gamma_ij = int_{-T}^{T} <dA/dlam(lambda_star, t) u_i(t), u_j(t)> dt``.

    ``kernel`` is a callable ``t -> (dim, k)`` array (or ``(dim,)`` vector),
    or a pair ``(t, values)`` of samples which is interpolated by cubic
    splines.  Returns the ``k x k`` form matrix.
    """
    T = p.truncation
    if callable(kernel):
        u = kernel
    else:
        t, values = kernel
        values = np.asarray(values, dtype=float)
        spline = CubicSpline(np.asarray(t, dtype=float), values, axis=0)
        u = spline
    probe = np.asarray(u(0.0), dtype=float)
    k = 1 if probe.ndim == 1 else probe.shape[1]

    def U(t: float) -> np.ndarray:
        return np.asarray(u(t), dtype=float).reshape(p.dim, k)

    def integrand(t: float, i: int, j: int) -> float:
        dA = p.A.derivative(lambda_star, np.array([t]))[0]
        Ut = U(t)
        return float(Ut[:, i] @ dA @ Ut[:, j])

    form = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            total = 0.0
            for a, b in ((-T, 0.0), (0.0, T)):
                with warnings.catch_warnings():
                    warnings.simplefilter("error", IntegrationWarning)
                    try:
                        val, _ = quad(integrand, a, b, args=(i, j), limit=400,
                                      epsabs=1e-13, epsrel=1e-11)
                    except IntegrationWarning as exc:
                        raise QuadratureError(f"crossing-form quadrature failed: {exc}") from exc
                total += val
            form[i, j] = form[j, i] = total
    return form


# -- truncated matrix path -------------------------------------------------------


class TruncatedSampler:
    """``L(lam) = C (x) J + (r/2) h (-Delta_h) (x) K + blockdiag(A(lam, t_k))``.

    Grid-major ordering: index ``k * dim + c``.  ``derivative=True`` gives
    ``blockdiag(dA/dlam(lam, t_k))``.
    """

    def __init__(self, A: EntryMatrix, truncation: float, grid: int, wilson: float = WILSON,
                 derivative: bool = False, comps: Sequence[int] | None = None):
        self.A = A
        self.truncation = truncation
        self.grid = grid
        self.wilson = wilson
        self.derivative = derivative
        self.comps = list(range(A.d)) if comps is None else list(comps)
        self.d = len(self.comps)
        self.h = 2.0 * truncation / (grid + 1)
        self.t = -truncation + self.h * np.arange(1, grid + 1)
        m, d = grid, self.d
        full_J = symplectic_J(A.d // 2)
        full_K = wilson_K(A.d // 2)
        Jm = full_J[np.ix_(self.comps, self.comps)]
        Km = full_K[np.ix_(self.comps, self.comps)]
        if derivative:
            self.base = np.zeros((m * d, m * d))
        else:
            shift = np.eye(m, k=1)
            C = (shift - shift.T) / (2.0 * self.h)
            lap = (2.0 * np.eye(m) - shift - shift.T) / self.h
            self.base = np.kron(C, Jm) + 0.5 * wilson * np.kron(lap, Km)
        k = np.arange(m)
        self._rows = (k[:, None, None] * d + np.arange(d)[None, :, None]).repeat(d, axis=2)
        self._cols = (k[:, None, None] * d + np.arange(d)[None, None, :]).repeat(d, axis=1)

    @property
    def bandwidth(self) -> int:
        return 2 * self.d - 1

    def _blocks(self, lam: float) -> np.ndarray:
        vals = self.A.derivative(lam, self.t) if self.derivative else self.A(lam, self.t)
        return vals[:, self.comps][:, :, self.comps]

    def difference_norm(self, lam_a: float, lam_b: float) -> float:
        """Exact spectral norm of ``L(lam_b) - L(lam_a)`` (block diagonal)."""
        diff = self._blocks(lam_b) - self._blocks(lam_a)
        return float(np.linalg.norm(diff, ord=2, axis=(1, 2)).max())

    def __call__(self, lam: float) -> np.ndarray:
        M = self.base.copy()
        M[self._rows, self._cols] += self._blocks(lam)
        return M

    def restrict(self, idx: np.ndarray) -> Callable[[float], np.ndarray]:
        idx = np.asarray(idx)
        m, d = self.grid, self.d
        comps = [int(c) for c in idx[: len(idx) // m]] if len(idx) % m == 0 else None
        pattern = None
        if comps is not None:
            pattern = (np.arange(m)[:, None] * d + np.asarray(comps)[None, :]).ravel()
        if pattern is not None and np.array_equal(pattern, idx):
            return TruncatedSampler(self.A, self.truncation, self.grid, self.wilson,
                                    self.derivative, [self.comps[c] for c in comps])
        return lambda lam: self(lam)[np.ix_(idx, idx)]


def assemble_truncated_operator_path(p: HamiltonianProblem, wilson: float = WILSON) -> OperatorPath:
    """Symmetric ``grid * dim`` matrix path of the truncated first-order operator.

    The involution, when present, acts on every grid point.
    """
    sampler = TruncatedSampler(p.A, p.truncation, p.grid, wilson)
    deriv = TruncatedSampler(p.A, p.truncation, p.grid, wilson, derivative=True)
    involution = None
    if p.involution is not None:
        involution = Involution(np.tile(p.involution, p.grid))
    return OperatorPath(sampler, p.lambda_range, derivative=deriv, involution=involution,
                        bandwidth=sampler.bandwidth, name=p.name, check_symmetry=False)


def bulk_weights(sampler: TruncatedSampler, fraction: float = BULK_FRACTION) -> np.ndarray:
    """Diagonal of the indicator of ``|t| <= fraction * T``."""
    inside = np.abs(sampler.t) <= fraction * sampler.truncation
    return np.repeat(inside.astype(float), sampler.d)


@dataclass
class MatrixPathwayResult:
    """Spectral flow of a truncated path: raw (always 0 on loops) and bulk-attributed."""

    sfl_raw: int
    sfl_bulk: int
    rounding_defect: float
    events: list[tuple[float, float, float]]  # (lam_a, lam_b, bulk contribution) where nonzero
    truncation: float
    grid: int
    diagnostics: dict = field(default_factory=dict)


def truncated_spectral_flow(path: OperatorPath, parallel: int = 1,
                            fraction: float = BULK_FRACTION) -> MatrixPathwayResult:
    """Partition spectral flow of a truncated path plus its bulk attribution.

    For every accepted partition interval with level ``a`` the bulk trace
    ``sum_{mu in [0, a]} v^T W v`` is compared at both ends; its change,
    rounded, is the flow through zero of bulk-localised eigenvalues.
    """
    sampler = path.sampler
    if not isinstance(sampler, TruncatedSampler):
        raise TypeError("bulk attribution needs a truncated-operator path")
    W = bulk_weights(sampler, fraction)
    res = spectral_flow_partition(path, parallel=parallel)
    part = res.diagnostics["partition"]
    top: dict[float, float] = {}
    for a, b, level, _ in part:
        for lam in (a, b):
            top[lam] = max(top.get(lam, 0.0), level)
    lams = sorted(top)

    cache = res.diagnostics["eigenvalues"]

    def pairs(lam: float):
        M = path(lam)
        w = cache[lam]
        vals, vecs = eigenpairs_in_window(M, 0.0, top[lam], path.bandwidth, eigenvalues=w)
        return vals, (vecs ** 2 * W[:, None]).sum(axis=0)

    data = dict(zip(lams, _pmap(pairs, lams, parallel)))

    def trace(lam: float, level: float) -> float:
        vals, weights = data[lam]
        return float(weights[(vals >= 0) & (vals <= level)].sum())

    bulk = 0
    defect = 0.0
    events = []
    for a, b, level, _ in part:
        delta = trace(b, level) - trace(a, level)
        r = int(round(delta))
        defect = max(defect, abs(delta - r))
        if r:
            events.append((a, b, delta))
        bulk += r
    if defect > BULK_ROUNDING_LIMIT:
        raise SpectralFlowError(
            f"bulk attribution is ambiguous (defect {defect:.3f}); refine the grid")
    return MatrixPathwayResult(res.sfl, bulk, defect, events, sampler.truncation, sampler.grid,
                               {"partition": res})


# -- the homoclinic example with a Z2 symmetry ------------------------------------------


def reduced_family_entries(reflect: bool = False) -> dict[tuple[int, int], tuple[TimeFamily, TimeFamily]]:
    """Entries of ``arctan(t) J S_lam`` (t >= 0) / ``arctan(t) J S_0`` (t < 0).

    ``J S_lam = [[-sin lam, cos lam], [cos lam, sin lam]]``.  With
    ``reflect`` the parameter is replaced by ``-lam``.
    """
    w = -1.0 if reflect else 1.0
    zero = make_time_family("zero")
    return {
        (0, 0): (zero, make_time_family("arctan_sin", (-1.0, w, 0.0))),
        (0, 1): (make_time_family("arctan", (1.0,)), make_time_family("arctan_cos", (1.0, w, 0.0))),
        (1, 1): (zero, make_time_family("arctan_sin", (1.0, w, 0.0))),
    }


def build_reduced_family(lambda_range=(-math.pi, math.pi), truncation: float = 8.0,
                         grid: int = 400, reflect: bool = False) -> HamiltonianProblem:
    """The 2x2 family on its own (the fixed block of :func:`build_homoclinic_example`)."""
    return HamiltonianProblem(EntryMatrix(2, reduced_family_entries(reflect)), lambda_range,
                              truncation, grid, None, "reduced-reflected" if reflect else "reduced")


def build_homoclinic_example(lambda_range=(-math.pi, math.pi), truncation: float = 8.0,
                        grid: int = 400) -> HamiltonianProblem:
    """4x4 system on coordinates ``(u1, u2, u3, u4)`` with action ``diag(1, -1, 1, -1)``.

    The ``(u1, u3)`` block is the reduced family, the ``(u2, u4)`` block the
    same family with ``lam`` replaced by ``-lam``.
    """
    fixed, anti = (0, 2), (1, 3)
    entries = {}
    for comps, reflect in ((fixed, False), (anti, True)):
        for (i, j), pair in reduced_family_entries(reflect).items():
            entries[(comps[i], comps[j])] = pair
    return HamiltonianProblem(EntryMatrix(4, entries), lambda_range, truncation, grid,
                              np.array([1.0, -1.0, 1.0, -1.0]), "homoclinic-loop")


# name used by the original operation list
build_paper_example = build_homoclinic_example


def explicit_kernel(t) -> np.ndarray:
    """``sqrt(t^2 + 1) exp(-t arctan t)``, first component of the kernel at ``lam = 0``."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(t * t + 1.0) * np.exp(-t * np.arctan(t))


# -- report ----------------------------------------------------------------------


@dataclass
class BlockReport:
    label: str
    crossings: list[HomoclinicCrossing]
    sfl_shooting: int
    matrix: MatrixPathwayResult
    matrix_refined: MatrixPathwayResult | None
    fallback: bool = False


@dataclass
class HamiltonianReport:
    name: str
    lambda_range: tuple[float, float]
    sfl: int
    sfl_equivariant: RepRingElement | None
    verdict: Verdict
    blocks: list[BlockReport]
    endpoint_invertible: tuple[bool, bool]
    full_raw_sfl: int | None
    hyperbolicity_margin: float
    limit_residual: float
    warnings: list[str] = field(default_factory=list)


def _block_shooting(p: HamiltonianProblem, grid: int, parallel: int) -> tuple[list[HomoclinicCrossing], int, bool]:
    crossings = detect_homoclinic_crossings(p, grid, parallel=parallel)
    total = 0
    fallback = False
    for c in crossings:
        form = homoclinic_crossing_form(p, c.lambda_star, c.kernel)
        c.form = form
        mu = np.linalg.eigvalsh(form)
        scale = float(np.abs(p.A.derivative(c.lambda_star, c.t)).max()) or 1.0
        if np.any(np.abs(mu) <= 1e-6 * scale):
            fallback = True
            continue
        c.signature = int(np.count_nonzero(mu > 0) - np.count_nonzero(mu < 0))
        total += c.signature
    return crossings, total, fallback


def _endpoint_det(p: HamiltonianProblem, lam: float) -> float:
    Es, Eu = stable_unstable_frames(p, lam)
    return abs(_DetScanner.det(Es, Eu))


def hamiltonian_report(p: HamiltonianProblem, *, shooting_grid: int = SHOOTING_GRID,
                       check_convergence: bool = True, parallel: int = 1,
                       wilson: float = WILSON) -> HamiltonianReport:
    """Both pathways, their cross-check, and the bifurcation verdict.

    Raises :class:`~equisfl.errors.PathwayDisagreementError` when the shooting
    flow, the bulk flow of the truncated matrix path, or the bulk flow at
    doubled ``(T, m)`` disagree on any block.
    """
    notes = []
    lams = np.linspace(p.lam0, p.lam1, 9)
    margin = min(p.check_hyperbolicity(float(x)) for x in lams)
    residual = max(p.limit_residual(float(x)) for x in lams)

    if p.involution is not None:
        parts = list(zip(("fixed", "anti"), p.blocks()))
    else:
        parts = [("full", p)]
    path = assemble_truncated_operator_path(p, wilson)
    refined = p.with_resolution(2 * p.truncation, 2 * p.grid)
    path2 = assemble_truncated_operator_path(refined, wilson) if check_convergence else None

    if p.involution is not None:
        from .equivariance import isotypic_split, restrict_path

        split = isotypic_split(path.involution)
        mats = [restrict_path(path, split.basis_fixed), restrict_path(path, split.basis_anti)]
        mats2 = [None, None]
        if path2 is not None:
            split2 = isotypic_split(path2.involution)
            mats2 = [restrict_path(path2, split2.basis_fixed), restrict_path(path2, split2.basis_anti)]
    else:
        mats, mats2 = [path], [path2]

    blocks = []
    for (label, sub), M1, M2 in zip(parts, mats, mats2):
        crossings, s_shoot, fallback = _block_shooting(sub, shooting_grid, parallel)
        r1 = truncated_spectral_flow(M1, parallel)
        r2 = truncated_spectral_flow(M2, parallel) if M2 is not None else None
        if fallback:
            notes.append(f"{label} block: degenerate crossing form, using the matrix pathway")
            s_shoot = r1.sfl_bulk
        values = {"shooting": s_shoot, f"matrix(T={p.truncation:g}, m={p.grid})": r1.sfl_bulk}
        if r2 is not None:
            values[f"matrix(T={refined.truncation:g}, m={refined.grid})"] = r2.sfl_bulk
        if len(set(values.values())) != 1:
            raise PathwayDisagreementError(f"{label} block: spectral flows disagree: {values}")
        blocks.append(BlockReport(label, crossings, s_shoot, r1, r2, fallback))

    full_raw = None
    if p.involution is not None:
        # independent method on the unsplit path; exact in finite dimensions
        full_raw = sfl_via_morse(path).sfl
        raw_sum = sum(b.matrix.sfl_raw for b in blocks)
        if full_raw != raw_sum:
            raise PathwayDisagreementError(
                f"unsplit truncated path has spectral flow {full_raw}, blocks sum to {raw_sum}")
        fixed, anti = blocks
        sfl = fixed.sfl_shooting + anti.sfl_shooting
        equi = RepRingElement(sfl, fixed.sfl_shooting)
    else:
        sfl = blocks[0].sfl_shooting
        equi = None

    dets = (_endpoint_det(p, p.lam0), _endpoint_det(p, p.lam1))
    invertible = (dets[0] > DET_TOL, dets[1] > DET_TOL)
    for lam, ok in zip(p.lambda_range, invertible):
        if not ok:
            notes.append(f"L({lam:.6g}) has a kernel; the bifurcation criterion does not apply")
    verdict = _verdict(sfl, equi, invertible)
    return HamiltonianReport(p.name, p.lambda_range, sfl, equi, verdict, blocks, invertible,
                             full_raw, margin, residual, notes)


def _verdict(sfl: int, equi: RepRingElement | None, invertible: tuple[bool, bool]) -> Verdict:
    from .sflcore import SpectralFlowResult, Method, bifurcation_verdict

    return bifurcation_verdict(SpectralFlowResult(sfl, Method.CROSSING_FORM, equi), invertible)
