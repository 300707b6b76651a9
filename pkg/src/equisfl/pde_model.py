"""Indefinite elliptic Dirichlet systems on the interval ``(0, pi)``.

The problem is

    -u'' = F_u(lam, x, u, v),   v'' = F_v(lam, x, u, v),   u = v = 0 at 0, pi,

with ``F = <S_lam(x) w, w> / 2 + R`` and ``S = [[a, c], [c, b]]``.  Its
solutions are the critical points of

    f(w) = 1/2 int u'^2 - 1/2 int v'^2 - int F,

whose Hessian at ``w = 0`` is ``int u1' u2' - int v1' v2' - int <S w1, w2>``.
This sign convention makes the kernel of the Hessian exactly the solution
space of the linearised system ``(-u'', v'') = S (u, v)``.

Everything is expanded in the sine basis ``psi_k = sqrt(2/pi) sin(kx) / k``,
which is orthonormal for ``int u' v'``.  The Hessian is then a ``2N x 2N``
matrix with identity / minus-identity diagonal blocks plus the coefficient
terms, and the Z2 action ``(u, v) -> (u, -v)`` is ``diag(I_N, -I_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .equivariance import Involution
from .errors import ConfigError, PathwayDisagreementError
from .families import Coefficient, make_coefficient
from .linalg import kernel_basis, morse_index
from .paths import OperatorPath
from .repring import RepRingElement
from .sflcore import (
    KERNEL_TOL_REL,
    Crossing,
    Method,
    SpectralFlowResult,
    Verdict,
    _pmap,
    bifurcation_verdict,
    endpoint_invertibility,
    equivariant_spectral_flow,
    find_crossings,
    sfl_via_morse,
    spectral_flow_partition,
)

GL_POINTS = 8
NEWTON_TOL = 1e-10
STEP_TOL = 1e-10
NEWTON_MAX_ITER = 200
STALL_ITER = 25
AMPLITUDES = (1e-3, 1e-2, 1e-1)
NOISE_FLOOR = 1e-6

_SQRT_2_PI = np.sqrt(2.0 / np.pi)


# -- nonlinear remainders ---------------------------------------------------------


@dataclass(frozen=True)
class Remainder:
    """Higher-order part ``R(lam, x, u, v)`` of ``F`` (its Hessian at 0 vanishes).

    ``grad`` returns ``(R_u, R_v)`` and ``hess`` returns ``(R_uu, R_uv, R_vv)``,
    all vectorised over quadrature points.  ``even_in_v`` records whether
    ``R(u, -v) = R(u, v)``.
    """

    name: str
    params: tuple[float, ...]
    grad: Callable
    hess: Callable
    even_in_v: bool


def _afi() -> Remainder:
    """``u^3 v + v^3 u``."""
    return Remainder(
        "afi", (),
        lambda lam, x, u, v: (3 * u * u * v + v ** 3, 3 * v * v * u + u ** 3),
        lambda lam, x, u, v: (6 * u * v, 3 * u * u + 3 * v * v, 6 * u * v),
        False,
    )


def _even_quartic(c1: float = -1.0, c2: float = 1.0) -> Remainder:
    """``c1 u^4 / 4 + c2 u^2 v^2 / 2``."""
    return Remainder(
        "even_quartic", (c1, c2),
        lambda lam, x, u, v: (c1 * u ** 3 + c2 * u * v * v, c2 * u * u * v),
        lambda lam, x, u, v: (3 * c1 * u * u + c2 * v * v, 2 * c2 * u * v, c2 * u * u),
        True,
    )


def _zero_remainder() -> Remainder:
    def grad(lam, x, u, v):
        return np.zeros_like(u), np.zeros_like(v)

    def hess(lam, x, u, v):
        z = np.zeros_like(u)
        return z, z, z

    return Remainder("zero", (), grad, hess, True)


REMAINDERS: dict[str, Callable[..., Remainder]] = {
    "zero": _zero_remainder,
    "afi": _afi,
    "even_quartic": _even_quartic,
}


def make_remainder(name: str, params=()) -> Remainder:
    try:
        factory = REMAINDERS[name]
    except KeyError:
        raise ConfigError(f"unknown nonlinearity {name!r}; choose from {sorted(REMAINDERS)}") from None
    try:
        return factory(*(float(p) for p in params))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


# -- problem and assembly -----------------------------------------------------------


@dataclass
class PdeProblem:
    """Elliptic system with Hessian coefficients ``a``, ``b``, ``c`` and remainder ``R``.

    With ``even_in_v`` the coupling ``c`` must vanish identically and the
    remainder must be even in ``v``; the assembled path then carries the
    involution ``diag(I_N, -I_N)``.
    """

    a: Coefficient
    b: Coefficient
    c: Coefficient | None = None
    remainder: Remainder | None = None
    modes: int = 64
    lambda_range: tuple[float, float] = (0.0, 2.0)
    even_in_v: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        lam0, lam1 = (float(x) for x in self.lambda_range)
        if not lam0 < lam1:
            raise ValueError(f"degenerate lambda range [{lam0}, {lam1}]")
        self.lambda_range = (lam0, lam1)
        if self.modes < 1:
            raise ValueError("modes must be at least 1")
        if self.c is None:
            self.c = make_coefficient("zero")
        if self.even_in_v:
            if self.c.name != "zero":
                raise ValueError("even_in_v requires a vanishing coupling coefficient c")
            if self.remainder is not None and not self.remainder.even_in_v:
                raise ValueError(f"nonlinearity {self.remainder.name} is not even in v")

    def S(self, lam: float, x) -> np.ndarray:
        """``S_lam(x)`` as an array of shape ``(len(x), 2, 2)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a, b, c = self.a(lam, x), self.b(lam, x), self.c(lam, x)
        return np.stack([np.stack([a, c], -1), np.stack([c, b], -1)], -2)

    def with_modes(self, modes: int) -> PdeProblem:
        return PdeProblem(self.a, self.b, self.c, self.remainder, modes, self.lambda_range,
                          self.even_in_v, self.name)

    @property
    def involution(self) -> Involution | None:
        if not self.even_in_v:
            return None
        return Involution(np.r_[np.ones(self.modes), -np.ones(self.modes)])


class SineQuadrature:
    """Composite Gauss-Legendre rule on ``(0, pi)`` with sine-basis tables.

    ``2N`` panels of ``GL_POINTS`` nodes resolve products of basis
    functions (frequency ``<= 2N``) to rounding error.
    """

    def __init__(self, modes: int, panels: int | None = None, points: int = GL_POINTS):
        panels = 2 * modes if panels is None else panels
        g, w = np.polynomial.legendre.leggauss(points)
        edges = np.linspace(0.0, np.pi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        self.x = (mid[:, None] + half[:, None] * g[None, :]).ravel()
        self.w = (half[:, None] * w[None, :]).ravel()
        k = np.arange(1, modes + 1)
        self.k = k
        self.phi = _SQRT_2_PI * np.sin(np.outer(self.x, k))  # (Q, N), L2-orthonormal
        self.psi = self.phi / k  # H1_0-orthonormal

    def gram(self, f: np.ndarray) -> np.ndarray:
        """``int f psi_j psi_k``."""
        return (self.psi * (self.w * f)[:, None]).T @ self.psi

    def project(self, f: np.ndarray) -> np.ndarray:
        """``int f psi_j``."""
        return self.psi.T @ (self.w * f)


def _block(coef: Coefficient, lam: float, quad: SineQuadrature, deriv: bool) -> np.ndarray:
    """``int coef psi_j psi_k`` (or of ``d coef / d lam``), exactly for x-independent data."""
    N = quad.k.size
    if coef.name == "zero":
        return np.zeros((N, N))
    x0 = np.zeros(1)
    if coef.x_independent:
        val = float((coef.dlam(lam, x0) if deriv else coef(lam, x0))[0])
        return np.diag(val / quad.k.astype(float) ** 2)
    f = coef.dlam(lam, quad.x) if deriv else coef(lam, quad.x)
    return quad.gram(f)


class PdeHessianSampler:
    def __init__(self, p: PdeProblem, derivative: bool = False):
        self.p = p
        self.derivative = derivative
        self.quad = SineQuadrature(p.modes)
        N = p.modes
        self.base = np.zeros((2 * N, 2 * N)) if derivative else \
            np.diag(np.r_[np.ones(N), -np.ones(N)])

    def __call__(self, lam: float) -> np.ndarray:
        p, q, d = self.p, self.quad, self.derivative
        N = p.modes
        M = self.base.copy()
        M[:N, :N] -= _block(p.a, lam, q, d)
        M[N:, N:] -= _block(p.b, lam, q, d)
        if p.c.name != "zero":
            C = _block(p.c, lam, q, d)
            M[:N, N:] -= C
            M[N:, :N] -= C.T
        return 0.5 * (M + M.T)


def assemble_pde_hessian(p: PdeProblem) -> OperatorPath:
    """The ``2N x 2N`` Hessian path in the sine basis, with the Z2 action when even in v."""
    return OperatorPath(PdeHessianSampler(p), p.lambda_range,
                        derivative=PdeHessianSampler(p, derivative=True),
                        involution=p.involution, name=p.name)


def dirichlet_morse_index(a_sampler, lam: float, N: int, zero_tol: float | None = None) -> int:
    """Morse index of ``int u'^2 - int a_lam u^2`` on ``N`` sine modes.

    This counts the Dirichlet eigenvalues of ``-u'' = mu u`` below ``a``
    (for constant ``a``), i.e. the negative eigenvalues of ``-u'' - a u``.
    """
    quad = SineQuadrature(N)
    if isinstance(a_sampler, Coefficient) and a_sampler.x_independent:
        G = np.diag(a_sampler.value(lam) / quad.k.astype(float) ** 2)
    else:
        G = quad.gram(np.asarray(a_sampler(lam, quad.x), dtype=float) * np.ones_like(quad.x))
    return morse_index(np.eye(N) - G, zero_tol, strict=True)


# -- Newton branch search ---------------------------------------------------------------


@dataclass
class BranchPoint:
    lam: float
    norm: float
    residual: float
    iterations: int
    coefficients: np.ndarray = field(repr=False)


@dataclass
class NewtonStats:
    attempts: int = 0
    converged_trivial: int = 0
    converged_nontrivial: int = 0
    failed: int = 0


class _Residual:
    """Galerkin gradient ``G(w) = L w - [int R_u psi; int R_v psi]`` and its Jacobian."""

    def __init__(self, p: PdeProblem, lam: float, quad: SineQuadrature, hessian: np.ndarray):
        self.p, self.lam, self.q = p, lam, quad
        self.L = hessian
        self.N = p.modes
        self.R = p.remainder

    def split(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.q.psi @ w[: self.N], self.q.psi @ w[self.N:]

    def __call__(self, w: np.ndarray) -> np.ndarray:
        u, v = self.split(w)
        Ru, Rv = self.R.grad(self.lam, self.q.x, u, v)
        return self.L @ w - np.r_[self.q.project(Ru), self.q.project(Rv)]

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        u, v = self.split(w)
        Ruu, Ruv, Rvv = self.R.hess(self.lam, self.q.x, u, v)
        g = self.q.gram
        return self.L - np.block([[g(Ruu), g(Ruv)], [g(Ruv), g(Rvv)]])


class _Deflated:
    """``m(w) G(w)`` with ``m = 1/||w||^2 + 1``, which removes the trivial root ``w = 0``.

    Without deflation Newton started from small seeds lands on the trivial
    solution whenever it is the nearest root, i.e. always close to the
    bifurcation point.
    """

    def __init__(self, G: _Residual, shift: float = 1.0):
        self.G = G
        self.shift = shift

    def m(self, w: np.ndarray) -> float:
        return 1.0 / float(w @ w) + self.shift

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.m(w) * self.G(w)

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        n2 = float(w @ w)
        return self.m(w) * self.G.jacobian(w) - np.outer(self.G(w), 2.0 * w / n2 ** 2)


def _newton(G: _Residual, w0: np.ndarray, tol: float = NEWTON_TOL,
            max_iter: int = NEWTON_MAX_ITER) -> tuple[np.ndarray, float, int, bool]:
    """Deflated Newton with backtracking on the deflated residual norm.

    Converged only when both the undeflated residual and the last step are
    below ``tol``.  Runs that stall (no sufficient decrease, or less than 1%
    progress over ``STALL_ITER`` iterations) are reported as failures.
    """
    H = _Deflated(G)
    w = w0.copy()
    r = H(w)
    nr = float(np.linalg.norm(r))
    best, best_it = nr, 0
    for it in range(1, max_iter + 1):
        try:
            dw = np.linalg.solve(H.jacobian(w), -r)
        except np.linalg.LinAlgError:
            return w, nr, it, False
        t = 1.0
        accepted = False
        while t >= 1e-6:
            wn = w + t * dw
            if float(wn @ wn) > 0.0 and np.all(np.isfinite(wn)):
                rn = H(wn)
                nrn = float(np.linalg.norm(rn))
                if nrn <= (1.0 - 1e-4 * t) * nr:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # stuck at a local minimum of the residual norm
            return w, float(np.linalg.norm(G(w))), it, False
        step = t * float(np.linalg.norm(dw))
        w, r, nr = wn, rn, nrn
        if nr < 0.99 * best:
            best, best_it = nr, it
        elif it - best_it >= STALL_ITER:
            return w, float(np.linalg.norm(G(w))), it, False
        res = float(np.linalg.norm(G(w)))
        if res < tol and step < STEP_TOL * max(1.0, float(np.linalg.norm(w))):
            return w, res, it, True
    return w, float(np.linalg.norm(G(w))), max_iter, False


def _seed_directions(p: PdeProblem, path: OperatorPath, lam_star: float) -> list[np.ndarray]:
    M = path(lam_star)
    K = kernel_basis(M, KERNEL_TOL_REL * float(np.abs(M).sum(axis=1).max()))
    if K.shape[1] == 0:
        # no kernel at lam_star: fall back to the eigenvectors closest to zero
        w, V = np.linalg.eigh(M)
        K = V[:, np.argsort(np.abs(w))[:2]]
    N = p.modes
    dirs = []
    for j in range(K.shape[1]):
        k = K[:, j]
        pieces = [k]
        if p.even_in_v:
            # seed inside each isotypic block separately
            pieces = [np.r_[k[:N], np.zeros(N)], np.r_[np.zeros(N), k[N:]]]
        for d in pieces:
            nd = np.linalg.norm(d)
            if nd > 1e-8:
                dirs.append(d / nd)
    return dirs


def newton_branch_search(p: PdeProblem, lambda_star: float, radius: float = 0.25,
                         grid: int = 10, *, parallel: int = 1,
                         stats: NewtonStats | None = None) -> list[BranchPoint]:
    """Nontrivial solutions near ``lambda_star`` found by damped Newton.

    Seeds are the kernel directions of the Hessian at ``lambda_star`` (split
    by isotypic block when even in v), scaled by each amplitude in
    ``{1e-3, 1e-2, 1e-1}`` with both signs.  The grid is swept outwards from
    ``lambda_star`` and converged solutions at the previous grid point are
    used as extra seeds.  Only solutions with norm above ``1e-6`` and
    residual below ``1e-10`` are returned.  An empty result is evidence,
    not proof, that no branch exists.
    """
    if p.remainder is None:
        return []
    stats = NewtonStats() if stats is None else stats
    path = assemble_pde_hessian(p)
    dirs = _seed_directions(p, path, lambda_star)
    base_seeds = [s * a * d for d in dirs for a in AMPLITUDES for s in (1.0, -1.0)]
    lams = np.linspace(lambda_star - radius, lambda_star + radius, grid)
    quad = SineQuadrature(p.modes)
    below = [x for x in lams if x < lambda_star][::-1]
    above = [x for x in lams if x >= lambda_star]

    def sweep(side: list[float]) -> list[tuple[BranchPoint, NewtonStats]]:
        out = []
        carried: list[np.ndarray] = []
        for lam in side:
            local = NewtonStats()
            G = _Residual(p, float(lam), quad, path(float(lam)))
            found: list[BranchPoint] = []
            for w0 in base_seeds + carried:
                local.attempts += 1
                w, res, its, ok = _newton(G, w0)
                if not ok:
                    local.failed += 1
                    continue
                nrm = float(np.linalg.norm(w))
                if nrm <= NOISE_FLOOR:
                    local.converged_trivial += 1
                    continue
                local.converged_nontrivial += 1
                if any(np.linalg.norm(w - b.coefficients) <= 1e-8 * max(1.0, nrm) for b in found):
                    continue
                found.append(BranchPoint(float(lam), nrm, res, its, w))
            carried = [b.coefficients for b in found]
            out.append((found, local))
        return out

    results = _pmap(sweep, [below, above], parallel)
    points: list[BranchPoint] = []
    for side in results:
        for found, local in side:
            points += found
            stats.attempts += local.attempts
            stats.converged_trivial += local.converged_trivial
            stats.converged_nontrivial += local.converged_nontrivial
            stats.failed += local.failed
    points.sort(key=lambda b: (b.lam, b.norm, tuple(np.round(b.coefficients, 12))))
    return points


def branch_profile(points: list[BranchPoint]) -> list[tuple[float, float]]:
    """Largest solution norm per parameter value."""
    best: dict[float, float] = {}
    for b in points:
        best[b.lam] = max(best.get(b.lam, 0.0), b.norm)
    return sorted(best.items())


# -- report -----------------------------------------------------------------------------


@dataclass
class PdeReport:
    name: str
    modes: int
    lambda_range: tuple[float, float]
    sfl: int
    sfl_equivariant: RepRingElement | None
    crossings: list[Crossing]
    fixed_morse: tuple[int, int] | None
    verdict: Verdict
    mechanism: str
    endpoint_invertible: tuple[bool, bool]
    refined: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _integers(p: PdeProblem, parallel: int) -> tuple[int, RepRingElement | None, tuple[int, int] | None, list[str]]:
    path = assemble_pde_hessian(p)
    if p.even_in_v:
        res = equivariant_spectral_flow(path, parallel=parallel)
        morse = (dirichlet_morse_index(p.a, p.lambda_range[0], p.modes),
                 dirichlet_morse_index(p.a, p.lambda_range[1], p.modes))
        return res.sfl, res.sfl_equivariant, morse, res.warnings
    res = spectral_flow_partition(path, parallel=parallel)
    return res.sfl, None, None, res.warnings


def pde_bifurcation_report(p: PdeProblem, *, check_convergence: bool = True,
                           crossing_grid: int = 64, parallel: int = 1) -> PdeReport:
    """Spectral flow (equivariant when even in v), crossings, Morse indices and verdict.

    With ``check_convergence`` the integers are recomputed with ``2N`` modes
    and must agree.
    """
    path = assemble_pde_hessian(p)
    invertible = endpoint_invertibility(path)
    notes = []
    for lam, ok in zip(p.lambda_range, invertible):
        if not ok:
            notes.append(f"Hessian at lambda={lam:.6g} is not invertible")
    sfl, equi, morse, w = _integers(p, parallel)
    notes += w
    # the Morse difference is an independent check on the partition count
    if all(invertible):
        md = sfl_via_morse(path)
        if md.sfl != sfl or (equi is not None and md.sfl_equivariant != equi):
            raise PathwayDisagreementError(
                f"partition ({sfl}, {equi}) and Morse difference ({md.sfl}, "
                f"{md.sfl_equivariant}) disagree")
    crossings = find_crossings(path, crossing_grid, parallel=parallel)

    verdict = bifurcation_verdict(SpectralFlowResult(sfl, Method.PARTITION, equi), invertible)
    if verdict is Verdict.BIFURCATION_CERTIFIED:
        if morse is not None and morse[0] != morse[1]:
            mechanism = "Morse index jump on the fixed block"
        elif sfl != 0:
            mechanism = "nonzero spectral flow"
        else:
            mechanism = "nonzero equivariant spectral flow"
    else:
        mechanism = "none"

    refined = {}
    if check_convergence:
        q = p.with_modes(2 * p.modes)
        r_sfl, r_equi, r_morse, _ = _integers(q, parallel)
        refined = {"modes": q.modes, "sfl": r_sfl, "sfl_equivariant": r_equi, "fixed_morse": r_morse}
        if (r_sfl, r_equi, r_morse) != (sfl, equi, morse):
            raise PathwayDisagreementError(
                f"results change under N -> 2N: ({sfl}, {equi}, {morse}) vs "
                f"({r_sfl}, {r_equi}, {r_morse})")
    return PdeReport(p.name, p.modes, p.lambda_range, sfl, equi, crossings, morse, verdict,
                     mechanism, invertible, refined, notes)


# -- presets ------------------------------------------------------------------------------


def build_afi_problem(modes: int = 64, lambda_range=(0.0, 2.0)) -> PdeProblem:
    """``F = lam/2 (u^2 - v^2) + u^3 v + v^3 u``: zero spectral flow, no bifurcation."""
    return PdeProblem(make_coefficient("affine", (0.0, 1.0)), make_coefficient("affine", (0.0, -1.0)),
                      None, make_remainder("afi"), modes, lambda_range, False, "afi")


def build_even_problem(modes: int = 64, lambda_range=(0.0, 2.0)) -> PdeProblem:
    """``F = lam/2 (u^2 - v^2) - u^4/4 + u^2 v^2 / 2``, even in v; bifurcates at ``lam = 1``."""
    return PdeProblem(make_coefficient("affine", (0.0, 1.0)), make_coefficient("affine", (0.0, -1.0)),
                      None, make_remainder("even_quartic", (-1.0, 1.0)), modes, lambda_range, True,
                      "even-bifurcation")
