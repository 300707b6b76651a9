"""Spectral flow of paths of symmetric matrices.

Three independent computations are provided:

* :func:`spectral_flow_partition`, Phillips' definition on an adaptively
  refined partition, which needs only eigenvalues;
* :func:`spectral_flow_crossings`, the sum of crossing-form signatures over
  the (regular) crossings found by :func:`find_crossings`;
* :func:`sfl_via_morse`, the Morse-index difference of the endpoints, which
  is exact in finite dimensions.

:func:`equivariant_spectral_flow` applies the scalar engine to the two
isotypic blocks of a Z2-equivariant path.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar

from .equivariance import (
    Involution,
    check_path_equivariance,
    isotypic_split,
    restrict_path,
)
from .errors import (
    AmbiguousKernelError,
    NearKernelAmbiguityError,
    NonRegularCrossingError,
    PathwayDisagreementError,
    RefinementLimitError,
    SpectralFlowError,
    UnresolvedCrossingClusterError,
)
from .linalg import (
    ZERO_TOL_REL,
    eig_sym,
    eigvalsh,
    kernel_basis,
    morse_index,
    norm_bound,
)
from .paths import OperatorPath
from .repring import RepRingElement, rep_from_spaces

INITIAL_SUBINTERVALS = 16
MAX_DEPTH = 30
DRIFT_FRACTION = 0.25
LAMBDA_TOL_REL = 1e-10
KERNEL_TOL_REL = 1e-6
FORM_TOL_REL = 1e-6
CROSSING_GRID = 64
CROSSING_WINDOW = 32
_MATCH_OVERLAP = 0.5
_MAX_CELL_SPLITS = 64


class Method(str, enum.Enum):
    PARTITION = "partition"
    CROSSING_FORM = "crossing_form"
    MORSE_DIFFERENCE = "morse_difference"


class Verdict(str, enum.Enum):
    BIFURCATION_CERTIFIED = "bifurcation_certified"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Crossing:
    """A parameter value where the path has a kernel.

    ``form`` is the crossing form ``<dL/dlam u_i, u_j>`` on the orthonormal
    ``kernel`` basis; ``signature`` is None for non-regular crossings.
    """

    lambda_star: float
    kernel: np.ndarray
    form: np.ndarray
    signature: int | None
    regular: bool
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.kernel.shape[1]


@dataclass
class SpectralFlowResult:
    sfl: int
    method: Method
    sfl_equivariant: RepRingElement | None = None
    crossings: list[Crossing] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


# -- helpers ---------------------------------------------------------------


def _pmap(fn: Callable, items: Sequence, parallel: int) -> list:
    """Ordered map, threaded when ``parallel > 1``."""
    if parallel <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, items))


def _path_zero_tol(eigs: Iterable[np.ndarray]) -> float:
    scale = max((float(np.abs(w).max()) for w in eigs if w.size), default=0.0)
    return ZERO_TOL_REL * scale


def endpoint_invertibility(path: OperatorPath, zero_tol: float | None = None) -> tuple[bool, bool]:
    """Whether ``L(lam0)`` and ``L(lam1)`` have no eigenvalue in ``[-zero_tol, zero_tol]``."""
    w0 = eigvalsh(path(path.lam0), path.bandwidth)
    w1 = eigvalsh(path(path.lam1), path.bandwidth)
    tol = _path_zero_tol([w0, w1]) if zero_tol is None else zero_tol
    return (bool(np.all(np.abs(w0) > tol)), bool(np.all(np.abs(w1) > tol)))


def _endpoint_warnings(path: OperatorPath, w0: np.ndarray, w1: np.ndarray, tol: float) -> list[str]:
    out = []
    for lam, w in ((path.lam0, w0), (path.lam1, w1)):
        if w.size and np.abs(w).min() <= tol:
            msg = f"endpoint L({lam:.6g}) is not invertible (min |mu| = {np.abs(w).min():.3e})"
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            out.append(msg)
    return out


def choose_level(eigenvalues: np.ndarray, zero_tol: float, scale: float = 0.0) -> tuple[float, float]:
    """Centre and width of the widest gap in ``|mu|`` within ``(zero_tol, ||L||/2]``.

    ``||L||`` is the larger of the local norm and ``scale`` (the path's norm
    at its endpoints); otherwise a small block whose only eigenvalue crosses
    zero would leave no room for a level near the crossing.  Ties go to the
    gap with the smallest lower edge.
    """
    mags = np.abs(eigenvalues)
    cap = 0.5 * max(float(mags.max()) if mags.size else 0.0, scale)
    if cap <= zero_tol:
        cap = 1.0
    inner = np.sort(mags[(mags > zero_tol) & (mags < cap)])
    edges = np.concatenate(([zero_tol], inner, [cap]))
    widths = np.diff(edges)
    i = int(np.argmax(widths))  # argmax returns the first maximum
    return 0.5 * (edges[i] + edges[i + 1]), float(widths[i])


# -- partition method --------------------------------------------------------


def spectral_flow_partition(
    path: OperatorPath,
    *,
    zero_tol: float | None = None,
    initial: int = INITIAL_SUBINTERVALS,
    max_depth: int = MAX_DEPTH,
    parallel: int = 1,
) -> SpectralFlowResult:
    """Phillips' spectral flow on an adaptively refined partition.

    Each subinterval ``[lam_a, lam_b]`` gets a level ``a`` at the centre of
    the widest spectral gap (in ``|mu|``) of the midpoint matrix.  It is
    accepted when ``Lip * (lam_b - lam_a) < width / 4``, where ``Lip`` is
    estimated from ``||L_mid - L_a||`` and ``||L_b - L_mid||``; by Weyl's
    inequality no eigenvalue then reaches ``+-a`` on the subinterval.
    Otherwise it is bisected, at most ``max_depth`` times.

    The contribution of an accepted subinterval is
    ``#{mu(L_b) in [0, a]} - #{mu(L_a) in [0, a]}``.
    """
    bw = path.bandwidth
    cache: dict[float, np.ndarray] = {}
    # keep sampled matrices for the drift estimate unless the sampler has a cheaper hook
    keep = not callable(getattr(path.sampler, "difference_norm", None))
    mats: dict[float, np.ndarray] = {}

    def evaluate(lam: float) -> tuple[np.ndarray, np.ndarray | None]:
        M = path(lam)
        return eigvalsh(M, bw), (M if keep else None)

    def ensure(lams: Iterable[float]) -> None:
        todo = sorted({lam for lam in lams if lam not in cache})
        for lam, (w, M) in zip(todo, _pmap(evaluate, todo, parallel)):
            cache[lam] = w
            if keep:
                mats[lam] = M

    def diff_norm(a: float, b: float) -> float:
        if keep:
            return norm_bound(mats[b] - mats[a])
        return path.difference_norm(a, b)

    grid = np.linspace(path.lam0, path.lam1, initial + 1)
    grid[-1] = path.lam1
    queue = [(float(a), float(b), 0) for a, b in zip(grid[:-1], grid[1:])]
    ensure([path.lam0, path.lam1])
    tol = _path_zero_tol([cache[path.lam0], cache[path.lam1]]) if zero_tol is None else zero_tol
    notes = _endpoint_warnings(path, cache[path.lam0], cache[path.lam1], tol)
    scale = max(float(np.abs(cache[x]).max()) if cache[x].size else 0.0 for x in (path.lam0, path.lam1))

    accepted: list[tuple[float, float, float, float]] = []
    evaluations = 0
    deepest = 0
    while queue:
        mids = [0.5 * (a + b) for a, b, _ in queue]
        before = len(cache)
        ensure([x for a, b, _ in queue for x in (a, b)] + mids)
        evaluations += len(cache) - before

        def lipschitz(item: tuple[float, float, int]) -> float:
            a, b, _ = item
            m = 0.5 * (a + b)
            return max(diff_norm(a, m), diff_norm(m, b)) / (0.5 * (b - a))

        lips = _pmap(lipschitz, queue, parallel)
        nxt = []
        for (a, b, depth), m, lip in zip(queue, mids, lips):
            level, width = choose_level(cache[m], tol, scale)
            if lip * (b - a) < DRIFT_FRACTION * width:
                accepted.append((a, b, level, width))
                deepest = max(deepest, depth)
            elif depth >= max_depth:
                raise RefinementLimitError(
                    f"no admissible level on [{a:.10g}, {b:.10g}] after {max_depth} bisections "
                    f"(gap width {width:.3e}, Lipschitz estimate {lip:.3e})")
            else:
                nxt += [(a, m, depth + 1), (m, b, depth + 1)]
        queue = nxt

    accepted.sort()
    total = 0
    partition = []
    for a, b, level, width in accepted:
        wa, wb = cache[a], cache[b]
        contrib = (int(np.count_nonzero((wb >= 0) & (wb <= level)))
                   - int(np.count_nonzero((wa >= 0) & (wa <= level))))
        total += contrib
        partition.append((a, b, level, contrib))
    widths = [w for *_, w in accepted]
    return SpectralFlowResult(
        sfl=total,
        method=Method.PARTITION,
        diagnostics={
            "partition": partition,
            "min_gap": min(widths),
            "depth": deepest,
            "evaluations": evaluations,
            "zero_tol": tol,
            "eigenvalues": cache,
        },
        warnings=notes,
    )


# -- crossing-form method ----------------------------------------------------


def _nearest_pairs(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` eigenpairs of smallest ``|mu|``, ordered by eigenvalue."""
    w, V = eig_sym(M)
    if k >= w.size:
        return w, V
    idx = np.sort(np.argsort(np.abs(w), kind="stable")[:k])
    return w[idx], V[:, idx]


@dataclass
class _Sample:
    lam: float
    w: np.ndarray
    V: np.ndarray
    morse: int


def _match(A: _Sample, B: _Sample) -> tuple[np.ndarray, np.ndarray]:
    """Hungarian matching of eigenvectors by overlap; returns index pairs with overlap > 1/2."""
    overlap = np.abs(A.V.T @ B.V)
    rows, cols = linear_sum_assignment(-overlap)
    good = overlap[rows, cols] > _MATCH_OVERLAP
    return rows[good], cols[good]


def _sgn(x: float) -> int:
    return 1 if x >= 0 else -1


class _CrossingFinder:
    def __init__(self, path: OperatorPath, grid: int, lambda_tol: float, kernel_tol: float | None,
                 window: int, parallel: int):
        self.path = path
        self.grid = grid
        self.lambda_tol = lambda_tol
        self.parallel = parallel
        self.n = path.dim
        self.k = min(self.n, window)
        self.kernel_tol = kernel_tol
        self.zero_tol = 0.0

    def sample(self, lam: float) -> _Sample:
        M = self.path(lam)
        w_all = eigvalsh(M, self.path.bandwidth)
        w, V = _nearest_pairs(M, self.k)
        neg = int(np.count_nonzero(w_all < 0))
        return _Sample(lam, w, V, neg)

    def branch_value(self, lam: float, v: np.ndarray) -> tuple[float, np.ndarray]:
        """Eigenvalue and eigenvector at ``lam`` of the branch best aligned with ``v``."""
        s = self.sample(lam)
        j = int(np.argmax(np.abs(s.V.T @ v)))
        u = s.V[:, j]
        return float(s.w[j]), u if u @ v >= 0 else -u

    def cell_events(self, A: _Sample, B: _Sample, depth: int = 0) -> list[tuple[float, str]]:
        """Zero events of matched branches on the cell ``[A.lam, B.lam]``.

        Cells with a sign change, a lost branch or a branch matching that
        disagrees with the Morse counts are halved until they are shorter
        than ``lambda_tol``.  Re-matching on every half keeps the tracking
        correct through avoided crossings near zero, where following a
        single eigenvector would jump between branches.
        """
        rows, cols = _match(A, B)
        # by Weyl's bound only branches within the cell drift of zero can cross it
        reach = 2.0 * self.path.difference_norm(A.lam, B.lam) + self.kernel_tol
        tracked_a = set(rows.tolist())
        tracked_b = set(cols.tolist())
        lost = any(abs(A.w[i]) <= reach and i not in tracked_a for i in range(A.w.size)) or \
            any(abs(B.w[j]) <= reach and j not in tracked_b for j in range(B.w.size))
        if self.k < self.n:
            # the window must hold every eigenvalue that could reach zero
            lost = lost or max(np.abs(A.w).max(), np.abs(B.w).max()) <= reach
        flips = [(i, j) for i, j in zip(rows, cols) if _sgn(A.w[i]) != _sgn(B.w[j])]
        net = sum(1 if A.w[i] < 0 else -1 for i, j in flips)
        consistent = (A.morse - B.morse) == net
        if not (flips or lost or not consistent):
            return []
        if B.lam - A.lam > self.lambda_tol and depth < _MAX_CELL_SPLITS:
            M = self.sample(0.5 * (A.lam + B.lam))
            return self.cell_events(A, M, depth + 1) + self.cell_events(M, B, depth + 1)
        if lost or not consistent:
            raise UnresolvedCrossingClusterError(
                f"cannot track eigenvalue branches on [{A.lam:.10g}, {B.lam:.10g}]")
        return [(0.5 * (A.lam + B.lam), "cross")] * len(flips)

    def dip_events(self, samples: list[_Sample]) -> list[tuple[float, str]]:
        """Branches that approach zero between grid points without changing sign there."""
        events = []
        for p in range(1, len(samples) - 1):
            P, C, N = samples[p - 1], samples[p], samples[p + 1]
            r1, c1 = _match(P, C)
            r2, c2 = _match(C, N)
            back = dict(zip(c1.tolist(), r1.tolist()))
            fwd = dict(zip(r2.tolist(), c2.tolist()))
            for j in range(C.w.size):
                if j not in back or j not in fwd:
                    continue
                vp, vc, vn = P.w[back[j]], C.w[j], N.w[fwd[j]]
                s = _sgn(vc)
                if _sgn(vp) != s or _sgn(vn) != s:
                    continue
                if not (abs(vc) <= abs(vp) and abs(vc) <= abs(vn)):
                    continue
                # can the branch plausibly reach zero inside the two cells?
                if abs(vc) > 2.0 * max(abs(vp - vc), abs(vn - vc)):
                    continue
                events += self._resolve_dip(P.lam, N.lam, C.V[:, j], s)
        return events

    def _resolve_dip(self, lo: float, hi: float, v: np.ndarray, s: int) -> list[tuple[float, str]]:
        def f(lam: float) -> float:
            return s * self.branch_value(lam, v)[0]

        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": self.lambda_tol})
        lam_min, fmin = float(res.x), float(res.fun)
        if fmin > self.kernel_tol:
            return []
        if fmin >= -self.kernel_tol:
            return [(lam_min, "tangent")]
        out = []
        for a, b in ((lo, lam_min), (lam_min, hi)):
            if f(a) * f(b) < 0:
                out.append((brentq(f, a, b, xtol=self.lambda_tol), "cross"))
        return out

    def run(self) -> list[Crossing]:
        path = self.path
        lams = np.linspace(path.lam0, path.lam1, self.grid + 1)
        lams[-1] = path.lam1
        samples = _pmap(self.sample, [float(x) for x in lams], self.parallel)
        scale = max(float(np.abs(s.w).max()) for s in (samples[0], samples[-1]))
        scale = max(scale, norm_bound(path(path.lam0)), norm_bound(path(path.lam1)))
        if self.kernel_tol is None:
            self.kernel_tol = KERNEL_TOL_REL * max(scale, 1e-300)
        events: list[tuple[float, str]] = []
        for A, B in zip(samples[:-1], samples[1:]):
            events += self.cell_events(A, B)
        events += self.dip_events(samples)
        # drop events that sit on a non-invertible endpoint
        events = [(lam, kind) for lam, kind in events
                  if path.lam0 + self.lambda_tol < lam < path.lam1 - self.lambda_tol]
        return [self.build(group) for group in self._cluster(events)]

    def _cluster(self, events: list[tuple[float, str]]) -> list[list[tuple[float, str]]]:
        if not events:
            return []
        cluster_tol = 1e3 * self.lambda_tol
        events = sorted(events)
        groups = [[events[0]]]
        for ev in events[1:]:
            if ev[0] - groups[-1][-1][0] <= cluster_tol:
                groups[-1].append(ev)
            else:
                groups.append([ev])
        return groups

    def build(self, group: list[tuple[float, str]]) -> Crossing:
        lam = float(np.mean([lam for lam, _ in group]))
        M = self.path(lam)
        tangent = any(kind == "tangent" for _, kind in group)
        if tangent:
            try:
                K = kernel_basis(M, self.kernel_tol)
            except AmbiguousKernelError as exc:
                raise UnresolvedCrossingClusterError(f"crossing near lambda={lam:.10g}: {exc}") from exc
        else:
            # the branch zeros fix the kernel dimension; no gap to the rest is needed
            w, V = _nearest_pairs(M, min(self.n, len(group) + 1))
            small = np.abs(w) <= self.kernel_tol
            if int(np.count_nonzero(small)) != len(group):
                raise UnresolvedCrossingClusterError(
                    f"crossing near lambda={lam:.10g}: {len(group)} branch zeros but "
                    f"{int(np.count_nonzero(small))} eigenvalues within kernel_tol")
            K = V[:, small]
        if K.shape[1] == 0:
            raise UnresolvedCrossingClusterError(f"no kernel found at lambda={lam:.10g}")
        D = self.path.derivative_at(lam)
        form = K.T @ D @ K
        form = 0.5 * (form + form.T)
        residual = float(np.linalg.norm(M @ K, axis=0).max())
        return crossing_from_form(lam, K, form, D, residual)


def crossing_from_form(lam: float, K: np.ndarray, form: np.ndarray, derivative: np.ndarray,
                       residual: float = 0.0) -> Crossing:
    """Classify a crossing: regular iff the form is non-degenerate at ``1e-6 ||dL||``."""
    tol = FORM_TOL_REL * max(norm_bound(derivative), 1e-300)
    mu = np.linalg.eigvalsh(form) if form.size else np.zeros(0)
    regular = bool(mu.size) and bool(np.all(np.abs(mu) > tol))
    sig = int(np.count_nonzero(mu > 0) - np.count_nonzero(mu < 0)) if regular else None
    return Crossing(lam, K, form, sig, regular, residual)


def find_crossings(
    path: OperatorPath,
    grid: int = CROSSING_GRID,
    *,
    lambda_tol: float | None = None,
    kernel_tol: float | None = None,
    window: int = CROSSING_WINDOW,
    parallel: int = 1,
) -> list[Crossing]:
    """Crossings of ``path`` in the open interval, ordered by parameter.

    The eigenpairs nearest zero are sampled on ``grid`` cells and matched
    between neighbouring samples by eigenvector overlap.  Cells holding a
    sign change are halved and re-matched down to ``lambda_tol``.  Branches
    dipping towards zero between samples are minimised and either resolved
    into two crossings or reported as tangential (non-regular) crossings.  Zeros closer than
    ``1000 * lambda_tol`` form one crossing whose kernel must have the
    matching dimension.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if lambda_tol is None:
        lambda_tol = LAMBDA_TOL_REL * path.length
    return _CrossingFinder(path, grid, lambda_tol, kernel_tol, window, parallel).run()


def _require_invertible_endpoints(path: OperatorPath, zero_tol: float | None) -> tuple[np.ndarray, np.ndarray, float]:
    w0 = eigvalsh(path(path.lam0), path.bandwidth)
    w1 = eigvalsh(path(path.lam1), path.bandwidth)
    tol = _path_zero_tol([w0, w1]) if zero_tol is None else zero_tol
    for lam, w in ((path.lam0, w0), (path.lam1, w1)):
        if w.size and np.abs(w).min() <= tol:
            raise NearKernelAmbiguityError(
                f"endpoint L({lam:.6g}) is not invertible (min |mu| = {np.abs(w).min():.3e})")
    return w0, w1, tol


def spectral_flow_crossings(path: OperatorPath, grid: int = CROSSING_GRID, *,
                            zero_tol: float | None = None, parallel: int = 1) -> SpectralFlowResult:
    """Sum of crossing-form signatures; refuses non-regular crossings."""
    _require_invertible_endpoints(path, zero_tol)
    crossings = find_crossings(path, grid, parallel=parallel)
    bad = [c for c in crossings if not c.regular]
    if bad:
        raise NonRegularCrossingError(
            f"non-regular crossing at lambda={bad[0].lambda_star:.10g}; use the partition method")
    return SpectralFlowResult(
        sfl=sum(c.signature for c in crossings),
        method=Method.CROSSING_FORM,
        crossings=crossings,
        diagnostics={"grid": grid},
    )


# -- Morse difference ----------------------------------------------------------


def _negative_space_fixed_dim(M: np.ndarray, basis_fixed: np.ndarray, zero_tol: float) -> tuple[int, int]:
    w, V = eig_sym(M)
    neg = V[:, w < -zero_tol]
    if neg.shape[1] == 0 or basis_fixed.shape[1] == 0:
        return neg.shape[1], 0
    # E^- is sigma-invariant, so the fixed part is the rank of its projection
    s = np.linalg.svd(basis_fixed.T @ neg, compute_uv=False)
    return neg.shape[1], int(np.count_nonzero(s > 0.5))


def sfl_via_morse(path: OperatorPath, *, zero_tol: float | None = None) -> SpectralFlowResult:
    """``morse(L(lam0)) - morse(L(lam1))``, with the Z2 refinement when available."""
    M0, M1 = path(path.lam0), path(path.lam1)
    w0, w1 = eigvalsh(M0, path.bandwidth), eigvalsh(M1, path.bandwidth)
    tol = _path_zero_tol([w0, w1]) if zero_tol is None else zero_tol
    m0 = morse_index(M0, tol, strict=True, eigenvalues=w0)
    m1 = morse_index(M1, tol, strict=True, eigenvalues=w1)
    equi = None
    if path.involution is not None:
        split = isotypic_split(path.involution)
        if split.fixed_index is not None:
            idx = split.fixed_index
            f0 = morse_index(M0[np.ix_(idx, idx)], tol, strict=True)
            f1 = morse_index(M1[np.ix_(idx, idx)], tol, strict=True)
        else:
            _, f0 = _negative_space_fixed_dim(M0, split.basis_fixed, tol)
            _, f1 = _negative_space_fixed_dim(M1, split.basis_fixed, tol)
        equi = rep_from_spaces(m0, f0, m1, f1)
    return SpectralFlowResult(
        sfl=m0 - m1,
        method=Method.MORSE_DIFFERENCE,
        sfl_equivariant=equi,
        diagnostics={"morse": (m0, m1)},
    )


# -- equivariant flow ----------------------------------------------------------

_ENGINES = {
    Method.PARTITION: lambda p, parallel, tol: spectral_flow_partition(p, zero_tol=tol, parallel=parallel),
    Method.CROSSING_FORM: lambda p, parallel, tol: spectral_flow_crossings(p, zero_tol=tol, parallel=parallel),
    Method.MORSE_DIFFERENCE: lambda p, parallel, tol: sfl_via_morse(p, zero_tol=tol),
}


def spectral_flow(path: OperatorPath, method: Method | str = Method.PARTITION,
                  parallel: int = 1, zero_tol: float | None = None) -> SpectralFlowResult:
    return _ENGINES[Method(method)](path, parallel, zero_tol)


def split_path(path: OperatorPath, sigma: Involution | None = None) -> tuple[OperatorPath, OperatorPath]:
    """Restrictions of an equivariant path to the fixed and anti-invariant blocks."""
    sigma = path.involution if sigma is None else sigma
    if sigma is None:
        raise ValueError("path carries no involution")
    check_path_equivariance(path, sigma)
    split = isotypic_split(sigma)
    fixed = restrict_path(path, split.basis_fixed)
    anti = restrict_path(path, split.basis_anti)
    return fixed, anti


def equivariant_spectral_flow(
    path: OperatorPath,
    method: Method | str = Method.PARTITION,
    *,
    cross_check: bool = True,
    parallel: int = 1,
    zero_tol: float | None = None,
) -> SpectralFlowResult:
    """``phi(sfl_G(L)) = (sfl(L), sfl(L|fixed))`` from blockwise computations.

    With ``cross_check`` the unsplit path is also computed and must agree
    with the sum of the blocks.
    """
    method = Method(method)
    fixed, anti = split_path(path)
    engine = _ENGINES[method]
    r_fixed = engine(fixed, parallel, zero_tol) if fixed.dim else None
    r_anti = engine(anti, parallel, zero_tol) if anti.dim else None
    s_fixed = r_fixed.sfl if r_fixed else 0
    s_anti = r_anti.sfl if r_anti else 0
    diagnostics = {"fixed": r_fixed, "anti": r_anti}
    if cross_check:
        full = engine(path, parallel, zero_tol)
        diagnostics["full"] = full
        if full.sfl != s_fixed + s_anti:
            raise PathwayDisagreementError(
                f"unsplit spectral flow {full.sfl} != fixed {s_fixed} + anti {s_anti}")
    crossings = (r_fixed.crossings if r_fixed else []) + (r_anti.crossings if r_anti else [])
    notes = (r_fixed.warnings if r_fixed else []) + (r_anti.warnings if r_anti else [])
    return SpectralFlowResult(
        sfl=s_fixed + s_anti,
        method=method,
        sfl_equivariant=RepRingElement(s_fixed + s_anti, s_fixed),
        crossings=sorted(crossings, key=lambda c: c.lambda_star),
        diagnostics=diagnostics,
        warnings=notes,
    )


def bifurcation_verdict(result: SpectralFlowResult,
                        endpoint_invertibility: tuple[bool, bool]) -> Verdict:
    """Certified iff both endpoints are invertible and the (equivariant) flow is nonzero.

    A vanishing flow never certifies absence of bifurcation.
    """
    if not all(endpoint_invertibility):
        return Verdict.INCONCLUSIVE
    if result.sfl_equivariant is not None:
        nonzero = bool(result.sfl_equivariant)
    else:
        nonzero = result.sfl != 0
    return Verdict.BIFURCATION_CERTIFIED if nonzero else Verdict.INCONCLUSIVE


__all__ = [
    "Crossing",
    "SpectralFlowResult",
    "SpectralFlowError",
    "Method",
    "Verdict",
    "choose_level",
    "spectral_flow_partition",
    "find_crossings",
    "crossing_from_form",
    "spectral_flow_crossings",
    "sfl_via_morse",
    "spectral_flow",
    "split_path",
    "equivariant_spectral_flow",
    "endpoint_invertibility",
    "bifurcation_verdict",
]
