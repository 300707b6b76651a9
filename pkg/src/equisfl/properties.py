"""Seeded random paths and the property suite behind ``selftest``.

Each random path is a quadratic ``A0 + lam A1 + lam^2 A2`` on ``[0, 1]``,
equivariant for a random involution (diagonal, or conjugated by a random
rotation), with endpoints bounded away from singularity.  For every path
the suite checks the structural properties of the spectral flow and that
the independent methods agree exactly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag
from scipy.stats import ortho_group

from .equivariance import Involution
from .errors import NonRegularCrossingError, SpectralFlowError
from .linalg import eigvalsh
from .paths import OperatorPath, concatenate
from .repring import RepRingElement
from .sflcore import (
    equivariant_spectral_flow,
    sfl_via_morse,
    spectral_flow_crossings,
    spectral_flow_partition,
)

ENDPOINT_MARGIN = 1e-3
PROPERTIES = (
    "method_agreement",
    "forgetful",
    "normalization",
    "additivity",
    "concatenation",
    "reversal",
    "homotopy",
    "closed_loop",
)


@dataclass
class RandomPath:
    path: OperatorPath
    coeffs: tuple[np.ndarray, np.ndarray, np.ndarray]
    basis: np.ndarray  # orthonormal, columns fixed block first
    dim_fixed: int


def _sym(rng: np.random.Generator, n: int) -> np.ndarray:
    G = rng.standard_normal((n, n)) / np.sqrt(max(n, 1))
    return 0.5 * (G + G.T)


def _equivariant_sym(rng: np.random.Generator, Q: np.ndarray, nf: int) -> np.ndarray:
    n = Q.shape[0]
    return Q @ block_diag(_sym(rng, nf), _sym(rng, n - nf)) @ Q.T


def _quadratic(A0, A1, A2, lambda_range=(0.0, 1.0), involution=None, name="") -> OperatorPath:
    def sampler(lam: float) -> np.ndarray:
        return A0 + lam * A1 + lam * lam * A2

    def derivative(lam: float) -> np.ndarray:
        return A1 + 2.0 * lam * A2

    return OperatorPath(sampler, lambda_range, derivative=derivative, involution=involution,
                        name=name, check_symmetry=False)


def _min_abs_eig(M: np.ndarray) -> float:
    return float(np.abs(eigvalsh(M)).min())


def random_path(rng: np.random.Generator, n: int, rotate: bool | None = None) -> RandomPath:
    """A random equivariant quadratic path with invertible endpoints."""
    nf = int(rng.integers(0, n + 1))
    if rotate is None:
        rotate = bool(rng.integers(0, 2))
    Q = ortho_group.rvs(n, random_state=rng) if rotate and n > 1 else np.eye(n)
    sigma_diag = np.r_[np.ones(nf), -np.ones(n - nf)]
    sigma = Q @ np.diag(sigma_diag) @ Q.T if rotate and n > 1 else sigma_diag
    if rotate and n > 1:
        sigma = 0.5 * (sigma + sigma.T)
    while True:
        A0, A1, A2 = (_equivariant_sym(rng, Q, nf) for _ in range(3))
        # scale the drift so that a few eigenvalues typically cross zero
        A1 = 2.0 * A1
        ends = (A0, A0 + A1 + A2)
        if min(_min_abs_eig(M) for M in ends) >= ENDPOINT_MARGIN:
            break
    path = _quadratic(A0, A1, A2, involution=Involution(sigma), name=f"random-{n}")
    return RandomPath(path, (A0, A1, A2), Q, nf)


def _sfl(path: OperatorPath) -> int:
    return spectral_flow_partition(path).sfl


@dataclass
class SuiteSummary:
    paths: int
    checks: int = 0
    violations: Counter = field(default_factory=Counter)
    skipped: Counter = field(default_factory=Counter)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def line(self) -> str:
        total = sum(self.violations.values())
        skipped = sum(self.skipped.values())
        return (f"selftest: {self.paths} paths, {self.checks} checks, {total} violations, "
                f"{skipped} skipped (non-regular crossings)")


def _check_one(rp: RandomPath, rng: np.random.Generator) -> tuple[dict[str, bool], set[str]]:
    path = rp.path
    A0, A1, A2 = rp.coeffs
    n = path.dim
    Q, nf = rp.basis, rp.dim_fixed
    results: dict[str, bool] = {}
    skipped: set[str] = set()

    part = equivariant_spectral_flow(path, cross_check=False)
    morse = sfl_via_morse(path)
    agree = part.sfl == morse.sfl and part.sfl_equivariant == morse.sfl_equivariant
    plain = spectral_flow_partition(path)
    agree = agree and plain.sfl == part.sfl
    try:
        agree = agree and spectral_flow_crossings(path).sfl == part.sfl
    except NonRegularCrossingError:
        skipped.add("method_agreement")
    results["method_agreement"] = agree
    results["forgetful"] = part.sfl_equivariant.d_total == part.sfl
    sfl, equi = part.sfl, part.sfl_equivariant

    # normalization: a positive definite shift keeps every sample invertible
    shift = 2.0 * max(np.abs(eigvalsh(path(x))).max() for x in (0.0, 0.5, 1.0)) + 1.0
    shift += np.abs(A1).sum(axis=1).max() + np.abs(A2).sum(axis=1).max()
    pos = _quadratic(A0 + shift * np.eye(n), A1, A2, involution=path.involution)
    results["normalization"] = equivariant_spectral_flow(pos, cross_check=False).sfl_equivariant \
        == RepRingElement(0, 0)

    # additivity with a second random block
    m = int(rng.integers(1, 4))
    other = random_path(rng, m, rotate=False)
    B0, B1, B2 = other.coeffs
    s_other = other.path.involution.sigma
    s_self = path.involution.matrix
    sigma_sum = block_diag(s_self, np.diag(s_other))
    joint = _quadratic(block_diag(A0, B0), block_diag(A1, B1), block_diag(A2, B2),
                       involution=Involution(sigma_sum))
    e_other = equivariant_spectral_flow(other.path, cross_check=False).sfl_equivariant
    results["additivity"] = equivariant_spectral_flow(joint, cross_check=False).sfl_equivariant \
        == equi + e_other

    # concatenation: split at an invertible interior point, and append a second leg
    lam_c = None
    for cand in rng.uniform(0.2, 0.8, size=8):
        if _min_abs_eig(path(float(cand))) >= ENDPOINT_MARGIN:
            lam_c = float(cand)
            break
    concat_ok = True
    if lam_c is not None:
        concat_ok = _sfl(path.on(path.lam0, lam_c)) + _sfl(path.on(lam_c, path.lam1)) == sfl
    end = path(path.lam1)
    target = _equivariant_sym(rng, Q, nf)
    while _min_abs_eig(target) < ENDPOINT_MARGIN:
        target = _equivariant_sym(rng, Q, nf)
    leg = OperatorPath(lambda lam, e=end, d=target - end: e + (lam - 1.0) * d, (1.0, 2.0),
                       derivative=lambda lam, d=target - end: d, involution=path.involution,
                       check_symmetry=False)
    both = concatenate(path, leg)
    concat_ok = concat_ok and _sfl(both) == sfl + _sfl(leg)
    results["concatenation"] = concat_ok

    results["reversal"] = _sfl(path.reversed()) == -sfl

    # fixed-endpoint homotopy by an equivariant bump
    C = _equivariant_sym(rng, Q, nf) * 4.0
    bumped = _quadratic(A0, A1 + C, A2 - C, involution=path.involution)
    results["homotopy"] = equivariant_spectral_flow(bumped, cross_check=False).sfl_equivariant == equi

    # closed loop: A0 + K(lam) with K(0) = K(1)
    K1, K2 = _equivariant_sym(rng, Q, nf), _equivariant_sym(rng, Q, nf)

    def loop(lam: float) -> np.ndarray:
        return A0 + 2.0 * np.sin(np.pi * lam) * K1 + np.sin(2.0 * np.pi * lam) * K2

    def dloop(lam: float) -> np.ndarray:
        return 2.0 * np.pi * np.cos(np.pi * lam) * K1 + 2.0 * np.pi * np.cos(2.0 * np.pi * lam) * K2

    closed = OperatorPath(loop, (0.0, 1.0), derivative=dloop, involution=path.involution,
                          check_symmetry=False)
    results["closed_loop"] = equivariant_spectral_flow(closed, cross_check=False).sfl_equivariant \
        == RepRingElement(0, 0)
    return results, skipped


def run_property_suite(count: int = 500, seed: int = 0, max_dim: int = 50) -> SuiteSummary:
    """Check every property on ``count`` random paths of dimension ``<= max_dim``.

    Numerical failures inside a check count as violations of that check.
    """
    rng = np.random.default_rng(seed)
    summary = SuiteSummary(count)
    for k in range(count):
        n = int(rng.integers(1, max_dim + 1))
        rp = random_path(rng, n)
        try:
            results, skipped = _check_one(rp, rng)
        except SpectralFlowError as exc:
            summary.violations["numerical_failure"] += 1
            summary.failures.append(f"path {k} (n={n}): {type(exc).__name__}: {exc}")
            continue
        for name, ok in results.items():
            summary.checks += 1
            if not ok:
                summary.violations[name] += 1
                summary.failures.append(f"path {k} (n={n}): {name}")
        for name in skipped:
            summary.skipped[name] += 1
    return summary
