import numpy as np
import pytest
from scipy.integrate import quad

from equisfl.errors import NearKernelAmbiguityError
from equisfl.families import make_coefficient
from equisfl.pde_model import (
    NOISE_FLOOR,
    NewtonStats,
    PdeProblem,
    SineQuadrature,
    assemble_pde_hessian,
    branch_profile,
    build_afi_problem,
    build_even_problem,
    dirichlet_morse_index,
    make_remainder,
    newton_branch_search,
    pde_bifurcation_report,
)
from equisfl.repring import RepRingElement
from equisfl.sflcore import Verdict, equivariant_spectral_flow, find_crossings, spectral_flow_partition

# H1_0 norm ||u'|| of the positive solution of -u'' = lam u - u^3 on (0, pi),
# from an independent shooting computation (solve_ivp at rtol 1e-13 + brentq on u'(0))
BRANCH_NORMS = {1.25: 0.7275848741754078, 1.0833333333333333: 0.41851092319550864}


def affine(c0, c1):
    return make_coefficient("affine", (c0, c1))


def test_zero_coefficients_give_a_constant_path():
    p = PdeProblem(make_coefficient("zero"), make_coefficient("zero"), modes=8, even_in_v=True)
    path = assemble_pde_hessian(p)
    assert np.array_equal(path(0.3), np.diag(np.r_[np.ones(8), -np.ones(8)]))
    assert equivariant_spectral_flow(path).sfl_equivariant == RepRingElement(0, 0)


def test_constant_coefficients_are_diagonal():
    N = 12
    p = PdeProblem(affine(0, 1), affine(0, -1), modes=N, lambda_range=(0.0, 1.5))
    path = assemble_pde_hessian(p)
    k = np.arange(1, N + 1)
    lam = 0.7
    expected = np.diag(np.r_[1 - lam / k**2, -1 + lam / k**2])
    assert np.array_equal(path(lam), expected)
    assert np.allclose(path.derivative_at(lam), np.diag(np.r_[-1 / k**2, 1 / k**2]))


def test_simultaneous_crossings_at_the_first_dirichlet_eigenvalue():
    p = PdeProblem(affine(0, 1), affine(0, -1), modes=16, lambda_range=(0.0, 1.5))
    path = assemble_pde_hessian(p)
    (c,) = find_crossings(path)
    assert abs(c.lambda_star - 1.0) < 1e-9
    assert c.dim == 2 and c.signature == 0
    assert np.allclose(np.linalg.eigvalsh(c.form), [-1.0, 1.0])
    assert spectral_flow_partition(path).sfl == 0


def test_crossings_converge_to_squares():
    p = PdeProblem(affine(0, 1), affine(0, -1), modes=16, lambda_range=(0.5, 10.0))
    found = [c.lambda_star for c in find_crossings(assemble_pde_hessian(p))]
    assert np.allclose(found, [1.0, 4.0, 9.0], atol=1e-9)


def test_x_dependent_entries_match_adaptive_quadrature():
    # a(lam, x) = 1 + lam * x
    a = make_coefficient("polynomial", (1, 1, 1, 0, 0, 1))
    N = 6
    p = PdeProblem(a, affine(0, -1), modes=N)
    lam = 0.8
    M = assemble_pde_hessian(p)(lam)

    def psi(k, x):
        return np.sqrt(2 / np.pi) * np.sin(k * x) / k

    for j in range(1, N + 1):
        for k in range(j, N + 1):
            ref = quad(lambda x: (1 + lam * x) * psi(j, x) * psi(k, x), 0, np.pi,
                       epsabs=1e-13, epsrel=1e-12, limit=200)[0]
            assert M[j - 1, k - 1] == pytest.approx(float(j == k) - ref, abs=1e-13)


def test_quadrature_gram_is_exact_for_the_basis():
    q = SineQuadrature(10)
    G = q.gram(np.ones_like(q.x))
    k = np.arange(1, 11)
    assert np.allclose(G, np.diag(1 / k**2), atol=1e-14)
    assert np.allclose(q.phi.T @ (q.w[:, None] * q.phi), np.eye(10), atol=1e-14)


@pytest.mark.parametrize("value, expected", [(0.0, 0), (5.0, 2), (-1.0, 0), (10.0, 3)])
def test_dirichlet_morse_index(value, expected):
    assert dirichlet_morse_index(make_coefficient("constant", (value,)), 0.0, 32) == expected


def test_dirichlet_morse_index_with_x_dependent_coefficient():
    # a = 5 with a tiny x-dependent perturbation still has index 2
    a = make_coefficient("polynomial", (0, 1, 5.0, 0.01))
    assert dirichlet_morse_index(a, 0.0, 32) == 2


def test_dirichlet_morse_index_refuses_a_dirichlet_eigenvalue():
    with pytest.raises(NearKernelAmbiguityError):
        dirichlet_morse_index(make_coefficient("constant", (4.0,)), 0.0, 32)


def test_equivariant_structure():
    p = build_even_problem(modes=10)
    path = assemble_pde_hessian(p)
    s = p.involution.sigma
    M = path(1.3)
    assert np.array_equal(s[:, None] * M * s[None, :], M)
    with pytest.raises(ValueError):
        PdeProblem(affine(0, 1), affine(0, -1), affine(1, 0), even_in_v=True)
    with pytest.raises(ValueError):
        PdeProblem(affine(0, 1), affine(0, -1), remainder=make_remainder("afi"), even_in_v=True)


def test_fixed_block_flow_is_minus_the_morse_difference():
    p = build_even_problem(modes=32, lambda_range=(0.0, 4.5))
    res = equivariant_spectral_flow(assemble_pde_hessian(p))
    m0 = dirichlet_morse_index(p.a, 0.0, 32)
    m1 = dirichlet_morse_index(p.a, 4.5, 32)
    assert (m0, m1) == (0, 2)
    assert res.sfl_equivariant.d_fixed == -(m1 - m0)
    assert res.sfl == 0


def test_afi_report():
    rep = pde_bifurcation_report(build_afi_problem(modes=32))
    assert rep.sfl == 0 and rep.sfl_equivariant is None
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert [c.signature for c in rep.crossings] == [0]
    assert rep.refined["sfl"] == 0


def test_even_report():
    rep = pde_bifurcation_report(build_even_problem(modes=32))
    assert rep.fixed_morse == (0, 1)
    assert rep.sfl_equivariant == RepRingElement(0, -1)
    assert rep.verdict is Verdict.BIFURCATION_CERTIFIED
    assert rep.mechanism == "Morse index jump on the fixed block"


def test_no_crossing_range_is_inconclusive():
    rep = pde_bifurcation_report(build_even_problem(modes=16, lambda_range=(1.5, 3.5)))
    assert rep.sfl_equivariant == RepRingElement(0, 0)
    assert rep.verdict is Verdict.INCONCLUSIVE


def test_newton_matches_the_shooting_oracle():
    p = build_even_problem(modes=64)
    points = newton_branch_search(p, 1.0, radius=0.25, grid=10)
    profile = dict(branch_profile(points))
    for lam, norm in BRANCH_NORMS.items():
        key = min(profile, key=lambda x: abs(x - lam))
        assert abs(key - lam) < 1e-12
        assert profile[key] == pytest.approx(norm, abs=1e-10)
    assert all(lam > 1.0 for lam in profile)
    norms = [n for _, n in sorted(profile.items())]
    assert all(a < b for a, b in zip(norms, norms[1:]))
    assert all(b.residual < 1e-10 for b in points)


def test_newton_finds_nothing_for_afi():
    stats = NewtonStats()
    points = newton_branch_search(build_afi_problem(modes=16), 1.0, radius=0.25, grid=4,
                                  stats=stats)
    assert points == []
    assert stats.attempts > 0 and stats.converged_nontrivial == 0


def test_newton_without_nonlinearity():
    p = PdeProblem(affine(0, 1), affine(0, -1), modes=8)
    assert newton_branch_search(p, 1.0) == []
    p = PdeProblem(affine(0, 1), affine(0, -1), remainder=make_remainder("zero"), modes=8)
    assert newton_branch_search(p, 1.0, grid=4) == []
    assert NOISE_FLOOR == 1e-6
