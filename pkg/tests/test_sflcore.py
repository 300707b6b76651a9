import numpy as np
import pytest
from scipy.stats import ortho_group

from equisfl.equivariance import Involution
from equisfl.errors import NonRegularCrossingError, NotEquivariantError
from equisfl.paths import OperatorPath, affine_path, concatenate, constant_path
from equisfl.repring import RepRingElement
from equisfl.sflcore import (
    Method,
    SpectralFlowResult,
    Verdict,
    bifurcation_verdict,
    choose_level,
    endpoint_invertibility,
    equivariant_spectral_flow,
    find_crossings,
    sfl_via_morse,
    spectral_flow,
    spectral_flow_crossings,
    spectral_flow_partition,
)

SIGMA = Involution(np.array([1.0, -1.0]))


def scalar_path():
    return affine_path([[-0.5]], [[1.0]])


def opposite_path(involution=None):
    return affine_path(np.diag([-0.5, 0.5]), np.diag([1.0, -1.0]), involution=involution)


@pytest.mark.parametrize("method", list(Method))
def test_constant_invertible_path(method):
    path = constant_path(np.diag([2.0, -1.0, 3.0]))
    assert spectral_flow(path, method).sfl == 0


@pytest.mark.parametrize("method", list(Method))
def test_scalar_crossing(method):
    assert spectral_flow(scalar_path(), method).sfl == 1
    assert spectral_flow(scalar_path().reversed(), method).sfl == -1


@pytest.mark.parametrize("method", list(Method))
def test_opposite_crossings_cancel(method):
    assert spectral_flow(opposite_path(), method).sfl == 0


def test_equivariant_flow_sees_what_the_plain_flow_misses():
    for method in Method:
        res = equivariant_spectral_flow(opposite_path(SIGMA), method)
        assert res.sfl == 0
        assert res.sfl_equivariant == RepRingElement(0, 1)
        assert res.sfl_equivariant.d_total == res.sfl


def test_equivariant_constant_path():
    res = equivariant_spectral_flow(constant_path(np.diag([1.0, -2.0]), involution=SIGMA))
    assert res.sfl_equivariant == RepRingElement(0, 0)


def test_morse_difference_tracks_the_fixed_negative_space():
    res = sfl_via_morse(opposite_path(SIGMA))
    assert res.diagnostics["morse"] == (1, 1)
    assert res.sfl_equivariant == RepRingElement(0, 1)


def test_morse_difference_on_rotated_involution():
    Q = ortho_group.rvs(2, random_state=4)
    sigma = Q @ np.diag([1.0, -1.0]) @ Q.T
    path = affine_path(Q @ np.diag([-0.5, 0.5]) @ Q.T, Q @ np.diag([1.0, -1.0]) @ Q.T,
                       involution=Involution(0.5 * (sigma + sigma.T)))
    assert sfl_via_morse(path).sfl_equivariant == RepRingElement(0, 1)
    assert equivariant_spectral_flow(path).sfl_equivariant == RepRingElement(0, 1)


def test_find_crossings_on_scalar_path():
    path = scalar_path()
    (c,) = find_crossings(path)
    assert abs(c.lambda_star - 0.5) <= 1e-10
    assert np.allclose(c.form, [[1.0]]) and c.signature == 1 and c.regular
    assert find_crossings(constant_path(np.eye(3))) == []


def test_simultaneous_crossings_form_one_two_dimensional_kernel():
    (c,) = find_crossings(opposite_path())
    assert c.dim == 2 and c.signature == 0 and c.regular
    assert np.allclose(np.linalg.eigvalsh(c.form), [-1.0, 1.0])


def test_tangential_crossing_is_refused():
    path = OperatorPath(lambda lam: np.array([[(lam - 0.5) ** 2]]) - 0.0, (0.0, 1.0),
                        derivative=lambda lam: np.array([[2.0 * (lam - 0.5)]]))
    with pytest.raises(NonRegularCrossingError):
        spectral_flow_crossings(path.on(0.0, 1.0))
    # partition method still works; the crossing does not change the count
    assert spectral_flow_partition(path).sfl == 0


def test_crossing_method_matches_partition_on_random_paths():
    rng = np.random.default_rng(20)
    for _ in range(5):
        G0, G1 = rng.standard_normal((2, 20, 20))
        path = affine_path(0.5 * (G0 + G0.T), 2.0 * (G1 + G1.T))
        if not all(endpoint_invertibility(path)):
            continue
        expected = spectral_flow_partition(path).sfl
        assert spectral_flow_crossings(path).sfl == expected
        assert sfl_via_morse(path).sfl == expected


def test_concatenation_and_restriction():
    path = affine_path(np.diag([-1.0, 0.3, -0.2]), np.diag([2.0, -1.0, 1.0]), (0.0, 2.0))
    total = spectral_flow_partition(path).sfl
    assert total == sfl_via_morse(path).sfl
    left, right = path.on(0.0, 0.7), path.on(0.7, 2.0)
    assert spectral_flow_partition(left).sfl + spectral_flow_partition(right).sfl == total
    joined = concatenate(left, path.on(0.7, 2.0))
    assert spectral_flow_partition(joined).sfl == total


def test_partition_diagnostics():
    res = spectral_flow_partition(scalar_path())
    d = res.diagnostics
    assert d["partition"][0][0] == 0.0 and d["partition"][-1][1] == 1.0
    assert sum(c for *_, c in d["partition"]) == 1
    assert d["min_gap"] > 0


def test_endpoint_singularity_is_a_warning_for_the_partition_method():
    path = affine_path([[0.0]], [[1.0]])
    with pytest.warns(RuntimeWarning):
        res = spectral_flow_partition(path)
    assert res.warnings
    assert endpoint_invertibility(path) == (False, True)


def test_choose_level_tie_breaks_to_the_lowest_gap():
    # gaps (0.1, 1) and (1, 1.9) have equal width 0.9 after the zero_tol edge
    level, width = choose_level(np.array([1.0, 3.8]), 0.1)
    assert level == pytest.approx(0.55) and width == pytest.approx(0.9)


def test_split_refuses_a_non_equivariant_path():
    path = affine_path(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2), involution=SIGMA)
    with pytest.raises(NotEquivariantError):
        equivariant_spectral_flow(path)


@pytest.mark.parametrize("equi, ends, expected", [
    (RepRingElement(0, -1), (True, True), Verdict.BIFURCATION_CERTIFIED),
    (RepRingElement(0, 0), (True, True), Verdict.INCONCLUSIVE),
    (RepRingElement(3, 1), (True, False), Verdict.INCONCLUSIVE),
])
def test_bifurcation_verdict(equi, ends, expected):
    res = SpectralFlowResult(equi.d_total, Method.PARTITION, equi)
    assert bifurcation_verdict(res, ends) == expected


def test_plain_verdict_uses_the_integer_flow():
    assert bifurcation_verdict(SpectralFlowResult(1, Method.PARTITION), (True, True)) \
        == Verdict.BIFURCATION_CERTIFIED
    assert bifurcation_verdict(SpectralFlowResult(0, Method.PARTITION), (True, True)) \
        == Verdict.INCONCLUSIVE


def test_parallel_evaluation_gives_identical_results():
    rng = np.random.default_rng(8)
    G0, G1 = rng.standard_normal((2, 15, 15))
    path = affine_path(G0 + G0.T, 3.0 * (G1 + G1.T))
    a = spectral_flow_partition(path, parallel=1)
    b = spectral_flow_partition(path, parallel=4)
    assert a.sfl == b.sfl and a.diagnostics["partition"] == b.diagnostics["partition"]


def test_two_crossings_next_to_an_avoided_crossing():
    # branches x and c - x (x = lam - 0.3) couple through eps; zeros of
    # -x^2 + c x - eps^2 sit at x ~ eps^2 / c and x ~ c - eps^2 / c, in one grid cell
    c, eps = 1e-3, 1e-4
    B = np.array([[1.0, 0.0], [0.0, -1.0]])
    A = np.array([[-0.3, eps], [eps, c + 0.3]])
    path = affine_path(A, B)
    crossings = find_crossings(path)
    disc = np.sqrt(c * c - 4 * eps * eps)
    expected = 0.3 + np.array([(c - disc) / 2, (c + disc) / 2])
    assert np.allclose([x.lambda_star for x in crossings], expected, atol=1e-9)
    assert sorted(x.signature for x in crossings) == [-1, 1]
    assert spectral_flow_crossings(path).sfl == spectral_flow_partition(path).sfl == 0
