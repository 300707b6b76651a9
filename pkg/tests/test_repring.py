import pytest
from hypothesis import given
from hypothesis import strategies as st

from equisfl.repring import RepRingElement, forgetful, rep_add, rep_from_spaces, rep_neg, trivial

ints = st.integers(min_value=-10**6, max_value=10**6)
elements = st.builds(RepRingElement, ints, ints)


@pytest.mark.parametrize("dims, expected", [
    ((3, 1, 3, 1), (0, 0)),
    ((2, 2, 0, 0), (2, 2)),
    ((1, 0, 1, 1), (0, -1)),
])
def test_rep_from_spaces(dims, expected):
    assert rep_from_spaces(*dims) == RepRingElement(*expected)


def test_rep_from_spaces_rejects_bad_fixed_dimension():
    with pytest.raises(ValueError):
        rep_from_spaces(1, 2, 0, 0)
    with pytest.raises(ValueError):
        rep_from_spaces(0, 0, 1, 3)
    with pytest.raises(ValueError):
        rep_from_spaces(-1, 0, 0, 0)


@pytest.mark.parametrize("a, b, expected", [
    ((1, 0), (-1, 0), (0, 0)),
    ((0, -1), (0, -1), (0, -2)),
    ((2, 1), (-1, 1), (1, 2)),
])
def test_rep_add(a, b, expected):
    assert rep_add(RepRingElement(*a), RepRingElement(*b)) == RepRingElement(*expected)


def test_rep_neg():
    assert rep_neg(RepRingElement(0, 0)) == RepRingElement(0, 0)
    assert rep_neg(RepRingElement(3, -2)) == RepRingElement(-3, 2)


@pytest.mark.parametrize("a, expected", [((0, -1), 0), ((5, 2), 5), ((-1, -1), -1)])
def test_forgetful(a, expected):
    assert forgetful(RepRingElement(*a)) == expected


def test_nontrivial_kernel_of_forgetful_map():
    a = RepRingElement(0, -1)
    assert forgetful(a) == 0 and a != RepRingElement(0, 0) and bool(a)


def test_serialization_and_integrality():
    assert str(RepRingElement(0, -1)) == "(0, -1)"
    assert RepRingElement(2.0, 1).d_total == 2
    with pytest.raises(TypeError):
        RepRingElement(0.5, 0)
    assert trivial(3) == RepRingElement(3, 3)


@given(elements, elements, elements)
def test_group_laws(a, b, c):
    assert rep_add(rep_add(a, b), c) == rep_add(a, rep_add(b, c))
    assert rep_add(a, b) == rep_add(b, a)
    assert rep_add(a, RepRingElement(0, 0)) == a
    assert rep_add(a, rep_neg(a)) == RepRingElement(0, 0)


@given(elements, elements)
def test_forgetful_is_a_homomorphism(a, b):
    assert forgetful(rep_add(a, b)) == forgetful(a) + forgetful(b)
