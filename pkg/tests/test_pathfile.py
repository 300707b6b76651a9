import numpy as np
import pytest

from equisfl.equivariance import Involution
from equisfl.errors import PathFileError
from equisfl.pathfile import parse_path_file, read_path_file, serialize_path, write_path_file
from equisfl.paths import OperatorPath
from equisfl.repring import RepRingElement
from equisfl.sflcore import equivariant_spectral_flow, spectral_flow_partition

SCALAR = "1 2\n0 1\n-0.5\n0.5\n"
EQUIVARIANT = """# diag(lam - 0.5, 0.5 - lam)
2 2
0 1
involution
1 0
0 -1

-0.5 0
0 0.5
0.5 0
0 -0.5
"""


def test_scalar_file():
    path = parse_path_file(SCALAR.encode())
    assert path(0.25)[0, 0] == pytest.approx(-0.25)
    assert path.derivative_at(0.3)[0, 0] == pytest.approx(1.0)
    assert spectral_flow_partition(path).sfl == 1


def test_file_with_involution():
    path = parse_path_file(EQUIVARIANT)
    assert np.array_equal(path.involution.matrix, np.diag([1.0, -1.0]))
    assert equivariant_spectral_flow(path).sfl_equivariant == RepRingElement(0, 1)


@pytest.mark.parametrize("text", [
    "",
    "1\n0 1\n0\n1\n",
    "x 2\n0 1\n0\n1\n",
    "1 1\n0 1\n0\n",
    "1 2\n1 0\n0\n1\n",
    "1 2\n0 1\n0\n",
    "2 2\n0 1\n1 0\n0 1\n1 0\n0 1 5\n",
    "2 2\n0 1\n1 2\n0 1\n1 0\n0 1\n",
    "1 2\n0 1\ninvolution\n0.5\n0\n1\n",
    "1 2\n0 1\nnan?\n1\n",
])
def test_malformed_files(text):
    with pytest.raises(PathFileError):
        parse_path_file(text)


def test_tiny_asymmetry_is_symmetrized():
    path = parse_path_file("2 2\n0 1\n1 1e-14\n0 1\n1 0\n0 1\n")
    assert np.array_equal(path(0.0), path(0.0).T)


def test_piecewise_linear_interpolation_hits_knots():
    text = "1 3\n0 2\n0\n4\n2\n"
    path = parse_path_file(text)
    assert path(1.0)[0, 0] == 4.0
    assert path(0.5)[0, 0] == 2.0
    assert path(1.5)[0, 0] == 3.0
    assert path.derivative_at(0.5)[0, 0] == 4.0
    assert path.derivative_at(1.5)[0, 0] == -2.0


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    G0, G1 = rng.standard_normal((2, 4, 4))
    A, B = G0 + G0.T, 3.0 * (G1 + G1.T)
    s = np.array([1.0, 1.0, -1.0, -1.0])
    mask = np.outer(s, s) > 0
    path = OperatorPath(lambda lam: A * mask + lam * B * mask, (0.0, 1.0),
                        derivative=lambda lam: B * mask, involution=Involution(s))
    target = tmp_path / "random.txt"
    write_path_file(path, target, 2)
    again = read_path_file(target)
    assert again.name == "random"
    for lam in (0.0, 0.3, 1.0):
        assert np.allclose(again(lam), path(lam), rtol=0, atol=1e-15)
    expected = equivariant_spectral_flow(path).sfl_equivariant
    assert equivariant_spectral_flow(again).sfl_equivariant == expected
    assert serialize_path(again, 2) == target.read_text()
