import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equisfl.errors import (
    AmbiguousKernelError,
    AsymmetricMatrixError,
    BoundaryEigenvalueError,
    DegenerateFormError,
    NearKernelAmbiguityError,
)
from equisfl.linalg import (
    EIG_TOL,
    as_symmetric,
    eig_sym,
    eigvalsh,
    kernel_basis,
    morse_index,
    signature,
    spectral_count,
)


def random_symmetric(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) * scale
    return 0.5 * (G + G.T)


def test_eig_sym_examples():
    assert np.allclose(eig_sym(np.eye(3)).eigenvalues, [1, 1, 1])
    assert np.allclose(eig_sym(np.diag([-2.0, 0.0, 5.0])).eigenvalues, [-2, 0, 5])


def test_eig_sym_residuals_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 201)) if rng.random() < 0.05 else int(rng.integers(1, 40))
        M = random_symmetric(rng, n)
        w, V = eig_sym(M)
        scale = max(np.abs(w).max(), 1e-300)
        assert np.all(np.diff(w) >= 0)
        assert np.abs(M @ V - V * w).max() <= EIG_TOL * scale
        assert np.abs(V.T @ V - np.eye(n)).max() <= EIG_TOL


def test_banded_path_matches_dense():
    rng = np.random.default_rng(3)
    n = 300
    M = np.zeros((n, n))
    for k in range(4):
        d = rng.standard_normal(n - k)
        M += np.diag(d, k) + (np.diag(d, -k) if k else 0)
    assert np.allclose(eigvalsh(M, 3), np.linalg.eigvalsh(M), atol=1e-11)


def test_as_symmetric_rejects_asymmetric_input():
    with pytest.raises(AsymmetricMatrixError):
        as_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
    S = as_symmetric(np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]]))
    assert np.array_equal(S, S.T)


def test_spectral_count_examples():
    M = np.diag([-1.0, 0.5, 2.0])
    assert spectral_count(M, 0.0, 1.0) == 1
    assert spectral_count(M, -3.0, 3.0) == 3
    assert spectral_count(M, -np.inf, np.inf) == 3
    with pytest.raises(BoundaryEigenvalueError):
        spectral_count(M, 0.5, 1.0)


def test_spectral_count_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        M = random_symmetric(rng, n)
        w = np.linalg.eigvalsh(M)
        lo, hi = np.sort(rng.uniform(-3, 3, 2))
        if np.min(np.abs(np.r_[w - lo, w - hi])) < 1e-6:
            continue
        assert spectral_count(M, lo, hi) == np.count_nonzero((w >= lo) & (w <= hi))


def test_morse_index_examples():
    assert morse_index(np.diag([-3.0, -1.0, 2.0])) == 2
    assert morse_index(np.eye(4)) == 0
    with pytest.raises(NearKernelAmbiguityError):
        morse_index(np.diag([-1.0, 0.0, 1.0]), 1e-8)
    assert morse_index(np.diag([-1.0, 0.0, 1.0]), 1e-8, strict=False) == 1


def test_morse_index_of_dirichlet_operator():
    # -d^2/dx^2 - 5 on (0, pi) in the orthonormal sine basis is diag(k^2 - 5)
    k = np.arange(1, 41)
    assert morse_index(np.diag(k**2 - 5.0)) == 2


def test_kernel_basis_examples():
    K = kernel_basis(np.diag([0.0, 1.0, 2.0]), 1e-8)
    assert K.shape == (3, 1) and abs(abs(K[0, 0]) - 1) < 1e-14
    assert kernel_basis(np.diag([1.0, -2.0]), 1e-8).shape == (2, 0)
    with pytest.raises(AmbiguousKernelError):
        kernel_basis(np.diag([0.0, 5e-8, 1.0]), 1e-8)


def test_kernel_basis_recovers_constructed_null_vector():
    rng = np.random.default_rng(5)
    v = rng.standard_normal(6)
    v /= np.linalg.norm(v)
    M = np.eye(6) - np.outer(v, v)
    K = kernel_basis(M)
    assert K.shape[1] == 1
    assert abs(abs(K[:, 0] @ v) - 1.0) < 1e-12


@pytest.mark.parametrize("Q, expected", [
    (np.diag([1.0, -1.0]), 0),
    (np.diag([-2.0]), -1),
    (np.diag([3.0, 2.0, -1.0]), 1),
])
def test_signature_examples(Q, expected):
    assert signature(Q) == expected


def test_signature_rejects_degenerate_forms():
    with pytest.raises(DegenerateFormError):
        signature(np.diag([1.0, 0.0]), 1e-8)


sym_matrices = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.integers(-6, 6), min_size=n * n, max_size=n * n).map(
        lambda xs: np.array(xs, dtype=float).reshape(n, n)).map(lambda G: G + G.T))


@settings(max_examples=200, deadline=None)
@given(sym_matrices)
def test_morse_plus_reverse_morse_plus_kernel_is_dimension(M):
    # integer entries give eigenvalues either exactly zero or well separated from it
    w = np.linalg.eigvalsh(M)
    tol = 1e-8 * max(1.0, np.abs(w).max())
    if np.any((np.abs(w) > tol) & (np.abs(w) < 1e-3)):
        return
    n = M.shape[0]
    assert morse_index(M, tol, strict=False) + morse_index(-M, tol, strict=False) + kernel_basis(M, tol).shape[1] == n
    assert spectral_count(M, -np.inf, np.inf) == n


@settings(max_examples=200, deadline=None)
@given(sym_matrices)
def test_signature_parity(Q):
    w = np.linalg.eigvalsh(Q)
    if np.abs(w).min() < 1e-6:
        return
    assert (signature(Q) - Q.shape[0]) % 2 == 0
