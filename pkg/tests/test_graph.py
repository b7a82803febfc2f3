import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvclust.errors import DegenerateGraphError, DimensionError, ParameterError, PartitionError
from cvclust.graph import (build_spectra, gaussian_adjacency, is_connected, median_bandwidth,
                           ncut_objective)
from oracles import all_ncuts, jacobi_eig, normalized_laplacian, random_connected_gaussian_graph


def test_identical_points_fully_connected():
    X = np.array([[1.0, 1.0], [2.0, 2.0]])
    A = gaussian_adjacency(X, 1.0)
    np.testing.assert_array_equal(A, [[0, 1], [1, 0]])


def test_mahalanobis_two_gives_exp_minus_one():
    X = np.array([[0.0, 1.0], [0.0, 1.0]])  # squared distance 2 with identity covariance
    A = gaussian_adjacency(X, np.eye(2))
    assert A[0, 1] == pytest.approx(0.36787944117144233, abs=1e-15)


def test_full_covariance_uses_quadratic_form():
    S = np.array([[2.0, 0.5], [0.5, 1.0]])
    X = np.array([[0.0, 1.0], [0.0, -2.0]])
    diff = X[:, 0] - X[:, 1]
    expected = np.exp(-0.5 * diff @ np.linalg.solve(S, diff))
    assert gaussian_adjacency(X, S)[0, 1] == pytest.approx(expected, rel=1e-12)


def test_five_points_exact_symmetry_and_zero_diagonal():
    X = np.random.default_rng(0).normal(size=(3, 5))
    A = gaussian_adjacency(X)
    assert np.all(np.diag(A) == 0.0)
    assert np.array_equal(A, A.T)
    assert A.min() >= 0.0 and A.max() <= 1.0


def test_median_bandwidth_default():
    X = np.random.default_rng(1).normal(size=(2, 6))
    sigma = median_bandwidth(X)
    np.testing.assert_array_equal(gaussian_adjacency(X), gaussian_adjacency(X, sigma))


@pytest.mark.parametrize("sigma", [np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]), -1.0, 0.0])
def test_bad_sigma(sigma):
    with pytest.raises(ParameterError):
        gaussian_adjacency(np.ones((2, 3)), sigma)


def test_single_point_rejected():
    with pytest.raises(DimensionError):
        gaussian_adjacency(np.ones((2, 1)))


def test_spectra_unit_edge():
    s = build_spectra([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(s.laplacian, [[1, -1], [-1, 1]])
    assert s.volume == 2.0
    np.testing.assert_allclose(s.null_vector, [1, 1])


def test_spectra_path_spectrum():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    w, _ = jacobi_eig(build_spectra(A).laplacian)
    np.testing.assert_allclose(w, [0, 1, 2], atol=1e-12)


def test_isolated_vertex():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    with pytest.raises(DegenerateGraphError):
        build_spectra(A)


@pytest.mark.parametrize("A", [
    [[0.0, -1.0], [-1.0, 0.0]],
    [[0.0, 1.0], [2.0, 0.0]],
    [[1.0, 1.0], [1.0, 0.0]],
])
def test_bad_adjacency(A):
    with pytest.raises(ParameterError):
        build_spectra(A)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 2 ** 31 - 1), c=st.floats(1e-3, 1e3))
def test_spectra_properties(n, seed, c):
    _, A = random_connected_gaussian_graph(np.random.default_rng(seed), n)
    s = build_spectra(A)
    L = s.laplacian
    np.testing.assert_allclose(L, normalized_laplacian(A), atol=1e-12)
    assert np.array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).min() >= -1e-9
    assert np.linalg.norm(L @ s.null_vector) <= 1e-9 * np.linalg.norm(s.null_vector) * n
    # scale invariance
    assert np.max(np.abs(build_spectra(c * A).laplacian - L)) <= 1e-10


def test_connected_unit_edge():
    ok, labels = is_connected([[0.0, 1.0], [1.0, 0.0]])
    assert ok and list(labels) == [1, 1]


def test_disconnected_blocks():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = A[2, 3] = A[3, 2] = 1.0
    ok, labels = is_connected(A)
    assert not ok
    assert list(labels) == [1, 1, 2, 2]


def test_single_vertex_connected():
    ok, labels = is_connected([[0.0]])
    assert ok and list(labels) == [1]


def test_tiny_weights_ignored():
    A = np.array([[0.0, 1e-13], [1e-13, 0.0]])
    assert not is_connected(A)[0]


def test_ncut_unit_edge():
    assert ncut_objective([[0.0, 1.0], [1.0, 0.0]], [True, False]) == 2.0


def test_ncut_disjoint_edges():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = A[2, 3] = A[3, 2] = 1.0
    assert ncut_objective(A, [True, True, False, False]) == 0.0


def test_ncut_empty_side():
    with pytest.raises(PartitionError):
        ncut_objective([[0.0, 1.0], [1.0, 0.0]], [True, True])


def test_ncut_matches_hand_formula():
    A = np.array([[0, 2, 1], [2, 0, 0.5], [1, 0.5, 0]], dtype=float)
    part = np.array([True, False, False])
    cut = 2 + 1
    v_r, v_l = 3.0, 2.5 + 1.5
    assert ncut_objective(A, part) == pytest.approx(cut * (1 / v_r + 1 / v_l), rel=1e-14)


def test_relaxation_bound_n8():
    _, A = random_connected_gaussian_graph(np.random.default_rng(8), 8)
    lam = np.linalg.eigvalsh(normalized_laplacian(A))[1]
    best = min(ncut_objective(A, p) for p in all_ncuts(A))
    assert best >= lam - 1e-9
