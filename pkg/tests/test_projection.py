import numpy as np
import pytest
from scipy.spatial.distance import pdist

from rpfclust._seeding import derive
from rpfclust.errors import DimensionError, ShapeError
from rpfclust.projection import (
    ProjectionKind,
    _standard_normal,
    gaussian_matrix,
    haar_matrix,
    heuristic_dim,
    project,
    random_matrix,
)


@pytest.mark.parametrize("G,a,d", [(2, 5, 5), (3, 5, 7), (4, 5, 8), (3, 10, 12), (5, 10, 18)])
def test_heuristic_dim_golden(G, a, d):
    assert heuristic_dim(G, a) == d


def test_heuristic_dim_errors():
    with pytest.raises(ValueError):
        heuristic_dim(1, 5)
    with pytest.raises(ValueError):
        heuristic_dim(3, 0)


@pytest.mark.parametrize("maker", [gaussian_matrix, haar_matrix])
def test_dimension_errors(maker):
    with pytest.raises(DimensionError):
        maker(10, 10, 0)
    with pytest.raises(DimensionError):
        maker(10, 0, 0)


@pytest.mark.parametrize("maker", [gaussian_matrix, haar_matrix])
def test_unit_columns_and_determinism(maker):
    for seed in range(25):
        A = maker(40, 6, seed).A
        np.testing.assert_allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12)
    np.testing.assert_array_equal(maker(40, 6, 7).A, maker(40, 6, 7).A)
    assert not np.array_equal(maker(40, 6, 7).A, maker(40, 6, 8).A)


def test_matrix_is_immutable():
    A = haar_matrix(8, 3, 1).A
    with pytest.raises(ValueError):
        A[0, 0] = 1.0


def test_gaussian_is_normalized_standard_normal():
    raw = _standard_normal(30, 4, 11)
    np.testing.assert_array_equal(gaussian_matrix(30, 4, 11).A, raw / np.linalg.norm(raw, axis=0))


def test_gaussian_sampling_law():
    pooled = np.concatenate([_standard_normal(1000, 5, derive(99, s)).ravel() for s in range(200)])
    assert abs(pooled.mean()) < 0.01
    assert abs(pooled.var() - 1.0) < 0.02


def test_haar_orthonormal_and_positive_r():
    for seed in range(50):
        raw = _standard_normal(25, 5, seed)
        A = haar_matrix(25, 5, seed).A
        assert np.max(np.abs(A.T @ A - np.eye(5))) < 1e-10
        # A spans the same space as the raw draw with upper-triangular R = A^T raw, positive diagonal
        R = A.T @ raw
        np.testing.assert_allclose(np.tril(R, -1), 0.0, atol=1e-10)
        assert (np.diag(R) > 0).all()


def test_haar_jl_statistic():
    K, d = 50, 5
    x = np.random.default_rng(3).normal(size=K)
    stats = [(K / d) * np.sum((haar_matrix(K, d, s).A.T @ x) ** 2) / (x @ x) for s in range(2000)]
    assert 0.95 <= np.mean(stats) <= 1.05


def test_random_matrix_dispatch():
    assert random_matrix("haar", 9, 2, 4).kind is ProjectionKind.HAAR
    assert random_matrix("GaussianNormalized", 9, 2, 4).kind is ProjectionKind.GAUSSIAN
    with pytest.raises(ValueError):
        ProjectionKind.parse("ternary")


def test_project_examples():
    np.testing.assert_array_equal(project(np.eye(2), np.array([[1.0], [0.0]])).X, [[1.0], [0.0]])
    C = np.random.default_rng(0).normal(size=(6, 4))
    A = np.zeros((4, 2))
    A[:, 0] = 1.0
    X = project(C, A, 3)
    assert X.projection_index == 3
    np.testing.assert_array_equal(X.X[:, 1], 0.0)
    with pytest.raises(ShapeError):
        project(C, np.ones((5, 2)))


def test_haar_projection_is_nonexpanding():
    C = np.random.default_rng(1).normal(size=(30, 20))
    for seed in range(20):
        X = project(C, haar_matrix(20, 4, seed)).X
        assert np.all(pdist(X) <= pdist(C) + 1e-12)
