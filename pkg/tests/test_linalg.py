import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from icmtest.errors import (
    DimensionMismatch,
    NonFinite,
    NotPositiveDefinite,
    NotSymmetric,
    TooFewRows,
)
from icmtest.linalg import (
    as_data_matrix,
    inverse_sqrt,
    joint_diagonalize,
    sample_covariance,
    sym_eigen,
    whiten,
)


def _spd(rng, p):
    A = rng.normal(size=(p, p))
    return A @ A.T + p * np.eye(p)


def test_sym_eigen_reconstructs_and_sorts(rng):
    A = _spd(rng, 5)
    eig = sym_eigen(A)
    assert np.all(np.diff(eig.values) <= 0)
    assert_allclose(eig.vectors @ np.diag(eig.values) @ eig.vectors.T, A, atol=1e-12)
    assert_allclose(eig.vectors.T @ eig.vectors, np.eye(5), atol=1e-13)


def test_sym_eigen_sign_convention(rng):
    eig = sym_eigen(_spd(rng, 4))
    idx = np.argmax(np.abs(eig.vectors), axis=0)
    assert np.all(eig.vectors[idx, np.arange(4)] > 0)


def test_sym_eigen_diagonal():
    eig = sym_eigen(np.diag([1.0, 3.0, 2.0]))
    assert_array_equal(eig.values, [3.0, 2.0, 1.0])


def test_sym_eigen_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DimensionMismatch):
        sym_eigen(np.ones((2, 3)))


def test_inverse_sqrt(rng):
    A = _spd(rng, 4)
    B = inverse_sqrt(A)
    assert_allclose(B @ A @ B, np.eye(4), atol=1e-12)
    assert_allclose(B, B.T, atol=0)


def test_inverse_sqrt_singular():
    with pytest.raises(NotPositiveDefinite) as info:
        inverse_sqrt(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert info.value.smallest_eigenvalue is not None


def test_whiten_identity_covariance(rng):
    X = rng.normal(size=(500, 3)) @ rng.normal(size=(3, 3)) + 5
    w, X_st = whiten(X)
    assert_allclose(X_st.mean(axis=0), 0, atol=1e-12)
    assert_allclose(sample_covariance(X_st), np.eye(3), atol=1e-10)
    assert_allclose(w.transform(X), X_st)


def test_whiten_collinear():
    x = np.arange(10.0)
    with pytest.raises(NotPositiveDefinite):
        whiten(np.column_stack([x, 2 * x]))


def test_data_matrix_checks():
    with pytest.raises(NonFinite):
        as_data_matrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(TooFewRows):
        as_data_matrix([[1.0, 2.0]])
    with pytest.raises(DimensionMismatch):
        as_data_matrix([1.0, 2.0])


def test_joint_diagonalize_exact(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    mats = [Q @ np.diag(rng.normal(size=4)) @ Q.T for _ in range(6)]
    jd = joint_diagonalize(mats)
    assert jd.converged
    for M in mats:
        D = jd.matrix.T @ M @ jd.matrix
        assert_allclose(D - np.diag(np.diag(D)), 0, atol=1e-10)
    assert_allclose(jd.matrix.T @ jd.matrix, np.eye(4), atol=1e-12)


def test_joint_diagonalize_objective_monotone(rng):
    mats = []
    for _ in range(5):
        A = rng.normal(size=(4, 4))
        mats.append(A + A.T)
    jd = joint_diagonalize(mats)
    assert np.all(np.diff(jd.objective) >= -1e-10)


def test_joint_diagonalize_sweep_cap(rng):
    mats = []
    for _ in range(5):
        A = rng.normal(size=(5, 5))
        mats.append(A + A.T)
    jd = joint_diagonalize(mats, max_sweeps=1)
    assert jd.sweeps == 1
    assert not jd.converged


def test_joint_diagonalize_single_matrix_matches_eigen(rng):
    A = _spd(rng, 3)
    jd = joint_diagonalize([A])
    assert_allclose(np.sort(np.diag(jd.matrix.T @ A @ jd.matrix)),
                    np.sort(np.linalg.eigvalsh(A)), rtol=1e-12)
