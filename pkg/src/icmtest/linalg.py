"""Dense symmetric linear algebra used by the ICA estimators.

Covariances use divisor ``n`` by default so that they agree with the
``1/n`` normalisation of the fourth-moment and cumulant matrices.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    NotSymmetric,
    TooFewRows,
)

SYMMETRY_RTOL = 1e-12
SPD_EPS = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class Whitener:
    mean: np.ndarray
    inv_sqrt_cov: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) @ self.inv_sqrt_cov


@dataclass(frozen=True)
class JointDiagonalization:
    """Result of :func:`joint_diagonalize`.

    ``matrix`` is orthogonal with ``matrix.T @ M @ matrix`` approximately
    diagonal for every input ``M``; ``objective`` holds the sum of squared
    diagonals after each sweep (index 0 is the starting value).
    """

    matrix: np.ndarray
    converged: bool
    sweeps: int
    objective: list = field(default_factory=list)


def as_data_matrix(X, min_rows=2):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D data matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("data matrix contains NaN or infinite entries")
    if X.shape[0] < min_rows:
        raise TooFewRows(f"need at least {min_rows} rows, got {X.shape[0]}")
    return X


def sample_covariance(X, ddof=0):
    """Sample covariance with divisor ``n - ddof`` (two-pass)."""
    X = as_data_matrix(X)
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (n - ddof)
    return (C + C.T) / 2


def _check_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix contains NaN or infinite entries")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise NotSymmetric("matrix is not symmetric to 1e-12 relative")
    return (A + A.T) / 2


def _fix_signs(vectors):
    # largest-magnitude entry of each column positive; first index wins ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(A):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Each eigenvector is signed so that its largest-magnitude component is
    positive, which makes every downstream estimate reproducible.
    """
    A = _check_symmetric(A)
    try:
        values, vectors = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"symmetric eigensolver failed: {exc}") from exc
    order = np.argsort(values)[::-1]
    return EigenDecomposition(values[order], _fix_signs(vectors[:, order]))


def inverse_sqrt(A):
    """Symmetric inverse square root ``B`` with ``B @ A @ B = I``."""
    eig = sym_eigen(A)
    lam_max = eig.values[0]
    lam_min = eig.values[-1]
    if lam_max <= 0 or lam_min <= SPD_EPS * lam_max:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (smallest eigenvalue {lam_min:.3e})",
            smallest_eigenvalue=float(lam_min),
        )
    V = eig.vectors
    B = (V / np.sqrt(eig.values)) @ V.T
    return (B + B.T) / 2


def whiten(X):
    """Centre and whiten ``X``; returns ``(Whitener, X_st)``.

    Raises NotPositiveDefinite for collinear data rather than regularising.
    """
    X = as_data_matrix(X)
    mean = X.mean(axis=0)
    B = inverse_sqrt(sample_covariance(X))
    whitener = Whitener(mean=mean, inv_sqrt_cov=B)
    return whitener, (X - mean) @ B


def _diag_objective(A, p, K):
    return float(sum(np.sum(np.diag(A[:, k * p:(k + 1) * p]) ** 2) for k in range(K)))


def joint_diagonalize(mats, tol=1e-12, max_sweeps=100):
    """Orthogonal joint diagonaliser of symmetric matrices by Jacobi rotations.

    Maximises ``sum_M ||diag(V.T @ M @ V)||^2`` with Givens rotations over
    the pairs ``(i, j)`` in lexicographic order.  Stops once every rotation
    angle in a sweep is below ``tol`` or after ``max_sweeps`` sweeps; in the
    latter case the last iterate is returned with ``converged=False``.
    """
    mats = [_check_symmetric(M) for M in mats]
    if not mats:
        raise DimensionMismatch("need at least one matrix to diagonalise")
    p = mats[0].shape[0]
    if any(M.shape != (p, p) for M in mats):
        raise DimensionMismatch("all matrices must share the same dimension")
    K = len(mats)
    A = np.concatenate(mats, axis=1)
    V = np.eye(p)
    objective = [_diag_objective(A, p, K)]
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        max_angle = 0.0
        for i in range(p - 1):
            Ii = np.arange(i, p * K, p)
            for j in range(i + 1, p):
                Ij = np.arange(j, p * K, p)
                g = np.vstack([A[i, Ii] - A[j, Ij], A[i, Ij] + A[j, Ii]])
                G = g @ g.T
                ton = G[0, 0] - G[1, 1]
                toff = G[0, 1] + G[1, 0]
                theta = 0.5 * np.arctan2(toff, ton + np.hypot(ton, toff))
                max_angle = max(max_angle, abs(theta))
                if abs(theta) <= tol:
                    continue
                c, s = np.cos(theta), np.sin(theta)
                rot = np.array([[c, -s], [s, c]])
                pair = [i, j]
                V[:, pair] = V[:, pair] @ rot
                A[pair, :] = rot.T @ A[pair, :]
                Ai, Aj = A[:, Ii].copy(), A[:, Ij]
                A[:, Ii] = c * Ai + s * Aj
                A[:, Ij] = -s * Ai + c * Aj
        objective.append(_diag_objective(A, p, K))
        if max_angle <= tol:
            converged = True
            break
    return JointDiagonalization(matrix=V, converged=converged, sweeps=sweeps, objective=objective)
