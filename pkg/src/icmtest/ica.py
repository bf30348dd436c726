"""Unmixing-matrix estimators (FOBI, JADE, symmetric FastICA) and residuals.

All three work on whitened data ``X_st = (X - mean) @ Cov^{-1/2}`` and find
an orthogonal rotation ``R`` whose rows give the components ``X_st @ R.T``.
The unmixing matrix is ``R @ Cov^{-1/2}``.  Components are reported in a
fixed convention: descending excess kurtosis, and each unmixing row signed
so its largest-magnitude entry is positive.
"""

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _rng
from .errors import DegenerateKurtosisWarning, DimensionMismatch, NotPositiveDefinite
from .linalg import Whitener, as_data_matrix, inverse_sqrt, joint_diagonalize, sym_eigen, whiten

DEGENERATE_GAP = 1e-8


class Method(str, Enum):
    FOBI = "fobi"
    JADE = "jade"
    FASTICA = "fastica"


class GFunction(str, Enum):
    POW3 = "pow3"
    TANH = "tanh"


def _logcosh_gauss_mean():
    # E[log cosh Y], Y ~ N(0, 1), by Gauss-Hermite quadrature
    x, w = np.polynomial.hermite.hermgauss(200)
    return float(np.sum(w * np.log(np.cosh(np.sqrt(2.0) * x))) / np.sqrt(np.pi))


LOGCOSH_GAUSS_MEAN = _logcosh_gauss_mean()


def contrast(g, y):
    """Non-Gaussianity measure ``G`` (zero mean under N(0, 1))."""
    y = np.asarray(y, dtype=float)
    if GFunction(g) is GFunction.POW3:
        return (y ** 4 - 3.0) / 4.0
    return np.logaddexp(y, -y) - np.log(2.0) - LOGCOSH_GAUSS_MEAN


@dataclass(frozen=True)
class UnmixingEstimate:
    unmixing: np.ndarray
    method: Method
    whitener: Whitener
    rotation: np.ndarray
    g_function: GFunction = None
    converged: bool = True
    iterations: int = 0
    degenerate: bool = False

    @property
    def mixing(self):
        return np.linalg.inv(self.unmixing)


class ResidualMatrix:
    """Estimated residuals (or scored ranks), rows are observations."""

    def __init__(self, values, source="residuals"):
        self.values = np.asarray(values, dtype=float)
        self.source = source

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def shape(self):
        return self.values.shape

    def __repr__(self):
        return f"ResidualMatrix(shape={self.values.shape}, source={self.source!r})"


def excess_kurtosis(Y):
    Y = np.asarray(Y, dtype=float)
    Yc = Y - Y.mean(axis=0)
    var = np.mean(Yc ** 2, axis=0)
    return np.mean(Yc ** 4, axis=0) / var ** 2 - 3.0


def apply_conventions(R, X_st, inv_sqrt_cov):
    """Order rows of ``R`` by descending kurtosis and fix unmixing-row signs.

    Returns ``(R, W)`` with ``W = R @ inv_sqrt_cov``.  Idempotent.
    """
    kurt = excess_kurtosis(X_st @ R.T)
    order = np.argsort(-kurt, kind="stable")
    R = R[order]
    W = R @ inv_sqrt_cov
    idx = np.argmax(np.abs(W), axis=1)
    signs = np.sign(W[np.arange(W.shape[0]), idx])
    signs[signs == 0] = 1.0
    return R * signs[:, None], W * signs[:, None]


def _check_input(X):
    X = as_data_matrix(X)
    n, p = X.shape
    if p < 2:
        raise DimensionMismatch("ICA needs at least two columns")
    if n <= p:
        raise DimensionMismatch(f"need more rows than columns (n={n}, p={p})")
    return X


def fourth_moment_matrix(X_st):
    """``(1/(p+2)) * mean_j ||x_j||^2 x_j x_j^T`` of whitened rows."""
    n, p = X_st.shape
    r2 = np.einsum("ij,ij->i", X_st, X_st)
    C4 = (X_st * r2[:, None]).T @ X_st / n / (p + 2)
    return (C4 + C4.T) / 2


def cumulant_matrices(X_st):
    """Fourth-order cumulant matrices ``C^{kl}`` for ``k <= l``.

    ``C^{kl} = mean_j (x_j^T E^{kl} x_j) x_j x_j^T - E^{kl} - E^{lk} - delta_kl I``.
    """
    n, p = X_st.shape
    pairs = (X_st[:, :, None] * X_st[:, None, :]).reshape(n, p * p)
    Q = pairs.T @ pairs / n
    eye = np.eye(p)
    mats = []
    for k in range(p):
        for l in range(k, p):
            C = Q[k * p + l].reshape(p, p).copy()
            C[k, l] -= 1.0
            C[l, k] -= 1.0
            if k == l:
                C -= eye
            mats.append((C + C.T) / 2)
    return mats


def _finish(method, R, whitener, X_st, **info):
    R, W = apply_conventions(R, X_st, whitener.inv_sqrt_cov)
    return UnmixingEstimate(unmixing=W, method=method, whitener=whitener, rotation=R, **info)


def fobi(X):
    """FOBI: eigenvectors of the fourth-moment matrix of the whitened data."""
    X = _check_input(X)
    whitener, X_st = whiten(X)
    eig = sym_eigen(fourth_moment_matrix(X_st))
    degenerate = bool(np.any(np.abs(np.diff(eig.values)) < DEGENERATE_GAP))
    if degenerate:
        warnings.warn(
            "FOBI: fourth-moment eigenvalues differ by less than 1e-8; "
            "components are not identifiable from kurtosis",
            DegenerateKurtosisWarning,
            stacklevel=2,
        )
    return _finish(Method.FOBI, eig.vectors.T, whitener, X_st, degenerate=degenerate)


def _jade_set(X_st):
    # C^{kl} = C^{lk}, so the full set of p^2 matrices is the k <= l set with
    # each k < l matrix counted twice; scaling those by sqrt(2) gives the same
    # rotation-invariant objective with half the matrices
    p = X_st.shape[1]
    mats = cumulant_matrices(X_st)
    weights = [1.0 if k == l else np.sqrt(2.0) for k in range(p) for l in range(k, p)]
    return [w * C for w, C in zip(weights, mats)]


def jade(X, tol=1e-12, max_sweeps=100):
    """JADE: joint diagonaliser of the p^2 cumulant matrices of the whitened data."""
    X = _check_input(X)
    whitener, X_st = whiten(X)
    jd = joint_diagonalize(_jade_set(X_st), tol=tol, max_sweeps=max_sweeps)
    return _finish(
        Method.JADE, jd.matrix.T, whitener, X_st, converged=jd.converged, iterations=jd.sweeps
    )


def _symmetric_orthogonalize(W):
    return inverse_sqrt(W @ W.T) @ W


def _fastica_iterate(X_st, W, g, tol, max_iter):
    n = X_st.shape[0]
    W = _symmetric_orthogonalize(W)
    for it in range(1, max_iter + 1):
        Y = X_st @ W.T
        if g is GFunction.TANH:
            gY = np.tanh(Y)
            dg = 1.0 - gY ** 2
        else:
            gY = Y ** 3
            dg = 3.0 * Y ** 2
        W_new = _symmetric_orthogonalize(gY.T @ X_st / n - dg.mean(axis=0)[:, None] * W)
        crit = 1.0 - np.min(np.abs(np.einsum("ij,ij->i", W_new, W)))
        W = W_new
        if crit < tol:
            return W, it, True
    return W, max_iter, False


def fastica_symmetric(X, g=GFunction.TANH, seed=0, tol=1e-6, max_iter=1000, restarts=5):
    """Symmetric FastICA with fixed-point updates.

    Starts from the identity rotation; if that run does not converge, up to
    ``restarts`` further runs start from random orthogonal matrices drawn
    from the stream of ``seed``.  A run that never converges is returned
    with ``converged=False``.
    """
    g = GFunction(g)
    X = _check_input(X)
    whitener, X_st = whiten(X)
    p = X.shape[1]
    total = 0
    W, ok = np.eye(p), False
    for attempt in range(restarts + 1):
        if attempt == 0:
            start = np.eye(p)
        else:
            start = _rng.random_orthogonal(_rng.stream(seed, _rng.FASTICA, attempt), p)
        try:
            W, it, ok = _fastica_iterate(X_st, start, g, tol, max_iter)
        except NotPositiveDefinite:
            it, ok = max_iter, False
        total += it
        if ok:
            break
    return _finish(
        Method.FASTICA, W, whitener, X_st, g_function=g, converged=ok, iterations=total
    )


def estimate(X, method=Method.FASTICA, g=GFunction.TANH, seed=0, **options):
    method = Method(method)
    if method is Method.FOBI:
        return fobi(X)
    if method is Method.JADE:
        return jade(X, **options)
    return fastica_symmetric(X, g=g, seed=seed, **options)


def residuals(X, est):
    """Residuals ``W (X_j - mean(X))``, mean re-estimated from ``X``."""
    X = as_data_matrix(X, min_rows=1)
    if X.shape[1] != est.unmixing.shape[1]:
        raise DimensionMismatch(
            f"data has {X.shape[1]} columns, unmixing matrix expects {est.unmixing.shape[1]}"
        )
    return ResidualMatrix((X - X.mean(axis=0)) @ est.unmixing.T, source="residuals")


def amari_index(W, Omega):
    """Amari distance of ``W @ Omega`` from a scaled permutation (0 iff exact)."""
    G = np.abs(np.asarray(W) @ np.asarray(Omega))
    p = G.shape[0]
    rows = np.sum(G.sum(axis=1) / G.max(axis=1) - 1.0)
    cols = np.sum(G.sum(axis=0) / G.max(axis=0) - 1.0)
    return float((rows + cols) / (2 * p))
