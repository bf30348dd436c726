"""Independent reference computations used by the tests.

Nothing here calls the package's closed forms: CF statistics are integrated
numerically from their definition, distance covariance is transcribed as a
triple loop, and the normal quantile is bracketed by bisection.
"""

import itertools
import math

import numpy as np


def weight_rule(kind, gamma, nodes=None):
    """Nodes and weights integrating against the 1-D density whose CF is the kernel.

    Gaussian kernel exp(-gamma t^2) is the CF of N(0, 2 gamma): Gauss-Hermite.
    Laplace kernel 1 / (1 + gamma t^2) is the CF of a Laplace density with
    scale sqrt(gamma): Gauss-Laguerre on each half-line.
    """
    if kind == "gaussian":
        x, w = np.polynomial.hermite.hermgauss(nodes or 60)
        return 2.0 * np.sqrt(gamma) * x, w / np.sqrt(np.pi)
    x, w = np.polynomial.laguerre.laggauss(nodes or 100)
    b = np.sqrt(gamma)
    return np.concatenate([-b * x[::-1], b * x]), np.concatenate([w[::-1], w]) / 2.0


def _grid_cf(Z, t):
    # E[l] is (len(t), n): exp(i t z_jl)
    return [np.exp(1j * np.outer(t, Z[:, l])) for l in range(Z.shape[1])]


def _joint(E):
    n = E[0].shape[1]
    if len(E) == 2:
        return np.einsum("aj,bj->ab", E[0], E[1]) / n
    return np.einsum("aj,bj,cj->abc", E[0], E[1], E[2]) / n


def _integrate(F, w):
    for _ in range(F.ndim):
        F = np.tensordot(F, w, axes=([0], [0]))
    return float(np.real(F))


def cf_statistic_quadrature(Z, kind="gaussian", gamma=1.0, nodes=None):
    """n * int |joint ECF - product of marginal ECFs|^2 W(t) dt on a tensor grid (p <= 3)."""
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    t, w = weight_rule(kind, gamma, nodes)
    E = _grid_cf(Z, t)
    joint = _joint(E)
    marg = [e.mean(axis=1) for e in E]
    prod = marg[0][:, None] * marg[1][None, :]
    if p == 3:
        prod = prod[:, :, None] * marg[2][None, None, :]
    return n * _integrate(np.abs(joint - prod) ** 2, w)


def vdw_reference_quadrature(S, gamma=1.0, nodes=None):
    """n * int |joint ECF of S - exp(-|t|^2 / 2)|^2 W(t) dt, Gaussian weight."""
    S = np.asarray(S, dtype=float)
    n, p = S.shape
    t, w = weight_rule("gaussian", gamma, nodes)
    joint = _joint(_grid_cf(S, t))
    g = np.exp(-0.5 * t * t)
    ref = g[:, None] * g[None, :]
    if p == 3:
        ref = ref[:, :, None] * g[None, None, :]
    return n * _integrate(np.abs(joint - ref) ** 2, w)


def dcov_literal(xi, eta):
    """Triple-loop transcription of the distance covariance V-statistic."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float).T).T
    eta = np.atleast_2d(np.asarray(eta, dtype=float).T).T
    n = xi.shape[0]
    a = [[math.sqrt(sum((xi[j, d] - xi[k, d]) ** 2 for d in range(xi.shape[1])))
          for k in range(n)] for j in range(n)]
    b = [[math.sqrt(sum((eta[j, d] - eta[k, d]) ** 2 for d in range(eta.shape[1])))
          for k in range(n)] for j in range(n)]
    s1 = sum(a[j][k] * b[j][k] for j in range(n) for k in range(n)) / n ** 2
    s2 = (sum(map(sum, a)) / n ** 2) * (sum(map(sum, b)) / n ** 2)
    s3 = sum(a[j][k] * b[j][l] for j in range(n) for k in range(n) for l in range(n))
    return s1 + s2 - 2.0 * s3 / n ** 3


def norm_ppf_bisection(p):
    """Bisection on Phi; for p > 1/2 the upper tail 1 - p is matched instead."""
    upper = p > 0.5
    target = 1.0 - p if upper else p
    lo, hi = -40.0, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    return -x if upper else x


def all_column_permutations(n, p):
    """Every ``(p, n)`` permutation array with row 0 fixed to the identity."""
    base = np.arange(n)
    for combo in itertools.product(itertools.permutations(range(n)), repeat=p - 1):
        yield np.vstack([base] + [np.array(c) for c in combo])


def ecg_like(n, seed):
    """Synthetic 8-channel recording with a known structure.

    Eight AR(2) sources; the first six share one random volatility process,
    so they are uncorrelated but dependent, while sources 7 and 8 have
    independent non-Gaussian innovations (the "artifacts").  Returns the
    mixed channels and the sources.
    """
    rng = np.random.default_rng(seed)
    burn = 300
    m = n + burn
    vol = np.exp(0.8 * rng.standard_normal(m))
    innov = np.empty((m, 8))
    innov[:, :6] = vol[:, None] * rng.standard_normal((m, 6))
    innov[:, 6] = rng.exponential(size=m) - 1.0
    innov[:, 7] = rng.uniform(-1, 1, m) * np.sqrt(3)
    coefs = np.array([(0.5, -0.3), (0.2, 0.1), (-0.4, 0.2), (0.6, -0.2),
                      (0.1, 0.3), (-0.2, -0.3), (0.3, 0.2), (-0.5, -0.2)])
    S = np.zeros_like(innov)
    for t in range(2, m):
        S[t] = coefs[:, 0] * S[t - 1] + coefs[:, 1] * S[t - 2] + innov[t]
    S = S[burn:]
    A = rng.normal(size=(8, 8))
    return S @ A.T, S
