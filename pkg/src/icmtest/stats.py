"""Characteristic-function test statistics and distance covariance.

The CF statistic is the weighted L2 distance ``n * int |D_n(t)|^2 W(t) dt``
between the joint empirical CF of the residuals and the product of their
marginal empirical CFs.  With a product weight whose one-dimensional factors
have CF ``C``, it reduces to sums over pairwise differences::

    T = (1/n) sum_{j,k} prod_l C(z_jl - z_kl)
        + n prod_l (S_l / n^2)
        - 2 sum_j prod_l (r_lj / n)

where ``r_lj = sum_k C(z_jl - z_kl)`` and ``S_l = sum_j r_lj``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from ._pairwise import distance_sums, kernel_sums, product_kernel_sum
from .errors import ConfigError, DimensionMismatch, NonGaussianWeight


class Kernel(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"


class Score(str, Enum):
    RAW = "raw"
    IDENTITY = "identity"
    VDW = "vdw"


class Family(str, Enum):
    CF = "cf"
    CF_RANK = "cf-rank"
    VDW_REFERENCE = "vdw-reference"
    DIST_COV = "dcov"


@dataclass(frozen=True)
class WeightKernel:
    """CF ``C`` of a symmetric one-dimensional weight density.

    Gaussian: ``C(t) = exp(-gamma t^2)``; Laplace: ``C(t) = 1 / (1 + gamma t^2)``.
    """

    kind: Kernel = Kernel.GAUSSIAN
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kernel(self.kind))
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"kernel parameter gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))

    def __call__(self, t):
        return kernel_eval(self, t)


@dataclass(frozen=True)
class StatisticValue:
    value: float
    family: Family
    weight: WeightKernel = None
    score: Score = Score.RAW

    def __float__(self):
        return self.value


def kernel_eval(w, t):
    t = np.asarray(t, dtype=float)
    if w.kind is Kernel.GAUSSIAN:
        out = np.exp(-w.gamma * t * t)
    else:
        out = 1.0 / (1.0 + w.gamma * t * t)
    return out if out.ndim else float(out)


def _matrix(Z):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise DimensionMismatch(f"expected an n x p matrix, got shape {Z.shape}")
    return Z


def column_ranks(Z):
    """Ranks ``1..n`` within each column; ties broken by row order."""
    Z = _matrix(Z)
    n, p = Z.shape
    order = np.argsort(Z, axis=0, kind="stable")
    R = np.empty((n, p), dtype=np.int64)
    np.put_along_axis(R, order, np.arange(1, n + 1)[:, None].repeat(p, axis=1), axis=0)
    return R


# Acklam's rational approximation to the standard normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _ppf_lower(p):
    # lower half 0 < p <= 0.5
    x = np.empty_like(p)
    tail = p < _P_LOW
    q = np.sqrt(-2.0 * np.log(p[tail]))
    x[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p[~tail] - 0.5
    r = q * q
    x[~tail] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # one Newton step on Phi(x) = p
    x -= (ndtr(x) - p) * np.sqrt(2.0 * np.pi) * np.exp(0.5 * x * x)
    return x


def norm_ppf(p):
    """Standard normal quantile, accurate to about 1e-15 on (0, 1)."""
    p = np.asarray(p, dtype=float)
    flat = np.atleast_1d(p).ravel()
    if np.any((flat <= 0) | (flat >= 1)):
        raise ValueError("norm_ppf needs probabilities strictly inside (0, 1)")
    upper = flat > 0.5
    out = np.empty_like(flat)
    out[~upper] = _ppf_lower(flat[~upper])
    out[upper] = -_ppf_lower(1.0 - flat[upper])
    out = out.reshape(p.shape)
    return out if out.ndim else float(out)


def apply_scores(R, score, n=None):
    """Scored ranks ``J(R / (n + 1))`` for the identity or normal score."""
    from .ica import ResidualMatrix

    score = Score(score)
    R = np.asarray(R)
    if n is None:
        n = R.shape[0]
    u = R / (n + 1.0)
    if score is Score.IDENTITY:
        values = u
    elif score is Score.VDW:
        values = norm_ppf(u)
    else:
        raise ConfigError("raw score has no rank transformation")
    return ResidualMatrix(values, source="scored-ranks")


def _cf_value(S, w):
    n, p = S.shape
    total, rowsums = kernel_sums(S, w.kind.value, w.gamma)
    return _cf_from_sums(n, total, rowsums)


def _cf_from_sums(n, total, rowsums):
    term1 = total / n
    term2 = n * np.prod(rowsums.sum(axis=1) / (n * n))
    term3 = 2.0 * np.sum(np.prod(rowsums / n, axis=0))
    return max(term1 + term2 - term3, 0.0)


def t_statistic(Z, w=WeightKernel()):
    """CF statistic on raw residuals."""
    S = _matrix(Z)
    return StatisticValue(_cf_value(S, w), Family.CF, w, Score.RAW)


def t_statistic_rank(Z, score=Score.IDENTITY, w=WeightKernel()):
    """CF statistic on componentwise scored ranks of the residuals."""
    score = Score(score)
    if score is Score.RAW:
        raise ConfigError("rank statistic needs the identity or van der Waerden score")
    S = apply_scores(column_ranks(Z), score).values
    return StatisticValue(_cf_value(S, w), Family.CF_RANK, w, score)


def _vdw_reference_value(S, w):
    # n * int |phi_J(t) - exp(-|t|^2 / 2)|^2 W(t) dt, W = product of N(0, 2 gamma) densities
    n, p = S.shape
    g = w.gamma
    total = product_kernel_sum(S, "gaussian", g)
    cross = np.sum(np.prod(np.exp(-g * S * S / (2 * g + 1)), axis=1)) * (2 * g + 1) ** (-p / 2)
    ref = n * (1 + 4 * g) ** (-p / 2)
    return max(total / n - 2.0 * cross + ref, 0.0)


def t_statistic_vdw_reference(Z, w=WeightKernel()):
    """Normal-score statistic contrasted with the standard normal CF.

    Measures the distance between the joint CF of the van der Waerden scored
    ranks and ``exp(-|t|^2 / 2)``.  Only the Gaussian weight has a closed form.
    """
    if w.kind is not Kernel.GAUSSIAN:
        raise NonGaussianWeight("the reference-contrast statistic needs a Gaussian weight")
    S = apply_scores(column_ranks(Z), Score.VDW).values
    return StatisticValue(_vdw_reference_value(S, w), Family.VDW_REFERENCE, w, Score.VDW)


def dcov_pair(xi, eta):
    """Squared empirical distance covariance of two samples (V-statistic)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi = xi[:, None] if xi.ndim == 1 else xi
    eta = eta[:, None] if eta.ndim == 1 else eta
    if xi.shape[0] != eta.shape[0]:
        raise DimensionMismatch(f"sample sizes differ: {xi.shape[0]} vs {eta.shape[0]}")
    n = xi.shape[0]
    cross, ra, rb = distance_sums(xi, eta)
    value = cross / n ** 2 + (ra.sum() / n ** 2) * (rb.sum() / n ** 2) - 2.0 * np.dot(ra, rb) / n ** 3
    return max(float(value), 0.0)


def _dc_value(S):
    n, p = S.shape
    if n < 2:
        return 0.0
    total = 0.0
    for l in range(p - 1):
        rest = np.delete(S, l, axis=1)
        total += dcov_pair(S[:, l], rest)
    return n * total


def dc_statistic(Z, score=Score.RAW):
    """Sum over components ``l < p`` of ``n * dcov(Z_l, Z_{-l})``."""
    score = Score(score)
    S = _matrix(Z)
    if S.shape[1] < 2:
        raise DimensionMismatch("distance covariance statistic needs p >= 2")
    if score is not Score.RAW:
        S = apply_scores(column_ranks(S), score).values
    return StatisticValue(_dc_value(S), Family.DIST_COV, None, score)


_NAMES = {
    "gauss": (Family.CF, Kernel.GAUSSIAN, Score.RAW),
    "laplace": (Family.CF, Kernel.LAPLACE, Score.RAW),
    "rank-gauss": (Family.CF_RANK, Kernel.GAUSSIAN, Score.IDENTITY),
    "rank-laplace": (Family.CF_RANK, Kernel.LAPLACE, Score.IDENTITY),
    "vdw-gauss": (Family.CF_RANK, Kernel.GAUSSIAN, Score.VDW),
    "vdw-ref": (Family.VDW_REFERENCE, Kernel.GAUSSIAN, Score.VDW),
    "dcov": (Family.DIST_COV, None, Score.RAW),
}

STATISTIC_NAMES = tuple(_NAMES)


def permute_columns(S, perms):
    """Column ``l`` of the result is ``S[perms[l], l]``."""
    return np.take_along_axis(S, np.asarray(perms).T, axis=0)


@dataclass(frozen=True)
class StatisticSpec:
    """A statistic family together with its weight and score.

    ``prepare`` maps residuals to the matrix the statistic actually reads
    (the residuals themselves or their scored ranks); ``evaluate`` computes
    the value from that matrix.  Both commute with independent column
    permutations, which is what the permutation scheme relies on.
    """

    family: Family = Family.CF_RANK
    weight: WeightKernel = WeightKernel()
    score: Score = Score.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "score", Score(self.score))
        fam, score, w = self.family, self.score, self.weight
        if fam is Family.CF and score is not Score.RAW:
            raise ConfigError("raw CF statistic takes the raw score")
        if fam is Family.CF_RANK and score is Score.RAW:
            raise ConfigError("rank CF statistic needs the identity or van der Waerden score")
        if fam in (Family.CF, Family.CF_RANK, Family.VDW_REFERENCE) and w is None:
            raise ConfigError(f"{fam.value} statistic needs a weight kernel")
        if fam is Family.VDW_REFERENCE:
            if w.kind is not Kernel.GAUSSIAN:
                raise NonGaussianWeight("vdw-ref statistic needs a Gaussian weight")
            if score is not Score.VDW:
                raise ConfigError("vdw-ref statistic uses the van der Waerden score")
        if fam is Family.DIST_COV and w is not None:
            raise ConfigError("distance covariance has no weight kernel")

    @classmethod
    def from_name(cls, name, gamma=1.0):
        try:
            family, kind, score = _NAMES[name]
        except KeyError:
            raise ConfigError(
                f"unknown statistic {name!r}; choose from {', '.join(_NAMES)}"
            ) from None
        weight = None if kind is None else WeightKernel(kind, gamma)
        return cls(family, weight, score)

    @property
    def name(self):
        for key, (family, kind, score) in _NAMES.items():
            wkind = None if self.weight is None else self.weight.kind
            if (family, kind, score) == (self.family, wkind, self.score):
                return key
        return f"{self.family.value}-{self.score.value}"

    def prepare(self, Z):
        S = _matrix(Z)
        if self.score is Score.RAW:
            return S
        return apply_scores(column_ranks(S), self.score).values

    def evaluate(self, S):
        if self.family in (Family.CF, Family.CF_RANK):
            return _cf_value(S, self.weight)
        if self.family is Family.VDW_REFERENCE:
            return _vdw_reference_value(S, self.weight)
        return _dc_value(S)

    def __call__(self, Z):
        return StatisticValue(self.evaluate(self.prepare(Z)), self.family, self.weight, self.score)

    def permutation_evaluator(self, S):
        """Callable ``perms -> value`` on column-permuted copies of ``S``.

        For the CF families the per-column kernel row sums of a permuted matrix
        are permutations of the original row sums, so only the product term is
        recomputed.
        """
        S = np.asarray(S, dtype=float)
        if self.family not in (Family.CF, Family.CF_RANK):
            return lambda perms: self.evaluate(permute_columns(S, perms))
        w = self.weight
        n = S.shape[0]
        _, rowsums = kernel_sums(S, w.kind.value, w.gamma)

        def evaluate(perms):
            total = product_kernel_sum(permute_columns(S, perms), w.kind.value, w.gamma)
            permuted = np.take_along_axis(rowsums, np.asarray(perms), axis=1)
            return _cf_from_sums(n, total, permuted)

        return evaluate
