"""Seeded samplers for the three simulation settings, mixing, AR prewhitening."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _rng
from .errors import ConfigError, DimensionMismatch, NearSingularDesign, SingularMixing

# population mean and sd of the Setting-1 sources
SETTING1_MEAN = np.array([0.5, 1.0, 3.0])
SETTING1_SD = np.array([1 / np.sqrt(12.0), 1.0, np.sqrt(6.0)])


class SettingKind(str, Enum):
    INDEP_MIX = "indep"
    SPHERICAL_T = "spherical-t"
    CLAYTON = "clayton"


def _generator(seed):
    return _rng.stream(seed, _rng.DATA)


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ConfigError(f"sample size must be a positive integer, got {n}")
    return int(n)


def sample_setting1(n, seed):
    """Independent Uniform(0,1), Exponential(1) and chi-square(3) columns."""
    n = _check_n(n)
    rng = _generator(seed)
    return np.column_stack([
        rng.uniform(0.0, 1.0, n),
        rng.exponential(1.0, n),
        rng.chisquare(3, n),
    ])


def sample_setting2(n, df, seed):
    """Spherical t: ``G / sqrt(S / df)``, G trivariate standard normal, S ~ chi2(df).

    ``df = inf`` gives G itself.
    """
    n = _check_n(n)
    df = float(df)
    if not df > 0:
        raise ConfigError(f"degrees of freedom must be positive or inf, got {df}")
    rng = _generator(seed)
    G = rng.standard_normal((n, 3))
    if np.isinf(df):
        return G
    S = rng.chisquare(df, n)
    return G / np.sqrt(S / df)[:, None]


def sample_setting3(n, omega, seed):
    """Clayton copula by the Marshall-Olkin frailty construction.

    ``V ~ Gamma(1/omega, 1)``, ``E_i ~ Exp(1)``, ``U_i = (1 + E_i / V)^(-1/omega)``;
    ``omega = 0`` gives independent uniforms.  Kendall's tau is ``omega / (omega + 2)``.
    """
    n = _check_n(n)
    omega = float(omega)
    if not omega >= 0:
        raise ConfigError(f"Clayton parameter must be >= 0, got {omega}")
    rng = _generator(seed)
    if omega == 0:
        return rng.uniform(0.0, 1.0, (n, 3))
    V = rng.gamma(1.0 / omega, 1.0, n)
    E = rng.exponential(1.0, (n, 3))
    # log form avoids overflow in (1 + E/V) for tiny V
    return np.exp(-np.log1p(E / V[:, None]) / omega)


@dataclass(frozen=True)
class SettingSpec:
    kind: SettingKind = SettingKind.INDEP_MIX
    n: int = 1000
    df: float = float("inf")
    omega: float = 0.0
    mixing: np.ndarray = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SettingKind(self.kind))
        _check_n(self.n)
        if not float(self.df) > 0:
            raise ConfigError(f"degrees of freedom must be positive or inf, got {self.df}")
        if not float(self.omega) >= 0:
            raise ConfigError(f"Clayton parameter must be >= 0, got {self.omega}")
        if self.mixing is not None:
            _check_mixing(self.mixing, 3)

    @property
    def parameter(self):
        if self.kind is SettingKind.SPHERICAL_T:
            return float(self.df)
        if self.kind is SettingKind.CLAYTON:
            return float(self.omega)
        return None

    def sample(self, seed=None):
        seed = self.seed if seed is None else seed
        if self.kind is SettingKind.INDEP_MIX:
            Z = sample_setting1(self.n, seed)
        elif self.kind is SettingKind.SPHERICAL_T:
            Z = sample_setting2(self.n, self.df, seed)
        else:
            Z = sample_setting3(self.n, self.omega, seed)
        return Z if self.mixing is None else mix(Z, self.mixing)


def _check_mixing(Omega, p):
    Omega = np.asarray(Omega, dtype=float)
    if Omega.shape != (p, p):
        raise DimensionMismatch(f"mixing matrix must be {p} x {p}, got {Omega.shape}")
    if not np.all(np.isfinite(Omega)):
        raise SingularMixing("mixing matrix has non-finite entries")
    s = np.linalg.svd(Omega, compute_uv=False)
    if s[-1] <= p * np.finfo(float).eps * s[0]:
        raise SingularMixing(f"mixing matrix is singular (condition number {s[0] / max(s[-1], 1e-300):.3e})")
    return Omega


def mix(Z, Omega, mu=None):
    """Rows ``X_j = mu + Omega @ Z_j``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise DimensionMismatch(f"expected an n x p matrix, got shape {Z.shape}")
    p = Z.shape[1]
    Omega = _check_mixing(Omega, p)
    X = Z @ Omega.T
    if mu is not None:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (p,):
            raise DimensionMismatch(f"location must have length {p}, got shape {mu.shape}")
        X = X + mu
    return X


@dataclass(frozen=True)
class ArFit:
    residuals: np.ndarray
    order: int
    coefficients: np.ndarray
    aic: np.ndarray


def ar_fit(series, max_order=20):
    """Conditional least squares AR(k) fits, k = 0..max_order, on a common window.

    Every fit regresses ``x_t`` on an intercept and ``x_{t-1..t-k}`` for
    ``t >= max_order``, so all AIC values ``n_eff log(sigma^2) + 2k`` share
    the same likelihood base.  Residuals have length ``n - max_order``.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D series, got shape {x.shape}")
    n = x.size
    max_order = int(max_order)
    if max_order < 0:
        raise ConfigError(f"max_order must be >= 0, got {max_order}")
    if n <= 10 * max_order or n < 3:
        raise ConfigError(f"series of length {n} is too short for max_order {max_order}")
    if not np.all(np.isfinite(x)):
        raise NearSingularDesign("series has non-finite values")
    scale = np.max(np.abs(x))
    if scale == 0 or np.ptp(x) <= 1e-12 * scale:
        raise NearSingularDesign("series is constant; AR design matrix is singular")
    y = x[max_order:]
    n_eff = y.size
    lags = np.column_stack([x[max_order - i:n - i] for i in range(1, max_order + 1)]) \
        if max_order else np.empty((n_eff, 0))
    design = np.column_stack([np.ones(n_eff), lags])
    aic = np.empty(max_order + 1)
    fits = []
    for k in range(max_order + 1):
        D = design[:, :k + 1]
        beta, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
        if rank < k + 1:
            raise NearSingularDesign(f"AR({k}) design matrix is rank deficient")
        resid = y - D @ beta
        sigma2 = np.mean(resid ** 2)
        if sigma2 <= 0:
            raise NearSingularDesign(f"AR({k}) fit is exact; residual variance is zero")
        aic[k] = n_eff * np.log(sigma2) + 2 * k
        fits.append((resid, beta))
    k = int(np.argmin(aic))
    return ArFit(fits[k][0], k, fits[k][1], aic)


def ar_prewhiten(series, max_order=20):
    """``(residuals, chosen order)`` of the AIC-selected AR fit."""
    fit = ar_fit(series, max_order)
    return fit.residuals, fit.order
