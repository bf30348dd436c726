"""Permutation and bootstrap calibration of the test statistics.

Replicate ``m`` always draws from its own stream ``(seed, domain, m)``, so a
report depends only on the data, the seed and ``M``, never on the number of
worker threads or their scheduling.
"""

import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import __version__, _rng
from .errors import ConfigError, DimensionMismatch, IcaFailure, IcmError
from .ica import GFunction, Method, ResidualMatrix, estimate, residuals
from .stats import StatisticSpec, permute_columns

MAX_FAILED_FRACTION = 0.10


class Scheme(str, Enum):
    PERMUTATION = "permutation"
    BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class ResamplingPlan:
    scheme: Scheme = Scheme.PERMUTATION
    M: int = 500
    seed: int = 0
    warp_speed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"number of resamples M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class IcaSpec:
    """How to estimate the unmixing matrix; ``method=None`` means oracle residuals."""

    method: Method = Method.FASTICA
    g: GFunction = GFunction.TANH
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method is not None:
            object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "g", GFunction(self.g))

    @property
    def name(self):
        return "oracle" if self.method is None else self.method.value

    def fit(self, X, seed=0):
        return estimate(X, self.method, g=self.g, seed=seed, **self.options)

    def residuals(self, X, seed=0):
        """``(ResidualMatrix, estimate or None)``."""
        if self.method is None:
            return oracle_residuals(X), None
        est = self.fit(X, seed)
        return residuals(X, est), est


def oracle_residuals(Z):
    """Known sources as residuals: columns centred and scaled to unit sd."""
    Z = np.asarray(Z, dtype=float)
    Zc = Z - Z.mean(axis=0)
    sd = Zc.std(axis=0)
    sd[sd == 0] = 1.0
    return ResidualMatrix(Zc / sd, source="oracle")


# report keys in output order
REPORT_KEYS = (
    "statistic", "name", "family", "weight", "gamma", "score", "p_value", "M", "M_used",
    "failed", "scheme", "ica", "g", "converged", "seed", "n", "p", "alpha", "reject",
    "threads", "elapsed_ms", "version",
)


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    statistic: float
    name: str
    family: str
    weight: str
    gamma: float
    score: str
    p_value: float
    M: int
    M_used: int
    failed: int
    scheme: str
    ica: str
    g: str
    converged: bool
    seed: int
    n: int
    p: int
    alpha: float = None
    reject: bool = None
    threads: int = 1
    elapsed_ms: int = None
    version: str = __version__

    def with_alpha(self, alpha):
        self.alpha = float(alpha)
        self.reject = bool(self.p_value <= alpha)
        return self

    def to_dict(self):
        d = asdict(self)
        return {k: d[k] for k in REPORT_KEYS}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in REPORT_KEYS if k not in d]
        if missing:
            raise ConfigError(f"report is missing keys: {', '.join(missing)}")
        return cls(**{k: d[k] for k in REPORT_KEYS})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _report(stat, value, count, M, M_used, scheme, ica, converged, seed, n, p, threads, t0):
    w = stat.weight
    return TestReport(
        statistic=float(value),
        name=stat.name,
        family=stat.family.value,
        weight=None if w is None else w.kind.value,
        gamma=None if w is None else w.gamma,
        score=stat.score.value,
        p_value=(count + 1) / (M_used + 1),
        M=M,
        M_used=M_used,
        failed=M - M_used,
        scheme=scheme.value,
        ica=ica.name,
        g=ica.g.value if ica.method is Method.FASTICA else None,
        converged=bool(converged),
        seed=seed,
        n=n,
        p=p,
        threads=threads,
        elapsed_ms=int(round((time.perf_counter() - t0) * 1000)) if t0 is not None else None,
    )


def resolve_threads(threads=None):
    """Worker count: explicit value, else ``ICMTEST_THREADS``, else all CPUs."""
    if threads in (None, "auto"):
        env = os.environ.get("ICMTEST_THREADS")
        if env:
            threads = env
        else:
            return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
                       else os.cpu_count() or 1)
    try:
        threads = int(threads)
    except (TypeError, ValueError):
        raise ConfigError(f"thread count must be a positive integer, got {threads!r}") from None
    if threads < 1:
        raise ConfigError(f"thread count must be a positive integer, got {threads}")
    return threads


def _map(fn, items, threads):
    # ordered results whatever the thread count
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def draw_permutations(rng, n, p):
    """``(p, n)`` index array: row 0 the identity, rows 1.. uniform permutations."""
    perms = np.empty((p, n), dtype=np.int64)
    perms[0] = np.arange(n)
    for l in range(1, p):
        perms[l] = rng.permutation(n)
    return perms


def _as_residuals(Z):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise DimensionMismatch(f"expected an n x p residual matrix, got shape {Z.shape}")
    return Z


def permute_residuals(Z, rng):
    """Permute columns ``2..p`` of ``Z`` independently; column 1 stays in place."""
    Z = _as_residuals(Z)
    perms = draw_permutations(rng, *Z.shape)
    return ResidualMatrix(permute_columns(Z, perms), source="permuted")


def permutation_replicates(S, stat, seed, replicates, threads=1):
    """Statistic values of the permuted copies of a prepared matrix ``S``."""
    n, p = S.shape
    evaluate = stat.permutation_evaluator(S)

    def one(m):
        return evaluate(draw_permutations(_rng.stream(seed, _rng.PERMUTATION, m), n, p))

    identity = np.tile(np.arange(n), (p, 1))
    return evaluate(identity), np.array(_map(one, replicates, threads))


def permutation_pvalue(Z, stat, plan, threads=1, ica=None, converged=True, timing=False):
    """Columnwise permutation p-value of ``stat`` on residuals ``Z``.

    Permuting the prepared matrix (scored ranks for rank statistics) is the
    same as preparing the permuted residuals, so ranks are computed once.
    """
    t0 = time.perf_counter() if timing else None
    if plan.scheme is not Scheme.PERMUTATION:
        raise ConfigError("permutation_pvalue needs a permutation plan")
    Z = _as_residuals(Z)
    n, p = Z.shape
    if n < 2 or p < 2:
        raise DimensionMismatch(f"permutation test needs n >= 2 and p >= 2, got {Z.shape}")
    S = stat.prepare(Z)
    T, Tm = permutation_replicates(S, stat, plan.seed, range(1, plan.M + 1), threads)
    count = int(np.sum(Tm >= T))
    ica = ica or IcaSpec(method=None)
    return _report(stat, T, count, plan.M, plan.M, plan.scheme, ica, converged, plan.seed,
                   n, p, threads, t0)


def bootstrap_sample(Z, rng):
    """Each column resampled with replacement from itself, independently."""
    n, p = Z.shape
    idx = rng.integers(0, n, size=(n, p))
    return np.take_along_axis(Z, idx, axis=0)


def _bootstrap_one(Z, mixing, ica, stat, seed, m):
    # one replicate of the bootstrap algorithm; None if ICA fails
    Zm = bootstrap_sample(Z, _rng.stream(seed, _rng.BOOTSTRAP, m))
    Xm = Zm @ mixing.T
    if ica.method is None:
        return stat.evaluate(stat.prepare(oracle_residuals(Zm).values))
    try:
        est = ica.fit(Xm, seed=seed + m)
    except (IcmError, np.linalg.LinAlgError):
        return None
    if not est.converged:
        return None
    return stat.evaluate(stat.prepare(residuals(Xm, est).values))


def bootstrap_pvalue(X, ica, stat, plan, threads=1, timing=False):
    """Bootstrap p-value with the unmixing matrix re-estimated per resample.

    Replicates whose ICA fails are dropped and counted in ``failed``; if more
    than 10% fail, IcaFailure is raised carrying the first failed index.
    """
    t0 = time.perf_counter() if timing else None
    if plan.scheme is not Scheme.BOOTSTRAP:
        raise ConfigError("bootstrap_pvalue needs a bootstrap plan")
    X = np.asarray(X, dtype=float)
    Zr, est = ica.residuals(X, seed=plan.seed)
    Z = Zr.values
    n, p = Z.shape
    T = stat.evaluate(stat.prepare(Z))
    mixing = np.eye(p) if est is None else est.mixing
    values = _map(lambda m: _bootstrap_one(Z, mixing, ica, stat, plan.seed, m),
                  range(1, plan.M + 1), threads)
    failed = [m for m, v in enumerate(values, start=1) if v is None]
    if len(failed) > MAX_FAILED_FRACTION * plan.M:
        raise IcaFailure(
            f"ICA failed on {len(failed)} of {plan.M} bootstrap samples", replicate=failed[0]
        )
    if failed:
        warnings.warn(f"ICA failed on {len(failed)} bootstrap samples; they are excluded",
                      RuntimeWarning, stacklevel=2)
    Tm = np.array([v for v in values if v is not None])
    count = int(np.sum(Tm >= T))
    converged = True if est is None else est.converged
    return _report(stat, T, count, plan.M, len(Tm), plan.scheme, ica, converged, plan.seed,
                   n, p, threads, t0)


def run_test(X, ica, stat, plan, alpha=0.05, threads=1, timing=False):
    """Full test on a data matrix: ICA, residuals, statistic, calibration."""
    if plan.scheme is Scheme.BOOTSTRAP:
        report = bootstrap_pvalue(X, ica, stat, plan, threads=threads, timing=timing)
    else:
        t0 = time.perf_counter()
        Z, est = ica.residuals(X, seed=plan.seed)
        converged = True if est is None else est.converged
        report = permutation_pvalue(Z.values, stat, plan, threads=threads, ica=ica,
                                    converged=converged, timing=timing)
        if timing:
            report.elapsed_ms = int(round((time.perf_counter() - t0) * 1000))
    return report.with_alpha(alpha)


@dataclass(frozen=True)
class WarpSpeedResult:
    rejection_rate: float
    replications: int
    statistics: np.ndarray
    pool: np.ndarray
    threshold: float
    alpha: float


def warp_speed_study(generator, ica, stat, scheme, replications, alpha=0.05, seed=0,
                     threads=1):
    """Size or power from one resample per replication.

    ``generator(r)`` returns the data matrix of replication ``r``.  The
    resampled values of all replications form one reference pool; a
    replication rejects when its statistic exceeds the ``1 - alpha`` empirical
    quantile (inverted-cdf rule) of the pool.
    """
    scheme = Scheme(scheme)
    if replications < 100:
        raise ConfigError(f"warp-speed study needs at least 100 replications, got {replications}")

    def one(r):
        X = np.asarray(generator(r), dtype=float)
        Zr, est = ica.residuals(X, seed=seed + r)
        Z = Zr.values
        S = stat.prepare(Z)
        if scheme is Scheme.PERMUTATION:
            T, Tm = permutation_replicates(S, stat, seed, [r])
            return T, Tm[0]
        T = stat.evaluate(S)
        mixing = np.eye(Z.shape[1]) if est is None else est.mixing
        for attempt in range(10):
            # a failed ICA draw is replaced by the next stream of this replication
            v = _bootstrap_one(Z, mixing, ica, stat, seed, r * 16 + attempt)
            if v is not None:
                return T, v
        raise IcaFailure(f"ICA failed repeatedly in replication {r}", replicate=r)

    pairs = _map(one, range(replications), threads)
    T = np.array([a for a, _ in pairs])
    pool = np.array([b for _, b in pairs])
    q = float(np.quantile(pool, 1.0 - alpha, method="inverted_cdf"))
    return WarpSpeedResult(float(np.mean(T > q)), replications, T, pool, q, alpha)
