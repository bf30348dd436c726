"""Monte Carlo size and power studies over the simulation settings."""

import csv
import io
import time
from dataclasses import dataclass

from . import _rng
from .datagen import SettingKind, SettingSpec
from .errors import ConfigError, IcaFailure
from .resampling import ResamplingPlan, Scheme, run_test, warp_speed_study

CSV_COLUMNS = (
    "setting", "parameter", "n", "statistic", "ica", "scheme", "warp_speed", "alpha",
    "M", "replications", "failed", "rejections", "rate", "mean_runtime_ms",
)


@dataclass(frozen=True)
class StudyRow:
    setting: str
    parameter: float
    n: int
    statistic: str
    ica: str
    scheme: str
    warp_speed: bool
    alpha: float
    M: int
    replications: int
    failed: int
    rejections: int
    rate: float
    mean_runtime_ms: float = None

    def as_list(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


def replication_seed(seed, r):
    return _rng.derived_seed(seed, _rng.REPLICATION, r)


def run_cell(setting, ica, stat, scheme, replications, M=500, alpha=0.05, seed=0,
             warp_speed=False, threads=1, timing=False):
    """Rejection rate for one (setting, n, statistic, ica, scheme) cell.

    A replication whose bootstrap aborts (IcaFailure) is counted in ``failed``
    and excluded from the rate.
    """
    scheme = Scheme(scheme)
    if replications < 1:
        raise ConfigError(f"replications must be >= 1, got {replications}")
    t0 = time.perf_counter()
    if warp_speed:
        res = warp_speed_study(
            lambda r: setting.sample(seed=replication_seed(seed, r)),
            ica, stat, scheme, replications, alpha=alpha, seed=seed, threads=threads,
        )
        rejections = int(round(res.rejection_rate * replications))
        failed = 0
        M_used = 1
    else:
        rejections = failed = 0
        for r in range(replications):
            rs = replication_seed(seed, r)
            plan = ResamplingPlan(scheme, M, rs)
            try:
                report = run_test(setting.sample(seed=rs), ica, stat, plan, alpha,
                                  threads=threads)
            except IcaFailure:
                # too many bootstrap fits failed; the replication is left out of the rate
                failed += 1
                continue
            rejections += bool(report.reject)
        M_used = M
    used = replications - failed
    runtime = (time.perf_counter() - t0) * 1000 / replications if timing else None
    return StudyRow(
        setting=setting.kind.value,
        parameter=setting.parameter,
        n=setting.n,
        statistic=stat.name,
        ica=ica.name,
        scheme=scheme.value,
        warp_speed=bool(warp_speed),
        alpha=alpha,
        M=M_used,
        replications=replications,
        failed=failed,
        rejections=rejections,
        rate=rejections / used if used else None,
        mean_runtime_ms=None if runtime is None else round(runtime, 3),
    )


def run_study(kind, grid, sizes, stats, icas, schemes, replications, M=500, alpha=0.05,
              seed=0, warp_speed=False, threads=1, timing=False):
    """All cells of the grid; ``grid`` lists df (spherical t) or omega (Clayton) values."""
    kind = SettingKind(kind)
    if replications < 1:
        raise ConfigError(f"replications must be >= 1, got {replications}")
    if kind is SettingKind.INDEP_MIX:
        if grid:
            raise ConfigError("the independent-sources setting takes no parameter grid")
        grid = [None]
    elif not grid:
        raise ConfigError(f"setting {kind.value} needs a parameter grid")
    rows = []
    for value in grid:
        for n in sizes:
            if kind is SettingKind.SPHERICAL_T:
                setting = SettingSpec(kind, n, df=value)
            elif kind is SettingKind.CLAYTON:
                setting = SettingSpec(kind, n, omega=value)
            else:
                setting = SettingSpec(kind, n)
            for stat in stats:
                for ica in icas:
                    for scheme in schemes:
                        rows.append(run_cell(setting, ica, stat, scheme, replications, M,
                                             alpha, seed, warp_speed, threads, timing))
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_cell(v) for v in row.as_list()])
    return buf.getvalue()
