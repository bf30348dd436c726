"""Command line interface: ``icmtest test|simulate|pipeline``.

Exit codes: 0 success, 1 error, 2 null rejected at ``--alpha`` (only with
``--gate``).  Reports are written once, after all computation.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .datagen import SettingKind, ar_prewhiten
from .errors import ConfigError, IcmError
from .ica import GFunction, Method, residuals
from .io import read_csv
from .resampling import IcaSpec, ResamplingPlan, Scheme, resolve_threads, run_test
from .simulation import rows_to_csv, run_study
from .stats import STATISTIC_NAMES, StatisticSpec

_SCHEMES = {"perm": Scheme.PERMUTATION, "permutation": Scheme.PERMUTATION,
            "boot": Scheme.BOOTSTRAP, "bootstrap": Scheme.BOOTSTRAP}
_SETTINGS = {"1": SettingKind.INDEP_MIX, "indep": SettingKind.INDEP_MIX,
             "2": SettingKind.SPHERICAL_T, "spherical-t": SettingKind.SPHERICAL_T,
             "3": SettingKind.CLAYTON, "clayton": SettingKind.CLAYTON}
_ICAS = ("fobi", "jade", "fastica", "oracle")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str = None
    ica: IcaSpec = IcaSpec()
    statistic: StatisticSpec = StatisticSpec()
    plan: ResamplingPlan = ResamplingPlan()
    alpha: float = 0.05
    output_path: str = None
    threads: int = 1
    gate: bool = False
    timing: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _ica_spec(name, g):
    if name not in _ICAS:
        raise ConfigError(f"unknown ICA method {name!r}; choose from {', '.join(_ICAS)}")
    return IcaSpec(method=None if name == "oracle" else Method(name), g=GFunction(g))


def _scheme(name):
    try:
        return _SCHEMES[name]
    except KeyError:
        raise ConfigError(f"unknown scheme {name!r}; use perm or boot") from None


def _alpha(value):
    if not 0 < value < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {value}")
    return value


def _list(text, convert, what):
    try:
        return [convert(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"could not parse {what} list {text!r}") from None


def _common(p, ica_default, stat_default, scheme_default):
    p.add_argument("--ica", default=ica_default, help="fobi, jade, fastica or oracle")
    p.add_argument("--g", default="tanh", choices=[g.value for g in GFunction],
                   help="FastICA nonlinearity")
    p.add_argument("--stat", default=stat_default, help="|".join(STATISTIC_NAMES))
    p.add_argument("--gamma", type=float, default=1.0, help="weight kernel parameter")
    p.add_argument("--scheme", default=scheme_default, help="perm or boot")
    p.add_argument("--M", type=int, default=500, help="number of resamples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    p.add_argument("--threads", default=None, help="worker threads or 'auto'")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (output is then not reproducible)")


def build_parser():
    parser = _Parser(prog="icmtest", description="Tests of the independent component model.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test one data set")
    t.add_argument("input", help="CSV file, rows are observations")
    _common(t, "fastica", "rank-gauss", "perm")
    t.add_argument("--gate", action="store_true", help="exit with status 2 on rejection")

    s = sub.add_parser("simulate", help="size/power study")
    s.add_argument("--setting", default="1", help="1|indep, 2|spherical-t, 3|clayton")
    s.add_argument("--grid", default="", help="comma list of df (setting 2) or omega (setting 3)")
    s.add_argument("--n", default="1000", help="comma list of sample sizes")
    s.add_argument("--replications", "-R", type=int, default=200)
    s.add_argument("--warp-speed", action="store_true",
                   help="one resample per replication, pooled (experimental)")
    _common(s, "fastica", "rank-gauss", "perm")

    q = sub.add_parser("pipeline", help="ICA, AR prewhitening, then the test")
    q.add_argument("input", help="CSV file of a multivariate series")
    q.add_argument("--max-order", type=int, default=20, help="largest AR order tried")
    q.add_argument("--columns", default=None,
                   help="1-based comma list of components to re-test as a subvector")
    _common(q, "jade", "rank-gauss", "boot")
    q.add_argument("--gate", action="store_true", help="exit with status 2 on rejection")
    return parser


def config_from_args(args):
    threads = resolve_threads(args.threads)
    stat_names = _list(args.stat, str, "statistic")
    ica_names = _list(args.ica, str, "ICA")
    schemes = _list(args.scheme, _scheme, "scheme")
    if args.command != "simulate" and (len(stat_names), len(ica_names), len(schemes)) != (1, 1, 1):
        raise ConfigError("test and pipeline take a single statistic, ICA method and scheme")
    icas = [_ica_spec(name, args.g) for name in ica_names]
    stats = [StatisticSpec.from_name(name, args.gamma) for name in stat_names]
    plan = ResamplingPlan(schemes[0], args.M, args.seed)
    config = RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None),
        ica=icas[0],
        statistic=stats[0],
        plan=plan,
        alpha=_alpha(args.alpha),
        output_path=args.output,
        threads=threads,
        gate=getattr(args, "gate", False),
        timing=args.timing,
    )
    return config, icas, stats, schemes


def _load(path, min_cols=2):
    X, _ = read_csv(path)
    if X.shape[1] < min_cols:
        raise ConfigError(f"input needs at least {min_cols} columns, got {X.shape[1]}")
    return X


def cmd_test(config):
    X = _load(config.input_path)
    report = run_test(X, config.ica, config.statistic, config.plan, config.alpha,
                      threads=config.threads, timing=config.timing)
    return report.to_json() + "\n", report.reject


def _parse_columns(text, p):
    cols = _list(text, int, "column")
    if len(cols) < 2:
        raise ConfigError("--columns needs at least two components")
    if len(set(cols)) != len(cols):
        raise ConfigError("--columns lists a component twice")
    bad = [c for c in cols if not 1 <= c <= p]
    if bad:
        raise ConfigError(f"--columns out of range 1..{p}: {', '.join(map(str, bad))}")
    return [c - 1 for c in cols]


def cmd_pipeline(config, max_order=20, columns=None):
    """Staged report: ICA components, AR orders, test of the residual vectors."""
    t0 = time.perf_counter()
    X = _load(config.input_path)
    n, p = X.shape
    subset = _parse_columns(columns, p) if columns is not None else None
    if config.ica.method is None:
        raise ConfigError("the pipeline needs an ICA method to estimate the components")
    est = config.ica.fit(X, seed=config.plan.seed)
    S = residuals(X, est).values
    orders, series = [], []
    for l in range(p):
        e, k = ar_prewhiten(S[:, l], max_order)
        orders.append(k)
        series.append(e)
    E = np.column_stack(series)
    stages = {
        "ica": {"method": config.ica.name, "converged": bool(est.converged),
                "iterations": int(est.iterations), "n": n, "p": p},
        "prewhiten": {"max_order": max_order, "orders": orders, "n_residual": int(E.shape[0])},
    }
    full = run_test(E, config.ica, config.statistic, config.plan, config.alpha,
                    threads=config.threads, timing=config.timing)
    stages["test"] = full.to_dict()
    reject = full.reject
    if subset is not None:
        sub = run_test(E[:, subset], config.ica, config.statistic, config.plan, config.alpha,
                       threads=config.threads, timing=config.timing)
        stages["subset_test"] = dict(columns=[c + 1 for c in subset], **sub.to_dict())
        reject = sub.reject
    out = {
        "stages": stages,
        "elapsed_ms": int(round((time.perf_counter() - t0) * 1000)) if config.timing else None,
        "version": __version__,
    }
    return json.dumps(out, indent=2) + "\n", reject


def cmd_simulate(config, args, icas, stats, schemes):
    kind = _SETTINGS.get(args.setting)
    if kind is None:
        raise ConfigError(f"unknown setting {args.setting!r}")
    if args.replications < 1:
        raise ConfigError(f"replications must be >= 1, got {args.replications}")
    grid = _list(args.grid, float, "grid")
    sizes = _list(args.n, int, "sample size")
    if not sizes or min(sizes) < 4:
        raise ConfigError("sample sizes must be at least 4")
    rows = run_study(kind, grid, sizes, stats, icas, schemes, args.replications,
                     M=config.plan.M, alpha=config.alpha, seed=config.plan.seed,
                     warp_speed=args.warp_speed, threads=config.threads, timing=config.timing)
    return rows_to_csv(rows), False


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config, icas, stats, schemes = config_from_args(args)
        if config.command == "test":
            text, reject = cmd_test(config)
        elif config.command == "pipeline":
            text, reject = cmd_pipeline(config, args.max_order, args.columns)
        else:
            text, reject = cmd_simulate(config, args, icas, stats, schemes)
        _write(text, config.output_path)
    except (IcmError, OSError) as exc:
        print(f"icmtest: error: {exc}", file=sys.stderr)
        return 1
    if config.gate and reject:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
