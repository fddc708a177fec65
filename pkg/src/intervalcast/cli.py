"""Command-line interface.

Subcommands: ingest, features, elbow, backtest, compare, synth.
Values come from (highest priority first) command-line flags, the JSON file
given by --config, then built-in defaults. Exit codes: 0 success, 2 config
error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

from .backtest import (
    RunConfig,
    compare_methods,
    run_expanding_window,
    write_comparison_csv,
    write_cp_ws_csv,
    write_outputs,
)
from .clustering import elbow_scan
from .data import (
    DemandSeries,
    aggregate_sites,
    build_features,
    parse_demand_csv,
    read_holiday_file,
    split_by_date,
    us_federal_holidays,
)
from .errors import ConfigError, DataError
from .models import RegressorSpec
from .synthetic import SyntheticSpec, generate_synthetic

MODEL_NAMES = {"ols": "least_squares", "gbt": "boosted_trees"}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 4
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="intervalcast",
        description="Prediction intervals for day-ahead electricity demand "
        "via cluster-based block bootstrapping.",
    )
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse per-site CSVs and aggregate demand")
    p.add_argument("--input", action="append", required=True, help="repeatable")
    p.add_argument("--output", required=True)
    p.add_argument("--fill-gaps", action="store_true")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("features", help="write the supervised feature matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--holidays", help="file with one ISO date per line")
    p.set_defaults(handler=_cmd_features)

    p = sub.add_parser("elbow", help="WSS scan over cluster counts")
    p.add_argument("--input", required=True)
    p.add_argument("--boundary", required=True, help="first test date, ISO")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(handler=_cmd_elbow)

    p = sub.add_parser("backtest", help="expanding-window interval backtest")
    _add_run_options(p)
    p.set_defaults(handler=_cmd_backtest)

    p = sub.add_parser("compare", help="run several methods/models on one split")
    _add_run_options(p, compare=True)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic demand CSV")
    p.add_argument("--output", required=True)
    p.add_argument("--days", type=int, default=455)
    p.add_argument("--start-date", default="2021-01-01")
    p.add_argument("--base-kw", type=float, default=100.0)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--constant-noise", action="store_true",
                   help="homoskedastic noise instead of level-proportional")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_synth)

    return parser


def _add_run_options(p, compare=False):
    p.add_argument("--input", required=True)
    p.add_argument("--boundary", required=True, help="first test date, ISO")
    if compare:
        p.add_argument("--methods", help="comma list, e.g. cbb,blockbb,bagging")
        p.add_argument("--models", help="comma list of ols,gbt")
    else:
        p.add_argument("--method", choices=("cbb", "blockbb", "bagging"))
        p.add_argument("--model", choices=tuple(MODEL_NAMES))
    p.add_argument("--alphas", help="comma list, e.g. 0.15,0.10,0.05,0.01")
    p.add_argument("--replicates", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--block-length", help="divisor of 96, or 'auto'")
    p.add_argument("--recluster-every", type=int)
    p.add_argument("--refit-every", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--holidays", help="file with one ISO date per line")
    p.add_argument("--fill-gaps", action="store_true")
    p.add_argument("--tree-count", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--out", default="out")


def _load_config_file(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    with open(args.config) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _opt(args, file_cfg, name, default):
    """Flag beats config file beats default."""
    value = getattr(args, name, None)
    if value is not None and value is not False:
        return value
    if name in file_cfg:
        return file_cfg[name]
    return default


def _parse_date(text) -> dt.date:
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError as exc:
        raise ConfigError(f"bad date {text!r}") from exc


def _parse_alphas(text) -> tuple:
    try:
        alphas = tuple(float(a) for a in str(text).split(","))
    except ValueError as exc:
        raise ConfigError(f"bad alpha list {text!r}") from exc
    return alphas


def _model_spec(args, file_cfg, name) -> RegressorSpec:
    if name not in MODEL_NAMES:
        raise ConfigError(f"unknown model {name!r} (expected ols or gbt)")
    kind = MODEL_NAMES[name]
    if kind == "least_squares":
        return RegressorSpec(kind)
    return RegressorSpec(
        kind,
        tree_count=int(_opt(args, file_cfg, "tree_count", 100)),
        max_depth=int(_opt(args, file_cfg, "max_depth", 3)),
        learning_rate=float(_opt(args, file_cfg, "learning_rate", 0.1)),
    )


def _load_series(args, file_cfg) -> DemandSeries:
    fill = bool(_opt(args, file_cfg, "fill_gaps", False))
    return parse_demand_csv(args.input, fill_gaps=fill)


def _resolve_holidays(args, file_cfg):
    path = _opt(args, file_cfg, "holidays", None)
    if path:
        return frozenset(read_holiday_file(path))
    return None


def write_series_csv(series: DemandSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write("timestamp,demand_kw,temperature_f\n")
        for ts, d, t in zip(series.timestamps, series.demand, series.temperature):
            fh.write(f"{ts.isoformat()},{float(d)!r},{float(t)!r}\n")


# ---------------------------------------------------------------------------
# Handlers

def _cmd_ingest(args):
    file_cfg = _load_config_file(args)
    fill = bool(_opt(args, file_cfg, "fill_gaps", False))
    series_list = [parse_demand_csv(p, fill_gaps=fill) for p in args.input]
    combined = aggregate_sites(series_list)
    write_series_csv(combined, args.output)
    print(
        f"ingested {len(series_list)} file(s): {combined.n_days} days, "
        f"{combined.site_count} site(s) -> {args.output}"
    )


def _cmd_features(args):
    file_cfg = _load_config_file(args)
    series = _load_series(args, file_cfg)
    holidays = _resolve_holidays(args, file_cfg)
    if holidays is None:
        holidays = us_federal_holidays(
            range(series.date_of_day(1).year, series.date_of_day(series.n_days).year + 1)
        )
    rows = build_features(series, set(holidays))
    with open(args.output, "w") as fh:
        fh.write("day,interval," + ",".join(rows.feature_names) + ",target\n")
        for k in range(len(rows.y)):
            feats = ",".join(repr(float(v)) for v in rows.X[k])
            fh.write(f"{rows.day_index[k]},{rows.interval[k]},{feats},{float(rows.y[k])!r}\n")
    print(f"wrote {len(rows.y)} feature rows -> {args.output}")


def _cmd_elbow(args):
    file_cfg = _load_config_file(args)
    series = _load_series(args, file_cfg)
    boundary = _parse_date(args.boundary)
    split = split_by_date(series, boundary)
    vectors = [series.day_vector(j) for j in split.train_days]
    seed = int(_opt(args, file_cfg, "seed", 0))
    if args.k_min < 1 or args.k_max < args.k_min:
        raise ConfigError("need 1 <= k-min <= k-max")
    scan = elbow_scan(vectors, range(args.k_min, args.k_max + 1), seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "elbow.csv", "w") as fh:
        fh.write("k,wss\n")
        for k, value in scan:
            fh.write(f"{k},{float(value)!r}\n")
    print(f"wrote elbow scan for k={args.k_min}..{args.k_max} -> {out / 'elbow.csv'}")


def _run_config_from_args(args, file_cfg, method, model_name) -> RunConfig:
    return RunConfig(
        boundary=_parse_date(args.boundary),
        method=method,
        model=_model_spec(args, file_cfg, model_name),
        alphas=_parse_alphas(_opt(args, file_cfg, "alphas", "0.15,0.10,0.05,0.01")),
        n_replicates=int(_opt(args, file_cfg, "replicates", 1000)),
        n_clusters=int(_opt(args, file_cfg, "clusters", 4)),
        block_length=_opt(args, file_cfg, "block_length", 6),
        recluster_every=int(_opt(args, file_cfg, "recluster_every", 7)),
        refit_every=int(_opt(args, file_cfg, "refit_every", 1)),
        seed=int(_opt(args, file_cfg, "seed", 0)),
        holidays=_resolve_holidays(args, file_cfg),
        data_path=args.input,
        out_dir=args.out,
    )


def _cmd_backtest(args):
    file_cfg = _load_config_file(args)
    method = _opt(args, file_cfg, "method", "cbb")
    model_name = _opt(args, file_cfg, "model", "ols")
    cfg = _run_config_from_args(args, file_cfg, method, model_name)
    series = _load_series(args, file_cfg)
    result = run_expanding_window(cfg, series)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_outputs(result, args.out)
    for a in sorted(result.reports, reverse=True):
        rep = result.reports[a]
        pct = int(round((1 - a) * 100))
        print(f"{method}/{model_name} {pct}%: WS={rep.ws:.4f} CP={rep.cp:.4f}")
    print(f"train+interval seconds: {result.train_seconds:.2f}; outputs in {args.out}/")


def _cmd_compare(args):
    file_cfg = _load_config_file(args)
    methods = str(_opt(args, file_cfg, "methods", "cbb,blockbb")).split(",")
    models = str(_opt(args, file_cfg, "models", "ols")).split(",")
    configs = [
        _run_config_from_args(args, file_cfg, method.strip(), model.strip())
        for method in methods
        for model in models
    ]
    series = _load_series(args, file_cfg)
    _, rows = compare_methods(configs, series)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(rows, out / "comparison.csv")
    write_cp_ws_csv(rows, out / "cp_vs_ws.csv")
    for r in rows:
        pct = int(round((1 - r.alpha) * 100))
        print(
            f"{r.method}/{r.model} {pct}%: WS={r.ws:.4f} CP={r.cp:.4f} "
            f"({r.train_seconds:.2f}s)"
        )
    print(f"wrote {out / 'comparison.csv'} and {out / 'cp_vs_ws.csv'}")


def _cmd_synth(args):
    file_cfg = _load_config_file(args)
    spec = SyntheticSpec(
        n_days=args.days,
        start_date=_parse_date(args.start_date),
        base_kw=args.base_kw,
        noise_sigma=args.sigma,
        noise_proportional=not args.constant_noise,
    )
    seed = int(_opt(args, file_cfg, "seed", 0))
    series = generate_synthetic(spec, seed)
    write_series_csv(series, args.output)
    print(f"wrote {series.n_days} synthetic days -> {args.output}")


if __name__ == "__main__":
    sys.exit(main())
