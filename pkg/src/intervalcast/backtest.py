"""Expanding-window backtests and method comparison runs.

For each test day: forecast intervals, observe the day, append it to the
training data, refit the point model, and fold the observed residuals back
into the memory (adaptive update), reclustering at a fixed cadence.
"""

from __future__ import annotations

import datetime as dt
import time
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path

import numpy as np

from .bootstrap import (
    ClusteredMemory,
    IntervalForecast,
    ResidualMemory,
    bagging_forecast,
    block_bootstrap_forecast_day,
    cbb_forecast_day,
    forecast_to_csv,
    resolve_block_length,
    update_memory,
)
from .clustering import kmeans
from .data import (
    DemandSeries,
    build_features,
    split_by_date,
    us_federal_holidays,
)
from .errors import ConfigError, DataError
from .metrics import IntervalScoreReport, aggregate_scores
from .models import RegressorSpec, fit, predict, residual_matrix

METHODS = ("cbb", "blockbb", "bagging")
DEFAULT_ALPHAS = (0.15, 0.10, 0.05, 0.01)


@dataclass(frozen=True)
class RunConfig:
    boundary: dt.date
    method: str = "cbb"
    model: RegressorSpec = field(default_factory=lambda: RegressorSpec("least_squares"))
    alphas: tuple = DEFAULT_ALPHAS
    n_replicates: int = 1000
    n_clusters: int = 4
    block_length: object = 6          # divisor of 96, or "auto"
    recluster_every: int = 7
    refit_every: int = 1
    seed: int = 0
    holidays: frozenset | None = None  # None: US federal holidays
    data_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.alphas or not all(0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("alphas must lie in (0, 1)")
        if self.n_replicates < 2:
            raise ConfigError("n_replicates must be >= 2")
        if self.n_clusters < 1:
            raise ConfigError("n_clusters must be >= 1")
        if self.recluster_every < 1 or self.refit_every < 1:
            raise ConfigError("recluster_every and refit_every must be >= 1")
        try:
            resolve_block_length(self.block_length)  # validates early
        except DataError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class BacktestResult:
    method: str
    model_kind: str
    forecasts: list               # one IntervalForecast per test day
    observed: list                # aligned 96-vectors of realized demand
    reports: dict                 # alpha -> IntervalScoreReport
    train_seconds: float          # fitting + interval construction only


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    model: str
    alpha: float
    ws: float
    cp: float
    train_seconds: float


def calendar_match(test_date: dt.date, date_to_day: dict) -> int | None:
    """Training day with the same month/day as the test date (Feb 29 maps to
    Feb 28); None when no such day carries residuals."""
    key = (test_date.month, test_date.day)
    if key == (2, 29):
        key = (2, 28)
    return date_to_day.get(key)


def run_expanding_window(config: RunConfig, series: DemandSeries) -> BacktestResult:
    holidays = (
        set(config.holidays)
        if config.holidays is not None
        else us_federal_holidays(
            range(series.date_of_day(1).year, series.date_of_day(series.n_days).year + 1)
        )
    )
    split = split_by_date(series, config.boundary)
    features = build_features(series, holidays)
    block_length = resolve_block_length(config.block_length)
    if config.method == "bagging":
        return _run_bagging(config, series, split, features, holidays, block_length)
    return _run_sequential(config, series, split, features, holidays, block_length)


def _run_sequential(config, series, split, features, holidays, block_length):
    train_feat_days = [j for j in split.train_days if j >= 2]
    if not train_feat_days:
        raise DataError("training window too short to featurize")
    date_to_day = {}
    for j in train_feat_days:
        d = series.date_of_day(j)
        date_to_day[(d.month, d.day)] = j

    clock = _Stopwatch()
    with clock:
        model = fit(config.model, *_xy(features, train_feat_days))
        entries = residual_matrix(model, features.rows_for_days(train_feat_days))
        memory = ResidualMemory(entries=entries, block_length=block_length)
        cmem = None
        if config.method == "cbb":
            demand = {j: series.day_vector(j) for j in train_feat_days}
            clustering = kmeans(
                [demand[j] for j in memory.days()],
                config.n_clusters,
                config.seed,
                day_index=memory.days(),
            )
            cmem = ClusteredMemory(memory=memory, demand=demand, clustering=clustering)

    forecasts, observed = [], []
    current_days = list(train_feat_days)
    for t, j in enumerate(split.test_days, start=1):
        day_rows = features.rows_for_days([j])
        with clock:
            point = predict(model, day_rows.X)
            if config.method == "cbb":
                fc = cbb_forecast_day(
                    point, cmem, config.alphas, config.n_replicates, config.seed, day_key=t
                )
            else:
                fc = block_bootstrap_forecast_day(
                    point, memory, config.alphas, config.n_replicates, config.seed, day_key=t
                )
        forecasts.append(fc)

        # observe the day, then expand the training window
        y_obs = series.day_vector(j)
        observed.append(y_obs)
        z_new = y_obs - point
        current_days.append(j)
        with clock:
            if t % config.refit_every == 0:
                model = fit(config.model, *_xy(features, current_days))
            target = calendar_match(series.date_of_day(j), date_to_day)
            if target is not None:
                if config.method == "cbb":
                    cmem = update_memory(
                        cmem,
                        target,
                        z_new,
                        new_demand=y_obs,
                        recluster=(t % config.recluster_every == 0),
                    )
                    memory = cmem.memory
                else:
                    entries = dict(memory.entries)
                    entries[target] = z_new
                    memory = dc_replace(memory, entries=entries)

    reports = {a: aggregate_scores(forecasts, observed, a) for a in config.alphas}
    return BacktestResult(
        method=config.method,
        model_kind=config.model.kind,
        forecasts=forecasts,
        observed=observed,
        reports=reports,
        train_seconds=clock.total,
    )


def _run_bagging(config, series, split, features, holidays, block_length):
    train_feat_days = [j for j in split.train_days if j >= 2]
    if not train_feat_days:
        raise DataError("training window too short to featurize")
    train_rows = features.rows_for_days(train_feat_days)
    test_rows = features.rows_for_days(list(split.test_days))

    clock = _Stopwatch()
    with clock:
        base = fit(config.model, train_rows.X, train_rows.y)
        entries = residual_matrix(base, train_rows)
        memory = ResidualMemory(entries=entries, block_length=block_length)
        forecasts = bagging_forecast(
            train_rows,
            config.model,
            memory,
            test_rows,
            config.alphas,
            config.n_replicates,
            config.seed,
        )
    # renumber by test ordinal so outputs align with the other methods
    day_to_ordinal = {j: t for t, j in enumerate(split.test_days, start=1)}
    forecasts = [dc_replace(fc, day_index=day_to_ordinal[fc.day_index]) for fc in forecasts]
    forecasts.sort(key=lambda fc: fc.day_index)
    observed = [series.day_vector(j) for j in split.test_days]
    reports = {a: aggregate_scores(forecasts, observed, a) for a in config.alphas}
    return BacktestResult(
        method="bagging",
        model_kind=config.model.kind,
        forecasts=forecasts,
        observed=observed,
        reports=reports,
        train_seconds=clock.total,
    )


def _xy(features, days):
    rows = features.rows_for_days(days)
    return rows.X, rows.y


class _Stopwatch:
    """Accumulates wall-clock seconds over several with-blocks."""

    def __init__(self):
        self.total = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.total += time.perf_counter() - self._t0
        return False


def compare_methods(configs: list[RunConfig], series: DemandSeries):
    """Run each config on the shared data; returns (results, comparison rows)."""
    if not configs:
        raise ConfigError("no configurations to compare")
    boundaries = {c.boundary for c in configs}
    if len(boundaries) != 1:
        raise ConfigError("configurations must share the train/test split")
    results, rows = [], []
    for cfg in configs:
        res = run_expanding_window(cfg, series)
        results.append(res)
        for a in cfg.alphas:
            rep = res.reports[a]
            rows.append(
                ComparisonRow(
                    method=res.method,
                    model=res.model_kind,
                    alpha=a,
                    ws=rep.ws,
                    cp=rep.cp,
                    train_seconds=res.train_seconds,
                )
            )
    return results, rows


# ---------------------------------------------------------------------------
# Output files

def write_outputs(result: BacktestResult, out_dir) -> None:
    out = Path(out_dir)
    (out / "forecasts").mkdir(parents=True, exist_ok=True)
    for fc in result.forecasts:
        with open(out / "forecasts" / f"day_{fc.day_index}.csv", "w") as fh:
            forecast_to_csv(fc, fh)
    write_scores_csv(result, out / "scores.csv")


def write_scores_csv(result: BacktestResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("method,model,alpha,ws,cp,mean_width,mean_violation,train_seconds\n")
        for a in sorted(result.reports, reverse=True):
            rep = result.reports[a]
            fh.write(
                f"{result.method},{result.model_kind},{float(a)!r},{float(rep.ws)!r},{float(rep.cp)!r},"
                f"{float(rep.mean_width)!r},{float(rep.mean_violation)!r},{float(result.train_seconds)!r}\n"
            )


def write_comparison_csv(rows: list[ComparisonRow], path) -> None:
    with open(path, "w") as fh:
        fh.write("method,model,alpha,ws,cp,train_seconds\n")
        for r in rows:
            fh.write(
                f"{r.method},{r.model},{float(r.alpha)!r},{float(r.ws)!r},{float(r.cp)!r},{float(r.train_seconds)!r}\n"
            )


def write_cp_ws_csv(rows: list[ComparisonRow], path) -> None:
    """Scatter data: one row per (alpha, method, model) for CP-vs-WS plots."""
    with open(path, "w") as fh:
        fh.write("alpha,confidence_pct,method,model,ws,cp\n")
        for r in sorted(rows, key=lambda r: (-r.alpha, r.method, r.model)):
            pct = int(round((1 - r.alpha) * 100))
            fh.write(f"{float(r.alpha)!r},{pct},{r.method},{r.model},{float(r.ws)!r},{float(r.cp)!r}\n")
