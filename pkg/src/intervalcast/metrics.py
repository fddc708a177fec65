"""Interval-quality metrics: Winkler score and coverage probability with
per-interval, per-day, and whole-test-set aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import INTERVALS_PER_DAY
from .errors import DataError


def winkler_point(y: float, lower: float, upper: float, alpha: float) -> float:
    """Interval width, plus (1/alpha) times the exceedance when y is outside."""
    if lower > upper:
        raise DataError("lower bound exceeds upper bound")
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must be in (0, 1)")
    width = upper - lower
    if y < lower:
        return width + (lower - y) / alpha
    if y > upper:
        return width + (y - upper) / alpha
    return width


def coverage_point(y: float, lower: float, upper: float) -> int:
    """1 iff lower <= y <= upper (both boundaries inclusive)."""
    if lower > upper:
        raise DataError("lower bound exceeds upper bound")
    return int(lower <= y <= upper)


@dataclass(frozen=True)
class IntervalScoreReport:
    alpha: float
    ws: float                 # mean Winkler score, kW
    cp: float                 # coverage fraction in [0, 1]
    mean_width: float         # kW; ws == mean_width + violation term / alpha
    mean_violation: float     # mean exceedance magnitude, kW
    ws_by_day: np.ndarray
    cp_by_day: np.ndarray


def aggregate_scores(forecasts, observed, alpha: float) -> IntervalScoreReport:
    """Average the per-interval scores within each day, then across days.

    forecasts is a list of IntervalForecast, observed the aligned list of
    96-vectors of realized demand.
    """
    if len(forecasts) != len(observed):
        raise DataError("forecasts and observations are misaligned")
    if not forecasts:
        raise DataError("empty evaluation set")
    ws_days, cp_days, width_days, viol_days = [], [], [], []
    for fc, y in zip(forecasts, observed):
        y = np.asarray(y, dtype=float)
        if len(y) != INTERVALS_PER_DAY:
            raise DataError(f"day {fc.day_index} has {len(y)} observations")
        if alpha not in fc.bounds:
            raise DataError(f"forecast for day {fc.day_index} lacks alpha={alpha}")
        lower, upper = fc.bounds[alpha]
        width = upper - lower
        below = np.maximum(lower - y, 0.0)
        above = np.maximum(y - upper, 0.0)
        ws_days.append(float((width + (below + above) / alpha).mean()))
        cp_days.append(float(((lower <= y) & (y <= upper)).mean()))
        width_days.append(float(width.mean()))
        viol_days.append(float((below + above).mean()))
    return IntervalScoreReport(
        alpha=alpha,
        ws=float(np.mean(ws_days)),
        cp=float(np.mean(cp_days)),
        mean_width=float(np.mean(width_days)),
        mean_violation=float(np.mean(viol_days)),
        ws_by_day=np.asarray(ws_days),
        cp_by_day=np.asarray(cp_days),
    )
