"""Demand data ingestion, day vectors, supervised features, ACF/PACF.

A series is a contiguous run of whole calendar days sampled every 15 minutes
(96 instants per day). Days are labeled 1..D in chronological order; interval
index i runs 1..96 with i=1 at 00:00:00.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError

INTERVALS_PER_DAY = 96
STEP = pd.Timedelta(minutes=15)

DEFAULT_SCHEMA = {
    "timestamp": "timestamp",
    "demand": "demand_kw",
    "temperature": "temperature_f",
}


@dataclass(frozen=True)
class DemandSeries:
    """Whole-day 15-minute demand series with temperature.

    demand is kW at the aggregation level of the input; temperature is the
    day-ahead predicted temperature in Fahrenheit.
    """

    timestamps: pd.DatetimeIndex
    demand: np.ndarray
    temperature: np.ndarray
    site_count: int = 1

    def __post_init__(self):
        n = len(self.timestamps)
        if n == 0 or n % INTERVALS_PER_DAY != 0:
            raise DataError(
                f"series length {n} is not a whole number of 96-interval days"
            )
        if len(self.demand) != n or len(self.temperature) != n:
            raise DataError("demand/temperature length mismatch with timestamps")
        deltas = np.diff(self.timestamps.values)
        if n > 1 and not (deltas == np.timedelta64(15, "m")).all():
            bad = int(np.argmax(deltas != np.timedelta64(15, "m")))
            raise DataError(
                f"non-15-minute spacing after {self.timestamps[bad]}"
            )
        t0 = self.timestamps[0]
        if t0 != t0.normalize():
            raise DataError(f"series must start at midnight, got {t0}")
        if not np.isfinite(self.demand).all():
            raise DataError("non-finite demand value")
        if (self.demand < 0).any():
            raise DataError("negative demand value")
        if self.site_count < 1:
            raise DataError("site_count must be positive")

    @property
    def n_days(self) -> int:
        return len(self.timestamps) // INTERVALS_PER_DAY

    def date_of_day(self, j: int) -> dt.date:
        """Calendar date of 1-based day label j."""
        if not 1 <= j <= self.n_days:
            raise DataError(f"day {j} outside series (1..{self.n_days})")
        return self.timestamps[(j - 1) * INTERVALS_PER_DAY].date()

    def day_vector(self, j: int) -> np.ndarray:
        """The 96 demand values of day j, in interval order."""
        if not 1 <= j <= self.n_days:
            raise DataError(f"day {j} outside series (1..{self.n_days})")
        lo = (j - 1) * INTERVALS_PER_DAY
        return self.demand[lo : lo + INTERVALS_PER_DAY].copy()

    def day_matrix(self) -> np.ndarray:
        """All days stacked, shape (n_days, 96)."""
        return self.demand.reshape(self.n_days, INTERVALS_PER_DAY).copy()


@dataclass(frozen=True)
class TrainTestSplit:
    """Contiguous train days followed by contiguous test days."""

    train_days: tuple
    test_days: tuple
    boundary_date: dt.date

    def __post_init__(self):
        if not self.train_days or not self.test_days:
            raise DataError("both train and test must be non-empty")
        if self.train_days[-1] + 1 != self.test_days[0]:
            raise DataError("train and test must be contiguous")


def split_by_date(series: DemandSeries, boundary: dt.date) -> TrainTestSplit:
    """Split day labels at the first day dated >= boundary."""
    dates = [series.date_of_day(j) for j in range(1, series.n_days + 1)]
    test = tuple(j for j, d in zip(range(1, series.n_days + 1), dates) if d >= boundary)
    train = tuple(j for j in range(1, series.n_days + 1) if j not in set(test))
    if not train or not test:
        raise DataError(f"boundary {boundary} leaves an empty train or test set")
    return TrainTestSplit(train, test, boundary)


def parse_demand_csv(source, schema: dict | None = None, fill_gaps: bool = False) -> DemandSeries:
    """Parse a demand CSV into a DemandSeries.

    source is a path or open text stream. schema remaps the logical column
    names (timestamp, demand, temperature) to the file's headers. With
    fill_gaps, gaps of at most 4 missing intervals (one hour) are linearly
    interpolated; longer gaps are always an error.
    """
    cols = dict(DEFAULT_SCHEMA)
    if schema:
        cols.update(schema)
    df = pd.read_csv(source, dtype=str, skipinitialspace=True)
    missing = [c for c in cols.values() if c not in df.columns]
    if missing:
        raise DataError(f"missing required column(s): {', '.join(missing)}")

    ts = pd.to_datetime(df[cols["timestamp"]], errors="coerce", format="ISO8601")
    bad = ts.isna()
    if bad.any():
        line = int(np.argmax(bad.values)) + 2  # header is line 1
        raise DataError(f"malformed timestamp at line {line}")
    demand = pd.to_numeric(df[cols["demand"]], errors="coerce")
    bad = demand.isna()
    if bad.any():
        line = int(np.argmax(bad.values)) + 2
        raise DataError(f"malformed demand value at line {line}")
    temperature = pd.to_numeric(df[cols["temperature"]], errors="coerce")
    bad = temperature.isna()
    if bad.any():
        line = int(np.argmax(bad.values)) + 2
        raise DataError(f"malformed temperature value at line {line}")

    frame = pd.DataFrame(
        {"ts": ts, "demand": demand.astype(float), "temp": temperature.astype(float)}
    ).sort_values("ts", kind="stable")
    dup = frame["ts"].duplicated()
    if dup.any():
        raise DataError(f"duplicate timestamp {frame['ts'][dup].iloc[0]}")

    frame = frame.set_index("ts")
    deltas = frame.index.to_series().diff().iloc[1:]
    gaps = deltas[deltas != STEP]
    if len(gaps) > 0:
        worst = gaps.index[0]
        n_missing = int(gaps.iloc[0] / STEP) - 1
        if not fill_gaps:
            raise DataError(
                f"{gaps.iloc[0]} gap before {worst} (enable gap filling or fix the data)"
            )
        if n_missing < 1 or (gaps / STEP - 1 > 4).any():
            raise DataError(f"gap before {worst} exceeds the 1-hour fill limit")
        full = pd.date_range(frame.index[0], frame.index[-1], freq="15min")
        frame = frame.reindex(full).interpolate(method="linear")

    return DemandSeries(
        timestamps=pd.DatetimeIndex(frame.index),
        demand=frame["demand"].to_numpy(),
        temperature=frame["temp"].to_numpy(),
        site_count=1,
    )


def aggregate_sites(series_list: list[DemandSeries]) -> DemandSeries:
    """Sum demand across sites sharing one timestamp grid.

    Temperature is averaged weighted by site_count, which keeps aggregation
    associative; site_count accumulates.
    """
    if not series_list:
        raise DataError("no series to aggregate")
    first = series_list[0]
    for s in series_list[1:]:
        if not first.timestamps.equals(s.timestamps):
            raise DataError("mismatched timestamp grids")
    demand = np.sum([s.demand for s in series_list], axis=0)
    weights = np.array([s.site_count for s in series_list], dtype=float)
    temps = np.stack([s.temperature for s in series_list])
    temperature = (temps * weights[:, None]).sum(axis=0) / weights.sum()
    return DemandSeries(
        timestamps=first.timestamps,
        demand=demand,
        temperature=temperature,
        site_count=int(weights.sum()),
    )


# ---------------------------------------------------------------------------
# Holidays

def us_federal_holidays(years) -> set:
    """US federal holidays (actual dates, no observed-day shifting)."""
    out = set()
    for y in years:
        out.add(dt.date(y, 1, 1))
        out.add(_nth_weekday(y, 1, 0, 3))   # MLK: 3rd Monday of January
        out.add(_nth_weekday(y, 2, 0, 3))   # Presidents: 3rd Monday of February
        out.add(_last_weekday(y, 5, 0))     # Memorial: last Monday of May
        if y >= 2021:
            out.add(dt.date(y, 6, 19))      # Juneteenth
        out.add(dt.date(y, 7, 4))
        out.add(_nth_weekday(y, 9, 0, 1))   # Labor: 1st Monday of September
        out.add(_nth_weekday(y, 10, 0, 2))  # Columbus: 2nd Monday of October
        out.add(dt.date(y, 11, 11))
        out.add(_nth_weekday(y, 11, 3, 4))  # Thanksgiving: 4th Thursday of November
        out.add(dt.date(y, 12, 25))
    return out


def _nth_weekday(year: int, month: int, weekday: int, n: int) -> dt.date:
    d = dt.date(year, month, 1)
    offset = (weekday - d.weekday()) % 7 + 7 * (n - 1)
    return d + dt.timedelta(days=offset)


def _last_weekday(year: int, month: int, weekday: int) -> dt.date:
    nxt = dt.date(year + (month == 12), month % 12 + 1, 1)
    d = nxt - dt.timedelta(days=1)
    return d - dt.timedelta(days=(d.weekday() - weekday) % 7)


def read_holiday_file(path) -> set:
    """One ISO date per line; '#' starts a comment."""
    out = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                out.add(dt.date.fromisoformat(text))
            except ValueError:
                raise DataError(f"bad date {text!r} at line {lineno} of {path}")
    return out


def quarter_code(month: int) -> int:
    """0 for Jan-Mar, 1 for Apr-Jun, 2 for Jul-Sep, 3 for Oct-Dec."""
    return (month - 1) // 3


def is_holiday_or_weekend(date: dt.date, holidays: set) -> bool:
    return date.weekday() >= 5 or date in holidays


# ---------------------------------------------------------------------------
# Supervised features

@dataclass(frozen=True)
class FeatureMatrix:
    """Rows (X_ij, y_ij) for whole days; one row per (interval i, day j).

    Columns of X: previous-day demand lags at i-1 and i-2, temperature,
    quarter code, weekend/holiday flag.
    """

    X: np.ndarray          # (n, 5)
    y: np.ndarray          # (n,)
    day_index: np.ndarray  # (n,) 1-based day label j
    interval: np.ndarray   # (n,) 1-based interval label i
    feature_names: tuple = field(
        default=("lag_prev_day_1", "lag_prev_day_2", "temperature_f", "quarter", "holiday")
    )

    def rows_for_days(self, days) -> "FeatureMatrix":
        mask = np.isin(self.day_index, list(days))
        return FeatureMatrix(
            self.X[mask], self.y[mask], self.day_index[mask], self.interval[mask]
        )


def build_features(series: DemandSeries, holidays: set, days=None) -> FeatureMatrix:
    """Build the 5-feature supervised matrix for the requested days.

    Lags come from the previous day; at the first two intervals of a day the
    lag index wraps within the previous day (i=1 reads intervals 96 and 95 of
    day j-1), so every lag stays inside day j-1.
    """
    if days is None:
        days = range(2, series.n_days + 1)
    days = list(days)
    if not days:
        raise DataError("no days to featurize")
    if min(days) < 2:
        raise DataError("day 1 has no previous-day history for lags")
    if max(days) > series.n_days:
        raise DataError(f"day {max(days)} outside series")

    day_mat = series.demand.reshape(series.n_days, INTERVALS_PER_DAY)
    temp_mat = series.temperature.reshape(series.n_days, INTERVALS_PER_DAY)
    idx = np.arange(INTERVALS_PER_DAY)
    lag1_idx = (idx - 1) % INTERVALS_PER_DAY
    lag2_idx = (idx - 2) % INTERVALS_PER_DAY

    X_parts, y_parts, j_parts = [], [], []
    for j in days:
        date = series.date_of_day(j)
        prev = day_mat[j - 2]  # day j-1, 0-based row j-2
        block = np.column_stack(
            [
                prev[lag1_idx],
                prev[lag2_idx],
                temp_mat[j - 1],
                np.full(INTERVALS_PER_DAY, quarter_code(date.month), dtype=float),
                np.full(
                    INTERVALS_PER_DAY,
                    float(is_holiday_or_weekend(date, holidays)),
                ),
            ]
        )
        X_parts.append(block)
        y_parts.append(day_mat[j - 1])
        j_parts.append(np.full(INTERVALS_PER_DAY, j))

    return FeatureMatrix(
        X=np.vstack(X_parts),
        y=np.concatenate(y_parts),
        day_index=np.concatenate(j_parts),
        interval=np.tile(np.arange(1, INTERVALS_PER_DAY + 1), len(days)),
    )


# ---------------------------------------------------------------------------
# Diagnostics

def acf_pacf(values, max_lag: int):
    """Sample ACF and PACF (Durbin-Levinson) up to max_lag; lag 0 is 1."""
    x = np.asarray(values, dtype=float)
    if len(x) <= max_lag + 1:
        raise DataError("sequence too short for requested max_lag")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise DataError("constant sequence has undefined autocorrelation")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = float(xc[:-k] @ xc[k:]) / denom

    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    phi_prev = np.zeros(max_lag + 1)
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = acf[1]
        else:
            num = acf[k] - np.dot(phi_prev[1:k], acf[k - 1 : 0 : -1])
            den = 1.0 - np.dot(phi_prev[1:k], acf[1:k])
            phi_kk = num / den
        phi = phi_prev.copy()
        phi[k] = phi_kk
        phi[1:k] = phi_prev[1:k] - phi_kk * phi_prev[k - 1 : 0 : -1]
        pacf[k] = phi_kk
        phi_prev = phi
    return acf, pacf
