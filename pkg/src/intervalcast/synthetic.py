"""Synthetic multi-day demand series for property tests and benchmarks.

The deterministic level combines a daily sinusoid, a weekend effect, an
annual cycle, and a slow trend; noise can be homoskedastic or proportional
to the level (higher-demand days get noisier residuals).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import INTERVALS_PER_DAY, DemandSeries
from .errors import ConfigError
from .rng import TAG_SYNTHETIC, substream


@dataclass(frozen=True)
class SyntheticSpec:
    n_days: int = 455
    start_date: dt.date = dt.date(2021, 1, 1)
    base_kw: float = 100.0
    daily_amplitude: float = 0.30       # relative swing of the within-day cycle
    weekend_uplift: float = 0.10        # relative Sat/Sun increase
    annual_amplitude: float = 0.25      # relative winter-peak swing
    trend_per_year: float = 0.02        # relative drift over 365 days
    noise_sigma: float = 0.05           # std dev, relative to level
    noise_proportional: bool = True     # scale noise by the local level

    def __post_init__(self):
        if self.n_days < 1:
            raise ConfigError("n_days must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.base_kw <= 0:
            raise ConfigError("base_kw must be positive")


def generate_synthetic(spec: SyntheticSpec, seed: int) -> DemandSeries:
    n = spec.n_days * INTERVALS_PER_DAY
    start = pd.Timestamp(spec.start_date)
    timestamps = pd.date_range(start, periods=n, freq="15min")

    day_of_series = np.arange(n) // INTERVALS_PER_DAY
    interval = np.arange(n) % INTERVALS_PER_DAY
    day_of_year = np.array([t.dayofyear for t in timestamps])
    weekday = np.array([t.weekday() for t in timestamps])

    # evening-peaked daily cycle; winter-peaked annual cycle
    daily = 1.0 + spec.daily_amplitude * np.sin(
        2.0 * np.pi * (interval / INTERVALS_PER_DAY - 0.25)
    )
    weekend = 1.0 + spec.weekend_uplift * (weekday >= 5)
    annual = 1.0 + spec.annual_amplitude * np.cos(2.0 * np.pi * (day_of_year - 15) / 365.0)
    trend = 1.0 + spec.trend_per_year * day_of_series / 365.0
    level = spec.base_kw * daily * weekend * annual * trend

    rng = substream(seed, TAG_SYNTHETIC)
    scale = level if spec.noise_proportional else np.full(n, level.mean())
    noise = spec.noise_sigma * scale * rng.standard_normal(n)
    demand = np.maximum(level + noise, 0.0)

    # temperature tracks the annual cycle with a mild diurnal swing
    temperature = (
        50.0
        - 25.0 * np.cos(2.0 * np.pi * (day_of_year - 200) / 365.0)
        + 8.0 * np.sin(2.0 * np.pi * (interval / INTERVALS_PER_DAY - 0.3))
    )

    return DemandSeries(
        timestamps=pd.DatetimeIndex(timestamps),
        demand=demand,
        temperature=temperature,
        site_count=1,
    )
