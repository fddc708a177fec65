import datetime as dt
import io

import numpy as np
import pandas as pd
import pytest

from intervalcast.data import DemandSeries


def make_series(n_days=4, start="2021-01-01", demand=None, temperature=None):
    """Small whole-day series for unit tests."""
    n = n_days * 96
    ts = pd.date_range(start, periods=n, freq="15min")
    if demand is None:
        demand = 10.0 + np.arange(n, dtype=float) % 96
    if temperature is None:
        temperature = np.full(n, 40.0)
    return DemandSeries(
        timestamps=pd.DatetimeIndex(ts),
        demand=np.asarray(demand, dtype=float),
        temperature=np.asarray(temperature, dtype=float),
    )


def make_csv(n_days=2, start="2021-01-01", demand_fn=None, drop=None, duplicate=None):
    """CSV text for parser tests; drop/duplicate are row offsets to mangle."""
    n = n_days * 96
    ts = pd.date_range(start, periods=n, freq="15min")
    lines = ["timestamp,demand_kw,temperature_f"]
    for k, t in enumerate(ts):
        if drop is not None and k in drop:
            continue
        value = demand_fn(k) if demand_fn else 5.0 + (k % 96) * 0.1
        lines.append(f"{t.isoformat()},{value},40.0")
        if duplicate is not None and k == duplicate:
            lines.append(f"{t.isoformat()},{value},40.0")
    return "\n".join(lines) + "\n"


@pytest.fixture
def two_day_csv():
    return io.StringIO(make_csv(n_days=2))


@pytest.fixture
def holidays_2021():
    from intervalcast.data import us_federal_holidays

    return us_federal_holidays([2021, 2022])


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance gate's one-line-per-criterion results."""
    try:
        import test_acceptance
    except ImportError:
        return
    lines = getattr(test_acceptance, "RESULT_LINES", [])
    if lines:
        terminalreporter.section("acceptance gate")
        for line in lines:
            terminalreporter.write_line(line)
