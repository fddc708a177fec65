import datetime as dt
import io

import numpy as np
import pandas as pd
import pytest

from intervalcast.data import (
    acf_pacf,
    aggregate_sites,
    build_features,
    parse_demand_csv,
    quarter_code,
    read_holiday_file,
    split_by_date,
    us_federal_holidays,
)
from intervalcast.errors import DataError

from conftest import make_csv, make_series


class TestParse:
    def test_two_valid_days(self, two_day_csv):
        series = parse_demand_csv(two_day_csv)
        assert len(series.timestamps) == 192
        assert series.n_days == 2

    def test_duplicate_timestamp_named(self):
        text = make_csv(n_days=2, duplicate=10)
        with pytest.raises(DataError, match="duplicate timestamp.*02:30"):
            parse_demand_csv(io.StringIO(text))

    def test_gap_rejected_by_default(self):
        text = make_csv(n_days=2, drop={10})
        with pytest.raises(DataError, match="gap"):
            parse_demand_csv(io.StringIO(text))

    def test_gap_filled_when_enabled(self):
        text = make_csv(n_days=2, drop={10})
        series = parse_demand_csv(io.StringIO(text), fill_gaps=True)
        assert len(series.timestamps) == 192
        # linear interpolation between neighbours
        expected = (series.demand[9] + series.demand[11]) / 2
        assert series.demand[10] == pytest.approx(expected)

    def test_long_gap_never_filled(self):
        text = make_csv(n_days=2, drop=set(range(10, 15)))  # 5 missing intervals
        with pytest.raises(DataError, match="1-hour fill limit"):
            parse_demand_csv(io.StringIO(text), fill_gaps=True)

    def test_missing_column(self):
        with pytest.raises(DataError, match="missing required column"):
            parse_demand_csv(io.StringIO("timestamp,demand_kw\n"))

    def test_malformed_row_has_line_number(self):
        lines = make_csv(n_days=2).splitlines()
        parts = lines[5].split(",")
        parts[1] = "oops"
        lines[5] = ",".join(parts)
        with pytest.raises(DataError, match="line 6"):
            parse_demand_csv(io.StringIO("\n".join(lines)))

    def test_schema_remap(self):
        text = make_csv(n_days=2).replace("demand_kw", "kw").replace("temperature_f", "tf")
        series = parse_demand_csv(io.StringIO(text), schema={"demand": "kw", "temperature": "tf"})
        assert series.n_days == 2


class TestAggregate:
    def test_two_constant_series_sum(self):
        a = make_series(n_days=2, demand=np.ones(192))
        b = make_series(n_days=2, demand=np.ones(192))
        agg = aggregate_sites([a, b])
        assert np.all(agg.demand == 2.0)
        assert agg.site_count == 2

    def test_single_series_unchanged(self):
        a = make_series(n_days=2)
        agg = aggregate_sites([a])
        assert np.array_equal(agg.demand, a.demand)
        assert agg.site_count == 1

    def test_three_series_additive(self):
        parts = [make_series(n_days=1, demand=np.full(96, v)) for v in (1.0, 2.0, 3.0)]
        assert np.all(aggregate_sites(parts).demand == 6.0)

    def test_commutative_and_associative(self):
        rng = np.random.default_rng(0)
        parts = [make_series(n_days=1, demand=rng.uniform(1, 5, 96)) for _ in range(3)]
        direct = aggregate_sites(parts)
        nested = aggregate_sites([aggregate_sites(parts[:2]), parts[2]])
        reversed_ = aggregate_sites(parts[::-1])
        assert np.allclose(direct.demand, nested.demand)
        assert np.allclose(direct.demand, reversed_.demand)
        assert np.allclose(direct.temperature, nested.temperature)

    def test_mismatched_grids_rejected(self):
        a = make_series(n_days=1, start="2021-01-01")
        b = make_series(n_days=1, start="2021-01-02")
        with pytest.raises(DataError, match="grid"):
            aggregate_sites([a, b])


class TestFeatures:
    def test_quarter_codes(self, holidays_2021):
        jan = make_series(n_days=3, start="2021-01-01")
        jul = make_series(n_days=3, start="2021-07-01")
        assert build_features(jan, holidays_2021).X[0, 3] == 0
        assert build_features(jul, holidays_2021).X[0, 3] == 2
        assert quarter_code(4) == 1 and quarter_code(12) == 3

    def test_weekend_and_weekday_flags(self, holidays_2021):
        # 2021-01-02 is a Saturday, 2021-01-06 a plain Wednesday
        series = make_series(n_days=7, start="2021-01-01")
        rows = build_features(series, holidays_2021)
        sat = rows.X[rows.day_index == 2][:, 4]
        wed = rows.X[rows.day_index == 6][:, 4]
        assert np.all(sat == 1.0)
        assert np.all(wed == 0.0)

    def test_holiday_flag(self):
        series = make_series(n_days=5, start="2021-07-01")
        rows = build_features(series, us_federal_holidays([2021]))
        jul4 = rows.X[rows.day_index == 4][:, 4]  # 2021-07-04 (also a Sunday)
        assert np.all(jul4 == 1.0)

    def test_lag_wrap_at_first_intervals(self, holidays_2021):
        rng = np.random.default_rng(1)
        series = make_series(n_days=3, demand=rng.uniform(1, 9, 288))
        rows = build_features(series, holidays_2021, days=[2])
        prev = series.day_vector(1)
        first = rows.X[rows.interval == 1][0]
        assert first[0] == prev[95]  # i=1 wraps to interval 96 of day j-1
        assert first[1] == prev[94]
        second = rows.X[rows.interval == 2][0]
        assert second[0] == prev[0]
        assert second[1] == prev[95]

    def test_ordinary_lags(self, holidays_2021):
        rng = np.random.default_rng(2)
        series = make_series(n_days=2, demand=rng.uniform(1, 9, 192))
        rows = build_features(series, holidays_2021)
        prev = series.day_vector(1)
        for i in (3, 50, 96):
            row = rows.X[rows.interval == i][0]
            assert row[0] == prev[i - 2]
            assert row[1] == prev[i - 3]

    def test_target_alignment(self, holidays_2021):
        rng = np.random.default_rng(3)
        series = make_series(n_days=4, demand=rng.uniform(1, 9, 384))
        rows = build_features(series, holidays_2021)
        for j in (2, 3, 4):
            day = series.day_vector(j)
            got = rows.y[rows.day_index == j]
            assert np.array_equal(got, day)

    def test_day_one_rejected(self, holidays_2021):
        series = make_series(n_days=2)
        with pytest.raises(DataError, match="no previous-day history"):
            build_features(series, holidays_2021, days=[1, 2])


class TestDayVector:
    def test_constant(self):
        series = make_series(n_days=2, demand=np.full(192, 7.0))
        assert np.all(series.day_vector(1) == 7.0)

    def test_alignment(self):
        series = make_series(n_days=3)
        assert series.day_vector(2)[0] == series.demand[96]

    def test_reconstruction(self):
        series = make_series(n_days=3)
        joined = np.concatenate([series.day_vector(j) for j in (1, 2, 3)])
        assert np.array_equal(joined, series.demand)

    def test_out_of_range(self):
        series = make_series(n_days=2)
        with pytest.raises(DataError):
            series.day_vector(3)


class TestSplit:
    def test_split_by_date(self):
        series = make_series(n_days=10, start="2021-01-01")
        split = split_by_date(series, dt.date(2021, 1, 8))
        assert split.train_days == tuple(range(1, 8))
        assert split.test_days == (8, 9, 10)

    def test_empty_side_rejected(self):
        series = make_series(n_days=5, start="2021-01-01")
        with pytest.raises(DataError):
            split_by_date(series, dt.date(2020, 12, 1))


class TestAcfPacf:
    def test_lag_zero_is_one(self):
        rng = np.random.default_rng(0)
        acf, pacf = acf_pacf(rng.standard_normal(500), 20)
        assert acf[0] == 1.0
        assert pacf[0] == 1.0

    def test_white_noise_bound(self):
        rng = np.random.default_rng(1)
        n = 2000
        acf, _ = acf_pacf(rng.standard_normal(n), 40)
        inside = np.abs(acf[1:]) < 2 / np.sqrt(n)
        assert inside.mean() >= 0.85

    def test_ar1_pacf_cutoff(self):
        # oracle: simulate AR(1) with phi=0.8; theory says PACF(1)=0.8, PACF(k>1)=0
        rng = np.random.default_rng(2)
        n = 10000
        x = np.empty(n)
        x[0] = rng.standard_normal()
        eps = rng.standard_normal(n)
        for t in range(1, n):
            x[t] = 0.8 * x[t - 1] + eps[t]
        _, pacf = acf_pacf(x, 5)
        assert abs(pacf[1] - 0.8) < 0.05
        assert abs(pacf[2]) < 0.1

    def test_bounded(self):
        rng = np.random.default_rng(3)
        acf, _ = acf_pacf(np.cumsum(rng.standard_normal(800)), 50)
        assert np.all(acf >= -1.0) and np.all(acf <= 1.0)

    def test_constant_sequence_error(self):
        with pytest.raises(DataError, match="constant"):
            acf_pacf(np.ones(100), 5)


class TestHolidays:
    def test_known_dates(self):
        hol = us_federal_holidays([2021])
        assert dt.date(2021, 1, 1) in hol
        assert dt.date(2021, 11, 25) in hol  # Thanksgiving 2021
        assert dt.date(2021, 5, 31) in hol   # Memorial Day 2021
        assert dt.date(2021, 3, 3) not in hol

    def test_holiday_file(self, tmp_path):
        path = tmp_path / "hol.txt"
        path.write_text("# comment\n2021-12-25\n2021-01-01  # new year\n\n")
        assert read_holiday_file(path) == {dt.date(2021, 12, 25), dt.date(2021, 1, 1)}

    def test_holiday_file_bad_date(self, tmp_path):
        path = tmp_path / "hol.txt"
        path.write_text("not-a-date\n")
        with pytest.raises(DataError, match="line 1"):
            read_holiday_file(path)
