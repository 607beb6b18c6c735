import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from defi_stress.errors import (
    DegenerateSample,
    EmptySeries,
    InsufficientData,
    NonMonotonicTime,
    ParseError,
)
from defi_stress.marketdata import (
    estimate_stats,
    jarque_bera,
    load_series,
    log_returns,
)


def write_csv(tmp_path, rows, header="date,open,high,low,close,volume"):
    path = tmp_path / "prices.csv"
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""))
    return path


def simple_rows(closes, start_day=1):
    return [
        f"2021-01-{start_day + i:02d},{c},{c * 1.01},{c * 0.99},{c},1000"
        for i, c in enumerate(closes)
    ]


class TestLoadSeries:
    def test_minimal_two_rows(self, tmp_path):
        series = load_series(write_csv(tmp_path, simple_rows([100, 110])))
        assert len(series) == 2
        assert series.observations[1].close == 110

    def test_zero_close_rejected(self, tmp_path):
        path = write_csv(tmp_path, simple_rows([100]) + ["2021-01-02,1,1,0.9,0,10"])
        with pytest.raises(ParseError) as exc:
            load_series(path)
        assert exc.value.row == 1

    def test_negative_volume_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["2021-01-01,1,1,1,1,-5"])
        with pytest.raises(ParseError):
            load_series(path)

    def test_non_monotonic_dates(self, tmp_path):
        rows = simple_rows([100]) + ["2021-01-01,1,1,1,1,10"]
        with pytest.raises(NonMonotonicTime):
            load_series(write_csv(tmp_path, rows))

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptySeries):
            load_series(write_csv(tmp_path, []))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,price\n1,2\n")
        with pytest.raises(ParseError):
            load_series(path)

    def test_malformed_row_reports_index(self, tmp_path):
        rows = simple_rows([100]) + ["2021-01-02,abc,1,1,1,10"]
        with pytest.raises(ParseError) as exc:
            load_series(write_csv(tmp_path, rows))
        assert exc.value.row == 1


class TestLogReturns:
    def test_flat(self, tmp_path):
        series = load_series(write_csv(tmp_path, simple_rows([100, 100])))
        assert log_returns(series).tolist() == [0.0]

    def test_single_step(self, tmp_path):
        series = load_series(write_csv(tmp_path, simple_rows([100, 110])))
        assert log_returns(series) == pytest.approx([math.log(1.1)])

    def test_two_steps(self, tmp_path):
        series = load_series(write_csv(tmp_path, simple_rows([100, 110, 99])))
        assert log_returns(series) == pytest.approx(
            [math.log(1.1), math.log(0.9)]
        )

    def test_too_short(self, tmp_path):
        series = load_series(write_csv(tmp_path, simple_rows([100])))
        with pytest.raises(EmptySeries):
            log_returns(series)

    @given(
        st.lists(st.floats(min_value=0.1, max_value=1e5), min_size=2, max_size=50)
    )
    def test_roundtrip_reconstructs_closes(self, closes):
        r = np.diff(np.log(closes))
        rebuilt = closes[0] * np.exp(np.cumsum(r))
        assert np.allclose(rebuilt, closes[1:], rtol=1e-9)


class TestEstimateStats:
    def test_all_zero(self):
        s = estimate_stats([0.0, 0.0, 0.0])
        assert (s.mu, s.sigma, s.n) == (0.0, 0.0, 3)

    def test_symmetric_pair(self):
        s = estimate_stats([0.1, -0.1])
        assert s.mu == pytest.approx(0.0)
        assert s.sigma == pytest.approx(math.sqrt(0.02), rel=1e-12)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            estimate_stats([0.1])

    def test_fixture_matches_calibration_targets(self, eth_csv):
        r = log_returns(load_series(eth_csv))
        s = estimate_stats(r)
        assert abs(abs(s.mu) - 0.001592) < 1e-3
        assert abs(s.sigma - 0.050581) < 1e-3
        assert s.n == len(r)

    def test_timestamp_shift_invariance(self, tmp_path):
        closes = [100, 104, 99, 101]
        a = estimate_stats(log_returns(load_series(write_csv(tmp_path, simple_rows(closes)))))
        b = estimate_stats(
            log_returns(load_series(write_csv(tmp_path, simple_rows(closes, start_day=9))))
        )
        assert (a.mu, a.sigma, a.n) == (b.mu, b.sigma, b.n)


class TestJarqueBera:
    def test_matches_scipy(self):
        rng = np.random.default_rng(1)
        r = rng.standard_t(df=4, size=500)
        stat, p = jarque_bera(r)
        ref = sps.jarque_bera(r)
        assert stat == pytest.approx(ref.statistic, rel=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-12)

    def test_normal_acceptance_rate(self):
        # under H0 the p-value is uniform, so a few of 40 seeds may still
        # fall below 0.01; require >= 95% of seeds above it
        rejections = 0
        for seed in range(40):
            r = np.random.default_rng(seed).standard_normal(10_000)
            _, p = jarque_bera(r)
            rejections += p <= 0.01
        assert rejections <= 2  # >= 95% of seeds keep p > 0.01

    def test_fixture_rejects_normality(self, eth_csv):
        r = log_returns(load_series(eth_csv))
        _, p = jarque_bera(r)
        assert p < 0.05

    def test_constant_series(self):
        with pytest.raises(DegenerateSample):
            jarque_bera([0.01] * 10)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            jarque_bera([0.0, 0.1, 0.2])

    @given(
        a=st.floats(min_value=0.01, max_value=100),
        b=st.floats(min_value=-10, max_value=10),
    )
    def test_affine_invariance(self, a, b):
        rng = np.random.default_rng(7)
        r = rng.standard_t(df=5, size=200)
        stat, _ = jarque_bera(r)
        stat2, _ = jarque_bera(a * r + b)
        assert stat2 == pytest.approx(stat, rel=1e-6)
