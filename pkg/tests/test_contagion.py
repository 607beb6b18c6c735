import math

import numpy as np
import pytest

from defi_stress.contagion import (
    CompositionModel,
    DamageScenario,
    MarketEntry,
    MarketSnapshot,
    damage_table,
    max_systemic_loss,
    parse_damage_table,
    sweepable_total,
    write_loss_csv,
)
from defi_stress.errors import InvalidParams, InvalidRange, ParseError


def uniform_inverse_mean(low, high):
    if low == high:
        return 1.0 / low
    return math.log(high / low) / (high - low)


class TestSweepableTotal:
    def test_empty(self):
        assert sweepable_total(MarketSnapshot(())) == 0.0

    def test_unlimited_cap_takes_everything(self, dai_snapshot_csv):
        snapshot = MarketSnapshot.from_csv(dai_snapshot_csv)
        assert sweepable_total(snapshot) == pytest.approx(211e6)

    def test_finite_cap_binds(self, dai_snapshot_csv):
        snapshot = MarketSnapshot.from_csv(dai_snapshot_csv)
        assert sweepable_total(snapshot, 145e6) == pytest.approx(145e6)

    def test_monotone_in_cap_and_entries(self):
        entries = (MarketEntry("m", "DAI/ETH", 100.0),)
        snapshot = MarketSnapshot(entries)
        bigger = MarketSnapshot(entries + (MarketEntry("n", "DAI/USDC", 50.0),))
        assert sweepable_total(snapshot, 30) <= sweepable_total(snapshot, 80)
        assert sweepable_total(snapshot) <= sweepable_total(bigger)

    def test_negative_notional_rejected(self):
        with pytest.raises(InvalidParams):
            MarketSnapshot((MarketEntry("m", "p", -1.0),))

    def test_csv_header_checked(self, tmp_path):
        path = tmp_path / "snap.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParseError):
            MarketSnapshot.from_csv(path)


class TestMaxSystemicLoss:
    def test_degenerate_range_single_protocol(self):
        model = CompositionModel(1, 400e6, (2.0, 2.0), seed=0, n_samples=100)
        dist = max_systemic_loss(model)
        assert np.all(dist.samples == pytest.approx(200e6))

    def test_mean_matches_closed_form(self):
        model = CompositionModel(30, 400e6, (1.01, 1.05), seed=5, n_samples=100_000)
        dist = max_systemic_loss(model)
        expected = 400e6 * uniform_inverse_mean(1.01, 1.05)
        assert dist.mean == pytest.approx(expected, rel=0.005)

    def test_monotone_in_range_width(self):
        means = []
        for high in (1.05, 1.5, 3.0):
            model = CompositionModel(30, 400e6, (1.01, high), seed=5, n_samples=50_000)
            means.append(max_systemic_loss(model).mean)
        assert means[0] > means[1] > means[2]

    def test_samples_within_bounds(self):
        model = CompositionModel(10, 400e6, (1.1, 2.5), seed=3, n_samples=20_000)
        dist = max_systemic_loss(model)
        assert dist.min >= 400e6 / 2.5 - 1e-6
        assert dist.max <= 400e6 / 1.1 + 1e-6

    def test_loss_strictly_decreasing_in_each_multiplier(self):
        # pairwise perturbation of the loss function itself
        rng = np.random.default_rng(1)
        lams = rng.uniform(1.01, 2.0, 12)
        base = (400e6 / 12 / lams).sum()
        for i in range(12):
            bumped = lams.copy()
            bumped[i] *= 1.05
            assert (400e6 / 12 / bumped).sum() < base

    def test_deterministic_given_seed(self):
        model = CompositionModel(5, 1e8, (1.2, 1.8), seed=9, n_samples=1000)
        a = max_systemic_loss(model)
        b = max_systemic_loss(model)
        assert np.array_equal(a.samples, b.samples)

    def test_invalid_range(self):
        with pytest.raises(InvalidRange):
            CompositionModel(5, 1e8, (1.0, 1.5), seed=0, n_samples=10)
        with pytest.raises(InvalidRange):
            CompositionModel(5, 1e8, (1.5, 1.2), seed=0, n_samples=10)


FEB2020_ROWS = [
    DamageScenario("undercollateralization (price crash)", 145e6),
    DamageScenario("undercollateralization (governance attack)", 211e6),
    DamageScenario("contagious undercollateralization (price crash)", 180e6, True),
    DamageScenario(
        "contagious undercollateralization (governance attack)", 246e6, True
    ),
]


class TestDamageTable:
    def test_feb2020_rows(self):
        text = damage_table(FEB2020_ROWS)
        lines = text.splitlines()
        assert lines[0] == "label,loss_usd,lower_bound"
        assert len(lines) == 5
        assert lines[1].endswith("1.45e+08,false")
        assert lines[3].endswith("1.8e+08,true")

    def test_empty_list(self):
        assert damage_table([]).splitlines() == ["label,loss_usd,lower_bound"]

    def test_roundtrip(self):
        text = damage_table(FEB2020_ROWS[:1])
        assert parse_damage_table(text) == FEB2020_ROWS[:1]


def test_loss_csv(tmp_path):
    model = CompositionModel(3, 1e6, (1.1, 1.2), seed=2, n_samples=5)
    dist = max_systemic_loss(model)
    out = tmp_path / "losses.csv"
    write_loss_csv(dist, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "sample,loss"
    assert len(lines) == 6
