"""Monotonicity scoring tests.

The worked traces are derived by hand from the scoring rules: +1 per
significant pair in the expected direction, -1 against it, -0.2 when
insignificant, -2 extra on a statistic sign flip, all doubled over the two
tests, then divided by 2*(levels-1) and clamped to [-1, 1].
"""

import numpy as np
import pytest

from privmeter.errors import DataError, UsageError
from privmeter.metrics import HIGHER, LOWER
from privmeter.strength import (
    MODEL_ORDER,
    SCENARIO_ORDER,
    SWEEP_GRIDS,
    StrengthConfig,
    evaluate_strength,
    heatmap_payload,
    monotonicity_score,
    overall_under,
    rescore_cell,
    sensitivity_sweep,
)


def tight(mean, n=100, seed=0):
    return np.random.default_rng(seed) .normal(mean, 0.1, n)


def test_config_validation():
    StrengthConfig()
    with pytest.raises(UsageError):
        StrengthConfig(significance=0.0)
    with pytest.raises(UsageError):
        StrengthConfig(significance=1.0)


class TestMonotonicityScore:
    def test_clean_decreasing_series_scores_one(self):
        # higher-is-private, means 10 > 5 > 1: both pairs significant with
        # positive statistics under both tests -> m_raw = 4 -> 1.0
        series = [tight(10, seed=1), tight(5, seed=2), tight(1, seed=3)]
        cell = monotonicity_score(series, HIGHER)
        assert cell.m_raw == pytest.approx(4.0)
        assert cell.m_normalized == 1.0
        assert all(d.category == "right" for d in cell.pair_details)
        assert not any(d.peak for d in cell.pair_details)

    def test_peak_is_penalized_to_minus_one(self):
        # means 1 < 10 > 1: per test -1 (wrong) + 1 (right) - 2 (flip) = -2,
        # m_raw = -4, normalized -4/4 = -1.0
        series = [tight(1, seed=4), tight(10, seed=5), tight(1, seed=6)]
        cell = monotonicity_score(series, HIGHER)
        assert cell.m_raw == pytest.approx(-4.0)
        assert cell.m_normalized == -1.0
        peaks = [d for d in cell.pair_details if d.peak]
        assert [d.pair_index for d in peaks] == [1, 1]  # second pair, each test

    def test_lower_is_private_flips_the_expectation(self):
        series = [tight(1, seed=7), tight(5, seed=8), tight(10, seed=9)]
        cell = monotonicity_score(series, LOWER)
        assert cell.m_normalized == 1.0
        assert monotonicity_score(series, HIGHER).m_normalized == -1.0

    def test_indistinguishable_levels_score_negative(self):
        series = [tight(5, seed=s) for s in (10, 11, 12)]
        cell = monotonicity_score(series, HIGHER)
        assert cell.m_normalized < 0
        assert any(d.category == "insignificant" for d in cell.pair_details)

    def test_identical_constant_samples_are_insignificant_zeros(self):
        # degenerate tests return statistic 0 with p = 1: four pairs at
        # -0.2 each and never a peak
        const = np.full(20, 3.3)
        cell = monotonicity_score([const, const.copy(), const.copy()], HIGHER)
        assert cell.m_raw == pytest.approx(-0.8)
        assert cell.m_normalized == pytest.approx(-0.2)
        assert all(d.category == "insignificant" and not d.peak for d in cell.pair_details)

    def test_zero_statistic_never_counts_as_sign_change(self):
        # signs walk -, 0, -: the zero must neither take nor cause a peak
        # penalty; per test: -1 - 0.2 - 1 = -2.2 -> m_raw = -4.4
        b = tight(10, n=50, seed=13)
        series = [tight(1, n=50, seed=12), b, b.copy(), tight(20, n=50, seed=14)]
        cell = monotonicity_score(series, HIGHER)
        assert cell.m_raw == pytest.approx(-4.4)
        assert cell.m_normalized == pytest.approx(-4.4 / 6)
        assert not any(d.peak for d in cell.pair_details)
        middle = [d for d in cell.pair_details if d.pair_index == 1]
        assert all(d.statistic == 0.0 and d.category == "insignificant" for d in middle)

    def test_double_peak_clamps_at_minus_one(self):
        series = [tight(1, seed=20), tight(10, seed=21), tight(1, seed=22), tight(10, seed=23)]
        cell = monotonicity_score(series, HIGHER)
        assert cell.m_raw == pytest.approx(-10.0)  # (-1 +1 -1 -2 -2) * 2
        assert cell.m_normalized == -1.0

    def test_two_level_series_normalizes_by_two(self):
        series = [tight(10, seed=30), tight(1, seed=31)]
        assert monotonicity_score(series, HIGHER).m_normalized == 1.0
        assert monotonicity_score(series, LOWER).m_normalized == -1.0

    def test_shift_invariance(self):
        series = [tight(3, seed=40), tight(2, seed=41), tight(2.1, seed=42)]
        a = monotonicity_score(series, HIGHER)
        b = monotonicity_score([s + 1e4 for s in series], HIGHER)
        assert a.m_normalized == pytest.approx(b.m_normalized, abs=1e-9)
        assert [d.category for d in a.pair_details] == [d.category for d in b.pair_details]

    def test_reversed_series_with_flipped_direction_matches(self):
        rng = np.random.default_rng(50)
        series = [rng.normal(m, 1.0, 60) for m in (4, 2, 5, 1)]
        fwd = monotonicity_score(series, HIGHER)
        rev = monotonicity_score(series[::-1], LOWER)
        assert rev.m_raw == pytest.approx(fwd.m_raw, abs=1e-9)
        assert rev.m_normalized == pytest.approx(fwd.m_normalized, abs=1e-9)

    def test_determinism(self):
        series = [tight(4, seed=60), tight(3, seed=61)]
        assert monotonicity_score(series, HIGHER) == monotonicity_score(series, HIGHER)

    def test_validation(self):
        with pytest.raises(UsageError):
            monotonicity_score([tight(1)], HIGHER)
        with pytest.raises(UsageError):
            monotonicity_score([tight(1), np.array([1.0])], HIGHER)
        with pytest.raises(UsageError):
            monotonicity_score([tight(1), tight(2)], "sideways")

    def test_custom_points(self):
        series = [tight(10, seed=70), tight(5, seed=71), tight(1, seed=72)]
        config = StrengthConfig(points_right=0.5)
        cell = monotonicity_score(series, HIGHER, config)
        assert cell.m_raw == pytest.approx(2.0)
        assert cell.m_normalized == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# heat maps


def ladder_series(kind, seed):
    rng = np.random.default_rng(seed)
    if kind == "up":
        means = (1, 2, 4, 8)
    elif kind == "down":
        means = (8, 4, 2, 1)
    else:
        means = (1, 8, 1, 8)
    return [rng.normal(m, 0.1, 60) for m in means]


def full_series(kind_by_cell):
    return {
        (scenario, model): ladder_series(kind_by_cell((scenario, model)), seed=hash((scenario, model)) % 2**16)
        for scenario in SCENARIO_ORDER
        for model in MODEL_ORDER
    }


def test_evaluate_strength_all_perfect_is_100():
    hm = evaluate_strength("demo", HIGHER, full_series(lambda _: "down"))
    assert hm.overall_pct == pytest.approx(100.0)
    assert len(hm.cells) == 12
    assert hm.scenarios == SCENARIO_ORDER
    assert hm.models == MODEL_ORDER
    # row-major layout
    assert [c.scenario for c in hm.cells[:3]] == ["utah"] * 3
    assert [c.adversary_model for c in hm.cells[:3]] == list(MODEL_ORDER)


def test_evaluate_strength_all_wrong_is_0():
    hm = evaluate_strength("demo", HIGHER, full_series(lambda _: "up"))
    assert hm.overall_pct == pytest.approx(0.0)


def test_evaluate_strength_half_and_half_is_50():
    kinds = lambda key: "down" if key[1] == "uniform" else "up"
    hm = evaluate_strength(
        "demo", HIGHER, full_series(kinds), models=("uniform", "normal"),
    )
    assert hm.overall_pct == pytest.approx(50.0)


def test_evaluate_strength_missing_cell_is_named():
    series = full_series(lambda _: "down")
    del series[("kin", "normal")]
    with pytest.raises(DataError, match="kin.*normal"):
        evaluate_strength("demo", HIGHER, series)


def test_evaluate_strength_subset_of_scenarios():
    series = {("comparison", m): ladder_series("down", 3) for m in MODEL_ORDER}
    hm = evaluate_strength("demo", HIGHER, series, scenarios=("comparison",))
    assert len(hm.cells) == 3
    assert hm.overall_pct == pytest.approx(100.0)


def test_heatmap_payload_shape():
    series = {("comparison", m): ladder_series("down", 4) for m in MODEL_ORDER}
    hm = evaluate_strength("demo", LOWER, series, scenarios=("comparison",))
    payload = heatmap_payload(hm)
    assert payload["metric"] == "demo"
    assert payload["direction"] == "L"
    assert len(payload["cells"]) == 3
    for cell in payload["cells"]:
        assert set(cell) == {"scenario", "model", "m", "pairs"}
        assert len(cell["pairs"]) == 2 * 3  # two tests, three pairs
        for pair in cell["pairs"]:
            assert set(pair) == {"test", "pair", "statistic", "p", "category", "peak", "points"}


# ---------------------------------------------------------------------------
# sensitivity sweep


@pytest.fixture(scope="module")
def mixed_heatmaps():
    perfect = {("comparison", m): ladder_series("down", 7) for m in MODEL_ORDER}
    noisy = {
        ("comparison", m): [np.random.default_rng(i).normal(5, 1, 40) for i in range(4)]
        for m in MODEL_ORDER
    }
    return {
        "perfect": evaluate_strength("perfect", HIGHER, perfect, scenarios=("comparison",)),
        "noisy": evaluate_strength("noisy", HIGHER, noisy, scenarios=("comparison",)),
    }


def test_rescore_with_default_config_matches(mixed_heatmaps):
    for hm in mixed_heatmaps.values():
        for cell in hm.cells:
            assert rescore_cell(cell, StrengthConfig()) == pytest.approx(cell.m_normalized)
        assert overall_under(hm, StrengthConfig()) == pytest.approx(hm.overall_pct)


def test_sweep_identity_grid_has_zero_deviation(mixed_heatmaps):
    grids = {
        "points_right": (1.0,),
        "points_wrong": (-1.0,),
        "points_insignificant": (-0.2,),
        "points_peak": (-2.0,),
    }
    report = sensitivity_sweep(mixed_heatmaps, grids)
    assert report.grid_points == 1
    for name in mixed_heatmaps:
        assert report.summary[name]["max_abs_deviation"] == pytest.approx(0.0)
        assert report.summary[name]["frac_within_6"] == 1.0


def test_sweep_scaling_saturated_cells_changes_nothing(mixed_heatmaps):
    # doubling all point values rescales m_raw, but a cell already at the
    # clamp stays clamped, so the perfect heat map never moves
    grids = {key: (default, default * 2) for key, default in
             [("points_right", 1.0), ("points_wrong", -1.0),
              ("points_insignificant", -0.2), ("points_peak", -2.0)]}
    report = sensitivity_sweep({"perfect": mixed_heatmaps["perfect"]}, grids)
    assert report.grid_points == 16
    assert report.summary["perfect"]["max_abs_deviation"] == pytest.approx(0.0)


def test_sweep_full_grid_counts_625(mixed_heatmaps):
    report = sensitivity_sweep(mixed_heatmaps)
    assert report.grid_points == 625
    for key, values in SWEEP_GRIDS.items():
        assert len(values) == 5
    noisy = report.summary["noisy"]
    assert 0.0 <= noisy["frac_within_6"] <= 1.0
    assert noisy["max_abs_deviation"] >= 0.0
    assert report.default_overall["perfect"] == pytest.approx(100.0)
    # default grids include the default point values, so the default
    # configuration is one of the 625 evaluated combinations
    for key in SWEEP_GRIDS:
        default = getattr(StrengthConfig(), key)
        assert default in SWEEP_GRIDS[key]


def test_sweep_rejects_bad_grid(mixed_heatmaps):
    with pytest.raises(UsageError):
        sensitivity_sweep(mixed_heatmaps, {"points_right": (1.0,)})
    bad = dict(SWEEP_GRIDS)
    bad["points_peak"] = (float("nan"),)
    with pytest.raises(UsageError):
        sensitivity_sweep(mixed_heatmaps, bad)
