"""Monotonicity scoring of privacy metrics against adversary ladders.

A strong metric should move monotonically as the adversary gets stronger.
For each (scenario, adversary model) cell the score walks successive level
pairs, applies Welch's t-test and the Wilcoxon rank-sum test to each pair,
awards points for significant moves in the expected direction, penalizes
wrong-direction moves, insignificance, and sign flips (peaks), and finally
normalizes to [-1, 1].  Heat maps collect the cells per metric, and the
sensitivity sweep re-scores recorded test outcomes under a grid of
alternative point values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, UsageError
from .metrics import HIGHER, LOWER
from .stats import rank_sum_test, welch_t_test

#: heat-map row order
SCENARIO_ORDER = ("utah", "kin", "comparison", "alzheimer")
#: heat-map column order
MODEL_ORDER = ("uniform", "normal", "reference")

TEST_NAMES = ("welch", "rank_sum")
_TEST_FNS = {"welch": welch_t_test, "rank_sum": rank_sum_test}

#: default sweep grids; each contains the default point value
SWEEP_GRIDS = {
    "points_right": (0.5, 0.75, 1.0, 1.5, 2.0),
    "points_wrong": (-2.0, -1.5, -1.0, -0.75, -0.5),
    "points_insignificant": (-1.0, -0.5, -0.2, -0.1, 0.0),
    "points_peak": (-4.0, -3.0, -2.0, -1.5, -1.0),
}


@dataclass(frozen=True)
class StrengthConfig:
    points_right: float = 1.0
    points_wrong: float = -1.0
    points_insignificant: float = -0.2
    points_peak: float = -2.0
    significance: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.significance < 1.0:
            raise UsageError("significance level must lie in (0, 1)")


@dataclass(frozen=True)
class PairDetail:
    """Outcome of one test on one successive level pair.

    ``category`` records which scoring branch fired (right / wrong / zero /
    insignificant); ``points`` is the total awarded including any peak
    penalty, so a cell's raw score is the sum of its details' points.
    """

    test: str
    pair_index: int
    statistic: float
    p_value: float
    category: str
    peak: bool
    points: float


@dataclass
class StrengthCell:
    scenario: str
    adversary_model: str
    m_raw: float
    m_normalized: float
    pair_details: list[PairDetail]


@dataclass
class StrengthHeatMap:
    metric: str
    direction: str
    scenarios: tuple[str, ...]
    models: tuple[str, ...]
    cells: list[StrengthCell]  # row-major: scenarios x models
    overall_pct: float


def _branch_points(category: str, config: StrengthConfig) -> float:
    if category == "right":
        return config.points_right
    if category == "wrong":
        return config.points_wrong
    if category == "insignificant":
        return config.points_insignificant
    return 0.0  # a significant but exactly-zero statistic scores nothing


def _normalize(m_raw: float, n_details: int) -> float:
    # maximum attainable score: +1 on every pair under both tests
    return min(1.0, max(-1.0, m_raw / n_details))


def monotonicity_score(
    series: Sequence[np.ndarray],
    direction: str,
    config: StrengthConfig = StrengthConfig(),
    scenario: str = "",
    adversary_model: str = "",
) -> StrengthCell:
    """Score one metric series ordered weakest -> strongest adversary.

    Each test is applied to (weaker, stronger) pairs, so the expected
    statistic sign is positive for higher-is-private metrics and negative
    for lower-is-private ones.  A sign flip against the previous pair's
    statistic (zero never counts as a sign) draws the peak penalty on top
    of the branch points; the previous statistic is remembered whether or
    not the pair was significant.
    """
    if direction not in (HIGHER, LOWER):
        raise UsageError(f"unknown metric direction {direction!r}")
    if len(series) < 2:
        raise UsageError("monotonicity needs at least two strength levels")
    samples = [np.asarray(s, dtype=float) for s in series]
    for i, s in enumerate(samples):
        if s.size < 2:
            raise UsageError(f"strength level {i} has fewer than two values")

    expected_sign = 1.0 if direction == HIGHER else -1.0
    details: list[PairDetail] = []
    m_raw = 0.0
    for test in TEST_NAMES:
        fn = _TEST_FNS[test]
        prev_statistic = 0.0
        for i in range(len(samples) - 1):
            result = fn(samples[i], samples[i + 1])
            stat = result.statistic
            if result.p_value < config.significance:
                if stat * expected_sign > 0:
                    category = "right"
                elif stat * expected_sign < 0:
                    category = "wrong"
                else:
                    category = "zero"
            else:
                category = "insignificant"
            peak = (stat > 0 > prev_statistic) or (stat < 0 < prev_statistic)
            points = _branch_points(category, config) + (config.points_peak if peak else 0.0)
            details.append(
                PairDetail(test, i, stat, result.p_value, category, peak, points)
            )
            m_raw += points
            prev_statistic = stat
    return StrengthCell(
        scenario=scenario,
        adversary_model=adversary_model,
        m_raw=m_raw,
        m_normalized=_normalize(m_raw, len(details)),
        pair_details=details,
    )


def rescore_cell(cell: StrengthCell, config: StrengthConfig) -> float:
    """Recompute a cell's normalized score under different point values.

    Uses the recorded branch categories and peak flags, so no statistical
    test is re-run; the significance level is assumed unchanged.
    """
    m_raw = sum(
        _branch_points(d.category, config) + (config.points_peak if d.peak else 0.0)
        for d in cell.pair_details
    )
    return _normalize(m_raw, len(cell.pair_details))


def evaluate_strength(
    metric: str,
    direction: str,
    series: Mapping[tuple[str, str], Sequence[np.ndarray]],
    config: StrengthConfig = StrengthConfig(),
    scenarios: Sequence[str] = SCENARIO_ORDER,
    models: Sequence[str] = MODEL_ORDER,
) -> StrengthHeatMap:
    """Build one metric's heat map over scenarios (rows) and models (columns)."""
    cells = []
    for scenario in scenarios:
        for model in models:
            if (scenario, model) not in series:
                raise DataError(f"no metric series for scenario {scenario!r}, model {model!r}")
            cells.append(
                monotonicity_score(
                    series[(scenario, model)], direction, config, scenario, model
                )
            )
    overall = float(np.mean([(c.m_normalized + 1.0) / 2.0 * 100.0 for c in cells]))
    return StrengthHeatMap(
        metric=metric,
        direction=direction,
        scenarios=tuple(scenarios),
        models=tuple(models),
        cells=cells,
        overall_pct=overall,
    )


def overall_under(heatmap: StrengthHeatMap, config: StrengthConfig) -> float:
    """The heat map's overall percentage re-scored under another config."""
    scores = [rescore_cell(c, config) for c in heatmap.cells]
    return float(np.mean([(s + 1.0) / 2.0 * 100.0 for s in scores]))


def heatmap_payload(heatmap: StrengthHeatMap) -> dict:
    """JSON-ready form of a heat map."""
    return {
        "metric": heatmap.metric,
        "direction": "H" if heatmap.direction == HIGHER else "L",
        "overall_pct": heatmap.overall_pct,
        "cells": [
            {
                "scenario": c.scenario,
                "model": c.adversary_model,
                "m": c.m_normalized,
                "pairs": [
                    {
                        "test": d.test,
                        "pair": d.pair_index,
                        "statistic": d.statistic,
                        "p": d.p_value,
                        "category": d.category,
                        "peak": d.peak,
                        "points": d.points,
                    }
                    for d in c.pair_details
                ],
            }
            for c in heatmap.cells
        ],
    }


@dataclass
class SweepReport:
    """Sensitivity of overall strength to the choice of point values."""

    grid_points: int
    default_overall: dict[str, float]
    summary: dict[str, dict[str, float]]  # metric -> mean/max_abs_deviation/frac_within_6


def sensitivity_sweep(
    heatmaps: Mapping[str, StrengthHeatMap],
    grids: Mapping[str, Sequence[float]] | None = None,
    config: StrengthConfig = StrengthConfig(),
    tolerance_pct: float = 6.0,
) -> SweepReport:
    """Full-factorial re-scoring over point-value grids.

    For every combination of the four point parameters the recorded cells
    are re-scored and each metric's overall percentage recomputed.  The
    summary reports, per metric, the mean overall across the grid, the
    maximum absolute deviation from the default-config overall, and the
    fraction of grid points within ``tolerance_pct`` percentage points.
    """
    if grids is None:
        grids = SWEEP_GRIDS
    for key in ("points_right", "points_wrong", "points_insignificant", "points_peak"):
        if key not in grids or len(grids[key]) == 0:
            raise UsageError(f"sweep grid missing values for {key}")
        if not all(np.isfinite(v) for v in grids[key]):
            raise UsageError(f"sweep grid for {key} has non-finite values")

    default_overall = {name: hm.overall_pct for name, hm in heatmaps.items()}
    overalls: dict[str, list[float]] = {name: [] for name in heatmaps}
    count = 0
    for right, wrong, insig, peak in itertools.product(
        grids["points_right"],
        grids["points_wrong"],
        grids["points_insignificant"],
        grids["points_peak"],
    ):
        point_config = StrengthConfig(
            points_right=right,
            points_wrong=wrong,
            points_insignificant=insig,
            points_peak=peak,
            significance=config.significance,
        )
        count += 1
        for name, hm in heatmaps.items():
            overalls[name].append(overall_under(hm, point_config))

    summary = {}
    for name, values in overalls.items():
        arr = np.asarray(values)
        deviations = np.abs(arr - default_overall[name])
        summary[name] = {
            "mean": float(arr.mean()),
            "max_abs_deviation": float(deviations.max()),
            "frac_within_6": float((deviations <= tolerance_pct).mean()),
        }
    return SweepReport(grid_points=count, default_overall=default_overall, summary=summary)
