"""Rendering of evaluation results: heat-map SVGs, radar SVGs, violin data.

All output is built from plain string formatting with fixed float formats,
so identical inputs give byte-identical documents.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import UsageError
from .metrics import HIGHER, LOWER, REGISTRY
from .stats import gaussian_kde, mean_ci, percentile
from .strength import StrengthHeatMap

# color anchors of the strength scale: weak -> medium -> strong
_ANCHORS = (
    (-1.0, (0xFF, 0xEB, 0x3B)),  # yellow
    (0.0, (0x4C, 0xAF, 0x50)),  # green
    (1.0, (0x21, 0x96, 0xF3)),  # blue
)

_LEVEL_PALETTE = ("#D81B60", "#1E88E5", "#FFC107", "#004D40", "#5E35B1", "#F4511E")


def color_for_score(m: float) -> str:
    """Hex color for a normalized strength score in [-1, 1].

    Linear per RGB channel between the yellow/green/blue anchors, each
    channel rounded half-up.
    """
    if not isinstance(m, (int, float)) or math.isnan(m):
        raise UsageError("strength score must be a number")
    if not -1.0 <= m <= 1.0:
        raise UsageError(f"strength score {m} outside [-1, 1]")
    if m <= 0.0:
        (x0, c0), (x1, c1) = _ANCHORS[0], _ANCHORS[1]
    else:
        (x0, c0), (x1, c1) = _ANCHORS[1], _ANCHORS[2]
    t = (m - x0) / (x1 - x0)
    channels = (int(a + (b - a) * t + 0.5) for a, b in zip(c0, c1))
    return "#" + "".join(f"{c:02X}" for c in channels)


def heatmap_svg(heatmap: StrengthHeatMap) -> str:
    """Render one metric's strength heat map as an SVG document."""
    rows = heatmap.scenarios
    cols = heatmap.models
    if not heatmap.cells:
        raise UsageError("cannot render an empty heat map")
    cell_w, cell_h = 90, 48
    left, top, right, bottom = 110, 52, 20, 40
    width = left + cell_w * len(cols) + right
    height = top + cell_h * len(rows) + bottom

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#FFFFFF"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15" font-weight="bold">'
        f"{heatmap.metric} ({heatmap.overall_pct:.1f}%)</text>",
    ]
    by_key = {(c.scenario, c.adversary_model): c for c in heatmap.cells}
    for r, scenario in enumerate(rows):
        y = top + r * cell_h
        parts.append(
            f'<text x="{left - 8}" y="{y + cell_h // 2 + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{scenario}</text>'
        )
        for c, model in enumerate(cols):
            cell = by_key[(scenario, model)]
            x = left + c * cell_w
            fill = color_for_score(cell.m_normalized)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{fill}" stroke="#FFFFFF" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{x + cell_w // 2}" y="{y + cell_h // 2 + 4}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                f"{cell.m_normalized:.2f}</text>"
            )
    for c, model in enumerate(cols):
        x = left + c * cell_w + cell_w // 2
        parts.append(
            f'<text x="{x}" y="{height - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{model}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def normalize_radar_value(
    value: float, p10: float, p90: float, direction: str
) -> float:
    """Map a metric value onto the [0, 1] radar radius.

    Values are scaled between the 10th and 90th percentile bounds and
    clamped; lower-is-private metrics are inverted so a larger polygon
    always means more privacy.  Degenerate bounds plot at the middle.
    """
    if p90 == p10:
        v = 0.5
    else:
        v = min(1.0, max(0.0, (value - p10) / (p90 - p10)))
    if direction == LOWER:
        v = 1.0 - v
    return v


def radar_axis_bounds(
    values_by_metric: Mapping[str, Sequence[float]]
) -> dict[str, tuple[float, float]]:
    """Per-metric (p10, p90) bounds pooled across all ladder levels."""
    return {
        name: (percentile(np.asarray(v, float), 10.0), percentile(np.asarray(v, float), 90.0))
        for name, v in values_by_metric.items()
    }


def radar_svg(
    values_by_metric: Mapping[str, Sequence[float]],
    level_labels: Sequence[str],
    directions: Mapping[str, str] | None = None,
    plot_levels: Sequence[int] | None = None,
    bounds: Mapping[str, tuple[float, float]] | None = None,
    title: str = "",
) -> str:
    """Render a radar plot: one axis per metric, one polygon per level.

    values_by_metric holds one value per ladder level for each metric
    (all the same length).  By default the weakest, middle and strongest
    levels are plotted and percentile bounds are pooled over the full
    ladder.  Metric directions default to the registry.
    """
    axes = list(values_by_metric)
    if len(axes) < 3:
        raise UsageError("radar plots need at least three metric axes")
    lengths = {len(values_by_metric[a]) for a in axes}
    if len(lengths) != 1:
        raise UsageError("all metrics must cover the same ladder levels")
    n_levels = lengths.pop()
    if n_levels != len(level_labels):
        raise UsageError("level labels must match the ladder length")
    if directions is None:
        directions = {}
    if bounds is None:
        bounds = radar_axis_bounds(values_by_metric)
    if plot_levels is None:
        plot_levels = sorted({0, (n_levels - 1) // 2, n_levels - 1})
    for level in plot_levels:
        if not 0 <= level < n_levels:
            raise UsageError(f"level index {level} outside the ladder")

    size = 460
    cx = cy = size // 2
    radius = 150
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 40}" '
        f'viewBox="0 0 {size} {size + 40}">',
        f'<rect x="0" y="0" width="{size}" height="{size + 40}" fill="#FFFFFF"/>',
    ]
    if title:
        parts.append(
            f'<text x="{cx}" y="24" text-anchor="middle" font-family="sans-serif" '
            f'font-size="14" font-weight="bold">{title}</text>'
        )
    for ring in (0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<circle cx="{cx}" cy="{cy}" r="{ring * radius:.1f}" fill="none" '
            f'stroke="#DDDDDD" stroke-width="1"/>'
        )

    def polar(axis_index: int, r: float) -> tuple[float, float]:
        angle = -math.pi / 2 + 2 * math.pi * axis_index / len(axes)
        return cx + r * math.cos(angle), cy + r * math.sin(angle)

    for i, name in enumerate(axes):
        x, y = polar(i, radius)
        lx, ly = polar(i, radius + 24)
        parts.append(
            f'<line x1="{cx}" y1="{cy}" x2="{x:.2f}" y2="{y:.2f}" '
            f'stroke="#BBBBBB" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{lx:.2f}" y="{ly:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{name}</text>'
        )

    for k, level in enumerate(plot_levels):
        color = _LEVEL_PALETTE[k % len(_LEVEL_PALETTE)]
        points = []
        for i, name in enumerate(axes):
            direction = directions.get(
                name, REGISTRY[name].direction if name in REGISTRY else HIGHER
            )
            p10, p90 = bounds[name]
            v = normalize_radar_value(values_by_metric[name][level], p10, p90, direction)
            x, y = polar(i, v * radius)
            points.append(f"{x:.2f},{y:.2f}")
        parts.append(
            f'<polygon points="{" ".join(points)}" fill="{color}" fill-opacity="0.15" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        ly = size + 16 + 0 * k
        lx = 40 + k * ((size - 80) // max(1, len(plot_levels) - 1) if len(plot_levels) > 1 else 1)
        parts.append(
            f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{lx + 18}" y="{ly + 10}" font-family="sans-serif" '
            f'font-size="11">{level_labels[level]}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def violin_export(
    metric: str,
    samples_by_level: Mapping[str, Sequence[float]],
    confidence: float = 0.95,
) -> dict:
    """Distribution summaries per adversary level for violin plotting.

    Each level carries min/max/mean/median/quartiles, the half-width of the
    mean confidence interval, and a kernel density curve (or a spike marker
    when the sample is constant).
    """
    if not samples_by_level:
        raise UsageError("violin export needs at least one level")
    levels = []
    for label, raw in samples_by_level.items():
        values = np.asarray(raw, dtype=float)
        if values.size < 2:
            raise UsageError(f"level {label!r} needs at least two values")
        density = gaussian_kde(values)
        if density.spike_at is not None:
            kde: dict = {"spike": density.spike_at}
        else:
            kde = {"x": list(density.x), "density": list(density.density)}
        ci = mean_ci(values, confidence)
        levels.append(
            {
                "level": label,
                "min": float(values.min()),
                "max": float(values.max()),
                "mean": float(values.mean()),
                "median": percentile(values, 50.0),
                "q1": percentile(values, 25.0),
                "q3": percentile(values, 75.0),
                "ci_half_width": ci.half_width,
                "kde": kde,
            }
        )
    return {"metric": metric, "levels": levels}
