"""Tabular experiment records and deterministic CSV/JSONL/TSV/SVG writers.

Floats are rendered with ``repr``, Python's shortest round-trip form, so a
study rerun with the same config reproduces its output files byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ESTIMATE_COLUMNS = ("experiment", "h", "N", "q", "r", "epsilon", "t", "value", "ratio")
HARNESS_COLUMNS = ("experiment", "h", "t", "value", "ratio", "metadata")


@dataclass
class ExperimentRecord:
    """One measured cell of a sweep: identifying parameters plus value/ratio."""

    experiment: str
    h: float
    value: float
    ratio: float | None = None
    t: float | None = None
    N: float | None = None
    q: float | None = None
    r: float | None = None
    epsilon: float | None = None
    metadata: dict = field(default_factory=dict)

    def as_row(self, columns: Sequence[str]) -> list[str]:
        row = []
        for col in columns:
            val = getattr(self, col)
            if col == "metadata":
                row.append(json.dumps(val, sort_keys=True) if val else "")
            elif val is None:
                row.append("")
            elif isinstance(val, str):
                row.append(val)
            else:
                row.append(format_float(float(val)))
        return row


def format_float(x: float) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def write_csv(records: Iterable[ExperimentRecord], path, columns: Sequence[str] = ESTIMATE_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow(rec.as_row(columns))


def write_jsonl(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            obj = {
                "experiment": rec.experiment,
                "h": rec.h,
                "value": rec.value,
                "ratio": rec.ratio,
                "t": rec.t,
                "N": rec.N,
                "q": rec.q,
                "r": rec.r,
                "epsilon": rec.epsilon,
                "metadata": rec.metadata,
            }
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")


def write_loglog_tsv(records: Sequence[ExperimentRecord], path) -> None:
    """Two-column plot data: log h against log value."""
    with open(path, "w") as fh:
        fh.write("log_h\tlog_value\n")
        for rec in records:
            if rec.value <= 0 or rec.h <= 0:
                continue
            fh.write(f"{format_float(math.log(rec.h))}\t{format_float(math.log(rec.value))}\n")


def write_svg_chart(
    series: dict[str, Sequence[tuple[float, float]]],
    path,
    title: str = "",
    width: int = 640,
    height: int = 480,
) -> None:
    """Self-contained SVG line chart of one or more (x, y) series."""
    margin = 60
    points = [pt for pts in series.values() for pt in pts]
    if not points:
        raise ValueError("no data points to chart")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x: float) -> float:
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - (y - y_lo) / y_span * (height - 2 * margin)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for i, (label, pts) in enumerate(series.items()):
        color = palette[i % len(palette)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 16 * i}" font-family="sans-serif" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    for val, anchor_x in ((x_lo, margin), (x_hi, width - margin)):
        parts.append(
            f'<text x="{anchor_x}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{val:.3g}</text>'
        )
    for val, anchor_y in ((y_lo, height - margin), (y_hi, margin)):
        parts.append(
            f'<text x="{margin - 6}" y="{anchor_y + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{val:.3g}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def group_max_ratio(records: Iterable[ExperimentRecord], key: str = "h") -> dict[float, float]:
    """Maximum ``ratio`` per distinct value of ``key`` (skipping flagged records)."""
    groups: dict[float, float] = {}
    for rec in records:
        if rec.ratio is None or rec.metadata.get("skipped"):
            continue
        k = float(getattr(rec, key))
        groups[k] = max(groups.get(k, -math.inf), rec.ratio)
    return groups


def uniformity_factor(records: Iterable[ExperimentRecord], key: str = "h") -> float:
    """Spread factor max/min of the per-group maximal ratios.

    A sweep is judged uniform in ``key`` when this factor stays below 3.
    """
    groups = group_max_ratio(records, key)
    if not groups:
        raise ValueError("no usable records for uniformity check")
    hi = max(groups.values())
    lo = min(groups.values())
    if lo <= 0:
        return math.inf
    return hi / lo
