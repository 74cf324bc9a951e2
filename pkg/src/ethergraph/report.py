"""Deterministic report emitters: series CSVs, markdown tables, SVG charts.

Identical logical inputs must produce byte-identical files, so everything
here formats numbers with fixed precision, sorts metadata keys, and writes
``\\n`` line endings regardless of platform. Charts are self-contained
SVG 1.1 documents with no external references.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .analytics import RankedAccount, TIE_RULE_NOTE, VolumeSeries
from .temporal import ActivitySeries

SVG_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
_MARKER_LIMIT = 400  # draw point markers only for reasonably small series


def series_csv(series: VolumeSeries | ActivitySeries) -> str:
    """Render a series as CSV text with a trailing newline."""
    lines = []
    if isinstance(series, VolumeSeries):
        lines.append("date,value")
        for day, count in zip(series.days, series.counts):
            lines.append(f"{day.isoformat()},{count}")
    elif isinstance(series, ActivitySeries):
        lines.append("date,cumulative,new,active")
        for day, cumulative, new, active in zip(
            series.days, series.cumulative, series.new, series.active
        ):
            lines.append(f"{day.isoformat()},{cumulative},{new},{active}")
    else:
        raise TypeError(f"cannot serialize {type(series).__name__} as a series CSV")
    return "\n".join(lines) + "\n"


def emit_series_csv(series: VolumeSeries | ActivitySeries, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(series_csv(series), encoding="utf-8", newline="")
    return path


def _md_cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def render_markdown_table(
    ranked: Sequence[RankedAccount], caption: str, footer: str | None = TIE_RULE_NOTE
) -> str:
    """Render a ranking as a three-column markdown table with a caption line."""
    lines = [caption, ""]
    lines.append("| Address | Tag | Degree Growth |")
    lines.append("| --- | --- | --- |")
    for row in ranked:
        lines.append(f"| {row.short_address} | {_md_cell(row.label)} | {row.delta} |")
    if footer:
        lines.append("")
        lines.append(footer)
    return "\n".join(lines) + "\n"


@dataclass(slots=True)
class ChartSeries:
    name: str
    xs: Sequence[float]
    ys: Sequence[float]


@dataclass(slots=True)
class AxisSpec:
    title: str
    subtitle: str = ""
    x_label: str = ""
    y_label: str = ""
    x_log: bool = False
    y_log: bool = False
    x_ticks: Sequence[tuple[float, str]] | None = None  # explicit positions + labels
    metadata: dict = field(default_factory=dict)


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw_step = (hi - lo) / target
    magnitude = 10.0 ** math.floor(math.log10(raw_step))
    residual = raw_step / magnitude
    if residual >= 7.5:
        step = 10 * magnitude
    elif residual >= 3.5:
        step = 5 * magnitude
    elif residual >= 1.5:
        step = 2 * magnitude
    else:
        step = magnitude
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + step * 1e-9:
        ticks.append(value)
        value += step
    return ticks


def _decade_ticks(lo_exp: int, hi_exp: int) -> list[float]:
    return [10.0**e for e in range(lo_exp, hi_exp + 1)]


def _tick_label(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:g}"


class _Scale:
    """Maps data coordinates to pixel coordinates, linear or log10."""

    def __init__(self, lo: float, hi: float, pix_lo: float, pix_hi: float, log: bool):
        self.log = log
        if log:
            if lo <= 0:
                raise ValueError("log axes require strictly positive values")
            lo_exp = math.floor(math.log10(lo) + 1e-12)
            hi_exp = math.ceil(math.log10(hi) - 1e-12)
            if hi_exp <= lo_exp:
                hi_exp = lo_exp + 1
            self.lo, self.hi = float(lo_exp), float(hi_exp)
            self.ticks = _decade_ticks(lo_exp, hi_exp)
        else:
            if hi <= lo:
                pad = 1.0 if hi == 0 else abs(hi) * 0.05
                lo, hi = lo - pad, hi + pad
            else:
                pad = (hi - lo) * 0.05
                lo, hi = lo - pad, hi + pad
            self.lo, self.hi = lo, hi
            self.ticks = _nice_ticks(lo, hi)
        self.pix_lo = pix_lo
        self.pix_hi = pix_hi

    def __call__(self, value: float) -> float:
        v = math.log10(value) if self.log else value
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


def render_line_chart(
    series: Sequence[ChartSeries], axes: AxisSpec, path: str | Path | None = None
) -> str:
    """Render one or more series as a self-contained SVG line chart.

    The legend carries one entry per series; point markers are added for
    small series so sparse curves (like CCDFs) stay readable. Output is
    deterministic: fixed palette, fixed float formatting, sorted metadata.
    """
    if not series:
        raise ValueError("at least one series is required")
    for s in series:
        if len(s.xs) != len(s.ys):
            raise ValueError(f"series {s.name!r} has mismatched x/y lengths")
    non_empty = [s for s in series if len(s.xs) > 0]
    if not non_empty:
        raise ValueError("all series are empty")

    width, height = 860, 480
    x0, x1 = 70.0, 650.0
    y0, y1 = 64.0, 425.0

    all_x = [v for s in non_empty for v in s.xs]
    all_y = [v for s in non_empty for v in s.ys]
    x_scale = _Scale(min(all_x), max(all_x), x0, x1, axes.x_log)
    y_scale = _Scale(min(all_y), max(all_y), y1, y0, axes.y_log)  # pixel y grows downward

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f"<title>{escape(axes.title)}</title>")
    if axes.metadata:
        out.append(f"<desc>{escape(json.dumps(axes.metadata, sort_keys=True))}</desc>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>')
    out.append(
        f'<text x="{x0:.2f}" y="26" font-family="Helvetica, Arial, sans-serif" '
        f'font-size="16" fill="#111111">{escape(axes.title)}</text>'
    )
    if axes.subtitle:
        out.append(
            f'<text x="{x0:.2f}" y="46" font-family="Helvetica, Arial, sans-serif" '
            f'font-size="11" fill="#555555">{escape(axes.subtitle)}</text>'
        )

    x_mode = "log" if axes.x_log else "linear"
    y_mode = "log" if axes.y_log else "linear"
    out.append(f'<g class="plot" data-x-scale="{x_mode}" data-y-scale="{y_mode}">')
    out.append(
        f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>'
    )

    if axes.x_ticks is not None:
        x_ticks = [(float(v), label) for v, label in axes.x_ticks]
    else:
        x_ticks = [(v, _tick_label(v)) for v in x_scale.ticks]
    for value, label in x_ticks:
        px = x_scale(value)
        if px < x0 - 0.01 or px > x1 + 0.01:
            continue
        out.append(
            f'<line x1="{px:.2f}" y1="{y0:.2f}" x2="{px:.2f}" y2="{y1:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{px:.2f}" y1="{y1:.2f}" x2="{px:.2f}" y2="{y1 + 5:.2f}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{y1 + 18:.2f}" font-family="Helvetica, Arial, sans-serif" '
            f'font-size="10" fill="#333333" text-anchor="middle">{escape(label)}</text>'
        )
    for value in y_scale.ticks:
        py = y_scale(value)
        if py > y1 + 0.01 or py < y0 - 0.01:
            continue
        out.append(
            f'<line x1="{x0:.2f}" y1="{py:.2f}" x2="{x1:.2f}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x0 - 6:.2f}" y="{py + 3:.2f}" font-family="Helvetica, Arial, sans-serif" '
            f'font-size="10" fill="#333333" text-anchor="end">{escape(_tick_label(value))}</text>'
        )

    for i, s in enumerate(series):
        if not s.xs:
            continue
        color = SVG_PALETTE[i % len(SVG_PALETTE)]
        points = [(x_scale(x), y_scale(y)) for x, y in zip(s.xs, s.ys)]
        if len(points) > 1:
            coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in points)
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
            )
        if len(points) <= _MARKER_LIMIT:
            for px, py in points:
                out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="{color}"/>')
    out.append("</g>")

    if axes.x_label:
        out.append(
            f'<text x="{(x0 + x1) / 2:.2f}" y="{height - 12}" '
            f'font-family="Helvetica, Arial, sans-serif" font-size="12" fill="#111111" '
            f'text-anchor="middle">{escape(axes.x_label)}</text>'
        )
    if axes.y_label:
        out.append(
            f'<text x="18" y="{(y0 + y1) / 2:.2f}" font-family="Helvetica, Arial, sans-serif" '
            f'font-size="12" fill="#111111" text-anchor="middle" '
            f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">{escape(axes.y_label)}</text>'
        )

    legend_x = x1 + 18
    for i, s in enumerate(series):
        color = SVG_PALETTE[i % len(SVG_PALETTE)]
        ly = y0 + 8 + i * 22
        out.append(
            f'<rect class="legend-swatch" x="{legend_x:.2f}" y="{ly:.2f}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        out.append(
            f'<text x="{legend_x + 18:.2f}" y="{ly + 10:.2f}" '
            f'font-family="Helvetica, Arial, sans-serif" font-size="11" '
            f'fill="#111111">{escape(s.name)}</text>'
        )

    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


@dataclass(slots=True)
class Artifact:
    name: str
    kind: str  # csv | markdown | svg | json
    content: str


@dataclass(slots=True)
class ReportBundle:
    """A run's metadata plus its named artifacts, ready to be written out."""

    metadata: dict
    artifacts: list[Artifact] = field(default_factory=list)

    def add(self, name: str, kind: str, content: str) -> None:
        self.artifacts.append(Artifact(name=name, kind=kind, content=content))

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, sort_keys=True, indent=2) + "\n"

    def write(self, outdir: str | Path) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        meta_path = outdir / "metadata.json"
        meta_path.write_text(self.metadata_json(), encoding="utf-8", newline="")
        written.append(meta_path)
        for artifact in self.artifacts:
            path = outdir / artifact.name
            path.write_text(artifact.content, encoding="utf-8", newline="")
            written.append(path)
        return written
