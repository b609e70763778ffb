"""Writers for CSV tables, JSON documents, SVG plots and the run manifest."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["format_number", "emit_csv", "emit_json", "emit_svg_plot", "Series", "sha256_file", "axis_map"]


def format_number(v) -> str:
    """Shortest round-trip text for a number (``repr`` of a Python float)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(header: Sequence[str], rows: Iterable[Sequence], path: str | Path) -> Path:
    path = Path(path)
    width = len(header)
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} fields, header has {width}")
        lines.append(",".join(format_number(v) for v in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.ndarray, np.generic)):
        return _plain(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def emit_json(doc, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Series:
    """One labelled curve for :func:`emit_svg_plot`."""

    def __init__(self, label: str, x, y, scatter: bool = False):
        self.label = label
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.scatter = scatter
        if self.x.shape != self.y.shape:
            raise ValueError(f"series {label!r}: x and y lengths differ")


WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=30, bottom=50)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def axis_map(lo: float, hi: float, pix_lo: float, pix_hi: float, log: bool = False):
    """Affine (or log-affine) map from data range ``[lo, hi]`` to pixels."""
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
    span = hi - lo or 1.0

    def f(v):
        v = math.log10(v) if log else v
        return pix_lo + (v - lo) / span * (pix_hi - pix_lo)

    return f


def _ticks(lo, hi, log, count=5):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**e for e in range(a, b + 1) if lo <= 10.0**e <= hi] or [lo, hi]
    return list(np.linspace(lo, hi, count))


def emit_svg_plot(
    series: Sequence[Series],
    xlabel: str,
    ylabel: str,
    path: str | Path,
    title: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> Path:
    """
    Write a minimal SVG 1.1 chart: axes with tick labels, one polyline (or
    group of circles) per series and a legend.  In log mode non-positive
    points are dropped.
    """
    if not series:
        raise ValueError("emit_svg_plot needs at least one series")
    cleaned = []
    for s in series:
        keep = np.isfinite(s.x) & np.isfinite(s.y)
        if log_x:
            keep &= s.x > 0
        if log_y:
            keep &= s.y > 0
        cleaned.append((s, s.x[keep], s.y[keep]))
    xs = np.concatenate([c[1] for c in cleaned])
    ys = np.concatenate([c[2] for c in cleaned])
    if xs.size == 0:
        raise ValueError("emit_svg_plot: no plottable points")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x0 == x1:
        x0, x1 = (x0 / 2, x0 * 2) if log_x else (x0 - 1, x1 + 1)
    if y0 == y1:
        y0, y1 = (y0 / 2, y0 * 2) if log_y else (y0 - 1, y1 + 1)

    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    fx = axis_map(x0, x1, left, right, log_x)
    fy = axis_map(y0, y1, bottom, top, log_y)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{(left + right) / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(f'<g class="axes" stroke="black" fill="none">'
               f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/>'
               f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"/></g>')
    for v in _ticks(x0, x1, log_x):
        px = fx(v)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text class="tick" x="{px:.2f}" y="{bottom + 18}" text-anchor="middle">{v:.4g}</text>')
    for v in _ticks(y0, y1, log_y):
        py = fy(v)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text class="tick" x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">{escape(ylabel)}</text>')

    for i, (s, x, y) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        pts = [(fx(a), fy(b)) for a, b in zip(x, y)]
        if s.scatter:
            circles = "".join(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2"/>' for a, b in pts)
            out.append(f'<g class="series" fill="{color}">{circles}</g>')
        else:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.2" points="{coords}"/>')

    legend = ['<g class="legend">']
    for i, (s, _, _) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        ly = top + 12 + 16 * i
        legend.append(f'<line x1="{right + 10}" y1="{ly}" x2="{right + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        legend.append(f'<text x="{right + 35}" y="{ly + 4}">{escape(s.label)}</text>')
    legend.append("</g>")
    out.extend(legend)
    out.append("</svg>")

    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
