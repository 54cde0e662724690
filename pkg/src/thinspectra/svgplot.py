"""Hand-rolled minimal SVG emission for log-log error charts."""

from __future__ import annotations

import math

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 20, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf")


def _fmt(v: float) -> str:
    return format(v, ".6g")


def loglog_chart(series: dict, xlabel: str = "r", ylabel: str = "error",
                 title: str = "") -> str:
    """SVG document with one polyline per series key.

    series maps a label to a list of positive (x, y) pairs; non-positive
    points are dropped (they have no logarithm to plot).
    """
    pts = {label: [(math.log10(x), math.log10(y)) for x, y in data
                   if x > 0.0 and y > 0.0]
           for label, data in series.items()}
    flat = [p for data in pts.values() for p in data]
    if flat:
        x_lo = min(p[0] for p in flat)
        x_hi = max(p[0] for p in flat)
        y_lo = min(p[1] for p in flat)
        y_hi = max(p[1] for p in flat)
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    if x_hi - x_lo < 1e-12:
        x_hi = x_lo + 1.0
    if y_hi - y_lo < 1e-12:
        y_hi = y_lo + 1.0

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
           f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{_W // 2}" y="14" text-anchor="middle" '
                   f'font-size="13">{title}</text>')
    out.append(f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" '
               f'text-anchor="middle" font-size="12">log10({xlabel})</text>')
    out.append(f'<text x="16" y="{(_MT + _H - _MB) // 2}" text-anchor="middle" '
               f'font-size="12" transform="rotate(-90 16 {(_MT + _H - _MB) // 2})">'
               f'log10({ylabel})</text>')
    for tick in (x_lo, 0.5 * (x_lo + x_hi), x_hi):
        out.append(f'<text x="{_fmt(sx(tick))}" y="{_H - _MB + 16}" '
                   f'text-anchor="middle" font-size="10">{_fmt(tick)}</text>')
    for tick in (y_lo, 0.5 * (y_lo + y_hi), y_hi):
        out.append(f'<text x="{_ML - 6}" y="{_fmt(sy(tick) + 3)}" '
                   f'text-anchor="end" font-size="10">{_fmt(tick)}</text>')
    for idx, (label, data) in enumerate(pts.items()):
        color = _COLORS[idx % len(_COLORS)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in data)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        out.append(f'<text x="{_W - _MR - 4}" y="{_MT + 14 + 14 * idx}" '
                   f'text-anchor="end" font-size="11" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
