"""Minimal hand-rolled SVG line plots (polylines + axes + legend).

Kept dependency-free on purpose: the CSV next to each plot is the
authoritative artifact, the SVG is a quick look.  Output is deterministic
for given inputs (no timestamps, fixed float formatting).
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 34, 46


def _transform(vals, log):
    out = []
    for v in vals:
        if log:
            out.append(math.log10(max(float(v), 1e-300)))
        else:
            out.append(float(v))
    return out


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt_tick(v, log):
    x = 10.0 ** v if log else v
    if x != 0 and (abs(x) >= 1e4 or abs(x) < 1e-3):
        return f"{x:.1e}"
    return f"{x:g}"


def line_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False,
              width: int = 640, height: int = 440) -> None:
    """Write a line plot of ``series`` = [(label, xs, ys), ...] to ``path``."""
    pts = []
    for _, xs, ys in series:
        if len(xs) != len(ys):
            raise ValueError("series x/y lengths differ")
        pts.append((_transform(xs, logx), _transform(ys, logy)))
    all_x = [v for tx, _ in pts for v in tx]
    all_y = [v for _, ty in pts for v in ty]
    if not all_x:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    x_pad = 0.05 * (x_hi - x_lo) or 0.5
    y_pad = 0.05 * (y_hi - y_lo) or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(v):
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return _MARGIN_T + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    # axes box
    out.append(f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
               'fill="none" stroke="#333" stroke-width="1"/>')
    # ticks + grid
    for tv in _ticks(x_lo + x_pad, x_hi - x_pad):
        X = px(tv)
        out.append(f'<line x1="{X:.2f}" y1="{_MARGIN_T}" x2="{X:.2f}" '
                   f'y2="{_MARGIN_T + plot_h}" stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{X:.2f}" y="{_MARGIN_T + plot_h + 16}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt_tick(tv, logx)}</text>')
    for tv in _ticks(y_lo + y_pad, y_hi - y_pad):
        Y = py(tv)
        out.append(f'<line x1="{_MARGIN_L}" y1="{Y:.2f}" x2="{_MARGIN_L + plot_w}" '
                   f'y2="{Y:.2f}" stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{_MARGIN_L - 6}" y="{Y + 4:.2f}" font-size="11" '
                   f'text-anchor="end" font-family="sans-serif">{_fmt_tick(tv, logy)}</text>')
    # series
    for i, ((label, _, _), (tx, ty)) in enumerate(zip(series, pts)):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, ty))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   'stroke-width="1.8"/>')
        ly = _MARGIN_T + 14 + 16 * i
        lx = width - _MARGIN_R - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.8"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-size="11" '
                   f'font-family="sans-serif">{label}</text>')
    # labels
    if title:
        out.append(f'<text x="{width / 2:.0f}" y="20" font-size="13" text-anchor="middle" '
                   f'font-family="sans-serif">{title}</text>')
    if xlabel:
        out.append(f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{height - 10}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{_MARGIN_T + plot_h / 2:.0f}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2:.0f})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out))
        fh.write("\n")
