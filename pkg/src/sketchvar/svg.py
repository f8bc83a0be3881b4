"""Minimal SVG line charts with optional error bars."""
from __future__ import annotations

import math
from html import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60


def _ticks(lo: float, hi: float, count: int = 5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def line_chart(series, *, title: str = "", xlabel: str = "", ylabel: str = "", log_y: bool = False) -> str:
    """Render ``series`` as an SVG document.

    ``series`` is a list of ``(label, xs, ys, errs)``; ``errs`` may be None.
    With ``log_y`` non-positive values are dropped.
    """
    pts = []
    for _, xs, ys, errs in series:
        for i, (x, y) in enumerate(zip(xs, ys)):
            e = errs[i] if errs is not None else 0.0
            lo, hi = y - e, y + e
            if log_y:
                if y <= 0:
                    continue
                lo = max(lo, y / 10.0)
            pts.append((x, lo, hi))
    if not pts:
        pts = [(0.0, 0.0, 1.0)]
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(p[1] for p in pts), max(p[2] for p in pts)
    if xmax == xmin:
        xmin, xmax = xmin - 1, xmax + 1
    fy = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    ylo, yhi = fy(ymin), fy(ymax)
    if yhi == ylo:
        ylo, yhi = ylo - 1, yhi + 1

    def px(x):
        return LEFT + (x - xmin) / (xmax - xmin) * (W - LEFT - RIGHT)

    def py(y):
        return H - BOTTOM - (fy(y) - ylo) / (yhi - ylo) * (H - TOP - BOTTOM)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 15}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
        f'<text x="18" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(xmin, xmax):
        out.append(f'<line x1="{px(t):.1f}" y1="{H - BOTTOM}" x2="{px(t):.1f}" y2="{H - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{H - BOTTOM + 20}" text-anchor="middle" font-size="11">{t:.3g}</text>')
    for t in _ticks(ylo, yhi):
        v = 10**t if log_y else t
        y = H - BOTTOM - (t - ylo) / (yhi - ylo) * (H - TOP - BOTTOM)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.1f}" x2="{LEFT}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{v:.3g}</text>')
    for k, (label, xs, ys, errs) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        keep = [i for i, y in enumerate(ys) if not (log_y and y <= 0)]
        poly = " ".join(f"{px(xs[i]):.1f},{py(ys[i]):.1f}" for i in keep)
        out.append(f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="2"/>')
        for i in keep:
            x, y = px(xs[i]), py(ys[i])
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
            if errs is not None and errs[i] > 0:
                lo = ys[i] - errs[i]
                lo = max(lo, ys[i] / 10.0) if log_y else lo
                y0, y1 = py(lo), py(ys[i] + errs[i])
                out.append(f'<line x1="{x:.1f}" y1="{y0:.1f}" x2="{x:.1f}" y2="{y1:.1f}" stroke="{color}"/>')
                for yy in (y0, y1):
                    out.append(f'<line x1="{x - 4:.1f}" y1="{yy:.1f}" x2="{x + 4:.1f}" y2="{yy:.1f}" stroke="{color}"/>')
        out.append(f'<text x="{W - RIGHT - 150}" y="{TOP + 16 * (k + 1)}" font-size="12" fill="{color}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
