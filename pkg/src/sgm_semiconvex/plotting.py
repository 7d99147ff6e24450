"""Minimal deterministic SVG line plots (polylines, axes, ticks, legend)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=64, right=20, top=36, bottom=48)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def line_plot_svg(series, title="", xlabel="", ylabel="", vlines=()):
    """``series``: list of ``(label, x, y)``; ``vlines``: list of ``(label, x)``.

    Output depends only on the inputs (fixed number formatting, no timestamps).
    """
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / ((x1 - x0) or 1.0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - y) / ((y1 - y0) or 1.0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{MARGIN["top"] + ph}" x2="{_fmt(px(t))}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" font-size="11">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_fmt(py(t))}" x2="{MARGIN["left"]}" y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end" font-size="11">{t:.3g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for label, xv in vlines:
        out.append(
            f'<line x1="{_fmt(px(xv))}" y1="{MARGIN["top"]}" x2="{_fmt(px(xv))}" y2="{MARGIN["top"] + ph}" '
            'stroke="gray" stroke-dasharray="4 3"/>'
        )
        out.append(f'<text x="{_fmt(px(xv) + 4)}" y="{MARGIN["top"] + 14}" font-size="11" fill="gray">{escape(label)}</text>')
    for k, (label, x, y) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + ph - 14 * (len(series) - k)
        out.append(f'<line x1="{MARGIN["left"] + pw - 110}" y1="{ly - 4}" x2="{MARGIN["left"] + pw - 90}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN["left"] + pw - 85}" y="{ly}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
