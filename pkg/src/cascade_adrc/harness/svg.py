"""Minimal self-contained SVG line charts for Bode magnitude data."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")


def bode_chart(curves: dict, markers=(), title: str = "", width: int = 720, height: int = 420) -> str:
    """Log-frequency magnitude plot; ``curves`` maps label -> FrequencyResponse."""
    left, right, top, bottom = 60, 160, 30, 40
    pw, ph = width - left - right, height - top - bottom
    xs = [math.log10(w) for c in curves.values() for w in c.omegas]
    ys = [m for c in curves.values() for m in c.magnitudes]
    x0, x1 = min(xs), max(xs)
    y0, y1 = math.floor(min(ys) / 20) * 20, math.ceil(max(ys) / 20) * 20
    if y1 == y0:
        y1 = y0 + 20

    def px(lw):
        return left + (lw - x0) / (x1 - x0) * pw

    def py(db):
        return top + (y1 - db) / (y1 - y0) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
             f'<text x="{left}" y="{top - 10}">{escape(title)}</text>']
    for dec in range(math.ceil(x0), math.floor(x1) + 1):
        x = px(dec)
        parts.append(f'<line x1="{x:.1f}" y1="{top}" x2="{x:.1f}" y2="{top + ph}" stroke="#ddd"/>')
        parts.append(f'<text x="{x:.1f}" y="{top + ph + 15}" text-anchor="middle">1e{dec}</text>')
    for db in range(int(y0), int(y1) + 1, 20):
        y = py(db)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 5}" y="{y + 4:.1f}" text-anchor="end">{db}</text>')
    for w in markers:
        if w > 0 and x0 <= math.log10(w) <= x1:
            x = px(math.log10(w))
            parts.append(f'<line x1="{x:.1f}" y1="{top}" x2="{x:.1f}" y2="{top + ph}" '
                         f'stroke="#000" stroke-dasharray="4 3"/>')
    for idx, (label, c) in enumerate(curves.items()):
        color = COLORS[idx % len(COLORS)]
        pts = " ".join(f"{px(math.log10(w)):.1f},{py(m):.1f}" for w, m in zip(c.omegas, c.magnitudes))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        ly = top + 12 + 14 * idx
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 35}" y="{ly}">{escape(label)}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 5}" text-anchor="middle">omega [rad/s]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
