"""Minimal SVG scatter plots of sweep CSV columns (no plotting dependency)."""

from __future__ import annotations

import csv
import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 1000, 600
MARGIN = 70


def read_columns(path, x: str, y: str) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        pts = []
        for row in rows:
            try:
                pts.append((float(row[x]), float(row[y])))
            except (KeyError, ValueError):
                continue
    return pts


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def scatter_svg(points: list[tuple[float, float]], xlabel: str, ylabel: str, title: str = "") -> str:
    xs = [p[0] for p in points] or [0.0]
    ys = [p[1] for p in points] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(v):
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{HEIGHT - MARGIN + 20}" font-size="12" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN - 8}" y="{sy(t) + 4:.1f}" font-size="12" '
                   f'text-anchor="end">{t:.4g}</text>')
    for x, y in points:
        if math.isfinite(x) and math.isfinite(y):
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 20}" font-size="14" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{HEIGHT / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {HEIGHT / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="30" font-size="16" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
