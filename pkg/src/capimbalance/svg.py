"""Minimal hand-written SVG output: line charts, heatmaps and dendrograms."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .cluster import Dendrogram, leaf_order

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
# viridis anchors, low -> high
_RAMP = np.array(
    [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float
)


class Canvas:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def rect(self, x, y, w, h, fill, extra: str = "") -> None:
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"{extra}/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0) -> None:
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, xs, ys, stroke="#000", width=1.5) -> None:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def text(self, x, y, s, size=11, anchor="start", rotate: float | None = None) -> None:
        tr = f' transform="rotate({rotate:.0f} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}"{tr}>{escape(str(s))}</text>'
        )

    def render(self, title: str | None = None) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width:.0f}" '
            f'height="{self.height:.0f}" viewBox="0 0 {self.width:.0f} {self.height:.0f}">\n'
        )
        body = [f"<title>{escape(title)}</title>"] if title else []
        body.append(f'<rect x="0" y="0" width="{self.width:.0f}" height="{self.height:.0f}" fill="#fff"/>')
        return head + "\n".join(body + self.parts) + "\n</svg>\n"

    def save(self, path: str | Path, title: str | None = None) -> None:
        Path(path).write_text(self.render(title), encoding="utf-8")


def color(value: float, lo: float, hi: float) -> str:
    z = 0.0 if hi <= lo else min(max((value - lo) / (hi - lo), 0.0), 1.0)
    pos = z * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    rgb = _RAMP[i] + (pos - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#{:02x}{:02x}{:02x}".format(*(int(round(c)) for c in rgb))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def line_chart(
    path: str | Path,
    index: Sequence,
    series: dict[str, np.ndarray],
    *,
    title: str,
    ylabel: str = "",
) -> None:
    """One polyline per named series over a shared categorical x index."""
    W, H = 900.0, 420.0
    left, right, top, bottom = 70.0, 150.0, 40.0, 60.0
    c = Canvas(W, H)
    pw, ph = W - left - right, H - top - bottom
    allv = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    lo, hi = float(allv.min()), float(allv.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    n = len(index)

    def sx(i):
        return left + (pw * i / (n - 1) if n > 1 else pw / 2)

    def sy(v):
        return top + ph * (1 - (v - lo) / (hi - lo))

    c.line(left, top + ph, left + pw, top + ph)
    c.line(left, top, left, top + ph)
    for v in _ticks(lo, hi):
        c.line(left - 4, sy(v), left, sy(v))
        c.text(left - 6, sy(v) + 4, f"{v:.3g}", size=10, anchor="end")
    step = max(1, n // 8)
    for i in range(0, n, step):
        c.line(sx(i), top + ph, sx(i), top + ph + 4)
        c.text(sx(i), top + ph + 18, index[i], size=10, anchor="middle")
    for k, (name, vals) in enumerate(series.items()):
        col = PALETTE[k % len(PALETTE)]
        c.polyline([sx(i) for i in range(n)], [sy(v) for v in vals], stroke=col)
        ly = top + 14 + 18 * k
        c.line(left + pw + 15, ly - 4, left + pw + 35, ly - 4, stroke=col, width=2)
        c.text(left + pw + 40, ly, name, size=11)
    c.text(W / 2, 24, title, size=14, anchor="middle")
    if ylabel:
        c.text(18, top + ph / 2, ylabel, size=11, anchor="middle", rotate=-90)
    c.save(path, title)


def _draw_dendrogram(c: Canvas, dend: Dendrogram, x0: float, y0: float, width: float, height: float) -> list[int]:
    order = leaf_order(dend)
    n = dend.n_leaves
    slot = width / n
    pos = {leaf: x0 + slot * (i + 0.5) for i, leaf in enumerate(order)}
    hmax = float(dend.heights.max()) if dend.merges else 1.0
    hmax = hmax if hmax > 0 else 1.0

    def ypix(h):
        return y0 + height * (1 - h / hmax)

    level = {leaf: 0.0 for leaf in range(n)}
    for k, m in enumerate(dend.merges):
        xl, xr = pos[m.left], pos[m.right]
        yl, yr, ym = ypix(level[m.left]), ypix(level[m.right]), ypix(m.height)
        c.polyline([xl, xl, xr, xr], [yl, ym, ym, yr], stroke="#333", width=1)
        pos[n + k] = (xl + xr) / 2
        level[n + k] = m.height
    return order


def dendrogram_chart(path: str | Path, dend: Dendrogram, *, title: str) -> None:
    n = dend.n_leaves
    W = max(600.0, 12.0 * n + 120)
    H = 460.0
    c = Canvas(W, H)
    order = _draw_dendrogram(c, dend, 60, 40, W - 100, H - 160)
    slot = (W - 100) / n
    for i, leaf in enumerate(order):
        c.text(60 + slot * (i + 0.5), H - 112, dend.leaf_labels[leaf], size=9, anchor="end", rotate=-90)
    c.text(W / 2, 24, title, size=14, anchor="middle")
    c.save(path, title)


def clustered_heatmap(path: str | Path, matrix: np.ndarray, dend: Dendrogram, *, title: str) -> None:
    """Distance matrix with rows/columns in dendrogram leaf order, tree drawn above."""
    n = dend.n_leaves
    cell = max(2.0, min(14.0, 700.0 / n))
    side = cell * n
    left, top, tree_h = 110.0, 40.0, 140.0
    W, H = left + side + 100, top + tree_h + side + 40
    c = Canvas(W, H)
    order = _draw_dendrogram(c, dend, left, top, side, tree_h - 10)
    M = np.asarray(matrix, dtype=float)[np.ix_(order, order)]
    lo, hi = float(M.min()), float(M.max())
    y0 = top + tree_h
    for i in range(n):
        for j in range(n):
            c.rect(left + j * cell, y0 + i * cell, cell, cell, color(M[i, j], lo, hi))
    step = max(1, int(np.ceil(10.0 / cell)))
    for i in range(0, n, step):
        c.text(left - 4, y0 + (i + 0.8) * cell, dend.leaf_labels[order[i]], size=9, anchor="end")
    _colorbar(c, left + side + 20, y0, 16, min(side, 200.0), lo, hi)
    c.text(W / 2, 24, title, size=14, anchor="middle")
    c.save(path, title)


def _colorbar(c: Canvas, x, y, w, h, lo, hi, steps: int = 40) -> None:
    for k in range(steps):
        v = hi - (hi - lo) * k / (steps - 1)
        c.rect(x, y + h * k / steps, w, h / steps + 0.5, color(v, lo, hi))
    c.text(x + w + 4, y + 10, f"{hi:.3g}", size=9)
    c.text(x + w + 4, y + h, f"{lo:.3g}", size=9)


def weight_heatmap(
    path: str | Path, dates: Sequence, assets: Sequence[str], weights: np.ndarray, *, title: str, max_columns: int = 400
) -> None:
    """Assets down, time across; long trajectories are drawn from every k-th row."""
    w = np.asarray(weights, dtype=float)
    step = max(1, int(np.ceil(w.shape[0] / max_columns)))
    cols = list(range(0, w.shape[0], step))
    m = w.shape[1]
    cw = 800.0 / len(cols)
    ch = max(3.0, min(14.0, 600.0 / m))
    left, top = 90.0, 40.0
    W, H = left + 800 + 100, top + ch * m + 60
    c = Canvas(W, H)
    hi = float(w.max()) if w.size else 1.0
    for j, r in enumerate(cols):
        for i in range(m):
            c.rect(left + j * cw, top + i * ch, cw + 0.05, ch, color(w[r, i], 0.0, hi))
    lstep = max(1, int(np.ceil(10.0 / ch)))
    for i in range(0, m, lstep):
        c.text(left - 4, top + (i + 0.8) * ch, assets[i], size=9, anchor="end")
    tstep = max(1, len(cols) // 6)
    for j in range(0, len(cols), tstep):
        c.text(left + j * cw, top + ch * m + 16, dates[cols[j]], size=9, anchor="middle")
    _colorbar(c, left + 810, top, 14, min(ch * m, 200.0), 0.0, hi)
    c.text(W / 2, 24, title, size=14, anchor="middle")
    c.save(path, title)
