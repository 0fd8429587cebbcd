"""Minimal dependency-free SVG emitter for line/marker plots and heat maps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN = dict(left=80, right=170, top=40, bottom=60)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: str = "line"  # line | open | filled
    color: str | None = None


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + self.ph - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * self.ph


def _axes(fr: _Frame, title: str, xlabel: str, ylabel: str) -> list[str]:
    L, T = MARGIN["left"], MARGIN["top"]
    out = [
        f'<rect x="{L}" y="{T}" width="{fr.pw}" height="{fr.ph}" fill="none" stroke="black"/>',
        f'<text x="{L + fr.pw / 2:.1f}" y="{T - 14}" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<text x="{L + fr.pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">{escape(xlabel)}</text>',
        f'<text x="20" y="{T + fr.ph / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {T + fr.ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(fr.x0, fr.x1):
        x = float(fr.px(t))
        out.append(f'<line x1="{x:.1f}" y1="{T + fr.ph}" x2="{x:.1f}" y2="{T + fr.ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{T + fr.ph + 20}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
    for t in _ticks(fr.y0, fr.y1):
        y = float(fr.py(t))
        out.append(f'<line x1="{L - 5}" y1="{y:.1f}" x2="{L}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
    return out


def line_plot(path: str | Path, series: Sequence[Series], title: str, xlabel: str, ylabel: str) -> None:
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s.y, dtype=float) for s in series])
    ylo, yhi = min(0.0, float(ys.min())), float(ys.max())
    fr = _Frame((float(xs.min()), float(xs.max()) if xs.max() > xs.min() else float(xs.min()) + 1),
                (ylo, yhi * 1.05 if yhi > ylo else ylo + 1.0))
    body = _axes(fr, title, xlabel, ylabel)
    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        px, py = fr.px(s.x), fr.py(s.y)
        if s.style == "line":
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
            body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            fill = color if s.style == "filled" else "none"
            body.extend(
                f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{fill}" stroke="{color}"/>' for a, b in zip(px, py)
            )
        ly = MARGIN["top"] + 20 * k + 10
        lx = WIDTH - MARGIN["right"] + 15
        if s.style == "line":
            body.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        else:
            fill = color if s.style == "filled" else "none"
            body.append(f'<circle cx="{lx + 10}" cy="{ly}" r="4" fill="{fill}" stroke="{color}"/>')
        body.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(s.label)}</text>')
    _write(path, body)


def heat_map(path: str | Path, x, y, z, title: str, xlabel: str, ylabel: str) -> None:
    """Grey-scale map of ``z[i, j]`` at (x[i], y[j])."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    fr = _Frame((float(x[0]), float(x[-1])), (float(y[0]), float(y[-1])))
    body = []
    zmax = float(z.max()) if z.max() > 0 else 1.0
    dx = fr.pw / max(len(x) - 1, 1)
    dy = fr.ph / max(len(y) - 1, 1)
    for i, xi in enumerate(x):
        for j, yj in enumerate(y):
            g = int(round(255 * (1.0 - z[i, j] / zmax)))
            body.append(
                f'<rect x="{float(fr.px(xi)) - dx / 2:.2f}" y="{float(fr.py(yj)) - dy / 2:.2f}" '
                f'width="{dx:.2f}" height="{dy:.2f}" fill="rgb({g},{g},{g})"/>'
            )
    body.extend(_axes(fr, title, xlabel, ylabel))
    body.append(f'<text x="{WIDTH - MARGIN["right"] + 15}" y="{MARGIN["top"] + 10}" font-size="12">'
                f"black = {_fmt(zmax)}</text>")
    _write(path, body)


def _write(path, body: list[str]) -> None:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">')
    bg = f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
    Path(path).write_text("\n".join([head, bg, *body, "</svg>"]) + "\n")
