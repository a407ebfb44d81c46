"""Standalone SVG line charts with logarithmic axes."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..spectral import ValidationError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 40, 60
MAX_POINTS = 1500


def _thin(x: np.ndarray, y: np.ndarray, log_x: bool):
    """Keep at most ``MAX_POINTS`` vertices, spread evenly along the drawn x axis."""
    if len(x) <= MAX_POINTS:
        return x, y
    pos = np.log(x) if log_x else x
    targets = np.linspace(pos[0], pos[-1], MAX_POINTS)
    idx = np.unique(np.searchsorted(pos, targets).clip(0, len(x) - 1))
    return x[idx], y[idx]


def _decades(lo: float, hi: float) -> list[float]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    step = max(1, (b - a) // 8)
    return [10.0 ** k for k in range(a, b + 1, step)]


def emit_svg(curves: dict, axes: str, path, title: str = "", xlabel: str = "iteration K",
             ylabel: str = "E ||z - z*||^2") -> Path:
    """Write one polyline per named curve; ``curves`` maps a label to ``(x, y)``.

    ``axes`` is ``"loglog"`` or ``"semilogy"``.  Values must be positive on
    logarithmic axes.
    """
    if axes not in ("loglog", "semilogy"):
        raise ValidationError(f"unknown axes {axes!r}")
    if not curves:
        raise ValidationError("no curves to draw")
    log_x = axes == "loglog"
    prepared = []
    for name, (x, y) in curves.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.size == 0:
            raise ValidationError(f"curve {name!r} is empty or has mismatched x and y")
        if np.any(~np.isfinite(y)) or np.any(y <= 0):
            raise ValidationError(f"curve {name!r} has nonpositive or non-finite values on a log axis")
        if log_x and np.any(x <= 0):
            raise ValidationError(f"curve {name!r} has nonpositive x on a log axis")
        prepared.append((name, *_thin(x, y, log_x)))

    xs = np.concatenate([p[1] for p in prepared])
    ys = np.concatenate([p[2] for p in prepared])
    fx = np.log10 if log_x else (lambda v: v)
    x0, x1 = float(fx(xs.min())), float(fx(xs.max()))
    y0, y1 = math.log10(ys.min()), math.log10(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (fx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - np.log10(v)) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for tick in _decades(10 ** y0, 10 ** y1):
        if 10 ** y0 <= tick <= 10 ** y1:
            yy = py(tick)
            out.append(f'<line x1="{LEFT}" y1="{yy:.2f}" x2="{LEFT + pw}" y2="{yy:.2f}" stroke="#dddddd"/>')
            out.append(f'<text x="{LEFT - 6}" y="{yy + 4:.2f}" text-anchor="end">1e{round(math.log10(tick))}</text>')
    if log_x:
        xticks = [t for t in _decades(10 ** x0, 10 ** x1) if 10 ** x0 <= t <= 10 ** x1]
        labels = [f"1e{round(math.log10(t))}" for t in xticks]
    else:
        xticks = list(np.linspace(x0, x1, 6))
        labels = [f"{t:.4g}" for t in xticks]
    for t, lab in zip(xticks, labels):
        xx = px(t)
        out.append(f'<line x1="{xx:.2f}" y1="{TOP}" x2="{xx:.2f}" y2="{TOP + ph}" stroke="#dddddd"/>')
        out.append(f'<text x="{xx:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{lab}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {TOP + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, (name, x, y) in enumerate(prepared):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 16 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
