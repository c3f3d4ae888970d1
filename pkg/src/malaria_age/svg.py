"""Minimal deterministic SVG line charts (no plotting library, byte-stable output)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

UNITS = {
    "s": "humans", "i": "humans", "r": "humans",
    "S_v": "mosquitoes", "I_v": "mosquitoes", "lambda_v": "1/year", "L0": "dimensionless",
}
LABELS = {
    "s": "||s||_L1", "i": "||i||_L1", "r": "||r||_L1",
    "S_v": "S_v", "I_v": "I_v", "lambda_v": "lambda_v", "L0": "L0",
}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass(frozen=True)
class SvgStyle:
    aggregate: str = "i"
    log_y: bool = False
    width: int = 640
    height: int = 400
    title: str = ""
    floor: float | None = None


def _fmt(x):
    return f"{x:.2f}"


def _tick_label(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}".replace("e+0", "e").replace("e-0", "e-").replace("e+", "e")
    return f"{v:g}"


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v / step) * step)
        v += step
    return ticks


def emit_svg(series, style=SvgStyle()):
    """One chart of `style.aggregate` against time, one polyline per (label, Trajectory).

    With log_y, nonpositive values are clamped to a floor and the figure
    carries a visible warning.
    """
    if not series:
        raise ValueError("emit_svg needs at least one trajectory")
    for label, tr in series:
        if len(tr.times) == 0:
            raise ValueError(f"trajectory {label!r} is empty")
    key = style.aggregate
    W, H = style.width, style.height
    left, right, top, bottom = 80, 20, 40, 60
    pw, ph = W - left - right, H - top - bottom

    xs = [np.asarray(tr.times, dtype=float) for _, tr in series]
    ys = [np.asarray(tr[key], dtype=float) for _, tr in series]
    ys = [np.where(np.isfinite(y), y, np.nan) for y in ys]
    clamped = False
    if style.log_y:
        positive = np.concatenate([y[y > 0] for y in ys]) if ys else np.array([])
        floor = style.floor
        if floor is None:
            floor = float(positive.min()) if positive.size else 1.0
        new = []
        for y in ys:
            bad = ~(y > floor) & ~np.isnan(y)
            if np.any(y[~np.isnan(y)] <= 0):
                clamped = True
            new.append(np.where(bad, floor, y))
        ys = [np.log10(y) for y in new]

    x_lo = min(float(x.min()) for x in xs)
    x_hi = max(float(x.max()) for x in xs)
    finite = np.concatenate([y[np.isfinite(y)] for y in ys])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if y_hi - y_lo < 1e-12 * max(1.0, abs(y_hi)):
        pad = 0.5 if style.log_y else max(abs(y_hi) * 0.05, 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if style.title:
        out.append(f'<text x="{W / 2:.2f}" y="20" text-anchor="middle" font-size="14">'
                   f'{escape(style.title)}</text>')

    for t in _nice_ticks(x_lo, x_hi):
        X = px(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    if style.log_y:
        yt = [float(d) for d in range(math.ceil(y_lo), math.floor(y_hi) + 1)] or [y_lo]
        labels = [f"1e{int(d)}" if d == int(d) else _tick_label(10 ** d) for d in yt]
    else:
        yt = _nice_ticks(y_lo, y_hi)
        labels = [_tick_label(v) for v in yt]
    for v, lab in zip(yt, labels):
        Y = py(v)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{lab}</text>')

    out.append(f'<text x="{left + pw / 2:.2f}" y="{H - 15}" text-anchor="middle">t (years)</text>')
    ylabel = f"{LABELS.get(key, key)} ({UNITS.get(key, '')})" + (" [log scale]" if style.log_y else "")
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">{escape(ylabel)}</text>')

    for k, ((label, _), x, y) in enumerate(zip(series, xs, ys)):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 15 + 15 * k
        out.append(f'<line x1="{left + pw - 130}" y1="{ly - 4}" x2="{left + pw - 110}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 105}" y="{ly}">{escape(str(label))}</text>')
    if clamped:
        out.append(f'<text x="{left + 5}" y="{top + ph - 6}" fill="#b00000">warning: nonpositive '
                   f'values clamped to {floor:.3g} for log scale</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
