"""Minimal SVG line plots, written by hand so no plotting library is needed.

Only what the command line emits is supported: a few polylines with
markers, optional horizontal reference lines and a shaded band between two
lines. The data behind every figure is also written to CSV, so any external
tool can redraw it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    x: list
    y: list
    label: str
    markers: bool = True


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    series: list = field(default_factory=list)
    hlines: list = field(default_factory=list)  # (y, label)
    band: tuple | None = None  # (x, y_low, y_high, label)

    def add(self, x, y, label, markers=True):
        self.series.append(Series(list(map(float, x)), list(map(float, y)), label, markers))
        return self


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def render(fig: Figure) -> str:
    """The figure as an SVG document."""
    tx = (lambda v: math.log10(v)) if fig.logx else (lambda v: v)
    xs, ys = [], []
    for s in fig.series:
        pts = [(tx(a), b) for a, b in zip(s.x, s.y) if math.isfinite(b) and (a > 0 or not fig.logx)]
        xs += [p[0] for p in pts]
        ys += [p[1] for p in pts]
    ys += _finite([h[0] for h in fig.hlines])
    if fig.band is not None:
        bx, lo, hi, _ = fig.band
        xs += [tx(v) for v in bx]
        ys += _finite(list(lo) + list(hi))
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return L + (tx(v) - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (v - y0) / (y1 - y0) * (B - T)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(fig.title)}</text>',
        f'<line x1="{L}" y1="{B}" x2="{R}" y2="{B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{B}" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        x = L + (t - x0) / (x1 - x0) * (R - L)
        label = _fmt(10**t) if fig.logx else _fmt(t)
        out.append(f'<line x1="{x:.2f}" y1="{B}" x2="{x:.2f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{B + 18}" text-anchor="middle">{label}</text>')
    for t in _nice_ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{L - 5}" y1="{y:.2f}" x2="{L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{(L + R) / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(fig.xlabel)}</text>')
    out.append(
        f'<text x="16" y="{(T + B) / 2}" text-anchor="middle" transform="rotate(-90 16 {(T + B) / 2})">{escape(fig.ylabel)}</text>'
    )
    legend = []
    if fig.band is not None:
        bx, lo, hi, label = fig.band
        pts = [(px(a), py(b)) for a, b in zip(bx, lo) if math.isfinite(b)]
        pts += [(px(a), py(b)) for a, b in reversed(list(zip(bx, hi))) if math.isfinite(b)]
        if pts:
            poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polygon points="{poly}" fill="#999999" fill-opacity="0.25" stroke="none"/>')
            legend.append(("#999999", label))
    for y, label in fig.hlines:
        if math.isfinite(y):
            out.append(f'<line x1="{L}" y1="{py(y):.2f}" x2="{R}" y2="{py(y):.2f}" stroke="#555555" stroke-dasharray="6 4"/>')
            legend.append(("#555555", label))
    for k, s in enumerate(fig.series):
        color = COLORS[k % len(COLORS)]
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y) if math.isfinite(b) and (a > 0 or not fig.logx)]
        if pts:
            poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if s.markers:
                out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{color}"/>' for a, b in pts]
        legend.append((color, s.label))
    for k, (color, label) in enumerate(legend):
        y = T + 14 + 16 * k
        out.append(f'<rect x="{R - 170}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{R - 155}" y="{y}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(fig: Figure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(fig))
