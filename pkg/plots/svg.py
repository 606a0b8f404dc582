#!/usr/bin/env python3
# svg.py – minimal SVG 1.1 writer and a data→pixel panel frame
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

PANEL_WIDTH, PANEL_HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64, 20, 40, 52
FONT = "Helvetica, Arial, sans-serif"

BAR_FILL = "#6a8caf"
LINE_COLOURS = ("#1f4e79", "#c0504d")
THRESHOLD_STROKE = "#666666"
BAND_FILL = "#e6e6e6"


class SVG:
    """String-building SVG writer; identical calls give identical bytes."""

    def __init__(self, width: int, height: int):
        self.width, self.height = width, height
        self.svg = (
            '<?xml version="1.0" standalone="no"?>\n'
            '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
            '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            f'xmlns="http://www.w3.org/2000/svg" font-family="{FONT}">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n'
        )

    def group_start(self, gid: str | None = None):
        self.svg += f'<g id="{escape(gid)}">\n' if gid else "<g>\n"

    def group_end(self):
        self.svg += "</g>\n"

    def rect(self, x: float, y: float, w: float, h: float, fill: str, extra: str = ""):
        self.svg += (f'<rect x="{x:.1f}" y="{y:.1f}" width="{max(w, 0):.1f}" height="{max(h, 0):.1f}" '
                     f'fill="{fill}" {extra}/>\n')

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str = "#000000",
             width: float = 1, dash: str | None = None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.svg += (f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                     f'stroke="{stroke}" stroke-width="{width}"{d}/>\n')

    def polyline(self, points: Iterable[Tuple[float, float]], stroke: str, width: float = 1.5):
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in points)
        self.svg += f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>\n'

    def circle(self, x: float, y: float, r: float, fill: str):
        self.svg += f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r}" fill="{fill}"/>\n'

    def text(self, x: float, y: float, string: str, size: int = 12, anchor: str = "middle", extra: str = ""):
        self.svg += (f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}" {extra}>'
                     f'{escape(string)}</text>\n')

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"

    def to_bytes(self) -> bytes:
        return self.get_svg().encode()


def nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    """Round tick positions covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    return [round(v, 10) for v in np.arange(first, hi + step * 1e-9, step)]


def tick_label(v: float) -> str:
    if v == int(v) and abs(v) < 1e7:
        return str(int(v))
    return f"{v:.3g}"


@dataclass
class Frame:
    """One panel: offset on the canvas plus its data limits."""
    xlim: Tuple[float, float]
    ylim: Tuple[float, float]
    ox: float = 0
    oy: float = 0
    width: float = PANEL_WIDTH
    height: float = PANEL_HEIGHT

    @property
    def left(self) -> float:
        return self.ox + MARGIN_LEFT

    @property
    def right(self) -> float:
        return self.ox + self.width - MARGIN_RIGHT

    @property
    def top(self) -> float:
        return self.oy + MARGIN_TOP

    @property
    def bottom(self) -> float:
        return self.oy + self.height - MARGIN_BOTTOM

    def px(self, x: float) -> float:
        lo, hi = self.xlim
        return self.left + (x - lo) / (hi - lo) * (self.right - self.left)

    def py(self, y: float) -> float:
        lo, hi = self.ylim
        return self.bottom - (y - lo) / (hi - lo) * (self.bottom - self.top)

    def axes(self, svg: SVG, title: str, xlabel: str = "", ylabel: str = "",
             xticks: Optional[Sequence[float]] = None, yticks: Optional[Sequence[float]] = None):
        svg.line(self.left, self.bottom, self.right, self.bottom)
        svg.line(self.left, self.bottom, self.left, self.top)
        for t in (nice_ticks(*self.xlim) if xticks is None else xticks):
            x = self.px(t)
            svg.line(x, self.bottom, x, self.bottom + 4)
            svg.text(x, self.bottom + 18, tick_label(t), size=11)
        for t in (nice_ticks(*self.ylim) if yticks is None else yticks):
            y = self.py(t)
            svg.line(self.left - 4, y, self.left, y)
            svg.text(self.left - 8, y + 4, tick_label(t), size=11, anchor="end")
        svg.text((self.left + self.right) / 2, self.oy + 24, title, size=14)
        if xlabel:
            svg.text((self.left + self.right) / 2, self.bottom + 40, xlabel)
        if ylabel:
            cx, cy = self.ox + 18, (self.top + self.bottom) / 2
            svg.text(cx, cy, ylabel, extra=f'transform="rotate(-90 {cx:.1f} {cy:.1f})"')

    def threshold(self, svg: SVG, y: float, label: str | None = None):
        if self.ylim[0] <= y <= self.ylim[1]:
            svg.line(self.left, self.py(y), self.right, self.py(y), stroke=THRESHOLD_STROKE, dash="6,4")
            if label:
                svg.text(self.right - 4, self.py(y) - 6, label, size=11, anchor="end")


def upper_limit(values: Iterable[float], floor: float) -> float:
    """Headroom above the largest finite value (or the floor, e.g. a threshold)."""
    finite = [v for v in values if v is not None and math.isfinite(v)]
    top = max(finite + [floor])
    return top * 1.1 if top > 0 else 1.0
