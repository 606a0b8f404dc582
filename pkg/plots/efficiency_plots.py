#!/usr/bin/env python3
# efficiency_plots.py – quantile ESS, small-interval ESS and ESS-evolution charts
from __future__ import annotations
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from chain_core import DrawsMatrix
from ess import default_grid, ess_evolution, ess_local, ess_quantile
from plots.svg import BAR_FILL, LINE_COLOURS, SVG, Frame, PANEL_HEIGHT, PANEL_WIDTH, upper_limit

log = logging.getLogger("plots")

ESS_THRESHOLD = 400
DEFAULT_K = 20


def quantile_grid(step: float = 0.01) -> List[float]:
    """Interior probabilities step, 2·step, … strictly below 1."""
    if not 0 < step < 0.5:
        raise ValueError(f"quantile grid step must lie in (0, 0.5), got {step}")
    count = int(round(1 / step))
    return [round(i * step, 10) for i in range(1, count) if 0 < i * step < 1]

# --------------------------------------------------------------------- #
def quantile_ess_series(x, grid: Sequence[float]) -> List[Tuple[float, float]]:
    return [(float(q), ess_quantile(x, q).ess) for q in grid]


def local_ess_series(x, k: int = DEFAULT_K) -> List[Tuple[float, float]]:
    """(interval midpoint probability, ESS) for k equal-probability intervals."""
    return [((i + 0.5) / k, r.ess) for i, r in enumerate(ess_local(x, k))]


def evolution_series(x, grid: Optional[Sequence[int]] = None, points: int = 10):
    x = np.asarray(x, dtype=np.float64)
    return ess_evolution(x, grid if grid is not None else default_grid(x.shape[1], points))

# --------------------------------------------------------------------- #
def _points(svg: SVG, frame: Frame, series, colour: str):
    for xv, yv in series:
        if np.isfinite(yv):
            svg.circle(frame.px(xv), frame.py(yv), 3, colour)


def quantile_ess_plot(draws: DrawsMatrix, param: str, grid: Optional[Sequence[float]] = None,
                      threshold: float = ESS_THRESHOLD) -> bytes:
    """ESS of the quantile indicator over a probability grid, dashed line at the ESS threshold."""
    series = quantile_ess_series(draws.param(param), grid or quantile_grid())
    svg = SVG(PANEL_WIDTH, PANEL_HEIGHT)
    frame = Frame(xlim=(0.0, 1.0), ylim=(0.0, upper_limit([v for _, v in series], threshold)))
    frame.threshold(svg, threshold, f"{threshold:g}")
    _points(svg, frame, series, LINE_COLOURS[0])
    frame.axes(svg, f"{param}: efficiency of quantile estimates", xlabel="quantile", ylabel="ESS")
    log.debug(f"Quantile ESS plot {param}: {len(series)} point(s)")
    return svg.to_bytes()


def local_ess_plot(draws: DrawsMatrix, param: str, k: int = DEFAULT_K,
                   threshold: float = ESS_THRESHOLD) -> bytes:
    """Bars of small-interval ESS across k equal-probability intervals."""
    series = local_ess_series(draws.param(param), k)
    svg = SVG(PANEL_WIDTH, PANEL_HEIGHT)
    frame = Frame(xlim=(0.0, 1.0), ylim=(0.0, upper_limit([v for _, v in series], threshold)))
    for i, (_, v) in enumerate(series):
        if np.isfinite(v):
            x0, x1 = frame.px(i / k), frame.px((i + 1) / k)
            svg.rect(x0 + 1, frame.py(v), x1 - x0 - 2, frame.bottom - frame.py(v), BAR_FILL)
    frame.threshold(svg, threshold, f"{threshold:g}")
    frame.axes(svg, f"{param}: efficiency of small-interval probability estimates",
               xlabel="quantile", ylabel="ESS")
    return svg.to_bytes()


def ess_evolution_plot(draws: DrawsMatrix, param: str, grid: Optional[Sequence[int]] = None,
                       threshold: float = ESS_THRESHOLD, points: int = 10) -> bytes:
    """Bulk and tail ESS against the total number of draws in each initial sequence."""
    evo = evolution_series(draws.param(param), grid, points)
    bulk = [(p.draws, p.bulk) for p in evo]
    tail = [(p.draws, p.tail) for p in evo]
    svg = SVG(PANEL_WIDTH, PANEL_HEIGHT)
    xmax = float(max(p.draws for p in evo))
    frame = Frame(xlim=(0.0, xmax), ylim=(0.0, upper_limit([v for _, v in bulk + tail], threshold)))
    frame.threshold(svg, threshold, f"{threshold:g}")
    for series, colour, label in ((bulk, LINE_COLOURS[0], "bulk"), (tail, LINE_COLOURS[1], "tail")):
        finite = [(frame.px(a), frame.py(b)) for a, b in series if np.isfinite(b)]
        if len(finite) > 1:
            svg.polyline(finite, colour)
        _points(svg, frame, series, colour)
        svg.text(frame.right - 4, frame.top + (14 if label == "bulk" else 30), f"{label}-ESS",
                 size=11, anchor="end", extra=f'fill="{colour}"')
    frame.axes(svg, f"{param}: ESS by number of draws", xlabel="total number of draws", ylabel="ESS")
    return svg.to_bytes()
