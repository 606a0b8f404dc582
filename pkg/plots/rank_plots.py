#!/usr/bin/env python3
# rank_plots.py – per-chain histograms of pooled ranks
from __future__ import annotations
import logging, math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from chain_core import DrawsMatrix
from plots.svg import BAND_FILL, BAR_FILL, PANEL_HEIGHT, PANEL_WIDTH, SVG, Frame, THRESHOLD_STROKE, upper_limit
from transforms import pooled_ranks

log = logging.getLogger("plots")

DEFAULT_BINS = 20


@dataclass(frozen=True)
class RankPlotData:
    counts: np.ndarray        # (M, bins), each row sums to N
    edges: np.ndarray         # rank bin edges, bins + 1 values
    bins: int
    expected: float           # N / bins
    band: Tuple[float, float]  # central 95 % of a uniform bin count

    @property
    def chains(self) -> int:
        return self.counts.shape[0]

    @property
    def iterations(self) -> int:
        return int(self.counts[0].sum())


def rank_plot_data(x, bins: int = DEFAULT_BINS) -> RankPlotData:
    """Ranks over all chains, histogrammed separately for every chain; ties share their average rank."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a (chains, iterations) matrix, got shape {x.shape}")
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    ranks = pooled_ranks(x).reshape(x.shape)
    size = x.size
    edges = np.linspace(0.5, size + 0.5, bins + 1)
    counts = np.array([np.histogram(r, bins=edges)[0] for r in ranks])
    n = x.shape[1]
    lo, hi = stats.binom.ppf([0.025, 0.975], n, 1.0 / bins)
    return RankPlotData(counts=counts, edges=edges, bins=bins, expected=n / bins, band=(float(lo), float(hi)))


def render_rank_plot(data: RankPlotData, title: str) -> bytes:
    cols = max(1, math.ceil(math.sqrt(data.chains)))
    rows = math.ceil(data.chains / cols)
    svg = SVG(cols * PANEL_WIDTH, rows * PANEL_HEIGHT)
    ymax = upper_limit(data.counts.ravel().tolist(), max(data.band[1], data.expected))
    xmax = float(data.edges[-1])
    for m in range(data.chains):
        frame = Frame(xlim=(0.5, xmax), ylim=(0.0, ymax),
                      ox=(m % cols) * PANEL_WIDTH, oy=(m // cols) * PANEL_HEIGHT)
        svg.group_start(f"chain{m}")
        svg.rect(frame.left, frame.py(data.band[1]), frame.right - frame.left,
                 frame.py(data.band[0]) - frame.py(data.band[1]), BAND_FILL)
        for b in range(data.bins):
            x0, x1 = frame.px(data.edges[b]), frame.px(data.edges[b + 1])
            y = frame.py(float(data.counts[m, b]))
            svg.rect(x0 + 1, y, x1 - x0 - 2, frame.bottom - y, BAR_FILL)
        svg.line(frame.left, frame.py(data.expected), frame.right, frame.py(data.expected),
                 stroke=THRESHOLD_STROKE, dash="6,4")
        frame.axes(svg, f"{title} – chain {m}", xlabel="pooled rank", ylabel="count")
        svg.group_end()
    return svg.to_bytes()


def rank_plot(draws: DrawsMatrix, param: str, bins: int = DEFAULT_BINS) -> bytes:
    """One small-multiple histogram per chain with the uniform reference at N / bins."""
    data = rank_plot_data(draws.param(param), bins)
    log.debug(f"Rank plot {param}: {data.chains} chain(s), {bins} bin(s)")
    return render_rank_plot(data, str(param))
