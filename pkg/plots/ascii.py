#!/usr/bin/env python3
# ascii.py – 40-column terminal renderings of every plot kind
from __future__ import annotations
import math
from typing import List, Optional, Sequence

from chain_core import DrawsMatrix
from plots.efficiency_plots import (DEFAULT_K, ESS_THRESHOLD, evolution_series, local_ess_series,
                                    quantile_ess_series, quantile_grid)
from plots.rank_plots import DEFAULT_BINS, rank_plot_data

BAR_WIDTH = 40


def ascii_bars(title: str, labels: Sequence[str], values: Sequence[float],
               reference: Optional[float] = None, width: int = BAR_WIDTH) -> str:
    """Horizontal bars scaled to ``width`` columns; ``|`` marks the reference value."""
    finite = [v for v in values if math.isfinite(v)]
    top = max(finite + ([reference] if reference is not None else []) + [0.0])
    scale = width / top if top > 0 else 0.0
    ref_col = int(round(reference * scale)) if reference is not None and top > 0 else None
    lw = max((len(s) for s in labels), default=0)
    out: List[str] = [title]
    for label, v in zip(labels, values):
        if not math.isfinite(v):
            out.append(f"{label:>{lw}} {'':<{width}}  NA")
            continue
        cells = ["#"] * int(round(v * scale)) + [" "] * (width - int(round(v * scale)))
        if ref_col is not None and 0 <= ref_col < len(cells) and cells[ref_col] == " ":
            cells[ref_col] = "|"
        out.append(f"{label:>{lw}} {''.join(cells[:width])}  {v:.0f}")
    if reference is not None:
        out.append(f"{'':>{lw}} reference | = {reference:g}")
    return "\n".join(out) + "\n"


def rank_ascii(draws: DrawsMatrix, param: str, bins: int = DEFAULT_BINS) -> str:
    data = rank_plot_data(draws.param(param), bins)
    blocks = []
    for m in range(data.chains):
        labels = [f"{int(data.edges[b] + 0.5)}-{int(data.edges[b + 1] - 0.5)}" for b in range(bins)]
        blocks.append(ascii_bars(f"{param} chain {m} rank histogram", labels,
                                 [float(c) for c in data.counts[m]], data.expected))
    return "\n".join(blocks)


def quantile_ess_ascii(draws: DrawsMatrix, param: str, grid: Optional[Sequence[float]] = None,
                       threshold: float = ESS_THRESHOLD) -> str:
    series = quantile_ess_series(draws.param(param), grid or quantile_grid(0.05))
    return ascii_bars(f"{param} quantile ESS", [f"{q:.2f}" for q, _ in series],
                      [v for _, v in series], threshold)


def local_ess_ascii(draws: DrawsMatrix, param: str, k: int = DEFAULT_K,
                    threshold: float = ESS_THRESHOLD) -> str:
    series = local_ess_series(draws.param(param), k)
    return ascii_bars(f"{param} small-interval ESS", [f"{p:.3f}" for p, _ in series],
                      [v for _, v in series], threshold)


def ess_evolution_ascii(draws: DrawsMatrix, param: str, grid: Optional[Sequence[int]] = None,
                        threshold: float = ESS_THRESHOLD, points: int = 10) -> str:
    evo = evolution_series(draws.param(param), grid, points)
    labels = [str(p.draws) for p in evo]
    return (ascii_bars(f"{param} bulk-ESS by draws", labels, [p.bulk for p in evo], threshold)
            + "\n" + ascii_bars(f"{param} tail-ESS by draws", labels, [p.tail for p in evo], threshold))
