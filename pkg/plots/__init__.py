"""
Plot workers for chain diagnostics.

Every kind has an SVG renderer returning bytes and an ASCII renderer
returning text, both with the signature

- render(draws: DrawsMatrix, param: str, **options)

Output is deterministic for identical input: no timestamps, fixed
640×480 panels, fixed number formatting. Files are conventionally
named ``<param>_<kind>.svg``.
"""

from plots.ascii import ess_evolution_ascii, local_ess_ascii, quantile_ess_ascii, rank_ascii
from plots.efficiency_plots import ESS_THRESHOLD, ess_evolution_plot, local_ess_plot, quantile_ess_plot, quantile_grid
from plots.rank_plots import RankPlotData, rank_plot, rank_plot_data

# kind -> (svg renderer, ascii renderer)
PLOT_KINDS = {
    "rank": (rank_plot, rank_ascii),
    "quantile-ess": (quantile_ess_plot, quantile_ess_ascii),
    "local-ess": (local_ess_plot, local_ess_ascii),
    "ess-evolution": (ess_evolution_plot, ess_evolution_ascii),
}


def render(kind: str, draws, param: str, *, ascii: bool = False, bins: int = 20, k: int = 20,
           grid_step: float = 0.01, points: int = 10, threshold: float = ESS_THRESHOLD) -> bytes:
    """Dispatch one plot kind with the options that kind understands."""
    if kind not in PLOT_KINDS:
        raise KeyError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    svg_fn, ascii_fn = PLOT_KINDS[kind]
    fn = ascii_fn if ascii else svg_fn
    if kind == "rank":
        out = fn(draws, param, bins=bins)
    elif kind == "quantile-ess":
        grid = quantile_grid(grid_step)
        out = fn(draws, param, grid=grid, threshold=threshold)
    elif kind == "local-ess":
        out = fn(draws, param, k=k, threshold=threshold)
    else:
        out = fn(draws, param, threshold=threshold, points=points)
    return out.encode() if isinstance(out, str) else out


def output_name(param: str, kind: str, ascii: bool = False) -> str:
    safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in param)
    return f"{safe}_{kind}.{'txt' if ascii else 'svg'}"
