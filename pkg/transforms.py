#!/usr/bin/env python3
# transforms.py – splitting, ranking, normal scores, folding and indicators
from __future__ import annotations
import logging

import numpy as np
from scipy import special, stats

from chain_core import DrawsError, require_iterations

log = logging.getLogger("transforms")

# Offsets of the fractional rank → probability map
RANK_OFFSET = 3 / 8
SIZE_OFFSET = 1 / 4


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DrawsError(f"{what} requires finite values")
    return values


def split_chains(x) -> np.ndarray:
    """(M, N) → (2M, N // 2); for odd N the middle draw of every chain is dropped."""
    x = np.asarray(x, dtype=np.float64)
    require_iterations(x)
    half = x.shape[1] // 2
    return np.vstack((x[:, :half], x[:, x.shape[1] - half:]))


def quantile(values, q):
    """Pooled empirical quantile, linear interpolation between order statistics (type 7)."""
    return np.quantile(np.asarray(values, dtype=np.float64), q, method="linear")


def pooled_ranks(values) -> np.ndarray:
    """1-based ranks of the flattened values; ties share their average rank."""
    values = _finite(values, "pooled_ranks").ravel()
    if values.size < 1:
        raise DrawsError("pooled_ranks needs at least one value")
    return stats.rankdata(values, method="average")


def normal_scores(ranks, size: int) -> np.ndarray:
    """z = Φ⁻¹((r − 3/8) / (S − 1/4))."""
    ranks = np.asarray(ranks, dtype=np.float64)
    return special.ndtri((ranks - RANK_OFFSET) / (size - SIZE_OFFSET))


def rank_normalize(x) -> np.ndarray:
    """Replace every draw by the normal score of its rank among the pooled draws."""
    x = _finite(x, "rank_normalize")
    ranks = pooled_ranks(x)
    return normal_scores(ranks, ranks.size).reshape(x.shape)


def fold(x) -> np.ndarray:
    """ζ = |θ − median(θ)| with the median taken over all chains."""
    x = _finite(x, "fold")
    return np.abs(x - quantile(x, 0.5))


def indicator_leq(x, threshold: float) -> np.ndarray:
    x = _finite(x, "indicator_leq")
    return (x <= threshold).astype(np.float64)


def indicator_interval(x, lo_q: float, hi_q: float) -> np.ndarray:
    """1 where Q̂_lo < θ ≤ Q̂_hi (strict lower, inclusive upper), else 0."""
    if not 0 <= lo_q < hi_q <= 1:
        raise ValueError(f"need 0 <= lo_q < hi_q <= 1, got ({lo_q}, {hi_q})")
    x = _finite(x, "indicator_interval")
    lo, hi = quantile(x, [lo_q, hi_q])
    if lo == hi:
        log.debug(f"Interval ({lo_q}, {hi_q}] collapses to a single value {lo}")
    return ((x > lo) & (x <= hi)).astype(np.float64)
