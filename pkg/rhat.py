#!/usr/bin/env python3
# rhat.py – between/within variance decomposition and the R̂ family
from __future__ import annotations
import logging, math
from dataclasses import dataclass
from typing import Optional, Set

import numpy as np

from chain_core import DrawsError, Flag
from transforms import fold, rank_normalize, split_chains

log = logging.getLogger("rhat")


@dataclass(frozen=True)
class VarianceDecomposition:
    B: float
    W: float
    var_plus: float
    chains: int
    draws: int

    @property
    def degenerate(self) -> bool:
        return not (self.W > 0 and math.isfinite(self.W) and math.isfinite(self.var_plus))

    @property
    def rhat(self) -> float:
        if self.degenerate:
            return float("nan")
        return math.sqrt(self.var_plus / self.W)


def variance_decomposition(chains) -> VarianceDecomposition:
    """B, W and var⁺ of an (M, N) matrix of (already split) chains."""
    x = np.asarray(chains, dtype=np.float64)
    if x.ndim != 2:
        raise DrawsError(f"expected a (chains, iterations) matrix, got shape {x.shape}")
    m, n = x.shape
    if m < 2 or n < 2:
        raise DrawsError(f"variance decomposition needs M >= 2 chains of N >= 2 draws, got {m} × {n}")
    chain_means = x.mean(axis=1)
    B = n * float(np.var(chain_means, ddof=1))
    W = float(np.mean(np.var(x, axis=1, ddof=1)))
    var_plus = (n - 1) / n * W + B / n
    return VarianceDecomposition(B=B, W=W, var_plus=var_plus, chains=m, draws=n)


def _flag(flags: Optional[Set[Flag]], flag: Flag) -> None:
    if flags is not None:
        flags.add(flag)


def _rhat_of(chains, flags: Optional[Set[Flag]]) -> float:
    decomp = variance_decomposition(chains)
    if decomp.degenerate:
        _flag(flags, Flag.CONSTANT_PARAMETER)
        return float("nan")
    return decomp.rhat


def split_rhat(x, flags: Optional[Set[Flag]] = None) -> float:
    """Split-R̂ on the raw values."""
    return _rhat_of(split_chains(x), flags)


def rank_normalized_split_rhat(x, flags: Optional[Set[Flag]] = None) -> float:
    # rank over the pooled unsplit draws first, then split
    return _rhat_of(split_chains(rank_normalize(x)), flags)


def folded_split_rhat(x, flags: Optional[Set[Flag]] = None) -> float:
    """Rank-normalized split-R̂ of the draws folded about their pooled median.

    Folding happens on the rank-normalized scale so the statistic depends on
    the ranks alone; it is then invariant under strictly increasing transforms.
    """
    return rank_normalized_split_rhat(fold(rank_normalize(x)), flags)


def rhat_max(x, flags: Optional[Set[Flag]] = None) -> float:
    bulk = rank_normalized_split_rhat(x, flags)
    tail = folded_split_rhat(x, flags)
    return combine_max(bulk, tail, flags)


def combine_max(rank: float, folded: float, flags: Optional[Set[Flag]] = None) -> float:
    if math.isnan(rank) or math.isnan(folded):
        _flag(flags, Flag.DEGENERATE_VARIANCE)
        return float("nan")
    return max(rank, folded)


def unsplit_rhat(x, flags: Optional[Set[Flag]] = None) -> float:
    """R̂ on whole chains; a baseline for the trend experiments only."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        log.debug("Unsplit R̂ needs at least two chains")
        _flag(flags, Flag.WARN_FEW_CHAINS)
        return float("nan")
    return _rhat_of(x, flags)
