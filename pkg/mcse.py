#!/usr/bin/env python3
# mcse.py – Monte Carlo standard errors for means and quantiles
from __future__ import annotations
import logging, math
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Sequence, Set

import numpy as np
from scipy import optimize, special, stats

from chain_core import DiagnosticError, Flag
from ess import ess_mean, ess_quantile
from rhat import variance_decomposition
from transforms import quantile, split_chains

log = logging.getLogger("mcse")

BETA_TOLERANCE = 1e-10


@dataclass(frozen=True)
class QuantileMcse:
    alpha: float
    point: float
    interval_lo: float
    interval_hi: float
    interval_coverage: float
    mcse: float
    ess_used: float
    flags: FrozenSet[Flag] = field(default_factory=frozenset)


def mcse_mean(x, cap: bool = True, flags: Optional[Set[Flag]] = None) -> float:
    """sqrt(var⁺ / ESS) with var⁺ from the split chains."""
    decomp = variance_decomposition(split_chains(x))
    res = ess_mean(x, cap)
    if decomp.degenerate or math.isnan(res.ess):
        if flags is not None:
            flags.add(Flag.DEGENERATE_VARIANCE)
        return float("nan")
    return math.sqrt(decomp.var_plus / res.ess)


def beta_quantile(p: float, a_shape: float, b_shape: float) -> float:
    """x with I_x(a, b) = p, accurate to 1e-10 in probability."""
    if not 0 < p < 1:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if not (a_shape > 0 and b_shape > 0):
        raise ValueError(f"beta shapes must be positive, got ({a_shape}, {b_shape})")
    x = float(stats.beta.ppf(p, a_shape, b_shape))
    if math.isfinite(x) and abs(special.betainc(a_shape, b_shape, x) - p) <= BETA_TOLERANCE:
        return x
    # polish by root finding on the regularized incomplete beta
    try:
        return float(optimize.brentq(lambda t: special.betainc(a_shape, b_shape, t) - p,
                                     0.0, 1.0, xtol=1e-14, maxiter=500))
    except (RuntimeError, ValueError) as e:
        raise DiagnosticError(f"beta quantile did not converge for p={p}, shapes=({a_shape}, {b_shape}): {e}") from e


def _lower_order_stat(sorted_draws: np.ndarray, pos: float, flags: Set[Flag]) -> float:
    # s' ≤ pos < s' + 1, 1-based
    s = math.floor(pos)
    if s < 1:
        flags.add(Flag.TAIL_UNSTABLE)
        s = 1
    return float(sorted_draws[min(s, sorted_draws.size) - 1])


def _upper_order_stat(sorted_draws: np.ndarray, pos: float, flags: Set[Flag]) -> float:
    # s'' − 1 < pos ≤ s'', 1-based
    s = math.ceil(pos)
    if s > sorted_draws.size:
        flags.add(Flag.TAIL_UNSTABLE)
        s = sorted_draws.size
    return float(sorted_draws[max(s, 1) - 1])


def _beta_interval(alpha: float, s_eff: float, lo_p: float, hi_p: float):
    if math.isinf(s_eff):
        return alpha, alpha
    a_shape, b_shape = s_eff * alpha + 1, s_eff * (1 - alpha) + 1
    return beta_quantile(lo_p, a_shape, b_shape), beta_quantile(hi_p, a_shape, b_shape)


def mcse_quantile(x, alpha: float, coverage: float = 0.90,
                  sd_quantiles: Sequence[float] = (0.16, 0.84), cap: bool = True,
                  sorted_draws: np.ndarray | None = None) -> QuantileMcse:
    """Monte Carlo error interval and MCSE of the pooled α-quantile.

    The indicator ESS at the α threshold sets the width of a beta distribution
    over probabilities; its quantiles are mapped back through the sorted draws.
    The interval uses ``coverage``; the MCSE is half the width of the
    ``sd_quantiles`` interval.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < coverage < 1:
        raise ValueError(f"coverage must lie in (0, 1), got {coverage}")
    x = np.asarray(x, dtype=np.float64)
    if sorted_draws is None:
        sorted_draws = np.sort(x, axis=None)
    size = sorted_draws.size
    point = float(quantile(x, alpha))

    res = ess_quantile(x, alpha, cap)
    flags = set(res.flags)
    s_eff = res.ess
    if math.isnan(s_eff):
        log.debug(f"No indicator ESS at alpha={alpha}; quantile MCSE undefined")
        return QuantileMcse(alpha, point, float("nan"), float("nan"), coverage,
                            float("nan"), s_eff, frozenset(flags))

    tail = (1 - coverage) / 2
    a, b = _beta_interval(alpha, s_eff, tail, 1 - tail)
    lo = _lower_order_stat(sorted_draws, size * a, flags)
    hi = _upper_order_stat(sorted_draws, size * b, flags)

    a_sd, b_sd = _beta_interval(alpha, s_eff, *sd_quantiles)
    lo_sd = _lower_order_stat(sorted_draws, size * a_sd, flags)
    hi_sd = _upper_order_stat(sorted_draws, size * b_sd, flags)
    if Flag.TAIL_UNSTABLE in flags:
        log.debug(f"Quantile {alpha} interval reaches the sample extremes")
    return QuantileMcse(alpha, point, lo, hi, coverage, max((hi_sd - lo_sd) / 2, 0.0),
                        s_eff, frozenset(flags))
