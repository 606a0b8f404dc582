#!/usr/bin/env python3
# ess.py – autocorrelation, Geyer truncation and the effective sample size family
from __future__ import annotations
import logging, math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from chain_core import DrawsError, Flag, MIN_ITERATIONS
from rhat import variance_decomposition
from transforms import fold, indicator_interval, indicator_leq, quantile, rank_normalize, split_chains

log = logging.getLogger("ess")


@dataclass(frozen=True)
class AutocorrSpectrum:
    per_chain_rho: np.ndarray
    combined_rho: np.ndarray
    per_chain_var: np.ndarray
    W: float
    var_plus: float
    degenerate: bool = False


@dataclass(frozen=True)
class EssResult:
    ess: float
    tau_hat: float
    truncation_lag: int
    capped: bool
    draws: int
    flags: FrozenSet[Flag] = field(default_factory=frozenset)

    @property
    def relative(self) -> float:
        return self.ess / self.draws if self.draws else float("nan")

    def __float__(self) -> float:
        return float(self.ess)


@dataclass(frozen=True)
class EssPoint:
    iterations: int
    draws: int
    bulk: float
    tail: float

    @property
    def bulk_relative(self) -> float:
        return self.bulk / self.draws

    @property
    def tail_relative(self) -> float:
        return self.tail / self.draws


def ess_cap(draws: int) -> float:
    return draws * math.log10(draws)

# --------------------------------------------------------------------- #
def autocovariance_fft(chain) -> np.ndarray:
    """Biased (divisor N) autocovariances γ̂₀ … γ̂_{N−1} via a zero-padded FFT."""
    x = np.asarray(chain, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise DrawsError(f"autocovariance needs a 1-D chain of at least 2 draws, got shape {x.shape}")
    n = x.size
    if np.ptp(x) == 0:
        return np.zeros(n)
    centered = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()  # next power of two >= 2N
    spectrum = np.fft.rfft(centered, n=nfft)
    power = spectrum.real ** 2 + spectrum.imag ** 2
    return np.fft.irfft(power, n=nfft)[:n] / n


def combined_autocorrelation(chains) -> AutocorrSpectrum:
    """Multi-chain ρ̂ₜ = 1 − (W − mean_m s²_m ρ̂_{t,m}) / var⁺."""
    x = np.asarray(chains, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise DrawsError(f"combined autocorrelation needs M >= 2 chains of N >= 2 draws, got shape {x.shape}")
    n = x.shape[1]
    acov = np.array([autocovariance_fft(c) for c in x])
    per_chain_var = acov[:, 0] * n / (n - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_chain_rho = np.where(acov[:, :1] > 0, acov / acov[:, :1], 0.0)
    decomp = variance_decomposition(x)
    if not (decomp.var_plus > 0 and math.isfinite(decomp.var_plus)):
        return AutocorrSpectrum(per_chain_rho, np.full(n, np.nan), per_chain_var,
                                decomp.W, decomp.var_plus, degenerate=True)
    # s²_m ρ̂_{t,m} = γ̂_{t,m} N/(N−1)
    weighted = acov.mean(axis=0) * n / (n - 1)
    combined = 1.0 - (decomp.W - weighted) / decomp.var_plus
    combined[0] = 1.0
    return AutocorrSpectrum(per_chain_rho, combined, per_chain_var, decomp.W, decomp.var_plus)


def _odd_even_average(tau_odd: float, rho: np.ndarray, last_lag: int) -> float:
    """Average the sum ending at the odd truncation lag with the one ending at the next even lag."""
    nxt = last_lag + 1
    tau_even = tau_odd + max(float(rho[nxt]), 0.0) if nxt < rho.size else tau_odd
    return (tau_odd + tau_even) / 2


def geyer_truncate(combined_rho) -> Tuple[float, int]:
    """Initial positive + initial monotone sequence estimate of τ̂ and its truncation lag."""
    rho = np.asarray(combined_rho, dtype=np.float64)
    if rho.size == 0 or np.isnan(rho).any():
        return float("nan"), 0
    if rho.size < 2:
        return 2 * float(rho[0]) - 1, 0
    n_pairs = rho.size // 2
    pairs = rho[0:2 * n_pairs:2] + rho[1:2 * n_pairs:2]
    k = 0
    while k + 1 < n_pairs and pairs[k + 1] > 0:
        k += 1
    monotone = np.minimum.accumulate(pairs[:k + 1])
    tau_odd = -1.0 + 2.0 * float(monotone.sum())
    last_lag = 2 * k + 1
    return _odd_even_average(tau_odd, rho, last_lag), last_lag


def _finalize(tau: float, lag: int, draws: int, cap: bool, flags: Set[Flag] | None = None) -> EssResult:
    flags = set(flags or ())
    if not math.isfinite(tau):
        flags.add(Flag.DEGENERATE_VARIANCE)
        return EssResult(float("nan"), tau, lag, False, draws, frozenset(flags))
    ess = draws / tau if tau > 0 else math.inf
    capped = False
    if cap and ess > ess_cap(draws):
        ess, capped = ess_cap(draws), True
        flags.add(Flag.ESS_CAPPED)
    return EssResult(ess, tau, lag, capped, draws, frozenset(flags))


def _ess_of_split(split: np.ndarray, cap: bool) -> EssResult:
    spectrum = combined_autocorrelation(split)
    if spectrum.degenerate or not spectrum.W > 0:
        return EssResult(float("nan"), float("nan"), 0, False, split.size,
                         frozenset({Flag.DEGENERATE_VARIANCE}))
    tau, lag = geyer_truncate(spectrum.combined_rho)
    return _finalize(tau, lag, split.size, cap)

# --------------------------------------------------------------------- #
def ess_mean(x, cap: bool = True) -> EssResult:
    """Classic multi-chain ESS S·/τ̂ on the raw split chains."""
    return _ess_of_split(split_chains(x), cap)


def ess_bulk(x, cap: bool = True) -> EssResult:
    return _ess_of_split(split_chains(rank_normalize(x)), cap)


def indicator_ess(indicator, cap: bool = True) -> EssResult:
    """ESS of a 0/1 (M, N) sequence; all-0 or all-1 input is degenerate."""
    ind = np.asarray(indicator, dtype=np.float64)
    if ind.ndim != 2 or ind.shape[1] < MIN_ITERATIONS:
        split_chains(ind)  # raises the shape error
    if np.ptp(ind) == 0:
        draws = ind.shape[0] * 2 * (ind.shape[1] // 2)
        return EssResult(float("nan"), float("nan"), 0, False, draws,
                         frozenset({Flag.DEGENERATE_INDICATOR}))
    return _ess_of_split(split_chains(ind), cap)


def ess_quantile(x, q: float, cap: bool = True) -> EssResult:
    if not 0 < q < 1:
        raise ValueError(f"quantile probability must lie in (0, 1), got {q}")
    x = np.asarray(x, dtype=np.float64)
    return indicator_ess(indicator_leq(x, quantile(x, q)), cap)


def ess_tail(x, tail_quantiles: Sequence[float] = (0.05, 0.95), cap: bool = True) -> EssResult:
    lo_q, hi_q = tail_quantiles
    lo = ess_quantile(x, lo_q, cap)
    hi = ess_quantile(x, hi_q, cap)
    if math.isnan(lo.ess):
        return lo
    if math.isnan(hi.ess):
        return hi
    return lo if lo.ess <= hi.ess else hi


def ess_median(x, cap: bool = True) -> EssResult:
    return ess_quantile(x, 0.5, cap)


def ess_mad(x, cap: bool = True) -> EssResult:
    return ess_quantile(fold(x), 0.5, cap)


def ess_local(x, k: int, cap: bool = True) -> List[EssResult]:
    """ESS of the k equal-probability small-interval indicators, lowest interval first."""
    x = np.asarray(x, dtype=np.float64)
    if k < 1:
        raise ValueError(f"need k >= 1 intervals, got {k}")
    if k > x.size:
        raise DrawsError(f"cannot form {k} intervals from {x.size} draws")
    return [indicator_ess(indicator_interval(x, i / k, (i + 1) / k), cap) for i in range(k)]


def ess_bda2(x, cap: bool = True, flags: Optional[Set[Flag]] = None) -> float:
    """Legacy batch-means style S·var⁺/B; high variance, kept for comparison output."""
    split = split_chains(x)
    decomp = variance_decomposition(split)
    draws = split.size
    if decomp.degenerate:
        if flags is not None:
            flags.add(Flag.DEGENERATE_VARIANCE)
        return float("nan")
    if decomp.B <= 0:
        if flags is not None:
            flags.add(Flag.BDA2_UNBOUNDED)
        return ess_cap(draws)
    ess = draws * decomp.var_plus / decomp.B
    if cap and ess > ess_cap(draws):
        if flags is not None:
            flags.add(Flag.ESS_CAPPED)
        return ess_cap(draws)
    return ess


def default_grid(iterations: int, points: int = 10) -> List[int]:
    if iterations < MIN_ITERATIONS:
        raise DrawsError(f"need N >= {MIN_ITERATIONS} iterations, got {iterations}")
    grid = np.linspace(iterations / points, iterations, points).round().astype(int)
    return sorted({int(n) for n in np.clip(grid, MIN_ITERATIONS, iterations)})


def ess_evolution(x, grid: Sequence[int] | None = None,
                  tail_quantiles: Sequence[float] = (0.05, 0.95), cap: bool = True) -> List[EssPoint]:
    """Bulk and tail ESS recomputed on initial sequences of increasing length."""
    x = np.asarray(x, dtype=np.float64)
    m, n = x.shape
    grid = default_grid(n) if grid is None else sorted({int(g) for g in grid})
    out = []
    for g in grid:
        if not MIN_ITERATIONS <= g <= n:
            raise DrawsError(f"prefix length {g} outside {MIN_ITERATIONS}..{n}")
        prefix = x[:, :g]
        out.append(EssPoint(iterations=g, draws=m * g,
                            bulk=ess_bulk(prefix, cap).ess,
                            tail=ess_tail(prefix, tail_quantiles, cap).ess))
        log.debug(f"ESS evolution at N={g}: bulk={out[-1].bulk:.1f} tail={out[-1].tail:.1f}")
    return out
