#!/usr/bin/env python3
# simulate.py – synthetic chain scenarios, defect injection and replication sweeps
from __future__ import annotations
import asyncio, logging, math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import signal

import utils
from chain_core import ConfigError, DiagnosticError, Flag, MIN_ITERATIONS
from ess import ess_bulk, ess_mean, ess_tail
from rhat import combine_max, folded_split_rhat, rank_normalized_split_rhat, split_rhat, unsplit_rhat

log = logging.getLogger("simulate")

# Default autocorrelation of the scale variable in the slowly-mixing Cauchy scenario
NOMINAL_RHO = 0.95
SUMMARY_QUANTILES = (0.05, 0.5, 0.95)
RHAT_COLUMNS = ("rhat_classic", "rhat_rank", "rhat_folded", "rhat_max", "rhat_unsplit")
ESS_COLUMNS = ("ess_bulk", "ess_tail", "ess_mean")


class Process(str, Enum):
    IID_NORMAL = "iid"
    AR1 = "ar1"
    CAUCHY_RATIO = "cauchy"
    CAUCHY_NOMINAL = "cauchy-nominal"


class ManipulationKind(str, Enum):
    NONE = "none"
    TREND = "trend"
    SHIFT = "shift"
    SCALE = "scale"


@dataclass(frozen=True)
class Manipulation:
    """TREND value is the share of marginal variance explained by the trend."""
    kind: ManipulationKind = ManipulationKind.NONE
    value: float = 0.0
    chain: int = 0

    def __str__(self) -> str:
        if self.kind is ManipulationKind.NONE:
            return "none"
        if self.kind is ManipulationKind.TREND:
            return f"trend:{self.value:g}"
        return f"{self.kind.value}:{self.value:g}:{self.chain}"


def parse_manipulation(text: str) -> Manipulation:
    """``none`` | ``trend:<fraction>`` | ``shift:<delta>[:<chain>]`` | ``scale:<factor>[:<chain>]``"""
    parts = text.strip().lower().split(":")
    try:
        kind = ManipulationKind(parts[0])
    except ValueError:
        raise ConfigError(f"unknown manipulation {parts[0]!r}; use none, trend, shift or scale") from None
    if kind is ManipulationKind.NONE:
        if len(parts) > 1:
            raise ConfigError(f"'none' takes no arguments: {text!r}")
        return Manipulation()
    max_parts = 2 if kind is ManipulationKind.TREND else 3
    if not 2 <= len(parts) <= max_parts:
        raise ConfigError(f"malformed manipulation {text!r}")
    try:
        value = float(parts[1])
        chain = int(parts[2]) if len(parts) == 3 else 0
    except ValueError:
        raise ConfigError(f"malformed manipulation {text!r}") from None
    return Manipulation(kind, value, chain)


@dataclass(frozen=True)
class ScenarioSpec:
    process: Process = Process.IID_NORMAL
    rho: float = 0.0
    manipulations: Tuple[Manipulation, ...] = ()
    chains: int = 4
    iterations: int = 1000
    replications: int = 200
    seed: int = 0

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ConfigError(f"|rho| must be < 1, got {self.rho}")
        if self.chains < 1 or self.replications < 1:
            raise ConfigError("need at least one chain and one replication")
        if self.iterations < MIN_ITERATIONS:
            raise ConfigError(f"need at least {MIN_ITERATIONS} iterations, got {self.iterations}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        for m in self.manipulations:
            self._check_manipulation(m)

    def _check_manipulation(self, m: Manipulation) -> None:
        if m.kind in (ManipulationKind.SHIFT, ManipulationKind.SCALE) and not 0 <= m.chain < self.chains:
            raise ConfigError(f"manipulated chain {m.chain} outside 0..{self.chains - 1}")
        if m.kind is ManipulationKind.SCALE and not m.value > 0:
            raise ConfigError(f"scale factor must be positive, got {m.value}")
        if m.kind is ManipulationKind.TREND:
            if not 0 <= m.value < 1:
                raise ConfigError(f"trend variance share must lie in [0, 1), got {m.value}")
            if not math.isfinite(self.marginal_variance):
                raise ConfigError(f"trend needs a finite marginal variance; {self.process.value} has none")

    @property
    def marginal_variance(self) -> float:
        if self.process is Process.IID_NORMAL:
            return 1.0
        if self.process is Process.AR1:
            return 1.0 / (1.0 - self.rho ** 2)
        return math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["process"] = self.process.value
        out["manipulations"] = [str(m) for m in self.manipulations] or ["none"]
        return out

# --------------------------------------------------------------------- #
def chain_seed(seed: int, replication: int, chain: int) -> np.random.SeedSequence:
    """Independent stream per (seed, replication, chain)."""
    return np.random.SeedSequence(seed, spawn_key=(replication, chain))


def _ar1_filter(rho: float, noise: np.ndarray) -> np.ndarray:
    # first innovation scaled to the stationary variance 1/(1−ρ²)
    e = noise.copy()
    e[0] /= math.sqrt(1.0 - rho ** 2)
    return signal.lfilter([1.0], [1.0, -rho], e)


def gen_iid(rho: float, n: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(n)


def gen_ar1(rho: float, n: int, seed) -> np.ndarray:
    """Stationary AR(1): xₙ = ρ·xₙ₋₁ + εₙ with x₀ ~ N(0, 1/(1−ρ²))."""
    if not abs(rho) < 1:
        raise ConfigError(f"|rho| must be < 1, got {rho}")
    return _ar1_filter(rho, np.random.default_rng(seed).standard_normal(n))


def gen_cauchy_ratio(rho: float, n: int, seed) -> np.ndarray:
    """Ratio of two independent stationary AR(1) chains; the marginal is standard Cauchy."""
    rng = np.random.default_rng(seed)
    u = _ar1_filter(rho, rng.standard_normal(n))
    ev = rng.standard_normal(n)
    v = _ar1_filter(rho, ev)
    while np.any(v == 0):
        ev[v == 0] = rng.standard_normal(int(np.sum(v == 0)))
        v = _ar1_filter(rho, ev)
    return u / v


def gen_cauchy_nominal(rho: float, n: int, seed) -> np.ndarray:
    """uₙ / |vₙ| with u iid N(0, 1) and v a unit-variance AR(1); standard Cauchy marginal.

    Excursions into the tails persist while |v| stays small, the way a sampler
    wanders slowly through a heavy tail while the centre mixes well.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    ev = rng.standard_normal(n)
    v = _ar1_filter(rho, ev) * math.sqrt(1.0 - rho ** 2)
    while np.any(v == 0):
        ev[v == 0] = rng.standard_normal(int(np.sum(v == 0)))
        v = _ar1_filter(rho, ev) * math.sqrt(1.0 - rho ** 2)
    return u / np.abs(v)


GENERATORS: Dict[Process, Callable[[float, int, object], np.ndarray]] = {
    Process.IID_NORMAL: gen_iid,
    Process.AR1: gen_ar1,
    Process.CAUCHY_RATIO: gen_cauchy_ratio,
    Process.CAUCHY_NOMINAL: gen_cauchy_nominal,
}


def generate_chains(spec: ScenarioSpec, replication: int = 0) -> np.ndarray:
    """(M, N) raw chains of one replication, before any manipulation."""
    gen = GENERATORS[spec.process]
    return np.vstack([gen(spec.rho, spec.iterations, chain_seed(spec.seed, replication, m))
                      for m in range(spec.chains)])


def trend_coefficient(fraction: float, n: int, variance: float = 1.0) -> float:
    """Slope c of θₛ = eₛ + c·s whose trend carries ``fraction`` of the total marginal variance."""
    if fraction <= 0:
        return 0.0
    # the trend's variance over s = 1..N is c²(N² − 1)/12
    return math.sqrt(12.0 * variance * fraction / ((1.0 - fraction) * (n * n - 1)))


def apply_manipulation(chains, manipulation: Manipulation, variance: float = 1.0) -> np.ndarray:
    out = np.array(chains, dtype=np.float64)
    kind = manipulation.kind
    if kind is ManipulationKind.TREND:
        c = trend_coefficient(manipulation.value, out.shape[1], variance)
        out += c * np.arange(1, out.shape[1] + 1)
    elif kind is ManipulationKind.SHIFT:
        out[manipulation.chain] += manipulation.value
    elif kind is ManipulationKind.SCALE:
        row = out[manipulation.chain]
        centre = row.mean()
        out[manipulation.chain] = centre + manipulation.value * (row - centre)
    return out


def scenario_chains(spec: ScenarioSpec, replication: int = 0) -> np.ndarray:
    """One replication with every manipulation applied in order."""
    x = generate_chains(spec, replication)
    variance = spec.marginal_variance if math.isfinite(spec.marginal_variance) else 1.0
    for m in spec.manipulations:
        x = apply_manipulation(x, m, variance)
    return x

# --------------------------------------------------------------------- #
@dataclass
class SweepRecord:
    replication: int
    rhat_classic: float = float("nan")
    rhat_rank: float = float("nan")
    rhat_folded: float = float("nan")
    rhat_max: float = float("nan")
    rhat_unsplit: float = float("nan")
    ess_bulk: float = float("nan")
    ess_tail: float = float("nan")
    ess_mean: float = float("nan")
    flags: set = field(default_factory=set)

    def to_row(self) -> dict:
        row = asdict(self)
        row["flags"] = ";".join(sorted(str(f) for f in self.flags))
        return row


@dataclass
class SweepResult:
    spec: ScenarioSpec
    records: List[SweepRecord]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def median(self, name: str) -> float:
        return float(np.nanmedian(self.column(name)))

    def share_below(self, name: str, threshold: float) -> float:
        col = self.column(name)
        return float(np.mean(col < threshold))

    def summary(self) -> dict:
        """5/50/95 % quantiles per diagnostic, plus the share of R̂ below 1.01."""
        out = {"scenario": self.spec.to_dict(), "replications": len(self.records), "diagnostics": {}}
        for name in RHAT_COLUMNS + ESS_COLUMNS:
            col = self.column(name)
            finite = col[np.isfinite(col)]
            entry = {f"q{int(q * 100):02d}": float(np.quantile(finite, q)) if finite.size else float("nan")
                     for q in SUMMARY_QUANTILES}
            if name in RHAT_COLUMNS:
                entry["share_below_1.01"] = float(np.mean(col < 1.01))
            out["diagnostics"][name] = entry
        return out


def run_replication(spec: ScenarioSpec, replication: int) -> SweepRecord:
    rec = SweepRecord(replication=replication)
    try:
        x = scenario_chains(spec, replication)
        flags = rec.flags
        rec.rhat_classic = split_rhat(x, flags)
        rec.rhat_rank = rank_normalized_split_rhat(x, flags)
        rec.rhat_folded = folded_split_rhat(x, flags)
        rec.rhat_max = combine_max(rec.rhat_rank, rec.rhat_folded, flags)
        rec.rhat_unsplit = unsplit_rhat(x, flags)
        for attr, res in (("ess_bulk", ess_bulk(x)), ("ess_tail", ess_tail(x)), ("ess_mean", ess_mean(x))):
            setattr(rec, attr, res.ess)
            flags.update(res.flags)
    except DiagnosticError as e:
        log.error(f"Replication {replication} failed: {e}")
        rec.flags.add(Flag.COMPUTATION_FAILED)
    return rec


async def _sweep(spec: ScenarioSpec, workers: int) -> List[SweepRecord]:
    sem = asyncio.Semaphore(max(1, workers))

    async def one(r: int) -> SweepRecord:
        async with sem:
            return await asyncio.to_thread(run_replication, spec, r)

    return list(await asyncio.gather(*(one(r) for r in range(spec.replications))))


def run_sweep(spec: ScenarioSpec, workers: Optional[int] = None) -> SweepResult:
    """All replications of a scenario; results do not depend on ``workers``."""
    workers = utils.resolve_threads(workers)
    log.info(f"Sweep {spec.process.value} rho={spec.rho} {','.join(map(str, spec.manipulations)) or 'none'} "
             f"{spec.chains}×{spec.iterations}, {spec.replications} replication(s)")
    records = asyncio.run(_sweep(spec, workers))
    failed = sum(Flag.COMPUTATION_FAILED in r.flags for r in records)
    if failed:
        log.warning(f"{failed} replication(s) failed and carry NaN diagnostics")
    return SweepResult(spec=spec, records=records)


def run_length_sweep(spec: ScenarioSpec, lengths: Iterable[int],
                     workers: Optional[int] = None) -> Dict[int, SweepResult]:
    """The same scenario repeated for several chain lengths N."""
    return {n: run_sweep(replace(spec, iterations=int(n)), workers) for n in sorted(set(lengths))}
