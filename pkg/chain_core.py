#!/usr/bin/env python3
# chain_core.py – draw storage, diagnostic config, flags and report records
from __future__ import annotations
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import utils

log = logging.getLogger("chain_core")

TOOL_NAME = "chaindiag"
__version__ = "0.3.0"
SCHEMA_VERSION = 1

# Splitting needs two halves of >= 2 draws each
MIN_ITERATIONS = 4
RECOMMENDED_CHAINS = 4

# --------------------------------------------------------------------- #
class DiagnosticError(Exception):
    """Base class for every contract violation raised by the library."""

class ConfigError(DiagnosticError):
    pass

class DrawsError(DiagnosticError):
    """Malformed, ragged, non-finite or too-short draws."""
    def __init__(self, message: str, *, chain: int | None = None, line: int | None = None):
        super().__init__(message)
        self.chain = chain
        self.line = line

class FormatError(DrawsError):
    """A draws file that does not parse under its declared layout."""


class Flag(str, Enum):
    WARN_FEW_CHAINS = "WARN_FEW_CHAINS"
    INSUFFICIENT_ESS_FOR_RHAT = "INSUFFICIENT_ESS_FOR_RHAT"
    CONSTANT_PARAMETER = "CONSTANT_PARAMETER"
    NONFINITE_VALUES = "NONFINITE_VALUES"
    DEGENERATE_VARIANCE = "DEGENERATE_VARIANCE"
    DEGENERATE_INDICATOR = "DEGENERATE_INDICATOR"
    ESS_CAPPED = "ESS_CAPPED"
    BDA2_UNBOUNDED = "BDA2_UNBOUNDED"
    TAIL_UNSTABLE = "TAIL_UNSTABLE"
    HIGH_RHAT = "HIGH_RHAT"
    LOW_ESS = "LOW_ESS"
    COMPUTATION_FAILED = "COMPUTATION_FAILED"

    def __str__(self) -> str:
        return self.value

# Flags that describe threshold violations rather than reliability problems
VIOLATION_FLAGS = frozenset({Flag.HIGH_RHAT, Flag.LOW_ESS})

# --------------------------------------------------------------------- #
class DrawsMatrix:
    """Post-warmup draws, M chains × N iterations × P parameters, read-only."""

    def __init__(self, values, parameter_names: Sequence[str] | None = None,
                 *, allow_nonfinite: bool = False):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise DrawsError(f"draws must be 3-D (chains, iterations, parameters), got shape {arr.shape}")
        m, n, p = arr.shape
        if m < 1 or n < 1 or p < 1:
            raise DrawsError(f"draws need at least one chain, iteration and parameter, got shape {arr.shape}")
        if parameter_names is None:
            parameter_names = [f"theta[{i}]" for i in range(p)]
        names = tuple(str(n_) for n_ in parameter_names)
        if len(names) != p:
            raise DrawsError(f"{len(names)} parameter names for {p} parameters")
        if len(set(names)) != len(names):
            dupes = sorted({n_ for n_ in names if names.count(n_) > 1})
            raise DrawsError(f"duplicate parameter names: {', '.join(dupes)}")
        if not allow_nonfinite and not np.all(np.isfinite(arr)):
            chain = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise DrawsError("non-finite draw values (pass allow_nonfinite to admit them)", chain=chain)
        arr.setflags(write=False)
        self._values = arr
        self.parameter_names = names
        self.allow_nonfinite = allow_nonfinite

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def chains(self) -> int:
        return self._values.shape[0]

    @property
    def iterations(self) -> int:
        return self._values.shape[1]

    @property
    def parameters(self) -> int:
        return self._values.shape[2]

    @property
    def total_draws(self) -> int:
        return self.chains * self.iterations

    def index(self, param: str | int) -> int:
        if isinstance(param, (int, np.integer)):
            if not 0 <= param < self.parameters:
                raise KeyError(f"parameter index {param} out of range")
            return int(param)
        try:
            return self.parameter_names.index(param)
        except ValueError:
            raise KeyError(f"unknown parameter {param!r}; available: {', '.join(self.parameter_names)}") from None

    def param(self, param: str | int) -> np.ndarray:
        """(M, N) read-only view of one parameter."""
        return self._values[:, :, self.index(param)]

    def select(self, params: Iterable[str]) -> "DrawsMatrix":
        idx = [self.index(p) for p in params]
        return DrawsMatrix(self._values[:, :, idx], [self.parameter_names[i] for i in idx],
                           allow_nonfinite=self.allow_nonfinite)

    def prefix(self, n: int) -> "DrawsMatrix":
        """First n iterations of every chain."""
        if not 1 <= n <= self.iterations:
            raise DrawsError(f"prefix length {n} outside 1..{self.iterations}")
        return DrawsMatrix(self._values[:, :n, :], self.parameter_names,
                           allow_nonfinite=self.allow_nonfinite)

    def __repr__(self) -> str:
        return f"DrawsMatrix(chains={self.chains}, iterations={self.iterations}, parameters={self.parameters})"


def require_iterations(x: np.ndarray, what: str = "draws") -> None:
    if x.ndim != 2:
        raise DrawsError(f"{what} must be a (chains, iterations) matrix, got shape {x.shape}")
    if x.shape[1] < MIN_ITERATIONS:
        raise DrawsError(f"{what} need N >= {MIN_ITERATIONS} iterations per chain to split, got {x.shape[1]}")

# --------------------------------------------------------------------- #
@dataclass(frozen=True)
class DiagnosticConfig:
    rhat_threshold: float = 1.01
    ess_threshold: float = 400
    min_ess_per_split_chain: float = 50
    tail_quantiles: Tuple[float, float] = (0.05, 0.95)
    small_interval_count: int = 20
    mcse_sd_quantiles: Tuple[float, float] = (0.16, 0.84)
    interval_coverage: float = 0.90
    ess_cap_enabled: bool = True
    report_quantiles: Tuple[float, ...] = (0.05, 0.5, 0.95)

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if not self.rhat_threshold > 1:
            raise ConfigError(f"rhat_threshold must be > 1, got {self.rhat_threshold}")
        if self.ess_threshold <= 0 or self.min_ess_per_split_chain <= 0:
            raise ConfigError("ESS thresholds must be positive")
        lo, hi = self.tail_quantiles
        if not 0 < lo < hi < 1:
            raise ConfigError(f"tail_quantiles must satisfy 0 < low < high < 1, got {self.tail_quantiles}")
        if self.small_interval_count < 2:
            raise ConfigError(f"small_interval_count must be >= 2, got {self.small_interval_count}")
        lo, hi = self.mcse_sd_quantiles
        if not 0 < lo < hi < 1:
            raise ConfigError(f"mcse_sd_quantiles must satisfy 0 < low < high < 1, got {self.mcse_sd_quantiles}")
        if not 0 < self.interval_coverage < 1:
            raise ConfigError(f"interval_coverage must lie in (0, 1), got {self.interval_coverage}")
        if any(not 0 < q < 1 for q in self.report_quantiles):
            raise ConfigError(f"report_quantiles must lie in (0, 1), got {self.report_quantiles}")

    @classmethod
    def from_config(cls, cfg, **overrides) -> "DiagnosticConfig":
        """Build from the [DIAGNOSTICS] section; keyword overrides win (CLI flags)."""
        d = cls()
        s = "DIAGNOSTICS"
        values = dict(
            rhat_threshold=utils.getfloat_safe(cfg, s, "rhat_threshold", d.rhat_threshold),
            ess_threshold=utils.getfloat_safe(cfg, s, "ess_threshold", d.ess_threshold),
            min_ess_per_split_chain=utils.getfloat_safe(cfg, s, "min_ess_per_split_chain", d.min_ess_per_split_chain),
            tail_quantiles=utils.getfloats_safe(cfg, s, "tail_quantiles", d.tail_quantiles),
            small_interval_count=utils.getint_safe(cfg, s, "small_interval_count", d.small_interval_count),
            mcse_sd_quantiles=utils.getfloats_safe(cfg, s, "mcse_sd_quantiles", d.mcse_sd_quantiles),
            interval_coverage=utils.getfloat_safe(cfg, s, "interval_coverage", d.interval_coverage),
            ess_cap_enabled=utils.getbool_safe(cfg, s, "ess_cap_enabled", d.ess_cap_enabled),
            report_quantiles=utils.getfloats_safe(cfg, s, "report_quantiles", d.report_quantiles),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        for pair in ("tail_quantiles", "mcse_sd_quantiles"):
            if len(values[pair]) != 2:
                raise ConfigError(f"{pair} needs exactly two probabilities, got {values[pair]}")
        return cls(**values)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

# --------------------------------------------------------------------- #
@dataclass
class ChainStat:
    parameter: str
    rhat_classic: float = float("nan")
    rhat_rank: float = float("nan")
    rhat_folded: float = float("nan")
    rhat_max: float = float("nan")
    rhat_unsplit: float = float("nan")
    ess_bulk: float = float("nan")
    ess_tail: float = float("nan")
    ess_median: float = float("nan")
    ess_mad: float = float("nan")
    ess_mean_classic: float = float("nan")
    ess_bda2: float = float("nan")
    mcse_mean: float = float("nan")
    mcse_median: float = float("nan")
    mean: float = float("nan")
    sd: float = float("nan")
    quantile_estimates: Dict[float, float] = field(default_factory=dict)
    quantile_mcse: Dict[float, float] = field(default_factory=dict)
    reliability_flags: set = field(default_factory=set)

    def violates(self) -> bool:
        return bool(self.reliability_flags & VIOLATION_FLAGS)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["quantile_estimates"] = {repr(float(k)): float(v) for k, v in self.quantile_estimates.items()}
        out["quantile_mcse"] = {repr(float(k)): float(v) for k, v in self.quantile_mcse.items()}
        out["flags"] = sorted(str(f) for f in self.reliability_flags)
        del out["reliability_flags"]
        for k, v in out.items():
            if isinstance(v, (np.floating, np.integer)):
                out[k] = float(v)
        return out


@dataclass
class DiagnosticsReport:
    stats: List[ChainStat]
    config: DiagnosticConfig
    chains: int
    iterations: int
    run_flags: set = field(default_factory=set)
    timestamp: str = field(default_factory=utils.utcnow)
    tool_version: str = __version__

    @property
    def parameters(self) -> int:
        return len(self.stats)

    def violations(self) -> List[str]:
        return [s.parameter for s in self.stats if s.violates()]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": TOOL_NAME, "version": self.tool_version},
            "timestamp": self.timestamp,
            "dimensions": {"chains": self.chains, "iterations": self.iterations,
                           "parameters": self.parameters},
            "config": self.config.to_dict(),
            "run_flags": sorted(str(f) for f in self.run_flags),
            "parameters": [s.to_dict() for s in self.stats],
        }

# --------------------------------------------------------------------- #
@dataclass(frozen=True, order=True)
class FlagRecord:
    """A reliability flag; parameter is None for run-level flags."""
    position: int
    parameter: Optional[str]
    flag: Flag


def validate(draws: DrawsMatrix, config: DiagnosticConfig | None = None) -> List[FlagRecord]:
    """Reliability flags for a draws matrix; pure in (draws, config)."""
    from ess import ess_bulk

    config = config or DiagnosticConfig()
    if draws.iterations < MIN_ITERATIONS:
        raise DrawsError(f"need N >= {MIN_ITERATIONS} iterations per chain to split, got {draws.iterations}")

    out: List[FlagRecord] = []
    if draws.chains < RECOMMENDED_CHAINS:
        out.append(FlagRecord(-1, None, Flag.WARN_FEW_CHAINS))

    split_chains = 2 * draws.chains
    for i, name in enumerate(draws.parameter_names):
        x = draws.param(i)
        if not np.all(np.isfinite(x)):
            out.append(FlagRecord(i, name, Flag.NONFINITE_VALUES))
            continue
        if np.ptp(x) == 0:
            out.append(FlagRecord(i, name, Flag.CONSTANT_PARAMETER))
            continue
        bulk = ess_bulk(x, cap=config.ess_cap_enabled)
        if not np.isfinite(bulk.ess) or bulk.ess / split_chains < config.min_ess_per_split_chain:
            out.append(FlagRecord(i, name, Flag.INSUFFICIENT_ESS_FOR_RHAT))
    return sorted(out)
