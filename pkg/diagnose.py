#!/usr/bin/env python3
# diagnose.py – per-parameter diagnostic bundles and the concurrent report builder
from __future__ import annotations
import asyncio, logging
from collections import defaultdict
from typing import Dict, List, Optional, Set

import numpy as np

import utils
from chain_core import ChainStat, DiagnosticConfig, DiagnosticsReport, DrawsMatrix, Flag, RECOMMENDED_CHAINS, validate
from ess import ess_bda2, ess_bulk, ess_mad, ess_mean, ess_median, ess_tail
from mcse import mcse_mean, mcse_quantile
from rhat import combine_max, folded_split_rhat, rank_normalized_split_rhat, split_rhat, unsplit_rhat

log = logging.getLogger("diagnose")


def threshold_flags(stat: ChainStat, config: DiagnosticConfig) -> None:
    """HIGH_RHAT / LOW_ESS; NaN diagnostics never violate."""
    if stat.rhat_max >= config.rhat_threshold:
        stat.reliability_flags.add(Flag.HIGH_RHAT)
    if stat.ess_bulk < config.ess_threshold or stat.ess_tail < config.ess_threshold:
        stat.reliability_flags.add(Flag.LOW_ESS)


def screen(values, name: str, config: DiagnosticConfig) -> Set[Flag]:
    """validate() flags for a single parameter's (M, N) draws."""
    draws = DrawsMatrix(values, [name], allow_nonfinite=True)
    return {r.flag for r in validate(draws, config) if r.parameter is not None}


def chain_stat(values, name: str, config: DiagnosticConfig | None = None,
               screened: Set[Flag] | None = None) -> ChainStat:
    """Full diagnostic bundle for one parameter's (M, N) draws.

    `screened` carries the parameter's validate() flags when the caller already has them.
    """
    config = config or DiagnosticConfig()
    x = np.asarray(values, dtype=np.float64)
    if screened is None:
        screened = screen(x, name, config)
    stat = ChainStat(parameter=name)
    flags = stat.reliability_flags
    flags.update(screened)

    if Flag.NONFINITE_VALUES in screened:
        log.warning(f"{name}: non-finite draws, diagnostics skipped")
        return stat

    stat.mean = float(x.mean())
    stat.sd = float(x.std(ddof=1)) if x.size > 1 else float("nan")
    if Flag.CONSTANT_PARAMETER in screened:
        log.warning(f"{name}: constant parameter, diagnostics are NaN")
        stat.quantile_estimates = {q: float(x.flat[0]) for q in config.report_quantiles}
        return stat

    cap = config.ess_cap_enabled
    stat.rhat_classic = split_rhat(x, flags)
    stat.rhat_rank = rank_normalized_split_rhat(x, flags)
    stat.rhat_folded = folded_split_rhat(x, flags)
    stat.rhat_max = combine_max(stat.rhat_rank, stat.rhat_folded, flags)
    stat.rhat_unsplit = unsplit_rhat(x, flags)

    for attr, res in (("ess_bulk", ess_bulk(x, cap)),
                      ("ess_tail", ess_tail(x, config.tail_quantiles, cap)),
                      ("ess_median", ess_median(x, cap)),
                      ("ess_mad", ess_mad(x, cap)),
                      ("ess_mean_classic", ess_mean(x, cap))):
        setattr(stat, attr, res.ess)
        flags.update(res.flags)
    stat.ess_bda2 = ess_bda2(x, cap, flags)
    stat.mcse_mean = mcse_mean(x, cap, flags)

    # sorted once, shared by every quantile
    sorted_draws = np.sort(x, axis=None)
    wanted = sorted(set(config.report_quantiles) | {0.5})
    for q in wanted:
        mq = mcse_quantile(x, q, config.interval_coverage, config.mcse_sd_quantiles, cap, sorted_draws)
        flags.update(mq.flags)
        if q == 0.5:
            stat.mcse_median = mq.mcse
        if q in config.report_quantiles:
            stat.quantile_estimates[q] = mq.point
            stat.quantile_mcse[q] = mq.mcse

    threshold_flags(stat, config)
    log.debug(f"{name}: rhat_max={stat.rhat_max:.4f} ess_bulk={stat.ess_bulk:.0f} ess_tail={stat.ess_tail:.0f}")
    return stat


def failed_stat(name: str) -> ChainStat:
    stat = ChainStat(parameter=name)
    stat.reliability_flags.add(Flag.COMPUTATION_FAILED)
    return stat

# --------------------------------------------------------------------- #
async def diagnose_all(draws: DrawsMatrix, config: DiagnosticConfig, threads: int,
                       screened: Dict[int, Set[Flag]] | None = None) -> List[ChainStat]:
    """One worker-thread task per parameter, gathered back in input order."""
    sem = asyncio.Semaphore(max(1, threads))
    screened = screened if screened is not None else {}

    async def one(i: int, name: str) -> ChainStat:
        async with sem:
            try:
                return await asyncio.to_thread(chain_stat, draws.param(i), name, config, screened.get(i, set()))
            except Exception as e:
                log.error(f"{name}: diagnostics failed: {e}")
                return failed_stat(name)

    tasks = [asyncio.create_task(one(i, name)) for i, name in enumerate(draws.parameter_names)]
    return list(await asyncio.gather(*tasks))


def build_report(draws: DrawsMatrix, config: DiagnosticConfig | None = None,
                 threads: Optional[int] = None) -> DiagnosticsReport:
    config = config or DiagnosticConfig()
    records = validate(draws, config)
    threads = utils.resolve_threads(threads)

    run_flags = set()
    screened: Dict[int, Set[Flag]] = defaultdict(set)
    for r in records:
        if r.parameter is None:
            run_flags.add(r.flag)
        else:
            screened[r.position].add(r.flag)
    if Flag.WARN_FEW_CHAINS in run_flags:
        log.warning(f"Only {draws.chains} chain(s); at least {RECOMMENDED_CHAINS} are recommended")

    log.info(f"Diagnosing {draws.parameters} parameter(s), {draws.chains} × {draws.iterations} draws, {threads} thread(s)")
    stats = asyncio.run(diagnose_all(draws, config, threads, dict(screened)))
    report = DiagnosticsReport(stats=stats, config=config, chains=draws.chains,
                               iterations=draws.iterations, run_flags=run_flags)
    bad = report.violations()
    if bad:
        log.info(f"{len(bad)} parameter(s) exceed thresholds: {', '.join(bad)}")
    return report
