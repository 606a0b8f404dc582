#!/usr/bin/env python3
# cli.py – chaindiag command line: diagnose draws, run simulation sweeps, emit plots
from __future__ import annotations
import argparse, logging, sys
from pathlib import Path
from typing import List, Optional

import utils
import plots
from chain_core import ConfigError, DiagnosticConfig, DiagnosticError, DrawsMatrix, TOOL_NAME, __version__
from diagnose import build_report
from report_io import DrawsFileFormat, Layout, ReportFormat, read_draws, write_draws, write_report, write_summary, write_sweep
from simulate import NOMINAL_RHO, Process, ScenarioSpec, parse_manipulation, run_sweep, scenario_chains

log = logging.getLogger("cli")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_THRESHOLD = 0, 1, 2, 3

DEFAULT_RHO = {Process.IID_NORMAL: 0.0, Process.AR1: 0.3, Process.CAUCHY_RATIO: 0.3,
               Process.CAUCHY_NOMINAL: NOMINAL_RHO}

MANIPULATION_HELP = """\
manipulations (repeatable, applied in order; chain defaults to 0):
  none                  leave the chains untouched
  trend:<fraction>      add c·s to every chain, the trend carrying <fraction> of the marginal variance
  shift:<delta>:<chain> add <delta> to one chain
  scale:<factor>:<chain> shrink one chain's deviations from its own mean by <factor>
"""


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with 1 (2 is reserved for bad data)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("files", nargs="+", metavar="FILE", help="draws CSV ('-' reads stdin); wide layout takes one file per parameter")
    p.add_argument("--layout", choices=[l.value for l in Layout], default=Layout.LONG.value,
                   help="long: chain,draw,param… columns; wide: one file per parameter, columns are chains")
    p.add_argument("--delimiter", default=",", help="field separator (default ',')")
    p.add_argument("--no-header", action="store_true", help="files have no header row")
    p.add_argument("--allow-nonfinite", action="store_true", help="admit NaN/inf draws and flag them instead of failing")


def build_parser() -> CliParser:
    p = CliParser(prog=TOOL_NAME, description="Convergence diagnostics for MCMC draws: rank-normalized split-R̂, bulk/tail ESS, MCSE")
    p.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    p.add_argument("--config", default="config.ini", help="INI file to read (missing file = defaults)")
    p.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (default from config, else INFO)")
    p.add_argument("--threads", type=int, help="worker threads (default: config, then $%s, then CPU count)" % utils.THREADS_ENV)
    sub = p.add_subparsers(dest="command", metavar="<command>", required=True)

    d = sub.add_parser("diagnose", help="diagnose a draws file; exit 3 when thresholds are exceeded")
    _layout_flags(d)
    d.add_argument("--format", choices=[f.value for f in ReportFormat], default=ReportFormat.TABLE.value)
    d.add_argument("--params", help="comma-separated parameter names (default: all)")
    d.add_argument("--rhat-threshold", type=float, help="flag R̂ at or above this (default 1.01)")
    d.add_argument("--ess-threshold", type=float, help="flag bulk/tail ESS below this (default 400)")
    d.add_argument("--out", help="write the report here instead of stdout")
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("simulate", help="replicate a synthetic scenario and record diagnostics",
                       epilog=MANIPULATION_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--scenario", required=True, choices=[pr.value for pr in Process])
    s.add_argument("--rho", type=float, help="AR(1) parameter (default 0.3; 0.95 for cauchy-nominal)")
    s.add_argument("--chains", type=int, help="chains per replication (default 4)")
    s.add_argument("--iters", type=int, help="iterations per chain (default 1000)")
    s.add_argument("--replications", type=int, help="number of replications (default 200)")
    s.add_argument("--seed", type=int, help="base seed (default 0)")
    s.add_argument("--manipulation", action="append", metavar="K:V[:C]", help="defect to inject, see below")
    s.add_argument("--out", help="sweep CSV path (default stdout)")
    s.add_argument("--summary", help="write the JSON summary of the sweep here")
    s.add_argument("--emit-draws", metavar="CSV", help="write replication 0 as a long draws CSV")
    s.set_defaults(func=cmd_simulate)

    pl = sub.add_parser("plot", help="render a diagnostic plot as SVG or ASCII")
    _layout_flags(pl)
    pl.add_argument("--param", required=True, help="parameter to plot")
    pl.add_argument("--kind", required=True, choices=list(plots.PLOT_KINDS))
    pl.add_argument("--bins", type=int, help="rank plot bins (default 20)")
    pl.add_argument("--k", type=int, help="small-interval count for local-ess (default 20)")
    pl.add_argument("--ascii", action="store_true", help="40-column terminal bars instead of SVG")
    pl.add_argument("--out", help="output path ('-' for stdout; default <param>_<kind>.svg)")
    pl.set_defaults(func=cmd_plot)
    return p

# --------------------------------------------------------------------- #
def _emit(data: bytes, out: Optional[str]) -> None:
    if out and out != "-":
        Path(out).write_bytes(data)
        log.info(f"Wrote {out}")
    else:
        sys.stdout.write(data.decode())
        sys.stdout.flush()


def _read(args) -> DrawsMatrix:
    fmt = DrawsFileFormat(layout=Layout(args.layout), delimiter=args.delimiter,
                          header=not args.no_header, allow_nonfinite=args.allow_nonfinite)
    return read_draws(args.files[0] if len(args.files) == 1 else args.files, fmt)


def cmd_diagnose(args, cfg, threads: Optional[int]) -> int:
    draws = _read(args)
    if args.params:
        draws = draws.select([p.strip() for p in args.params.split(",") if p.strip()])
    config = DiagnosticConfig.from_config(cfg, rhat_threshold=args.rhat_threshold,
                                          ess_threshold=args.ess_threshold)
    report = build_report(draws, config, threads)
    _emit(write_report(report, args.format), args.out)
    bad = report.violations()
    if bad:
        log.warning(f"Thresholds exceeded: {', '.join(bad)}")
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_simulate(args, cfg, threads: Optional[int]) -> int:
    process = Process(args.scenario)
    sim = "SIMULATION"
    rho = args.rho if args.rho is not None else utils.getfloat_safe(cfg, sim, "rho", DEFAULT_RHO[process])
    spec = ScenarioSpec(
        process=process,
        rho=rho,
        manipulations=tuple(parse_manipulation(m) for m in args.manipulation or ()),
        chains=args.chains or utils.getint_safe(cfg, sim, "chains", 4),
        iterations=args.iters or utils.getint_safe(cfg, sim, "iterations", 1000),
        replications=args.replications or utils.getint_safe(cfg, sim, "replications", 200),
        seed=args.seed if args.seed is not None else utils.getint_safe(cfg, sim, "seed", 0),
    )
    if args.emit_draws:
        write_draws(DrawsMatrix(scenario_chains(spec, 0), ["theta"]), args.emit_draws)
    result = run_sweep(spec, threads)
    _emit(write_sweep(result).encode(), args.out)
    if args.summary:
        write_summary(result, args.summary)
    for name, entry in result.summary()["diagnostics"].items():
        log.info(f"{name}: median {entry['q50']:.4g} (5% {entry['q05']:.4g}, 95% {entry['q95']:.4g})")
    return EXIT_OK


def cmd_plot(args, cfg, threads: Optional[int]) -> int:
    section = "PLOTS"
    bins = args.bins or utils.getint_safe(cfg, section, "rank_bins", 20)
    k = args.k or utils.getint_safe(cfg, "DIAGNOSTICS", "small_interval_count", 20)
    grid_step = utils.getfloat_safe(cfg, section, "quantile_grid_step", 0.01)
    points = utils.getint_safe(cfg, section, "evolution_points", 10)
    if bins < 1 or k < 1 or points < 1:
        raise ConfigError(f"--bins, --k and evolution_points must be >= 1, got {bins}, {k}, {points}")
    if not 0 < grid_step < 0.5:
        raise ConfigError(f"quantile_grid_step must lie in (0, 0.5), got {grid_step}")
    draws = _read(args)
    data = plots.render(
        args.kind, draws, args.param, ascii=args.ascii, bins=bins, k=k, grid_step=grid_step, points=points,
        threshold=utils.getfloat_safe(cfg, "DIAGNOSTICS", "ess_threshold", plots.ESS_THRESHOLD),
    )
    out = args.out
    if out is None and not args.ascii:
        out = plots.output_name(args.param, args.kind)
    _emit(data, out)
    return EXIT_OK

# --------------------------------------------------------------------- #
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = utils.load_config(args.config)
    level = args.log_level or cfg.get("GENERAL", "log_level", fallback="INFO")
    utils.log_init(TOOL_NAME, level, cfg.get("GENERAL", "log_dir", fallback="") or None)
    threads = args.threads or utils.getint_safe(cfg, "GENERAL", "threads", 0) or None
    try:
        return args.func(args, cfg, threads)
    except ConfigError as e:
        log.error(f"{e}")
        return EXIT_USAGE
    except KeyError as e:
        log.error(e.args[0] if e.args else "unknown key")
        return EXIT_DATA
    except (DiagnosticError, OSError, ValueError) as e:
        # arguments are checked up front, so anything left came from the data
        log.error(f"{e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
