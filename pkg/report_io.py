#!/usr/bin/env python3
# report_io.py – draws CSV ingestion/egress, report and sweep serialization
from __future__ import annotations
import logging, math, re, sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

import utils
from chain_core import DiagnosticsReport, DrawsError, DrawsMatrix, FormatError, VIOLATION_FLAGS

log = logging.getLogger("report_io")

FLOAT_FORMAT = "%.17g"
PathLike = Union[str, Path]


class Layout(str, Enum):
    LONG = "long"
    WIDE = "wide"


class ReportFormat(str, Enum):
    JSON = "json"
    TABLE = "table"


@dataclass(frozen=True)
class DrawsFileFormat:
    layout: Layout = Layout.LONG
    delimiter: str = ","
    header: bool = True
    allow_nonfinite: bool = False

    @property
    def first_data_line(self) -> int:
        return 2 if self.header else 1

# --------------------------------------------------------------------- #
def _read_table(path: PathLike, fmt: DrawsFileFormat) -> pd.DataFrame:
    src = sys.stdin if str(path) == "-" else path
    try:
        df = pd.read_csv(src, sep=fmt.delimiter, header=0 if fmt.header else None,
                         dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise FormatError(f"{path}: no data") from None
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})") from None
    except pd.errors.ParserError as e:
        m = re.search(r"line (\d+)", str(e))
        raise FormatError(f"{path}: {e}", line=int(m.group(1)) if m else None) from None
    if df.empty:
        raise FormatError(f"{path}: no draws")
    return df


def _as_float(df: pd.DataFrame, path: PathLike, fmt: DrawsFileFormat) -> np.ndarray:
    """Exact decimal → binary conversion (correctly rounded), with the line of the first bad cell."""
    try:
        return df.to_numpy(dtype=str).astype(np.float64)
    except ValueError:
        for i, row in enumerate(df.itertuples(index=False)):
            for col, cell in zip(df.columns, row):
                try:
                    float(cell)
                except ValueError:
                    line = i + fmt.first_data_line
                    raise FormatError(f"{path}:{line}: column {col!r} has non-numeric value {cell!r}",
                                      line=line) from None
        raise


def _check_finite(values: np.ndarray, chain_of_row: np.ndarray | None, path: PathLike,
                  fmt: DrawsFileFormat) -> None:
    """chain_of_row None means columns are chains."""
    if fmt.allow_nonfinite:
        return
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        line = i + fmt.first_data_line
        chain = j if chain_of_row is None else int(chain_of_row[i])
        raise DrawsError(f"{path}:{line}: non-finite draw (use --allow-nonfinite to admit it)",
                         chain=chain, line=line)


def _read_long(path: PathLike, fmt: DrawsFileFormat) -> DrawsMatrix:
    df = _read_table(path, fmt)
    if df.shape[1] < 3:
        raise FormatError(f"{path}: long layout needs chain, draw and at least one parameter column")
    if fmt.header:
        head = [str(c).strip().lower() for c in df.columns[:2]]
        if head != ["chain", "draw"]:
            raise FormatError(f"{path}: first two columns must be 'chain' and 'draw', got {list(df.columns[:2])}", line=1)
        names = [str(c).strip() for c in df.columns[2:]]
    else:
        names = [f"theta[{i}]" for i in range(df.shape[1] - 2)]

    numbers = _as_float(df, path, fmt)
    chain_ids, draw_ids, values = numbers[:, 0], numbers[:, 1], numbers[:, 2:]
    if not (np.all(np.isfinite(chain_ids)) and np.all(chain_ids == np.round(chain_ids))):
        i = int(np.argwhere(~np.isfinite(chain_ids) | (chain_ids != np.round(chain_ids)))[0][0])
        raise FormatError(f"{path}: chain ids must be integers", line=i + fmt.first_data_line)

    ids = sorted(set(int(c) for c in chain_ids))
    base = ids[0]
    if base not in (0, 1) or ids != list(range(base, base + len(ids))):
        raise FormatError(f"{path}: chain ids must be contiguous from 0 or 1, got {ids}")
    chain_idx = chain_ids.astype(int) - base
    _check_finite(values, chain_ids.astype(int), path, fmt)

    rows: List[np.ndarray] = []
    counts = []
    for m in range(len(ids)):
        sel = np.flatnonzero(chain_idx == m)
        steps = np.diff(draw_ids[sel])
        if np.any(~(steps > 0)):
            j = int(np.argwhere(~(steps > 0))[0][0]) + 1
            raise FormatError(f"{path}: draw indices of chain {ids[m]} are not strictly increasing",
                              chain=ids[m], line=int(sel[j]) + fmt.first_data_line)
        rows.append(values[sel])
        counts.append(sel.size)

    longest = max(counts)
    short = [ids[m] for m, c in enumerate(counts) if c != longest]
    if short:
        detail = ", ".join(f"chain {ids[m]} has {c}" for m, c in enumerate(counts) if c != longest)
        raise DrawsError(f"{path}: ragged chains ({detail}; expected {longest} draws)", chain=short[0])
    log.info(f"Read {len(ids)} chain(s) × {longest} draw(s) × {len(names)} parameter(s) from {path}")
    return DrawsMatrix(np.stack(rows), names, allow_nonfinite=fmt.allow_nonfinite)


def _read_wide(paths: Sequence[PathLike], fmt: DrawsFileFormat) -> DrawsMatrix:
    """One file per parameter; columns are chains, rows are draws."""
    cols, names = [], []
    for path in paths:
        df = _read_table(path, fmt)
        numbers = _as_float(df, path, fmt)
        _check_finite(numbers, None, path, fmt)
        cols.append(numbers.T)
        names.append("theta" if str(path) == "-" else Path(path).stem)
    shapes = {c.shape for c in cols}
    if len(shapes) != 1:
        raise DrawsError(f"wide files disagree on (chains, draws): {sorted(shapes)}")
    log.info(f"Read {len(names)} wide file(s), {cols[0].shape[0]} chain(s) × {cols[0].shape[1]} draw(s)")
    return DrawsMatrix(np.stack(cols, axis=-1), names, allow_nonfinite=fmt.allow_nonfinite)


def read_draws(path: Union[PathLike, Sequence[PathLike]], fmt: DrawsFileFormat | None = None) -> DrawsMatrix:
    """Parse a draws file (``-`` for stdin) into a rectangular DrawsMatrix."""
    fmt = fmt or DrawsFileFormat()
    paths = [path] if isinstance(path, (str, Path)) else list(path)
    for p in paths:
        if str(p) != "-" and not Path(p).is_file():
            raise FileNotFoundError(f"no such draws file: {p}")
    if fmt.layout is Layout.WIDE:
        return _read_wide(paths, fmt)
    if len(paths) != 1:
        raise FormatError("long layout reads exactly one file")
    return _read_long(paths[0], fmt)


def write_draws(draws: DrawsMatrix, path: PathLike | None = None) -> str | None:
    """LONG CSV with 1-based chain/draw ids and 17 significant digits."""
    m, n, _ = draws.values.shape
    df = pd.DataFrame(draws.values.reshape(m * n, -1), columns=list(draws.parameter_names))
    df.insert(0, "draw", np.tile(np.arange(1, n + 1), m))
    df.insert(0, "chain", np.repeat(np.arange(1, m + 1), n))
    text = df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if path is None:
        return text
    Path(path).write_text(text)
    log.info(f"Wrote draws to {path}")
    return None

# --------------------------------------------------------------------- #
def _fmt(v: float, spec: str) -> str:
    return "NA" if v is None or not math.isfinite(v) else format(v, spec)


def _marker(flags) -> str:
    if flags & VIOLATION_FLAGS:
        return "!"
    return "*" if flags else ""


def render_table(report: DiagnosticsReport) -> str:
    rows = [{
        "": _marker(s.reliability_flags),
        "parameter": s.parameter,
        "rhat_max": _fmt(s.rhat_max, ".4f"),
        "ess_bulk": _fmt(s.ess_bulk, ".0f"),
        "ess_tail": _fmt(s.ess_tail, ".0f"),
        "mcse_mean": _fmt(s.mcse_mean, ".4g"),
        "flags": ",".join(sorted(str(f) for f in s.reliability_flags)) or "-",
    } for s in report.stats]
    cols = ["", "parameter", "rhat_max", "ess_bulk", "ess_tail", "mcse_mean", "flags"]
    body = pd.DataFrame(rows, columns=cols).to_string(index=False, justify="left") if rows else "(no parameters)"
    head = f"chains={report.chains} iterations={report.iterations} parameters={report.parameters}"
    if report.run_flags:
        head += "  run flags: " + ",".join(sorted(str(f) for f in report.run_flags))
    foot = "! exceeds rhat/ess thresholds   * reliability flag"
    return f"{head}\n{body}\n{foot}\n"


def write_report(report: DiagnosticsReport, fmt: ReportFormat | str = ReportFormat.TABLE) -> bytes:
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.JSON:
        return (utils.jdump(report.to_dict()) + "\n").encode()
    return render_table(report).encode()


def write_sweep(result, path: PathLike | None = None) -> str | None:
    """One CSV row per replication, byte-identical for identical sweeps."""
    df = pd.DataFrame([r.to_row() for r in result.records])
    text = df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="NA")
    if path is None:
        return text
    Path(path).write_text(text)
    log.info(f"Wrote {len(df)} sweep record(s) to {path}")
    return None


def write_summary(result, path: PathLike | None = None) -> str | None:
    text = utils.jdump(result.summary()) + "\n"
    if path is None:
        return text
    Path(path).write_text(text)
    return None
