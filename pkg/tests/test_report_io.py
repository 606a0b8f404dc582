from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
import pytest

import diagnose
from chain_core import ChainStat, DiagnosticConfig, DiagnosticsReport, DrawsError, DrawsMatrix, FormatError
from report_io import (DrawsFileFormat, Layout, ReportFormat, read_draws, render_table, write_draws,
                       write_report, write_sweep)
from simulate import ScenarioSpec, run_sweep


def _long_csv(tmp_path, text, name="draws.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_written_draws_read_back_exactly(tmp_path, rng):
    draws = DrawsMatrix(rng.standard_normal((3, 7, 2)) * 1e-3, ["alpha", "beta[1]"])
    path = tmp_path / "out.csv"
    write_draws(draws, path)
    back = read_draws(path)
    assert back.parameter_names == ("alpha", "beta[1]")
    np.testing.assert_array_equal(back.values, draws.values)
    assert path.read_text().splitlines()[0] == "chain,draw,alpha,beta[1]"


def test_funnel_fixture(funnel_csv):
    draws = read_draws(funnel_csv)
    assert (draws.chains, draws.iterations) == (4, 250)
    assert draws.parameter_names == ("log_tau", "theta")


def test_zero_based_chain_ids(tmp_path):
    path = _long_csv(tmp_path, "chain,draw,x\n0,1,1.0\n0,2,2.0\n1,1,3.0\n1,2,4.0\n")
    np.testing.assert_array_equal(read_draws(path).param("x"), [[1.0, 2.0], [3.0, 4.0]])


def test_headerless_long_file(tmp_path):
    path = _long_csv(tmp_path, "1;1;0.5\n1;2;0.25\n")
    draws = read_draws(path, DrawsFileFormat(delimiter=";", header=False))
    assert draws.parameter_names == ("theta[0]",)


def test_ragged_chains_name_the_short_chain(tmp_path):
    rows = ["chain,draw,x"] + [f"{c},{d},{c + d}" for c in (1, 2, 3) for d in range(1, 6 if c != 3 else 4)]
    path = _long_csv(tmp_path, "\n".join(rows) + "\n")
    with pytest.raises(DrawsError, match="chain 3 has 3") as err:
        read_draws(path)
    assert err.value.chain == 3


def test_non_numeric_cell_reports_line(tmp_path):
    path = _long_csv(tmp_path, "chain,draw,x\n1,1,0.5\n1,2,abc\n")
    with pytest.raises(FormatError) as err:
        read_draws(path)
    assert err.value.line == 3


def test_extra_field_reports_line(tmp_path):
    path = _long_csv(tmp_path, "chain,draw,x\n1,1,0.5\n1,2,0.7\n1,3,0.1,9\n")
    with pytest.raises(FormatError) as err:
        read_draws(path)
    assert err.value.line == 4


def test_nonfinite_draw_rejected_unless_allowed(tmp_path):
    path = _long_csv(tmp_path, "chain,draw,x\n1,1,0.5\n2,1,nan\n")
    with pytest.raises(DrawsError) as err:
        read_draws(path)
    assert (err.value.chain, err.value.line) == (2, 3)
    draws = read_draws(path, DrawsFileFormat(allow_nonfinite=True))
    assert math.isnan(draws.values[1, 0, 0])


@pytest.mark.parametrize("text", [
    "step,draw,x\n1,1,0.5\n",
    "chain,draw,x\n1,2,0.5\n1,2,0.6\n",
    "chain,draw,x\n2,1,0.5\n3,1,0.6\n",
    "chain,draw,x\n",
    "",
])
def test_malformed_long_files(tmp_path, text):
    with pytest.raises(FormatError):
        read_draws(_long_csv(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_draws(tmp_path / "nope.csv")


def test_wide_layout_one_file_per_parameter(tmp_path):
    for name, offset in (("a", 0), ("b", 100)):
        rows = ["c1,c2,c3"] + [",".join(str(offset + 10 * d + c) for c in range(3)) for d in range(5)]
        _long_csv(tmp_path, "\n".join(rows) + "\n", f"{name}.csv")
    draws = read_draws([tmp_path / "a.csv", tmp_path / "b.csv"], DrawsFileFormat(layout=Layout.WIDE))
    assert (draws.chains, draws.iterations, draws.parameter_names) == (3, 5, ("a", "b"))
    np.testing.assert_array_equal(draws.param("b")[2], [102, 112, 122, 132, 142])


def test_wide_files_must_agree(tmp_path):
    _long_csv(tmp_path, "c1,c2\n1,2\n3,4\n", "a.csv")
    _long_csv(tmp_path, "c1,c2\n1,2\n", "b.csv")
    with pytest.raises(DrawsError):
        read_draws([tmp_path / "a.csv", tmp_path / "b.csv"], DrawsFileFormat(layout=Layout.WIDE))


def test_json_report_uses_null_for_undefined(rng):
    x = np.stack([rng.standard_normal((4, 100)), np.full((4, 100), 2.0)], axis=-1)
    report = diagnose.build_report(DrawsMatrix(x, ["ok", "flat"]), threads=1)
    doc = json.loads(write_report(report, ReportFormat.JSON))
    flat = doc["parameters"][1]
    assert flat["parameter"] == "flat"
    assert flat["rhat_max"] is None
    assert "CONSTANT_PARAMETER" in flat["flags"]
    assert isinstance(doc["parameters"][0]["ess_bulk"], float)


def test_table_marks_violations_and_flags(iid):
    x = np.stack([iid, iid + np.array([[0.0], [0.0], [0.0], [3.0]]), np.ones_like(iid)], axis=-1)
    report = diagnose.build_report(DrawsMatrix(x, ["good", "stuck", "flat"]), threads=1)
    lines = render_table(report).splitlines()
    row = {name: next(l for l in lines if f" {name} " in f" {l} ") for name in ("good", "stuck", "flat")}
    assert row["stuck"].lstrip().startswith("!")
    assert row["flat"].lstrip().startswith("*")
    assert not row["good"].lstrip().startswith(("!", "*"))
    assert "HIGH_RHAT" in row["stuck"]


def test_table_for_empty_report():
    report = DiagnosticsReport(stats=[], config=DiagnosticConfig(), chains=4, iterations=10)
    text = write_report(report, "table").decode()
    assert "(no parameters)" in text


def test_sweep_csv_is_reproducible():
    spec = ScenarioSpec(iterations=50, replications=3, seed=8)
    a, b = write_sweep(run_sweep(spec, 1)), write_sweep(run_sweep(spec, 2))
    assert a == b
    assert a.splitlines()[0].startswith("replication,rhat_classic")


def test_undecodable_bytes_are_a_format_error(tmp_path):
    path = tmp_path / "latin.csv"
    path.write_bytes(b"chain,draw,mu\n1,1,0.5\n1,2,\xff\xfe\n")
    with pytest.raises(FormatError, match="UTF-8"):
        read_draws(path)


def test_json_report_numbers_are_exact(rng):
    x = np.stack([rng.standard_normal((4, 300)), rng.standard_cauchy((4, 300))], axis=-1)
    report = diagnose.build_report(DrawsMatrix(x, ["normal", "cauchy"]), threads=2)
    doc = json.loads(write_report(report, ReportFormat.JSON))
    numeric = [f.name for f in dataclasses.fields(ChainStat) if f.type in ("float", float)]
    assert "ess_bulk" in numeric and "mcse_median" in numeric
    for stat, row in zip(report.stats, doc["parameters"]):
        for name in numeric:
            value = float(getattr(stat, name))
            assert row[name] == (value if math.isfinite(value) else None), name
        for q, v in stat.quantile_estimates.items():
            assert row["quantile_estimates"][repr(float(q))] == float(v)
        for q, v in stat.quantile_mcse.items():
            assert row["quantile_mcse"][repr(float(q))] == float(v)
