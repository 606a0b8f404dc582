from __future__ import annotations

import configparser
import json
import math

import numpy as np
import pytest

import utils
from chain_core import (ChainStat, ConfigError, DiagnosticConfig, DiagnosticsReport, DrawsError, DrawsMatrix,
                        Flag, FlagRecord, validate)


def test_two_dimensional_input_is_one_parameter(iid):
    d = DrawsMatrix(iid)
    assert (d.chains, d.iterations, d.parameters) == (4, 1000, 1)
    assert d.parameter_names == ("theta[0]",)
    assert d.total_draws == 4000


def test_draws_are_read_only(iid_draws):
    with pytest.raises(ValueError):
        iid_draws.values[0, 0, 0] = 1.0
    assert not iid_draws.param("mu").flags.writeable


def test_duplicate_names_rejected():
    with pytest.raises(DrawsError, match="duplicate"):
        DrawsMatrix(np.zeros((2, 5, 2)), ["a", "a"])


def test_nonfinite_rejected_unless_admitted():
    x = np.ones((3, 6))
    x[2, 4] = np.nan
    with pytest.raises(DrawsError) as err:
        DrawsMatrix(x)
    assert err.value.chain == 2
    assert np.isnan(DrawsMatrix(x, allow_nonfinite=True).values[2, 4, 0])


def test_unknown_parameter_lists_names(iid_draws):
    with pytest.raises(KeyError, match="mu"):
        iid_draws.param("sigma")


def test_select_and_prefix(rng):
    d = DrawsMatrix(rng.standard_normal((2, 10, 3)), ["a", "b", "c"])
    sub = d.select(["c", "a"])
    assert sub.parameter_names == ("c", "a")
    np.testing.assert_array_equal(sub.param("c"), d.param("c"))
    assert d.prefix(4).iterations == 4
    with pytest.raises(DrawsError):
        d.prefix(11)


def test_config_defaults_and_invariants():
    c = DiagnosticConfig()
    assert c.rhat_threshold == 1.01 and c.ess_threshold == 400
    assert c.tail_quantiles == (0.05, 0.95) and c.small_interval_count == 20
    for bad in (dict(rhat_threshold=1.0), dict(tail_quantiles=(0.9, 0.1)), dict(small_interval_count=1)):
        with pytest.raises(ConfigError):
            DiagnosticConfig(**bad)


def test_config_from_ini_with_overrides():
    cfg = configparser.ConfigParser()
    cfg.read_string("[DIAGNOSTICS]\nrhat_threshold = 1.05\ness_threshold = 100\ntail_quantiles = 0.1, 0.9\n")
    c = DiagnosticConfig.from_config(cfg, ess_threshold=250, rhat_threshold=None)
    assert c.rhat_threshold == 1.05
    assert c.ess_threshold == 250
    assert c.tail_quantiles == (0.1, 0.9)


def test_config_pair_length_checked():
    cfg = configparser.ConfigParser()
    cfg.read_string("[DIAGNOSTICS]\ntail_quantiles = 0.1, 0.5, 0.9\n")
    with pytest.raises(ConfigError):
        DiagnosticConfig.from_config(cfg)


def test_validate_healthy_draws_has_no_flags(iid_draws):
    assert validate(iid_draws) == []


def test_validate_flags_few_chains_and_constant(rng):
    x = np.stack([rng.standard_normal((2, 1000)), np.full((2, 1000), 3.14)], axis=-1)
    flags = validate(DrawsMatrix(x, ["ok", "pi"]))
    assert FlagRecord(-1, None, Flag.WARN_FEW_CHAINS) in flags
    assert FlagRecord(1, "pi", Flag.CONSTANT_PARAMETER) in flags
    assert validate(DrawsMatrix(x, ["ok", "pi"])) == flags


def test_validate_flags_short_runs_for_rhat(rng):
    flags = validate(DrawsMatrix(rng.standard_normal((4, 20))))
    assert [f.flag for f in flags] == [Flag.INSUFFICIENT_ESS_FOR_RHAT]


def test_validate_rejects_unsplittable(rng):
    with pytest.raises(DrawsError):
        validate(DrawsMatrix(rng.standard_normal((4, 3))))


def test_chain_stat_serialization():
    s = ChainStat(parameter="mu", rhat_max=1.002, quantile_estimates={0.05: -1.6},
                  reliability_flags={Flag.LOW_ESS, Flag.ESS_CAPPED})
    d = s.to_dict()
    assert d["flags"] == ["ESS_CAPPED", "LOW_ESS"]
    assert d["quantile_estimates"] == {"0.05": -1.6}
    assert math.isnan(d["ess_bulk"])
    assert s.violates()


def test_report_schema():
    report = DiagnosticsReport(stats=[ChainStat(parameter="a")], config=DiagnosticConfig(),
                               chains=4, iterations=100)
    d = json.loads(utils.jdump(report.to_dict()))
    assert d["schema_version"] == 1
    assert d["tool"]["name"] == "chaindiag"
    assert d["dimensions"] == {"chains": 4, "iterations": 100, "parameters": 1}
    assert d["parameters"][0]["rhat_max"] is None
    assert report.violations() == []
