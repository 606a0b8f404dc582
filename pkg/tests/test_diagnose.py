from __future__ import annotations

import math

import numpy as np
import pytest

import diagnose
import utils
from chain_core import ChainStat, DiagnosticConfig, DrawsError, DrawsMatrix, Flag, validate
from simulate import gen_ar1


def test_healthy_parameter_has_full_bundle(iid):
    stat = diagnose.chain_stat(iid, "mu")
    assert abs(stat.rhat_max - 1) < 0.01
    assert stat.rhat_max == max(stat.rhat_rank, stat.rhat_folded)
    assert stat.ess_bulk > 400 and stat.ess_tail > 400
    assert set(stat.quantile_estimates) == {0.05, 0.5, 0.95}
    assert stat.mcse_median == stat.quantile_mcse[0.5]
    assert stat.mean == pytest.approx(iid.mean())
    assert not stat.violates()
    assert Flag.INSUFFICIENT_ESS_FOR_RHAT not in stat.reliability_flags


def test_median_mcse_reported_even_when_not_requested(iid):
    stat = diagnose.chain_stat(iid, "mu", DiagnosticConfig(report_quantiles=(0.25,)))
    assert set(stat.quantile_estimates) == {0.25}
    assert math.isfinite(stat.mcse_median)


def test_shifted_chain_violates_rhat(iid):
    x = iid.copy()
    x[2] += 2.0
    stat = diagnose.chain_stat(x, "mu")
    assert Flag.HIGH_RHAT in stat.reliability_flags
    assert stat.violates()


def test_sticky_chains_have_low_ess(rng):
    x = np.vstack([gen_ar1(0.99, 200, rng.integers(2 ** 32)) for _ in range(4)])
    stat = diagnose.chain_stat(x, "slow")
    assert Flag.LOW_ESS in stat.reliability_flags
    assert Flag.INSUFFICIENT_ESS_FOR_RHAT in stat.reliability_flags


def test_constant_parameter():
    stat = diagnose.chain_stat(np.full((4, 100), 0.25), "c")
    assert Flag.CONSTANT_PARAMETER in stat.reliability_flags
    assert stat.mean == 0.25
    assert set(stat.quantile_estimates.values()) == {0.25}
    assert math.isnan(stat.rhat_max)
    assert not stat.violates()


def test_nonfinite_parameter_is_flagged(iid):
    x = iid.copy()
    x[0, 3] = np.inf
    stat = diagnose.chain_stat(x, "bad")
    assert stat.reliability_flags == {Flag.NONFINITE_VALUES}


def test_nan_diagnostics_never_violate():
    stat = ChainStat(parameter="x")
    diagnose.threshold_flags(stat, DiagnosticConfig())
    assert not stat.reliability_flags


def test_report_keeps_parameter_order_and_is_thread_independent(rng):
    x = rng.standard_normal((4, 300, 3))
    draws = DrawsMatrix(x, ["c", "a", "b"])
    one = diagnose.build_report(draws, threads=1)
    many = diagnose.build_report(draws, threads=4)
    assert [s.parameter for s in one.stats] == ["c", "a", "b"]
    assert utils.jdump([s.to_dict() for s in one.stats]) == utils.jdump([s.to_dict() for s in many.stats])
    assert not one.run_flags


def test_report_flags_few_chains(rng):
    report = diagnose.build_report(DrawsMatrix(rng.standard_normal((2, 200))), threads=1)
    assert report.run_flags == {Flag.WARN_FEW_CHAINS}


def test_report_needs_splittable_chains(rng):
    with pytest.raises(DrawsError):
        diagnose.build_report(DrawsMatrix(rng.standard_normal((4, 3))))


def test_failed_parameter_does_not_sink_the_report(rng, monkeypatch):
    real = diagnose.chain_stat

    def flaky(values, name, *args):
        if name == "boom":
            raise RuntimeError("synthetic failure")
        return real(values, name, *args)

    monkeypatch.setattr(diagnose, "chain_stat", flaky)
    draws = DrawsMatrix(rng.standard_normal((4, 200, 2)), ["ok", "boom"])
    report = diagnose.build_report(draws, threads=2)
    assert report.stats[1].reliability_flags == {Flag.COMPUTATION_FAILED}
    assert math.isfinite(report.stats[0].rhat_max)


def test_report_flags_come_from_validate(rng):
    slow = np.vstack([gen_ar1(0.99, 200, rng.integers(2 ** 32)) for _ in range(2)])
    x = np.stack([rng.standard_normal((2, 200)), np.full((2, 200), 1.5), slow], axis=-1)
    draws = DrawsMatrix(x, ["ok", "flat", "slow"])
    report = diagnose.build_report(draws, threads=2)
    records = validate(draws)
    assert report.run_flags == {r.flag for r in records if r.parameter is None}
    for i, stat in enumerate(report.stats):
        expected = {r.flag for r in records if r.position == i}
        assert expected <= stat.reliability_flags
    assert Flag.CONSTANT_PARAMETER in report.stats[1].reliability_flags
    assert Flag.INSUFFICIENT_ESS_FOR_RHAT in report.stats[2].reliability_flags


def test_screening_is_not_repeated_when_flags_are_given(iid, monkeypatch):
    monkeypatch.setattr(diagnose, "validate", lambda *a, **k: pytest.fail("validate called"))
    stat = diagnose.chain_stat(iid, "mu", DiagnosticConfig(), screened={Flag.INSUFFICIENT_ESS_FOR_RHAT})
    assert Flag.INSUFFICIENT_ESS_FOR_RHAT in stat.reliability_flags
    assert math.isfinite(stat.rhat_max)
