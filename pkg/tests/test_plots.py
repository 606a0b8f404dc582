from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

import plots
from plots.ascii import ascii_bars
from plots.rank_plots import rank_plot_data
from plots.svg import nice_ticks

SVG_NS = "{http://www.w3.org/2000/svg}"


def test_rank_counts_cover_every_draw(iid):
    data = rank_plot_data(iid, bins=20)
    assert data.counts.shape == (4, 20)
    np.testing.assert_array_equal(data.counts.sum(axis=1), [1000] * 4)
    assert data.expected == 50
    assert data.band[0] < data.expected < data.band[1]


def test_rank_counts_with_ties():
    x = np.array([[1.0, 1.0, 2.0, 2.0], [1.0, 2.0, 2.0, 2.0]])
    data = rank_plot_data(x, bins=4)
    np.testing.assert_array_equal(data.counts.sum(axis=1), [4, 4])


def test_rank_plot_rejects_bad_bins(iid):
    with pytest.raises(ValueError):
        rank_plot_data(iid, bins=0)


@pytest.mark.parametrize("kind", list(plots.PLOT_KINDS))
def test_svg_is_well_formed_and_deterministic(iid_draws, kind):
    first = plots.render(kind, iid_draws, "mu", k=10, grid_step=0.1, points=4)
    assert first == plots.render(kind, iid_draws, "mu", k=10, grid_step=0.1, points=4)
    root = ET.fromstring(first)
    assert root.tag == f"{SVG_NS}svg"
    assert any(t.text and "mu" in t.text for t in root.iter(f"{SVG_NS}text"))


def test_rank_plot_has_one_panel_per_chain(iid_draws):
    root = ET.fromstring(plots.render("rank", iid_draws, "mu"))
    assert (root.get("width"), root.get("height")) == ("1280", "960")
    groups = [g.get("id") for g in root.iter(f"{SVG_NS}g")]
    assert groups == ["chain0", "chain1", "chain2", "chain3"]


@pytest.mark.parametrize("kind", list(plots.PLOT_KINDS))
def test_ascii_rendering(iid_draws, kind):
    text = plots.render(kind, iid_draws, "mu", ascii=True, k=5, grid_step=0.25, points=3).decode()
    assert text.startswith("mu ")
    assert "reference | = " in text


def test_unknown_kind(iid_draws):
    with pytest.raises(KeyError):
        plots.render("trace", iid_draws, "mu")


def test_ascii_bars_layout():
    lines = ascii_bars("t", ["a", "b", "c", "d"], [0.0, 50.0, 100.0, float("nan")], 50.0, width=10).splitlines()
    assert lines[0] == "t"
    assert lines[1] == "a " + " " * 5 + "|" + " " * 4 + "  0"
    assert lines[2] == "b " + "#" * 5 + "|" + " " * 4 + "  50"
    assert lines[3] == "c ##########  100"
    assert lines[4].endswith("NA")


def test_output_names():
    assert plots.output_name("beta[1]", "rank") == "beta_1__rank.svg"
    assert plots.output_name("mu", "local-ess", ascii=True) == "mu_local-ess.txt"


def test_quantile_grid():
    grid = plots.quantile_grid(0.01)
    assert len(grid) == 99 and grid[0] == 0.01 and grid[-1] == 0.99
    with pytest.raises(ValueError):
        plots.quantile_grid(0.5)


def test_nice_ticks():
    assert nice_ticks(0, 1000) == [0, 200, 400, 600, 800, 1000]
    assert nice_ticks(1, 1) == [1]
