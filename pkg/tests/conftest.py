from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# flat layout: modules live at the repository root
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from chain_core import DrawsMatrix  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def iid(rng) -> np.ndarray:
    """4 chains × 1000 iid standard normal draws."""
    return rng.standard_normal((4, 1000))


@pytest.fixture
def iid_draws(iid) -> DrawsMatrix:
    return DrawsMatrix(iid, ["mu"])


@pytest.fixture
def funnel_csv() -> Path:
    return FIXTURES / "funnel_draws.csv"
