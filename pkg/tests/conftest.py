from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capimbalance.ingest import CapPanel, PricePanel  # noqa: E402


def days(n: int, start: str = "2004-01-02") -> np.ndarray:
    return np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_caps() -> CapPanel:
    months = np.array(["2004-01-30", "2004-02-27", "2004-03-31"], dtype="datetime64[D]")
    values = np.array([[5.0, 3.0, 2.0], [6.0, 3.0, 1.0], [4.0, 4.0, 2.0]])
    return CapPanel(months, ("A", "B", "C"), values)


@pytest.fixture
def small_prices() -> PricePanel:
    d = days(70)
    rng = np.random.default_rng(7)
    p = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, size=(70, 3)), axis=0))
    return PricePanel(d, ("A", "B", "C"), p)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
