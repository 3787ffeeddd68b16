from __future__ import annotations

import numpy as np
import pytest

from lqlab.channel import ChannelParams


@pytest.fixture
def params() -> ChannelParams:
    return ChannelParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
