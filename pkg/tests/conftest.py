import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qdbell.params import EmitterParams  # noqa: E402

GAMMA = 2 * math.pi * 2.3  # rad/ns


@pytest.fixture
def ideal():
    def make(n, gamma=GAMMA):
        return EmitterParams(gamma_total=gamma, beta=1.0, n_photons=n)

    return make


@pytest.fixture
def generic():
    return EmitterParams.from_ghz(2.3, 0.92, gamma_d_ghz=0.01, delta_ghz=0.3, n=0.01)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
