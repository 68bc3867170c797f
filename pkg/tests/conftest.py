import sys

import numpy as np
import pytest

from stmar.ar_core import ComponentParams
from stmar.model import StmarParams

# StMAR(1,2) simulation design used throughout the tests
TRUTH = StmarParams(
    [ComponentParams(-1.5, [0.85], 0.35, 4.0), ComponentParams(-5.5, [0.35], 0.3, 8.0)],
    [0.6, 0.4],
)


def random_params(rng, p, M, nu_range=(2.5, 30.0)):
    """Random admissible StMAR parameters (alphas in canonical order)."""
    comps = []
    for _ in range(M):
        # partial autocorrelations in (-0.9, 0.9) always map to a stationary AR
        pacf = rng.uniform(-0.9, 0.9, p)
        phi = np.zeros(0)
        for r in pacf:
            phi = np.append(phi - r * phi[::-1], r)
        comps.append(ComponentParams(rng.normal(0, 1), phi, rng.uniform(0.2, 2.0), rng.uniform(*nu_range)))
    alphas = np.sort(rng.dirichlet(np.full(M, 3.0)))[::-1]
    return StmarParams(comps, alphas)


@pytest.fixture
def truth():
    return TRUTH


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.report_lines():
        terminalreporter.write_line(line)
