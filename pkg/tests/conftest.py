import numpy as np
import pytest

from sqlr.dataset import Dataset
from sqlr.network import SieveNetwork, project_constraints


def random_net(rng, r, d, scale=1.0, v_budget=1000.0, m_budget=1000.0):
    return SieveNetwork(
        rng.uniform(-scale, scale),
        rng.uniform(-scale, scale, r),
        rng.uniform(-scale, scale, (r, d)),
        rng.uniform(-scale, scale, r),
        v_budget,
        m_budget,
    )


def random_feasible_net(rng, r, d, v_budget, m_budget):
    # weights far outside the budgets, then projected: lands on the boundary
    return project_constraints(random_net(rng, r, d, scale=3 * max(v_budget, m_budget), v_budget=v_budget,
                                          m_budget=m_budget))


def random_data(rng, n, d):
    return Dataset(rng.uniform(-1, 1, (n, d)), rng.normal(size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo runs that take minutes")


# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
