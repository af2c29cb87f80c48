import numpy as np
import pytest

from herdinvest.herd import Agents, HerdConfig, Scenario
from herdinvest.market import MarketParams
from herdinvest.merton import AgentProfile

R, MU, SIGMA, T = 0.04, 0.07, 0.17, 50.0
ALPHA1, ALPHA2 = 0.2, 0.4


@pytest.fixture
def market():
    return MarketParams(R, MU, SIGMA)


@pytest.fixture
def agents():
    return Agents(AgentProfile(ALPHA1, 0.0), AgentProfile(ALPHA2, 0.0))


def make_scenario(vartheta=1 / 400, rho=0.0, alpha1=ALPHA1, alpha2=ALPHA2, x1=0.0, grid_n=1000, **market_kw):
    m = MarketParams(market_kw.get("r", R), market_kw.get("mu", MU), market_kw.get("sigma", SIGMA))
    herd = HerdConfig.from_vartheta(vartheta, alpha1, m.sigma, rho=rho, T=T, grid_n=grid_n)
    return Scenario(m, Agents(AgentProfile(alpha1, x1), AgentProfile(alpha2, 0.0)), herd)


@pytest.fixture
def scenario():
    return make_scenario()


@pytest.fixture
def grid():
    return np.linspace(0.0, T, 1001)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
