import numpy as np
import pytest

from phishsim.attacker import AttackerParams
from phishsim.campaign import ScenarioConfig
from phishsim.core import AgentProfile
from phishsim.scenario import example_scenario_path, load_scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_agent(chi, prior=None, posterior=None, rho=(0.01, 0.1, 1.0, 1.0), target=False, A=None):
    chi = np.asarray(chi, dtype=float)
    if prior is None:
        prior = np.zeros((4, A or 1))
    return AgentProfile(
        susceptibility_prior=np.asarray(prior, dtype=float),
        susceptibility_posterior=None if posterior is None else np.asarray(posterior, dtype=float),
        baseline=chi,
        clickthrough=rho,
        is_target=target,
    )


def random_agent(rng, A, target=False, boost=0.0):
    prior = rng.uniform(0, 1, size=(4, A))
    post = prior.copy()
    post[3] = np.minimum(1.0, prior[3] + boost * rng.uniform(0, 1, size=A))
    chi = rng.uniform(0.05, 1.0, size=4)
    rho = (rng.uniform(0, 0.05), rng.uniform(0, 0.3), 1.0, 1.0)
    return AgentProfile(prior, chi, post, rho, target)


def homogeneous_scenario(chi, n, m, rho=(0.0, 0.0, 1.0, 1.0), horizon=1, seed=0, A=1, **kw):
    agents = [make_agent(chi, rho=rho, target=i < m, A=A) for i in range(n)]
    attacker = AttackerParams(1.0, np.zeros(A))
    return ScenarioConfig(agents=agents, attacker=attacker, horizon=horizon, seed=seed, **kw)


@pytest.fixture(scope="session")
def example():
    return load_scenario(example_scenario_path())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
