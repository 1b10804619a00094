import numpy as np
import pytest

from nlfront.kernels import AlgebraicTail, CompactCosine, CompactUniform
from nlfront.reactions import logistic
from nlfront.semiwave import SemiWaveConfig, solve_semiwave
from nlfront.solver import ProblemSpec, SolverConfig, run


@pytest.fixture(scope="session")
def uniform_kernel():
    return CompactUniform(1.0)


@pytest.fixture(scope="session")
def cosine_kernel():
    return CompactCosine(1.0)


@pytest.fixture(scope="session")
def logistic_reaction():
    return logistic(1.0, 1.0)


@pytest.fixture(scope="session")
def uniform_semiwave(uniform_kernel, logistic_reaction):
    """Reference semi-wave (uniform kernel, d = mu = 1) shared across tests."""
    return solve_semiwave(uniform_kernel, logistic_reaction, d=1.0, mu=1.0)


@pytest.fixture(scope="session")
def cosine_semiwave(cosine_kernel, logistic_reaction):
    return solve_semiwave(cosine_kernel, logistic_reaction, d=1.0, mu=1.0)


@pytest.fixture(scope="session")
def coarse_swcfg():
    """Fast semi-wave settings for unit tests that only probe structure."""
    return SemiWaveConfig(dx=0.04, L0=40.0, max_doublings=1)


CRIT1_CFG = SolverConfig(dx=0.05, dt=0.05, t_end=3000.0, log_every=5.0,
                         snapshot_stride=40)


def crit1_spec(kernel, reaction):
    return ProblemSpec(variant="halfline-fb", kernel=kernel, reaction=reaction,
                       d=1.0, mu=1.0, h0=10.0)


@pytest.fixture(scope="session")
def crit1_run(uniform_kernel, logistic_reaction):
    """The documented spreading run: uniform kernel, logistic, d = mu = 1,
    h0 = 10, plateau at u*; reused by several acceptance criteria."""
    return run(crit1_spec(uniform_kernel, logistic_reaction), CRIT1_CFG)
