import numpy as np
import pytest

from mfpo import policy as pol
from mfpo.envs import ChainMDP
from mfpo.mdp import random_chain_mdp


@pytest.fixture
def chain_mdp():
    return random_chain_mdp(seed=0)


@pytest.fixture
def chain_env(chain_mdp):
    return ChainMDP(chain_mdp)


@pytest.fixture
def chain_arch():
    return pol.PolicyArch(3, 4, pol.Categorical(2))


def random_params(arch, rng, scale=1.0):
    return scale * rng.standard_normal(pol.param_count(arch))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
