"""Hierarchical, parallelism-independent random streams.

Every stream is addressed by ``(master_seed, purpose, *counters)`` and built
from :class:`numpy.random.SeedSequence` with that tuple as its spawn key, so a
stream's contents never depend on how many other streams were drawn before it.

Purposes used by the training loops:

* ``INIT``  ``(agent,)``           direction-initialization rollouts
* ``STEP``  ``(agent, step)``      training rollouts of one agent at one step
* ``EVAL``  ``(round,)``           evaluation episodes of the global policy
* ``PARAMS`` ``()``                initial policy parameters
"""

import numpy as np

PARAMS = 0
INIT = 1
STEP = 2
EVAL = 3


def stream(master_seed: int, purpose: int, *counters: int) -> np.random.Generator:
    if master_seed < 0:
        raise ValueError("master_seed must be nonnegative")
    key = (int(purpose),) + tuple(int(c) for c in counters)
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
