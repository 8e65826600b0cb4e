"""Deterministic RNG construction keyed by (seed, purpose...) tuples.

Every stochastic routine derives its generator through ``rng_for`` with a
distinct integer key path, so streams never collide and results are
independent of evaluation order and worker count.
"""

from __future__ import annotations

import numpy as np


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
