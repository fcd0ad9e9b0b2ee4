"""Seeded random streams.

Every experiment draws from one 64-bit seed.  Sub-streams are spawned from a
``SeedSequence`` so results do not depend on how work is split across threads.
"""
import os

import numpy as np

SEED_ENV = "KAKEYA_SEED"


def resolve_seed(seed=None):
    if seed is not None:
        return int(seed) & 0xFFFFFFFFFFFFFFFF
    env = os.environ.get(SEED_ENV)
    if env is not None:
        return int(env, 0) & 0xFFFFFFFFFFFFFFFF
    return 0


def make_rng(seed=None):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(resolve_seed(seed))))


def spawn(seed, n):
    """Independent child generators derived from one seed."""
    children = np.random.SeedSequence(resolve_seed(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
