"""
navlab - Seeding
Run seeds are plain integers of either sign; numpy wants non-negative entropy.
Non-negative seeds pass through unchanged, negative ones wrap modulo 2**64.
"""

import numpy as np

from utils.errors import ConfigError

SEED_MODULUS = 2 ** 64


def seed_entropy(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigError(f'seed must be an integer, got {seed!r}')
    return int(seed) % SEED_MODULUS


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed_entropy(seed))


def spawn_rngs(seed, n: int) -> list:
    """n independent generators from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed_entropy(seed)).spawn(n)]
