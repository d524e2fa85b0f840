"""Deterministic RNG construction from a user seed plus an index key.

Every seeded operation in the toolkit derives its generator through
``rng_from``, so results are reproducible and independent of evaluation
order or worker count.
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


def rng_from(seed, *key):
    """Generator seeded by ``seed`` and an optional tuple of indices."""
    entropy = [int(seed) & _MASK] + [int(k) & _MASK for k in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))
