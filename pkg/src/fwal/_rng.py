"""Seeded random streams.

Every stochastic routine takes an explicit seed. Streams are derived from a
counter-based bit generator (Philox) keyed on ``(seed, *keys)`` so that two
calls with different keys never share a stream and the same keys always
reproduce the same draws.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | tuple | None, *keys: int) -> np.random.Generator:
    """A tuple seed is shorthand for ``make_rng(seed[0], *seed[1:], *keys)``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        seed, keys = seed[0], (*seed[1:], *keys)
    entropy = [0 if seed is None else int(seed), *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
