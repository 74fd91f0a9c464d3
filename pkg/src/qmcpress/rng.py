"""Seeded random streams with fixed per-purpose substreams.

All randomness in the package flows through NumPy's PCG64 generator seeded
via SeedSequence(seed, spawn_key=(role,)).  Fixing the role keys makes every
experiment reproducible from a single 64-bit seed, and adding a new consumer
of randomness never perturbs existing streams.
"""

from __future__ import annotations

import numpy as np

ROLE_DATA_X = 0
ROLE_DATA_Y = 1
ROLE_THETA = 2
ROLE_MODEL_INIT = 3
ROLE_TEST = 4


def substream(seed: int, role: int, *subkeys: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, role, *subkeys)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(role, *subkeys)))
    )
