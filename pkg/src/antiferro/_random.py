"""Independent random streams keyed by (master seed, replica index, ...)."""

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream ``(seed, *key)``; independent of call order."""
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))
