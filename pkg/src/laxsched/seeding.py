"""Seed derivation and generator construction.

All randomness flows through counter-based Philox generators keyed by
explicit seed paths, so any replication / sweep cell can be re-derived
independently of execution order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["generator_from", "child_seed", "child_generator"]


def generator_from(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """A Philox generator keyed by the given seed or seed sequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def child_seed(base_seed: int, *path: int) -> int:
    """A stable 64-bit child seed for the given derivation path."""
    ss = np.random.SeedSequence([int(base_seed), *map(int, path)])
    return int(ss.generate_state(1, np.uint64)[0])


def child_generator(base_seed: int, *path: int) -> np.random.Generator:
    return generator_from(np.random.SeedSequence([int(base_seed), *map(int, path)]))
