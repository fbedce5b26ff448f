"""Counter-based random streams derived from a master seed.

Every unit of work (trial, grid point, state) gets its own Philox stream keyed
by a path of integers, so results do not depend on execution order or on the
number of worker threads.
"""

from __future__ import annotations

import numpy as np


def _seq(master_seed: int, path) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))


def stream(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seq(master_seed, path)))


def derive_seed(master_seed: int, *path: int) -> int:
    """A 63-bit integer seed for the unit of work at ``path``."""
    return int(_seq(master_seed, path).generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))


def as_generator(source) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(source, np.random.Generator):
        return source
    return stream(0 if source is None else int(source))
