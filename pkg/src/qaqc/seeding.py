"""Counter-based random number generation with explicit 64-bit seeds.

Every stochastic operation in the package takes an integer seed and builds
its generator here, so repeated runs are bit-reproducible. The generator is
Philox (counter-based); child seeds are derived through ``SeedSequence``
spawn keys, which keeps streams for nested work items (restarts, shots,
per-angle evaluations) independent without any shared mutable state.
"""
from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """Philox generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derive_seed(root: int, *path: int) -> int:
    """Deterministic child seed for a nested work item.

    ``path`` identifies the item (e.g. restart index, angle index, shot
    block); distinct paths give statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
