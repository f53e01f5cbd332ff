"""Seeded random streams.

Every stream is ``numpy.random.PCG64`` seeded through ``SeedSequence``. A
substream for task ``(i, j, ...)`` uses the task indices as the SeedSequence
spawn key, so the stream for a grid point does not depend on evaluation order.
"""

from __future__ import annotations

import numpy as np

PRNG_ID = "numpy.PCG64/SeedSequence(entropy=seed, spawn_key=task)"


def make_rng(seed, *task: int) -> np.random.Generator:
    """Generator for ``seed`` and optional task indices.

    ``seed`` may be an int, a tuple ``(seed, *task)``, or an existing Generator
    (returned unchanged when no task is given).
    """
    if isinstance(seed, np.random.Generator):
        if task:
            raise ValueError("task indices need an integer seed")
        return seed
    if isinstance(seed, tuple):
        seed, *prefix = seed
        task = tuple(prefix) + task
    if seed is None or int(seed) < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in task))
    return np.random.Generator(np.random.PCG64(ss))
