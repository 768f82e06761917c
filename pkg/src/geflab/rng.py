"""Seeded random streams derived from (master_seed, task_id)."""
from __future__ import annotations

import numpy as np


def stream(master_seed: int, *task_id: int) -> np.random.Generator:
    """Independent generator for one task; the same ids always give the same stream."""
    seq = np.random.SeedSequence([int(master_seed), *(int(t) for t in task_id)])
    return np.random.Generator(np.random.PCG64(seq))


def standard_complex(rng: np.random.Generator, size) -> np.ndarray:
    """i.i.d. complex normals with E|Z|^2 = 1 and E[Z^2] = 0."""
    out = rng.standard_normal(size=(2,) + tuple(np.atleast_1d(size)))
    return (out[0] + 1j * out[1]) * np.sqrt(0.5)
