"""Deterministic seed derivation.

Every random draw in the package comes from ``derive(master, *path)`` so that
results are a pure function of the master seed and the task coordinates,
independent of execution order.
"""
import numpy as np


def derive(master, *path):
    """Return a 64-bit unsigned seed for the substream at ``path``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def rng_for(master, *path):
    return np.random.default_rng(np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path)))
