"""Counter-based sub-seed derivation from a single root seed.

Each consumer owns a fixed stream id, so adding a new consumer never shifts
the numbers another one draws.
"""

from typing import Dict

import numpy as np

STREAMS: Dict[str, int] = {
    "split": 0,
    "init": 1,
    "scorer": 2,
    "shuffle": 3,
    "negatives": 4,
    "eval": 5,
    "perturb": 6,
    "classify": 7,
    "gradcheck": 8,
    "synthetic": 9,
}


def derive_rng(seed: int, stream: str, *counters: int) -> np.random.Generator:
    """Independent generator for ``stream`` (and optional counters) under ``seed``.

    Args:
        seed: Root seed
        stream: Registered consumer name
        *counters: Extra keys such as the epoch number

    Returns:
        A PCG64-backed numpy Generator
    """
    if stream not in STREAMS:
        raise KeyError(f"Unknown random stream '{stream}'")
    spawn_key = (STREAMS[stream], *counters)
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=spawn_key))
    )


def derive_seed(seed: int, stream: str, *counters: int) -> int:
    """Integer sub-seed for libraries that take ``random_state``."""
    return int(derive_rng(seed, stream, *counters).integers(0, 2**31 - 1))
