"""Named, reproducible random substreams derived from one integer seed."""

from __future__ import annotations

import numpy as np

STREAMS = {"schedule": 0, "rounds": 1, "attacks": 2, "hash_seed": 3}


def substream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for stream ``name`` (optionally a numbered chunk of it) under ``seed``."""
    key = (STREAMS[name],) + tuple(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
