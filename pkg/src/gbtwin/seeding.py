"""Deterministic derivation of independent seed streams."""

import numpy as np


def derive_seed(master: int, *key: int) -> int:
    """Derive a child seed from a master seed and an integer key path.

    Children are independent streams: results do not depend on the order in
    which siblings are consumed.
    """
    ss = np.random.SeedSequence(master, spawn_key=tuple(key))
    return int(ss.generate_state(1)[0])
