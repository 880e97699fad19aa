"""Reproducible per-replica random streams.

Every replica draws from a Philox generator keyed by the run seed, with the
replica id written into the top word of the 256-bit counter. Streams are
disjoint unless a replica consumes 2**192 blocks, and a replica's output
does not depend on how replicas are scheduled.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def replica_rng(seed: int, replica_id: int = 0) -> np.random.Generator:
    counter = np.array([0, 0, 0, replica_id & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=seed & MASK64))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return replica_rng(0 if rng is None else int(rng))
