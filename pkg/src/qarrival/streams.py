"""Deterministic random streams.

Every stochastic piece of the package draws from a stream addressed by
(seed, stream_id).  The same address yields the bit-identical sequence on
any machine and under any thread count, so Monte Carlo artifacts are
reproducible and rungs of a sweep can run in parallel without sharing
generator state.
"""

import numpy as np


def seeded_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """PCG64 generator for the given (seed, stream_id) address."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))
