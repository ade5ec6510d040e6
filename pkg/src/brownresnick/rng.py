"""Keyed random substreams for reproducible, parallelizable simulation.

Every stochastic component draws from its own substream, identified by a
small tuple of integers such as (method, replication, block, path, purpose).
Substream keys are derived by hashing (seed, prefix, ids) into a 128-bit
Philox key, so any two distinct id tuples yield independent generators and
a simulation never depends on how many draws other components consumed.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

# Fixed purpose tags used as the last substream id component.
POINTS = 0   # exponential waiting times of a Poisson point stream
GAUSS = 1    # standard normals for one Gaussian path
MARKS = 2    # translation / site draws attached to points
SHAPE = 3    # rejection sampling attempts for one shape draw
PILOT = 4    # pilot estimation (adaptive-stop quantile)


def _philox_key(seed: int, ids: tuple[int, ...]) -> np.ndarray:
    payload = struct.pack("<%dq" % (len(ids) + 1), seed, *ids)
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64)


class RandomStream:
    """Family of independent ``numpy`` generators keyed by integer tuples.

    ``scoped(*prefix)`` returns a stream whose substreams are namespaced
    under the given prefix; the study runner uses this to isolate
    (method, alpha, replication) cells from one another.
    """

    def __init__(self, seed: int, prefix: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.prefix = tuple(int(i) for i in prefix)

    def substream(self, *ids: int) -> np.random.Generator:
        key = _philox_key(self.seed, self.prefix + tuple(int(i) for i in ids))
        return np.random.Generator(np.random.Philox(key=key))

    def scoped(self, *prefix: int) -> "RandomStream":
        return RandomStream(self.seed, self.prefix + tuple(int(i) for i in prefix))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, prefix={self.prefix})"
