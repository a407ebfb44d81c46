"""Named, seed-derived random substreams.

Every random quantity in a run comes from a generator keyed by
``(seed, name)``, so problem generation, coupling noise and intercept noise
never share bits and each seed can be replayed on its own.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & _MASK64, key])))


class OracleStream:
    """Random stream for one run's stochastic oracle.

    Coupling noise and intercept noise come from disjoint substreams so the
    sampled matrix is independent of the sampled intercepts.  ``draws``
    counts oracle samples consumed, which lets tests audit how many samples
    a solver step uses.
    """

    def __init__(self, seed: int, tag: str = "oracle"):
        self.seed = int(seed)
        self.tag = tag
        self.coupling = substream(seed, f"{tag}/coupling")
        self.intercept = substream(seed, f"{tag}/intercept")
        self.draws = 0

    def __repr__(self) -> str:
        return f"OracleStream(seed={self.seed}, tag={self.tag!r}, draws={self.draws})"
