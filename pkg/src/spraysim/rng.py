"""Deterministic counter-based random streams.

Draws that must not depend on evaluation order (per-beam droplet
interception, receiver drop-off, spray intensity noise) come from a
stateless SplitMix64-style hash of (seed, stream, counters...). The same
key always yields the same value, so scalar, vectorized, and parallel
code paths agree bit for bit.
"""

from __future__ import annotations

import numpy as np

# Stream tags. Stable by contract: changing them changes generated datasets.
STREAM_INTERCEPT = 0x1A
STREAM_DROPOFF = 0x2B
STREAM_SPRAY_NOISE = 0x3C

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)


def _finalize(h: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer; full avalanche on 64-bit lanes."""
    h = (h ^ (h >> np.uint64(30))) * _MUL1
    h = (h ^ (h >> np.uint64(27))) * _MUL2
    return h ^ (h >> np.uint64(31))


class CounterRng:
    """Stateless RNG addressed by integer counters instead of a stream position.

    Counters must be non-negative integers; arrays broadcast against each
    other, so ``rng.uniform(col[:, None], row[None, :])`` fills a grid in
    one call.
    """

    def __init__(self, seed: int, stream: int):
        with np.errstate(over="ignore"):
            base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA
            self._base = _finalize(base ^ (np.uint64(stream) * _MUL2))

    def _hash(self, counters) -> np.ndarray:
        h = self._base
        with np.errstate(over="ignore"):
            for c in counters:
                arr = np.asarray(c, dtype=np.uint64)
                h = _finalize((h + _GAMMA) ^ (arr * _MUL1))
        return h

    def uniform(self, *counters) -> np.ndarray:
        """Uniform draw strictly inside (0, 1), one per counter tuple."""
        h = self._hash(counters)
        return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53

    def normal(self, *counters) -> np.ndarray:
        """Standard normal via Box-Muller, one per counter tuple."""
        u1 = self.uniform(*counters, 0)
        u2 = self.uniform(*counters, 1)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def substream(seed: int, *tags: int) -> np.random.Generator:
    """Independent numpy generator for a (seed, tags...) route.

    Used for sequential simulation draws (traffic spawning, emission
    directions, wake flips) where a stateful generator is the natural fit.
    """
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *tags]))
