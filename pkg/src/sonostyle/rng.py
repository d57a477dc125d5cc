"""SplitMix64 pseudo-random streams.

Every stochastic step in the package (weight init, pair sampling, speckle
noise, synthetic corpora) draws from this generator so that a single u64
seed pins all output bytes.

The generator state advances by a fixed odd constant and each output is a
pure mixing function of the state, so blocks of draws can be produced with
vectorized numpy arithmetic while staying identical to the scalar stream.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Deterministic 64-bit generator.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    """

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def next_u64(self, n: int | None = None):
        """Return one u64 (``n is None``) or an array of ``n`` u64 values."""
        count = 1 if n is None else int(n)
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * _GOLDEN
            out = _mix(states)
        self.state = (self.state + count * int(_GOLDEN)) & _MASK
        return int(out[0]) if n is None else out

    def uniform(self, n: int | None = None, low: float = 0.0, high: float = 1.0):
        """Uniform doubles on [low, high) from the top 53 bits."""
        raw = self.next_u64(1 if n is None else n)
        u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        u = low + (high - low) * u
        return float(u[0]) if n is None else u

    def normal(self, n: int | None = None):
        """Standard normal draws via Box-Muller (two uniforms per draw)."""
        count = 1 if n is None else int(n)
        u = self.uniform(2 * count)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return float(z[0]) if n is None else z

    def randint(self, high: int) -> int:
        """Integer in [0, high)."""
        if high <= 0:
            raise ValueError("high must be positive")
        return int(self.next_u64() % high)

    def spawn(self, offset: int) -> "SplitMix64":
        """Independent stream keyed by ``offset`` (used for per-image seeds)."""
        return SplitMix64(int(_mix(np.array([(self.state + offset) & _MASK], dtype=np.uint64))[0]))
