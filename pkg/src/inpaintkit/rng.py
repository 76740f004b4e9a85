"""Portable seedable random number generator.

Every randomized routine in this package (patch search, network weight
initialization, noise inputs) draws from this generator so that runs are
bit-reproducible for a fixed seed, across platforms and across
implementations in other languages.

The generator is SplitMix64 (Steele, Lea, Flood 2014). State and output
are 64-bit unsigned integers; one step is

    state  = (state + 0x9E3779B97F4A7C15) mod 2^64
    z      = state
    z      = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z      = (z XOR (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output = z XOR (z >> 31)

Derived draws:

- ``uniform()``     output >> 11, times 2^-53, a double in [0, 1)
- ``randint(n)``    rejection-free modulo reduction ``output % n``
                    (documented bias is negligible for the small ranges
                    used here and keeps the mapping trivially portable)
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, n: int) -> int:
        """Integer in [0, n)."""
        n = int(n)
        if n <= 0:
            raise ValueError("randint requires n >= 1")
        return self.next_u64() % n

    def uniform_array(self, shape: tuple[int, ...]):
        """Array of uniforms in [0, 1), filled in C order.

        SplitMix64 is counter-based (state after n draws is
        seed + n*gamma), so bulk generation vectorizes exactly: the
        result is bit-identical to n scalar ``uniform()`` calls.
        """
        import numpy as np

        total = 1
        for s in shape:
            total *= s
        if total == 0:
            return np.empty(shape, dtype=np.float64)
        steps = np.arange(1, total + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(_GAMMA)
            self.state = int(z[-1])
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        out = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return out.reshape(shape)
