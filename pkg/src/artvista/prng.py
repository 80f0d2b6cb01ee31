"""Seeded 64-bit PRNG used everywhere randomness is needed.

The generator is splitmix64 (Steele, Lea & Flood 2014). One update step:

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

It is tiny, splittable (any output can seed an independent stream) and has
no platform-dependent behaviour, so identical seeds give identical results
on every machine. Library RNGs are deliberately not used for anything that
affects output bytes.

Consumption discipline: every call site draws values in a fixed, documented
order. `quantize_colors` draws one sub-seed per restart up front, then each
restart's stream draws exactly one float per k-means++ centroid choice.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Deterministic 64-bit generator; see module docstring for the rule."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1), using the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def split(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())
