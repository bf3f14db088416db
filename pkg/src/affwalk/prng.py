"""Deterministic 64-bit PRNG and atom selection for reproducible replicas.

The generator is SplitMix64 (Steele, Lea, Flood 2014): a 64-bit counter
advanced by a fixed odd gamma and passed through an avalanche finalizer.  It
is part of the external reproducibility contract:

  * stream i of a base seed s is seeded with  s XOR mix64(i)  (mod 2^64);
  * atoms are drawn by inverse CDF over exact cumulative weights, using the
    integer thresholds floor(cum * 2^64), so every draw consumes exactly one
    64-bit output and the selection is identical on every platform.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Sequence

__all__ = ["mix64", "SplitMix64", "replica_seed", "cumulative_thresholds", "pick_index"]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_SCALE = 1 << 64


def mix64(x: int) -> int:
    """SplitMix64 avalanche finalizer."""
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential SplitMix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)


def replica_seed(seed: int, index: int) -> int:
    """Per-replica stream seed: independent streams from one base seed."""
    return (seed ^ mix64(index)) & _MASK


def cumulative_thresholds(weights: Sequence[Fraction]) -> list[int]:
    """Integer thresholds floor(cum_i * 2^64) of the exact cumulative weights.

    The final threshold is exactly 2^64, so a uniform draw in [0, 2^64)
    always lands in some cell; each cell i has probability within 2^-64 of
    its exact weight.
    """
    thresholds = []
    cum = Fraction(0)
    for w in weights:
        cum += w
        thresholds.append((cum.numerator * _SCALE) // cum.denominator)
    if cum != 1:
        raise ValueError("weights must sum to exactly 1")
    return thresholds


def pick_index(u: int, thresholds: Sequence[int]) -> int:
    """Index of the cell containing the draw u in [0, 2^64)."""
    return bisect_right(thresholds, u)
