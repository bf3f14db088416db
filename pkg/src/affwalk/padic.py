"""Truncated p-adic digit expansions of rationals and ball bucketing.

An expansion stores the valuation (start exponent) and N base-p digits of the
unit part, so the represented value is known modulo p^(start+N).  All
arithmetic stays on exact rationals; expansions are read-only views used for
boundary points and for histogramming empirical measures on Q_p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import PrecisionError
from .exact import valuation, _require_finite_prime

__all__ = [
    "PadicExpansion",
    "expand",
    "padic_log_distance",
    "ball_key",
    "ball_key_exact",
]


@dataclass(frozen=True)
class PadicExpansion:
    """Digits of a rational in Q_p, known modulo p^(start_exponent + N).

    The leading digit is nonzero except for the zero value, which is stored as
    all-zero digits with start_exponent 0.
    """

    p: int
    start_exponent: int
    digits: tuple[int, ...]
    exact_source: Optional[Fraction] = field(default=None, compare=False)

    def __post_init__(self):
        _require_finite_prime(self.p)
        if not self.digits:
            raise ValueError("expansion needs at least one digit")
        if any(d < 0 or d >= self.p for d in self.digits):
            raise ValueError("digits out of range")
        if self.digits[0] == 0:
            if any(self.digits) or self.start_exponent != 0:
                raise ValueError("leading digit must be nonzero unless value is 0")

    @property
    def precision(self) -> int:
        return len(self.digits)

    @property
    def is_zero(self) -> bool:
        return self.digits[0] == 0

    def value_mod(self) -> Fraction:
        """Re-sum the digits: congruent to the source mod p^(start+N)."""
        total = 0
        for d in reversed(self.digits):
            total = total * self.p + d
        return Fraction(total) * Fraction(self.p) ** self.start_exponent

    def render(self) -> str:
        """Digit string "d_v d_{v+1} ... (base p), start=v" for reports."""
        body = " ".join(str(d) for d in self.digits)
        return f"{body} (base {self.p}), start={self.start_exponent}"


def expand(q, p: int, n_digits: int) -> PadicExpansion:
    """First ``n_digits`` base-p digits of q, starting at its valuation.

    Writes q = p^v * (r/s) with r, s prime to p, then reads digits off the
    residue r * s^(-1) modulo p^n_digits (one modular inverse, no division
    loop).
    """
    p = _require_finite_prime(p)
    if n_digits < 1:
        raise ValueError("precision must be at least 1")
    q = Fraction(q)
    if q == 0:
        return PadicExpansion(p, 0, (0,) * n_digits, exact_source=q)
    v = valuation(q, p)
    unit = q / Fraction(p) ** v
    modulus = p**n_digits
    residue = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
    digits = []
    for _ in range(n_digits):
        residue, d = divmod(residue, p)
        digits.append(d)
    return PadicExpansion(p, v, tuple(digits), exact_source=q)


def padic_log_distance(q1, q2, p: int) -> float:
    """ln|q1 - q2|_p for distinct rationals."""
    q1, q2 = Fraction(q1), Fraction(q2)
    if q1 == q2:
        raise ValueError("distance undefined for equal inputs")
    return -valuation(q1 - q2, p) * math.log(p)


def ball_key(e: PadicExpansion, radius_exponent: int) -> tuple:
    """Hashable label of the closed ball of radius p^(-radius_exponent).

    Two expansions get the same key exactly when their values q1, q2 satisfy
    v_p(q1 - q2) >= radius_exponent.  Raises PrecisionError when the expansion
    does not carry digits through position radius_exponent - 1.
    """
    p, v = e.p, e.start_exponent
    if e.is_zero or v >= radius_exponent:
        if e.is_zero and v + e.precision < radius_exponent:
            # an all-zero expansion only certifies v_p >= start + precision
            raise PrecisionError(
                f"zero expansion of precision {e.precision} cannot resolve "
                f"radius exponent {radius_exponent}"
            )
        return (p, radius_exponent, radius_exponent, 0)
    needed = radius_exponent - v
    if e.precision < needed:
        raise PrecisionError(
            f"expansion has {e.precision} digits from exponent {v}, "
            f"needs {needed} for radius exponent {radius_exponent}"
        )
    residue = 0
    for d in reversed(e.digits[:needed]):
        residue = residue * p + d
    return (p, radius_exponent, v, residue)


def ball_key_exact(q, p: int, radius_exponent: int) -> tuple:
    """Ball key computed straight from an exact rational (no truncation).

    Agrees with ball_key(expand(q, p, N), radius_exponent) whenever N
    suffices; unlike the expansion route it never lacks precision.
    """
    p = _require_finite_prime(p)
    q = Fraction(q)
    if q == 0:
        return (p, radius_exponent, radius_exponent, 0)
    v = valuation(q, p)
    if v >= radius_exponent:
        return (p, radius_exponent, radius_exponent, 0)
    unit = q / Fraction(p) ** v
    modulus = p ** (radius_exponent - v)
    residue = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
    return (p, radius_exponent, v, residue)
