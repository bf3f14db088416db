"""Exact rational arithmetic over the places of Q.

A "place" is either a finite prime p (with the p-adic norm |q|_p = p^(-v_p(q)))
or the infinite place carrying the usual absolute value.  Everything here works
on exact `fractions.Fraction` values; only the logarithmic norms and heights
are returned as 64-bit floats, with the underlying integer valuations exposed
exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Union

__all__ = [
    "INFINITE_PLACE",
    "INFINITE_VALUATION",
    "Place",
    "is_prime",
    "valuation",
    "log_norm",
    "log_norm_plus",
    "height",
    "height_plus",
    "partial_height_plus",
    "prime_factors",
    "support_primes",
    "format_rational",
    "parse_rational",
    "format_place",
    "parse_place",
]

#: The archimedean place, used as a dictionary key alongside finite primes.
INFINITE_PLACE = math.inf

#: Sentinel returned by ``valuation`` at 0 (|0|_p = 0 for every p).
INFINITE_VALUATION = math.inf

Place = Union[int, float]
RationalLike = Union[Fraction, int]

# Deterministic Miller-Rabin witness set, valid for all n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test (Miller-Rabin with a fixed witness set)."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _require_finite_prime(p: Place) -> int:
    if p == INFINITE_PLACE:
        raise ValueError("expected a finite prime, got the infinite place")
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"not a prime: {p!r}")
    return p


def _require_place(p: Place) -> Place:
    if p == INFINITE_PLACE:
        return p
    return _require_finite_prime(p)


def _int_valuation(n: int, p: int) -> int:
    """Exponent of p in a nonzero integer n."""
    n = abs(n)
    if p == 2:
        return (n & -n).bit_length() - 1
    v = 0
    while True:
        q, r = divmod(n, p)
        if r:
            return v
        n = q
        v += 1


def valuation(q: RationalLike, p: int) -> int | float:
    """p-adic valuation of a rational, v_p(r/s) = v_p(r) - v_p(s).

    Returns the ``INFINITE_VALUATION`` sentinel at q = 0.
    """
    p = _require_finite_prime(p)
    q = Fraction(q)
    if q == 0:
        return INFINITE_VALUATION
    # the fraction is canonical, so at most one of num/den is divisible by p
    v = _int_valuation(q.numerator, p)
    if v:
        return v
    return -_int_valuation(q.denominator, p)


def log_norm(q: RationalLike, place: Place) -> float:
    """ln|q|_p: -v_p(q)*ln(p) at a finite prime, ln|q| at the infinite place.

    Rejects q = 0, where the logarithm is undefined.
    """
    q = Fraction(q)
    if q == 0:
        raise ValueError("log_norm undefined at 0")
    if place == INFINITE_PLACE:
        return math.log(abs(q.numerator)) - math.log(q.denominator)
    p = _require_finite_prime(place)
    return -valuation(q, p) * math.log(p)


def log_norm_plus(q: RationalLike, place: Place) -> float:
    """ln+|q|_p = max(ln|q|_p, 0), extended by 0 at q = 0."""
    q = Fraction(q)
    if q == 0:
        return 0.0
    if place == INFINITE_PLACE:
        n, d = abs(q.numerator), q.denominator
        return math.log(n) - math.log(d) if n > d else 0.0
    p = _require_finite_prime(place)
    v = valuation(q, p)
    return -v * math.log(p) if v < 0 else 0.0


def height(q: RationalLike) -> float:
    """Sum over all places of |ln|q|_p|, via the closed form ln|r| + ln(s).

    Computed from the canonical fraction r/s, never by factoring.  Rejects 0.
    """
    q = Fraction(q)
    if q == 0:
        raise ValueError("height undefined at 0")
    return math.log(abs(q.numerator)) + math.log(q.denominator)


def height_plus(q: RationalLike) -> float:
    """Sum over all places of ln+|q|_p, via the closed form ln(max(|r|, s)).

    Defined everywhere; 0 at q = 0.
    """
    q = Fraction(q)
    if q == 0:
        return 0.0
    return math.log(max(abs(q.numerator), q.denominator))


def partial_height_plus(
    coords: Mapping[Place, RationalLike], places: Iterable[Place]
) -> float:
    """Sum of ln+|z_p|_p over the given places.

    ``coords`` holds exact rational coordinates; places missing from it are
    treated as the coordinate 0, contributing nothing.
    """
    total = 0.0
    for place in places:
        place = _require_place(place)
        z = coords.get(place)
        if z is None:
            continue
        total += log_norm_plus(z, place)
    return total


_TRIAL_LIMIT = 1_000_000


def prime_factors(n: int) -> dict[int, int]:
    """Factor a (small) nonzero integer into {prime: exponent}.

    Trial division up to 1e6 plus a primality check on the cofactor; meant for
    step-measure coefficients, not for large composites.
    """
    if n == 0:
        raise ValueError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    for p in (2, 3):
        v = _int_valuation(n, p)
        if v and n > 1:
            out[p] = v
            n //= p**v
    d = 5
    while d * d <= n and d <= _TRIAL_LIMIT:
        for step in (d, d + 2):
            if n % step == 0:
                v = _int_valuation(n, step)
                out[step] = v
                n //= step**v
        d += 6
    if n > 1:
        if not is_prime(n):
            raise ValueError(f"cofactor {n} is composite and beyond trial division")
        out[n] = out.get(n, 0) + 1
    return out


def support_primes(q: RationalLike) -> set[int]:
    """Finite primes dividing the numerator or denominator of q (q != 0)."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("0 has no prime support")
    return set(prime_factors(q.numerator)) | set(prime_factors(q.denominator))


def format_rational(q: RationalLike) -> str:
    """Canonical text form "num/den" with den > 0 and gcd 1 (zero is "0/1")."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse "num/den" or a bare integer "num"."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        d = int(den)
        if d <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        return Fraction(int(num), d)
    return Fraction(int(text))


def format_place(place: Place) -> str:
    """Render a place as text: "2", "3", ... or "inf"."""
    return "inf" if place == INFINITE_PLACE else str(place)


def parse_place(text: str) -> Place:
    """Parse "inf" or a finite prime."""
    text = text.strip().lower()
    if text in ("inf", "infinity", "oo"):
        return INFINITE_PLACE
    return _require_finite_prime(int(text))
