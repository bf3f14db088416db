"""Finite-support step distributions on the affine group.

Exact rational weights throughout: drifts are stored as the exact mean
valuation per prime so sign tests (which prime contracts) never go through
floats, convolution powers keep exact probabilities, and entropy is the only
place a float appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import BudgetError, ConfigError
from .exact import (
    INFINITE_PLACE,
    Place,
    format_rational,
    height,
    height_plus,
    parse_rational,
    support_primes,
    valuation,
)
from .group import AffineMap, IDENTITY, compose, format_affine, inverse

__all__ = [
    "StepDistribution",
    "MeasureReport",
    "DriftProfile",
    "ConvolutionTable",
    "validate",
    "drift",
    "drift_profile",
    "contracting_set",
    "first_moment",
    "q_approximant",
    "reflect",
    "convolve",
    "power",
    "entropy",
    "parse_measure_config",
    "measure_config",
    "DEFAULT_CELL_BUDGET",
]

DEFAULT_CELL_BUDGET = 10**7


@dataclass(frozen=True)
class StepDistribution:
    """Probability measure with finitely many affine-map atoms.

    Atoms are canonicalized (duplicates merged, sorted) at construction;
    weights must be positive rationals summing to exactly 1.
    """

    atoms: tuple[tuple[AffineMap, Fraction], ...]

    def __init__(self, atoms):
        if isinstance(atoms, Mapping):
            atoms = atoms.items()
        merged: dict[AffineMap, Fraction] = {}
        for g, w in atoms:
            if not isinstance(g, AffineMap):
                g = AffineMap(*g)
            w = Fraction(w)
            if w <= 0:
                raise ConfigError(f"weight {w} of atom {format_affine(g)} not positive")
            merged[g] = merged.get(g, Fraction(0)) + w
        if not merged:
            raise ConfigError("a step distribution needs at least one atom")
        total = sum(merged.values())
        if total != 1:
            raise ConfigError(f"weights sum to {total}, expected exactly 1")
        canon = tuple(sorted(merged.items(), key=lambda kv: kv[0].sort_key()))
        object.__setattr__(self, "atoms", canon)

    @property
    def support(self) -> tuple[AffineMap, ...]:
        return tuple(g for g, _ in self.atoms)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.atoms)


@dataclass(frozen=True)
class MeasureReport:
    """Degeneracy verdict for a step distribution."""

    degenerate: bool
    reason: str | None = None
    fixed_point: Fraction | None = None


def validate(mu: StepDistribution) -> MeasureReport:
    """Exact degeneracy test.

    The measure is degenerate when the walk it drives cannot spread: either
    every atom is a pure translation (a = 1), or every atom fixes one common
    rational point z (z = b/(1-a) for the atoms with a != 1, b = 0 for the
    rest).
    """
    if all(g.a == 1 for g in mu.support):
        return MeasureReport(True, "all atoms are translations (a = 1)")
    fixed: Fraction | None = None
    for g in mu.support:
        if g.a == 1:
            if g.b != 0:
                return MeasureReport(False)
            continue  # identity fixes everything
        z = g.b / (1 - g.a)
        if fixed is None:
            fixed = z
        elif z != fixed:
            return MeasureReport(False)
    return MeasureReport(True, f"every atom fixes z = {fixed}", fixed)


def _vp_mean(mu: StepDistribution, p: int) -> Fraction:
    """Exact mean of v_p(a) under the step law."""
    total = Fraction(0)
    for g, w in mu.atoms:
        total += w * valuation(g.a, p)
    return total


def drift(mu: StepDistribution, place: Place) -> float:
    """Mean of ln|a|_p: negative exactly on the contracting places."""
    if place == INFINITE_PLACE:
        return math.fsum(
            float(w) * (math.log(abs(g.a.numerator)) - math.log(g.a.denominator))
            for g, w in mu.atoms
        )
    return -_vp_mean(mu, place) * math.log(place)


@dataclass(frozen=True)
class DriftProfile:
    """All nonzero drifts of a step law, with their exact rational cores.

    ``vp_means`` maps each prime p dividing some atom's linear part to the
    exact mean of v_p(a); the drift there is -vp_means[p] * ln(p).  The
    infinite drift equals minus the sum of the finite ones; its sign is also
    available exactly via ``infinite_sign``.
    """

    finite_drifts: tuple[tuple[int, float], ...]
    infinite_drift: float
    vp_means: tuple[tuple[int, Fraction], ...]
    infinite_sign: int

    def finite(self) -> dict[int, float]:
        return dict(self.finite_drifts)

    def exact(self) -> dict[int, Fraction]:
        return dict(self.vp_means)

    def phi(self, place: Place) -> float:
        if place == INFINITE_PLACE:
            return self.infinite_drift
        return dict(self.finite_drifts).get(place, 0.0)

    def phi_plus(self, place: Place) -> float:
        return max(self.phi(place), 0.0)

    def phi_minus(self, place: Place) -> float:
        return max(-self.phi(place), 0.0)

    def contracting(self) -> set[Place]:
        out: set[Place] = {p for p, c in self.vp_means if c > 0}
        if self.infinite_sign < 0:
            out.add(INFINITE_PLACE)
        return out

    def nonzero_places(self) -> set[Place]:
        """Places with nonzero drift; all others have phi = 0 exactly."""
        out: set[Place] = {p for p, c in self.vp_means if c != 0}
        if self.infinite_sign != 0:
            out.add(INFINITE_PLACE)
        return out


def _infinite_sign(mu: StepDistribution) -> int:
    """Exact sign of the infinite drift via one integer comparison.

    With weights w_i = e_i / L over a common denominator L, the sign of
    sum w_i ln|a_i| is the sign of prod |num_i|^{e_i} - prod den_i^{e_i}.
    """
    lcm = 1
    for w in mu.weights:
        lcm = lcm * w.denominator // math.gcd(lcm, w.denominator)
    num_prod = 1
    den_prod = 1
    for g, w in mu.atoms:
        e = w.numerator * (lcm // w.denominator)
        num_prod *= abs(g.a.numerator) ** e
        den_prod *= g.a.denominator ** e
    return (num_prod > den_prod) - (num_prod < den_prod)


def drift_profile(mu: StepDistribution) -> DriftProfile:
    primes = set()
    for g, _ in mu.atoms:
        primes |= support_primes(g.a)
    vp_means = tuple(sorted((p, _vp_mean(mu, p)) for p in primes))
    finite = tuple((p, -c * math.log(p)) for p, c in vp_means)
    infinite = -math.fsum(phi for _, phi in finite)
    # drift-sum identity: the direct computation must agree
    direct = drift(mu, INFINITE_PLACE)
    if abs(direct - infinite) > 1e-12:
        raise AssertionError(
            f"drift bookkeeping mismatch: {direct} vs {infinite}"
        )
    return DriftProfile(finite, infinite, vp_means, _infinite_sign(mu))


def contracting_set(mu: StepDistribution) -> set[Place]:
    """Places where the walk's linear part contracts (drift < 0, exact test)."""
    return drift_profile(mu).contracting()


def first_moment(mu: StepDistribution) -> float:
    """Mean adelic length of one step: sum of w * (height(a) + height_plus(b))."""
    return math.fsum(float(w) * (height(g.a) + height_plus(g.b)) for g, w in mu.atoms)


def q_approximant(profile: DriftProfile, n: int) -> Fraction:
    """The rational whose p-norm tracks e^(n*phi_p) at every finite prime.

    q_n = prod over p of p^(-floor(n * phi_p / ln p)), with the floor taken
    on the exact rational n * (-vp_mean), never on a float.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    q = Fraction(1)
    for p, c in profile.vp_means:
        if c == 0:
            continue
        exponent = -math.floor(n * (-c))
        q *= Fraction(p) ** exponent
    return q


def reflect(mu: StepDistribution) -> StepDistribution:
    """Image of the measure under group inversion; drifts flip sign."""
    return StepDistribution((inverse(g), w) for g, w in mu.atoms)


@dataclass(frozen=True)
class ConvolutionTable:
    """Exact law of the n-step product: map from group element to probability."""

    probs: tuple[tuple[AffineMap, Fraction], ...]
    n: int

    def as_dict(self) -> dict[AffineMap, Fraction]:
        return dict(self.probs)

    @property
    def support_size(self) -> int:
        return len(self.probs)


def _table(probs: Mapping[AffineMap, Fraction], n: int) -> ConvolutionTable:
    canon = tuple(sorted(probs.items(), key=lambda kv: kv[0].sort_key()))
    return ConvolutionTable(canon, n)


def table_of(mu: StepDistribution) -> ConvolutionTable:
    return _table(dict(mu.atoms), 1)


def convolve(
    t1: ConvolutionTable,
    t2: ConvolutionTable,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> ConvolutionTable:
    """Law of the product of independent draws from t1 then t2."""
    cells = t1.support_size * t2.support_size
    if cells > cell_budget:
        raise BudgetError(
            f"convolution needs {cells} cells, budget is {cell_budget}",
            reached=cells,
        )
    out: dict[AffineMap, Fraction] = {}
    for g1, w1 in t1.probs:
        for g2, w2 in t2.probs:
            g = compose(g1, g2)
            w = w1 * w2
            prev = out.get(g)
            out[g] = w if prev is None else prev + w
    return _table(out, t1.n + t2.n)


def power(
    mu: StepDistribution, n: int, cell_budget: int = DEFAULT_CELL_BUDGET
) -> ConvolutionTable:
    """Exact law of the n-step walk increment product."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    acc = _table({IDENTITY: Fraction(1)}, 0)
    step = table_of(mu)
    for _ in range(n):
        acc = convolve(acc, step, cell_budget)
    return acc


def entropy(t: ConvolutionTable) -> float:
    """Shannon entropy -sum p ln p of the exact table, in nats."""
    return -math.fsum(float(w) * math.log(w) for _, w in t.probs if w != 1)


def parse_measure_config(block: Mapping) -> StepDistribution:
    """Build a measure from the config block {"atoms": [{a, b, w}, ...]}.

    Rationals are strings "num/den" (or bare integers); weights must sum to
    exactly 1.
    """
    try:
        entries = block["atoms"]
    except (KeyError, TypeError):
        raise ConfigError('measure block must contain an "atoms" list')
    if not isinstance(entries, (list, tuple)) or not entries:
        raise ConfigError('"atoms" must be a non-empty list')
    pairs = []
    for i, entry in enumerate(entries):
        try:
            a = parse_rational(str(entry["a"]))
            b = parse_rational(str(entry["b"]))
            w = parse_rational(str(entry["w"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"atom {i}: {exc}")
        try:
            pairs.append((AffineMap(a, b), w))
        except ValueError as exc:
            raise ConfigError(f"atom {i}: {exc}")
    return StepDistribution(pairs)


def measure_config(mu: StepDistribution) -> dict:
    """Inverse of parse_measure_config, for embedding configs in reports."""
    return {
        "atoms": [
            {
                "a": format_rational(g.a),
                "b": format_rational(g.b),
                "w": format_rational(w),
            }
            for g, w in mu.atoms
        ]
    }
