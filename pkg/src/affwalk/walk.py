"""Seeded simulation of the affine random walk and boundary extraction.

A trajectory multiplies i.i.d. increments g_k = (a_k, b_k): the running
product is x_n = (A_n, Z_n) with A_n = a_1...a_n and Z_n = sum A_{k-1} b_k,
kept as exact rationals.  On a place with negative drift the translation part
converges; digits are declared stable by a consecutive-margin heuristic on
the valuation of A_n and every lock is probed by walking further and
re-checking.  The probe outcome is recorded, never silently trusted.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import (
    BudgetError,
    DegenerateMeasureError,
    PrecisionError,
    StabilizationError,
)
from .exact import INFINITE_PLACE, Place, valuation
from .group import AffineMap, IDENTITY
from .measure import StepDistribution, drift_profile, validate
from .padic import PadicExpansion, ball_key_exact, expand
from .prng import SplitMix64, cumulative_thresholds, pick_index, replica_seed

__all__ = [
    "Trajectory",
    "sample_path",
    "BoundaryDigits",
    "boundary_digits",
    "RealLimit",
    "real_limit",
    "BoundarySample",
    "extract_boundary",
    "tail_point",
    "EmpiricalMeasure",
    "empirical_measure",
    "DivergenceReport",
    "divergence_statistic",
    "increment_valuation_rate",
    "DEFAULT_MARGIN",
    "DEFAULT_STEP_CAP",
    "DEFAULT_MAX_BITS",
]

DEFAULT_MARGIN = 32
DEFAULT_STEP_CAP = 200_000
DEFAULT_MAX_BITS = 1_000_000


@dataclass(frozen=True)
class Trajectory:
    """A finite walk: increments g_1..g_n and running products x_0..x_n."""

    seed: int
    steps: tuple[AffineMap, ...]
    prefix: tuple[AffineMap, ...]

    @property
    def length(self) -> int:
        return len(self.steps)

    def position(self, n: int) -> AffineMap:
        """x_n = (A_n, Z_n)."""
        return self.prefix[n]


class _Walker:
    """Mutable walk state with exact (A, Z) and a bit-size guard."""

    __slots__ = ("atoms", "thresholds", "rng", "a", "z", "count", "max_bits")

    def __init__(self, mu: StepDistribution, seed: int, max_bits: int = DEFAULT_MAX_BITS):
        self.atoms = mu.support
        self.thresholds = cumulative_thresholds(mu.weights)
        self.rng = SplitMix64(seed)
        self.a = Fraction(1)
        self.z = Fraction(0)
        self.count = 0
        self.max_bits = max_bits

    def step(self) -> AffineMap:
        g = self.atoms[pick_index(self.rng.next_u64(), self.thresholds)]
        # x_k = x_{k-1} * g_k: translation picks up A_{k-1} b_k
        self.z += self.a * g.b
        self.a *= g.a
        self.count += 1
        if self.count % 32 == 0:
            bits = (
                self.a.numerator.bit_length()
                + self.a.denominator.bit_length()
                + self.z.numerator.bit_length()
                + self.z.denominator.bit_length()
            )
            if bits > self.max_bits:
                raise BudgetError(
                    f"walk state reached {bits} bits at step {self.count}, "
                    f"guard is {self.max_bits}",
                    reached=bits,
                )
        return g

    def position(self) -> AffineMap:
        return AffineMap(self.a, self.z)


def sample_path(
    mu: StepDistribution,
    n: int,
    seed: int,
    max_bits: int = DEFAULT_MAX_BITS,
) -> Trajectory:
    """Deterministic n-step trajectory for a non-degenerate step law."""
    report = validate(mu)
    if report.degenerate:
        raise DegenerateMeasureError(report.reason or "degenerate step law")
    if n < 0:
        raise ValueError("length must be nonnegative")
    walker = _Walker(mu, seed, max_bits)
    steps = []
    prefix = [IDENTITY]
    for _ in range(n):
        steps.append(walker.step())
        prefix.append(walker.position())
    return Trajectory(seed, tuple(steps), tuple(prefix))


def _min_translation_valuation(mu: StepDistribution, p: int) -> Optional[int]:
    """min v_p(b) over atoms with b != 0; None when every b is 0."""
    vals = [valuation(g.b, p) for g in mu.support if g.b != 0]
    return min(vals) if vals else None


@dataclass(frozen=True)
class BoundarySample:
    """Stabilized boundary coordinates extracted from one trajectory.

    All representatives are the same exact rational Z taken at the
    stabilization index; they approximate the limit coordinate in each
    contracting place.  ``probes`` records, per place, whether extending the
    walk by the margin left the locked resolution unchanged.
    """

    representatives: tuple[tuple[Place, Fraction], ...]
    expansions: tuple[tuple[int, PadicExpansion], ...]
    real_interval: Optional[tuple[float, float]]
    stabilization_index: int
    probes: tuple[tuple[Place, bool], ...]
    steps_total: int
    probe_value: Fraction = Fraction(0)

    @property
    def probe_agreed(self) -> bool:
        return all(ok for _, ok in self.probes)

    def representative(self, place: Place) -> Fraction:
        for p, z in self.representatives:
            if p == place:
                return z
        raise KeyError(f"no representative at place {place}")


def extract_boundary(
    mu: StepDistribution,
    seed: int,
    finite_targets: Mapping[int, int] | None = None,
    real_tol: float | None = None,
    margin: int = DEFAULT_MARGIN,
    step_cap: int = DEFAULT_STEP_CAP,
    min_index: int = 0,
    keep_prefix_to: int = 0,
    max_bits: int = DEFAULT_MAX_BITS,
) -> tuple[Trajectory, BoundarySample]:
    """Run one walk until every requested place's coordinate looks locked.

    For a finite prime p with target exponent t, the lock criterion is
    v_p(A_n) >= t - min_b v_p(b) holding for ``margin`` consecutive steps,
    which keeps every further increment A_n b divisible by p^t.  For the
    infinite place the criterion is |A_n| * max|b| <= tol * safety with the
    geometric-series headroom safety = (1 - e^drift)/2.  The guarantee is
    probabilistic: after locking, the walk is extended by ``margin`` steps
    and each place's resolution re-checked; outcomes land in ``probes``.
    """
    finite_targets = dict(finite_targets or {})
    profile = drift_profile(mu)
    exact = profile.exact()
    for p in finite_targets:
        if exact.get(p, Fraction(0)) <= 0:
            raise ValueError(f"prime {p} does not contract (drift >= 0)")
    if real_tol is not None:
        if profile.infinite_sign >= 0:
            raise ValueError("the infinite place does not contract (drift >= 0)")
        if real_tol <= 0:
            raise ValueError("tolerance must be positive")

    atoms = mu.support
    atom_vp = {p: [valuation(g.a, p) for g in atoms] for p in finite_targets}
    min_vb = {p: _min_translation_valuation(mu, p) for p in finite_targets}
    va = {p: 0 for p in finite_targets}
    # lock thresholds on v_p(A_n); None when Z can never move at p
    va_need = {
        p: (finite_targets[p] - min_vb[p] if min_vb[p] is not None else None)
        for p in finite_targets
    }
    log_abs = [
        math.log(abs(g.a.numerator)) - math.log(g.a.denominator) for g in atoms
    ]
    la = 0.0
    real_need = None
    if real_tol is not None:
        safety = (1.0 - math.exp(profile.infinite_drift)) / 2.0
        max_b = max((abs(float(g.b)) for g in atoms), default=0.0)
        if max_b == 0.0:
            real_need = math.inf  # Z stays 0; always locked
        else:
            real_need = math.log(real_tol * safety) - math.log(max_b)

    walker = _Walker(mu, seed, max_bits)
    atom_index = {g: i for i, g in enumerate(atoms)}
    counters: dict[Place, int] = {p: 0 for p in finite_targets}
    if real_tol is not None:
        counters[INFINITE_PLACE] = 0
    prefix = [IDENTITY]
    steps = []

    def locked_now() -> bool:
        return all(c >= margin for c in counters.values())

    min_index = max(min_index, keep_prefix_to)
    n = 0
    while not (locked_now() and n >= min_index):
        if n >= step_cap:
            raise StabilizationError(
                f"no lock within {step_cap} steps (seed {seed})", steps=step_cap
            )
        g = walker.step()
        n += 1
        i = atom_index[g]
        for p in finite_targets:
            va[p] += atom_vp[p][i]
            need = va_need[p]
            counters[p] = counters[p] + 1 if (need is None or va[p] >= need) else 0
        if real_tol is not None:
            la += log_abs[i]
            ok = real_need == math.inf or la <= real_need
            counters[INFINITE_PLACE] = counters[INFINITE_PLACE] + 1 if ok else 0
        if keep_prefix_to > 0 and n <= keep_prefix_to:
            steps.append(g)
            prefix.append(walker.position())

    rep = walker.z
    lock_index = n

    # continuation probe: does the locked resolution survive more steps?
    for _ in range(margin):
        walker.step()
    after = walker.z
    probes = []
    for p, t in sorted(finite_targets.items()):
        probes.append((p, ball_key_exact(rep, p, t) == ball_key_exact(after, p, t)))
    if real_tol is not None:
        probes.append((INFINITE_PLACE, abs(float(after - rep)) <= real_tol / 2))

    representatives = [(p, rep) for p in sorted(finite_targets)]
    expansions = []
    for p, t in sorted(finite_targets.items()):
        v = valuation(rep, p) if rep != 0 else 0
        n_digits = max(1, t - min(v, 0))
        expansions.append((p, expand(rep, p, n_digits)))
    real_interval = None
    if real_tol is not None:
        center = float(rep)
        half = real_tol / 2.0
        real_interval = (
            math.nextafter(center - half, -math.inf),
            math.nextafter(center + half, math.inf),
        )
        representatives.append((INFINITE_PLACE, rep))

    trajectory = Trajectory(seed, tuple(steps), tuple(prefix))
    sample = BoundarySample(
        representatives=tuple(representatives),
        expansions=tuple(expansions),
        real_interval=real_interval,
        stabilization_index=lock_index,
        probes=tuple(probes),
        steps_total=walker.count,
        probe_value=after,
    )
    return trajectory, sample


@dataclass(frozen=True)
class BoundaryDigits:
    """Digits of the limiting translation coordinate in one Q_p."""

    expansion: PadicExpansion
    probe_expansion: PadicExpansion
    value: Fraction
    stabilization_index: int
    probe_agreed: bool
    steps_total: int


def boundary_digits(
    mu: StepDistribution,
    p: int,
    n_digits: int,
    seed: int,
    margin: int = DEFAULT_MARGIN,
    step_cap: int = DEFAULT_STEP_CAP,
    max_bits: int = DEFAULT_MAX_BITS,
) -> BoundaryDigits:
    """Walk until the first n_digits of Z_n in Q_p look stable, then expand.

    Requires drift < 0 at p (exact sign test).  The walk runs until
    v_p(A_n) >= n_digits - min v_p(b) + 1 holds for ``margin`` consecutive
    steps; the returned digits are those of Z at that point.  The
    continuation probe extends by another ``margin`` steps and re-expands;
    agreement is recorded in ``probe_agreed``.
    """
    if n_digits < 1:
        raise ValueError("precision must be at least 1")
    target = n_digits + 1  # one exponent of headroom over the digit window
    walker_out = extract_boundary(
        mu,
        seed,
        finite_targets={p: target},
        margin=margin,
        step_cap=step_cap,
        max_bits=max_bits,
    )
    _, sample = walker_out
    rep = sample.representative(p)
    locked = expand(rep, p, n_digits)
    probe = expand(sample.probe_value, p, n_digits)
    return BoundaryDigits(
        expansion=locked,
        probe_expansion=probe,
        value=rep,
        stabilization_index=sample.stabilization_index,
        probe_agreed=(probe == locked),
        steps_total=sample.steps_total,
    )


@dataclass(frozen=True)
class RealLimit:
    """Float enclosure of the limiting translation coordinate on R."""

    lo: float
    hi: float
    value: Fraction
    stabilization_index: int
    probe_agreed: bool
    steps_total: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def real_limit(
    mu: StepDistribution,
    tol: float,
    seed: int,
    margin: int = DEFAULT_MARGIN,
    step_cap: int = DEFAULT_STEP_CAP,
    max_bits: int = DEFAULT_MAX_BITS,
) -> RealLimit:
    """Interval of width <= tol (plus float slack) around the real limit.

    Requires drift < 0 at the infinite place (exact sign test).  Stops once
    |A_n| * max|b| < tol * safety for ``margin`` consecutive steps, where
    safety = (1 - e^drift)/2 is the geometric-series headroom.
    """
    _, sample = extract_boundary(
        mu,
        seed,
        real_tol=tol,
        margin=margin,
        step_cap=step_cap,
        max_bits=max_bits,
    )
    lo, hi = sample.real_interval
    return RealLimit(
        lo=lo,
        hi=hi,
        value=sample.representative(INFINITE_PLACE),
        stabilization_index=sample.stabilization_index,
        probe_agreed=sample.probe_agreed,
        steps_total=sample.steps_total,
    )


def tail_point(
    trajectory: Trajectory,
    n: int,
    boundary: BoundarySample,
    places: Sequence[Place],
) -> dict[Place, Fraction]:
    """Exact coordinates of x_n^(-1) applied to the boundary representative.

    Returns A_n^(-1) (z_p - Z_n) per requested place; its law should not
    depend on n.  The boundary must have stabilized beyond n on the same
    trajectory.
    """
    if n > trajectory.length:
        raise PrecisionError(f"trajectory only has {trajectory.length} steps")
    if boundary.stabilization_index <= n:
        raise PrecisionError(
            f"boundary stabilized at index {boundary.stabilization_index}, "
            f"need strictly more than n = {n}"
        )
    x = trajectory.position(n)
    return {p: (boundary.representative(p) - x.b) / x.a for p in places}


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Ball-key histogram of boundary samples in one Q_p."""

    p: int
    radius_exponent: int
    samples: int
    counts: tuple[tuple[tuple, int], ...]
    max_ball_mass: float
    probe_misses: int

    def as_counter(self) -> Counter:
        return Counter(dict(self.counts))


def empirical_measure(
    mu: StepDistribution,
    p: int,
    radius_exponent: int,
    samples: int,
    seed: int,
    margin: int = DEFAULT_MARGIN,
    step_cap: int = DEFAULT_STEP_CAP,
) -> EmpiricalMeasure:
    """Histogram of the boundary law over p-adic balls of one radius.

    Runs ``samples`` independent replicas (seed derivation is the package
    PRNG contract), buckets each stabilized representative by its ball key,
    and reports the largest ball mass.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    target = max(radius_exponent + 1, 1)
    counts: Counter = Counter()
    probe_misses = 0
    for i in range(samples):
        _, sample = extract_boundary(
            mu,
            replica_seed(seed, i),
            finite_targets={p: target},
            margin=margin,
            step_cap=step_cap,
        )
        if not sample.probe_agreed:
            probe_misses += 1
        counts[ball_key_exact(sample.representative(p), p, radius_exponent)] += 1
    ordered = tuple(sorted(counts.items(), key=lambda kv: repr(kv[0])))
    return EmpiricalMeasure(
        p=p,
        radius_exponent=radius_exponent,
        samples=samples,
        counts=ordered,
        max_ball_mass=max(counts.values()) / samples,
        probe_misses=probe_misses,
    )


@dataclass(frozen=True)
class DivergenceReport:
    """Monte Carlo mean of the running-maximum statistic on one place."""

    place: Place
    n: int
    samples: int
    mean: float
    values: tuple[float, ...]


def divergence_statistic(
    mu: StepDistribution,
    place: Place,
    n: int,
    samples: int,
    seed: int,
) -> DivergenceReport:
    """Mean over seeds of max_k ln+ |A_{k-1} b_k|_p divided by n.

    Only defined on places with drift >= 0 (exact test); there the statistic
    approaches the positive part of the drift, witnessing that |Z_n|_p does
    not stay bounded.  Contracting places are rejected.
    """
    profile = drift_profile(mu)
    if place == INFINITE_PLACE:
        if profile.infinite_sign < 0:
            raise ValueError("infinite place contracts; statistic undefined")
    else:
        if profile.exact().get(place, Fraction(0)) > 0:
            raise ValueError(f"prime {place} contracts; statistic undefined")

    atoms = mu.support
    thresholds = cumulative_thresholds(mu.weights)
    if place == INFINITE_PLACE:
        incr_a = [math.log(abs(g.a.numerator)) - math.log(g.a.denominator) for g in atoms]
        incr_b = [
            None if g.b == 0
            else math.log(abs(g.b.numerator)) - math.log(g.b.denominator)
            for g in atoms
        ]
        log_p = 1.0
    else:
        incr_a = [valuation(g.a, place) for g in atoms]
        incr_b = [None if g.b == 0 else valuation(g.b, place) for g in atoms]
        log_p = math.log(place)

    values = []
    for i in range(samples):
        rng = SplitMix64(replica_seed(seed, i))
        running = 0.0  # v_p(A_{k-1}) (finite p) or ln|A_{k-1}| (infinite)
        best = 0.0
        for _ in range(n):
            j = pick_index(rng.next_u64(), thresholds)
            vb = incr_b[j]
            if vb is not None:
                if place == INFINITE_PLACE:
                    term = running + vb
                else:
                    term = -(running + vb) * log_p
                if term > best:
                    best = term
            running += incr_a[j]
        values.append(best / n)
    return DivergenceReport(
        place=place,
        n=n,
        samples=samples,
        mean=math.fsum(values) / samples,
        values=tuple(values),
    )


def increment_valuation_rate(
    mu: StepDistribution,
    p: int,
    n: int,
    seed: int,
    search_cap: int = 10_000,
) -> float:
    """v_p of the first nonzero increment of Z at or after step n, over n.

    The increment Z_{m+1} - Z_m equals A_m b_{m+1}; atoms with b = 0 leave
    Z unchanged, so the statistic reads the first step m >= n that moves.
    On contracting primes this approaches -drift/1 (positive), mirroring the
    geometric decay of the tail.  Returned in nats: v_p * ln(p) / n.
    """
    atoms = mu.support
    if all(g.b == 0 for g in atoms):
        raise ValueError("no translation atoms: Z never moves")
    thresholds = cumulative_thresholds(mu.weights)
    atom_vp = [valuation(g.a, p) for g in atoms]
    atom_vb = [None if g.b == 0 else valuation(g.b, p) for g in atoms]
    rng = SplitMix64(seed)
    running = 0
    for _ in range(n):
        running += atom_vp[pick_index(rng.next_u64(), thresholds)]
    for _ in range(search_cap):
        j = pick_index(rng.next_u64(), thresholds)
        vb = atom_vb[j]
        if vb is not None:
            return (running + vb) * math.log(p) / n
        running += atom_vp[j]
    raise StabilizationError(
        f"no nonzero increment within {search_cap} steps after {n}",
        steps=search_cap,
    )
