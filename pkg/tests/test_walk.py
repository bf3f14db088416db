import math
from fractions import Fraction

import pytest

from affwalk import (
    IDENTITY,
    INFINITE_PLACE,
    AffineMap,
    DegenerateMeasureError,
    PrecisionError,
    StabilizationError,
    StepDistribution,
    ball_key_exact,
    boundary_digits,
    compose,
    divergence_statistic,
    empirical_measure,
    extract_boundary,
    increment_valuation_rate,
    real_limit,
    sample_path,
    tail_point,
)

F = Fraction


class TestSamplePath:
    def test_prefix_is_product_of_steps(self, mu_bias):
        traj = sample_path(mu_bias, seed=42, n=60)
        acc = IDENTITY
        for i, g in enumerate(traj.steps, start=1):
            acc = compose(acc, g)
            assert acc == traj.position(i)
        assert traj.position(0) == IDENTITY

    def test_deterministic_in_seed(self, mu_rev):
        a = sample_path(mu_rev, seed=7, n=40)
        b = sample_path(mu_rev, seed=7, n=40)
        assert a.steps == b.steps
        assert a.steps != sample_path(mu_rev, seed=8, n=40).steps

    def test_steps_come_from_support(self, mu_bias):
        traj = sample_path(mu_bias, seed=1, n=200)
        support = set(mu_bias.support)
        assert set(traj.steps) <= support

    def test_weights_respected(self, mu_bias):
        # weight-3/4 atom should dominate a long sample
        traj = sample_path(mu_bias, seed=9, n=4000)
        halving = sum(1 for g in traj.steps if g.a == F(1, 2))
        assert 0.70 < halving / 4000 < 0.80

    def test_degenerate_rejected(self):
        mu = StepDistribution({AffineMap(1, 1): F(1, 2), AffineMap(1, 2): F(1, 2)})
        with pytest.raises(DegenerateMeasureError):
            sample_path(mu, seed=0, n=10)


class TestBoundaryDigits:
    def test_deterministic_walk_converges_to_minus_one(self):
        # steps all x -> 2x+1: Z_n = 2^n - 1 -> -1 in Q_2
        mu = StepDistribution({AffineMap(2, 1): F(1)})
        got = boundary_digits(mu, 2, 8, seed=3)
        assert got.expansion.digits == (1,) * 8
        assert got.expansion.start_exponent == 0
        assert got.probe_agreed

    def test_requires_contracting_prime(self, mu_bias):
        # mu_bias expands 2-adically
        with pytest.raises(ValueError):
            boundary_digits(mu_bias, 2, 4, seed=0)

    def test_seed_determinism(self, mu_rev):
        a = boundary_digits(mu_rev, 2, 12, seed=5)
        b = boundary_digits(mu_rev, 2, 12, seed=5)
        assert a.expansion == b.expansion
        assert a.stabilization_index == b.stabilization_index

    def test_digit_prefix_consistent_across_precision(self, mu_rev):
        # asking for fewer digits of the same walk gives a prefix
        long = boundary_digits(mu_rev, 2, 16, seed=11)
        short = boundary_digits(mu_rev, 2, 6, seed=11)
        assert long.expansion.start_exponent == short.expansion.start_exponent
        assert long.expansion.digits[:6] == short.expansion.digits

    def test_step_cap_raises(self, mu_rev):
        with pytest.raises(StabilizationError):
            boundary_digits(mu_rev, 2, 64, seed=0, step_cap=30)


class TestRealLimit:
    def test_interval_contains_known_fixed_point(self):
        # deterministic x -> x/2 + 1 has fixed point 2
        mu = StepDistribution({AffineMap(F(1, 2), 1): F(1)})
        lim = real_limit(mu, seed=0, tol=1e-9)
        assert lim.lo <= 2 <= lim.hi
        assert lim.width <= 1e-9 * 1.01

    def test_stochastic_interval_width(self, mu_bias):
        lim = real_limit(mu_bias, seed=3, tol=1e-6)
        assert lim.width <= 1e-6 * 1.01
        assert lim.lo <= lim.value <= lim.hi
        assert lim.probe_agreed

    def test_halving_tolerance_nests(self, mu_bias):
        wide = real_limit(mu_bias, seed=3, tol=1e-4)
        narrow = real_limit(mu_bias, seed=3, tol=1e-8)
        assert wide.lo - 1e-4 <= narrow.value <= wide.hi + 1e-4

    def test_requires_contracting_infinite_place(self, mu_rev):
        with pytest.raises(ValueError):
            real_limit(mu_rev, seed=0, tol=1e-6)


class TestExtractBoundary:
    def test_prefix_and_probes(self, mu_rev):
        traj, sample = extract_boundary(
            mu_rev, seed=1, finite_targets={2: 10}, keep_prefix_to=25
        )
        assert traj.length >= 25
        assert sample.stabilization_index >= 25
        assert all(ok for _, ok in sample.probes)

    def test_representative_valuation_stability(self, mu_rev):
        # the 2-adic ball of the representative must match a later refinement
        _, coarse = extract_boundary(mu_rev, seed=2, finite_targets={2: 8})
        _, fine = extract_boundary(mu_rev, seed=2, finite_targets={2: 14})
        r1 = coarse.representative(2)
        r2 = fine.representative(2)
        assert ball_key_exact(r1, 2, 8) == ball_key_exact(r2, 2, 8)

    def test_min_index_respected(self, mu_rev):
        _, sample = extract_boundary(
            mu_rev, seed=4, finite_targets={2: 4}, min_index=120
        )
        assert sample.stabilization_index >= 120


class TestTailPoint:
    def test_transport_identity(self, mu_rev):
        traj, sample = extract_boundary(
            mu_rev, seed=6, finite_targets={2: 12}, keep_prefix_to=20
        )
        rep = sample.representative(2)
        tp = tail_point(traj, 8, sample, [2])
        x = traj.position(8)
        assert tp[2] == (rep - x.b) / x.a

    def test_zeroth_tail_is_representative(self, mu_rev):
        traj, sample = extract_boundary(
            mu_rev, seed=6, finite_targets={2: 12}, keep_prefix_to=5
        )
        tp = tail_point(traj, 0, sample, [2])
        assert tp[2] == sample.representative(2)

    def test_rejects_indices_past_stabilization(self, mu_rev):
        traj, sample = extract_boundary(
            mu_rev, seed=6, finite_targets={2: 6}, keep_prefix_to=5
        )
        with pytest.raises(PrecisionError):
            tail_point(traj, sample.stabilization_index + 1, sample, [2])


class TestDivergence:
    def test_single_expanding_atom(self):
        # x -> 2x + 1 at p = infinity: running max of ln|A_{k-1} b_k| = (n-1) ln 2
        mu = StepDistribution({AffineMap(2, 1): F(1)})
        rep = divergence_statistic(mu, INFINITE_PLACE, 50, samples=3, seed=0)
        assert rep.mean == pytest.approx(49 * math.log(2) / 50)

    def test_rejects_contracting_place(self, mu_rev):
        with pytest.raises(ValueError):
            divergence_statistic(mu_rev, 2, 100, samples=2, seed=0)

    def test_rate_near_positive_drift(self, mu_bias):
        rep = divergence_statistic(mu_bias, 2, 2000, samples=50, seed=0)
        assert rep.mean == pytest.approx(0.5 * math.log(2), abs=0.05)

    def test_null_drift_rate_small(self, mu_sym):
        rep = divergence_statistic(mu_sym, 2, 2000, samples=50, seed=0)
        assert abs(rep.mean) < 0.05


class TestIncrementRate:
    def test_tracks_drift(self, mu_rev):
        vals = [increment_valuation_rate(mu_rev, 2, 1000, seed=s) for s in range(30)]
        mean = sum(vals) / len(vals)
        assert mean == pytest.approx(0.5 * math.log(2), rel=0.1)

    def test_rejects_translation_free_measure(self):
        mu = StepDistribution({AffineMap(2, 0): F(1, 2), AffineMap(F(1, 2), 0): F(1, 2)})
        with pytest.raises(ValueError):
            increment_valuation_rate(mu, 2, 100, seed=0)


class TestEmpiricalMeasure:
    def test_counts_and_misses(self, mu_rev):
        em = empirical_measure(mu_rev, 2, radius_exponent=3, samples=300, seed=1)
        assert sum(c for _, c in em.counts) == 300
        assert em.probe_misses <= 3
        assert 0 < em.max_ball_mass <= 1

    def test_deterministic(self, mu_rev):
        a = empirical_measure(mu_rev, 2, radius_exponent=3, samples=100, seed=1)
        b = empirical_measure(mu_rev, 2, radius_exponent=3, samples=100, seed=1)
        assert a.counts == b.counts
