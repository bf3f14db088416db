import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affwalk import (
    INFINITE_PLACE,
    AffineMap,
    BudgetError,
    ConfigError,
    StepDistribution,
    contracting_set,
    convolve,
    drift,
    drift_profile,
    entropy,
    first_moment,
    measure_config,
    parse_measure_config,
    power,
    q_approximant,
    reflect,
    table_of,
    validate,
)

F = Fraction


def weights_for(n):
    """n positive Fractions summing to exactly 1."""
    return st.lists(
        st.integers(min_value=1, max_value=9), min_size=n, max_size=n
    ).map(lambda raw: [F(r, sum(raw)) for r in raw])


class TestConstruction:
    def test_duplicates_merge(self):
        mu = StepDistribution(
            [(AffineMap(2, 0), F(1, 4)), (AffineMap(2, 0), F(1, 4)),
             (AffineMap(3, 1), F(1, 2))]
        )
        assert len(mu.atoms) == 2
        assert dict(mu.atoms)[AffineMap(2, 0)] == F(1, 2)

    def test_bad_weights(self):
        with pytest.raises(ConfigError):
            StepDistribution({AffineMap(2, 0): F(1, 2)})  # sums to 1/2
        with pytest.raises(ConfigError):
            StepDistribution(
                {AffineMap(2, 0): F(3, 2), AffineMap(3, 0): F(-1, 2)}
            )
        with pytest.raises(ConfigError):
            StepDistribution([])

    def test_config_roundtrip(self, mu_bias):
        assert parse_measure_config(measure_config(mu_bias)) == mu_bias

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            parse_measure_config({"atoms": [{"a": "0", "b": "1", "w": "1"}]})
        with pytest.raises(ConfigError):
            parse_measure_config({})


class TestValidate:
    def test_nondegenerate(self, mu_bias):
        assert not validate(mu_bias).degenerate

    def test_common_fixed_point(self):
        # both maps fix x = 1
        mu = StepDistribution(
            {AffineMap(2, -1): F(1, 2), AffineMap(F(1, 2), F(1, 2)): F(1, 2)}
        )
        report = validate(mu)
        assert report.degenerate
        assert report.fixed_point == 1

    def test_pure_translations_degenerate(self):
        mu = StepDistribution({AffineMap(1, 1): F(1, 2), AffineMap(1, -1): F(1, 2)})
        assert validate(mu).degenerate

    def test_identity_only(self):
        assert validate(StepDistribution({AffineMap(1, 0): F(1)})).degenerate


class TestDrift:
    def test_profile_bias(self, mu_bias):
        prof = drift_profile(mu_bias)
        assert prof.exact()[2] == F(-1, 2)
        assert prof.phi(2) == pytest.approx(0.5 * math.log(2), abs=1e-15)
        assert prof.infinite_drift == pytest.approx(-0.5 * math.log(2), abs=1e-15)
        assert prof.infinite_sign == -1
        assert contracting_set(mu_bias) == {INFINITE_PLACE}

    def test_profile_sym(self, mu_sym):
        prof = drift_profile(mu_sym)
        assert prof.exact()[2] == 0
        assert prof.infinite_sign == 0
        assert contracting_set(mu_sym) == set()

    def test_profile_rev(self, mu_rev):
        prof = drift_profile(mu_rev)
        assert prof.exact()[2] == F(1, 2)
        assert prof.phi(2) == pytest.approx(-0.5 * math.log(2), abs=1e-15)
        assert prof.infinite_sign == 1
        assert contracting_set(mu_rev) == {2}

    def test_drift_single_place(self, mu_bias):
        assert drift(mu_bias, 2) == pytest.approx(0.5 * math.log(2))
        assert drift(mu_bias, 3) == 0.0
        assert drift(mu_bias, INFINITE_PLACE) == pytest.approx(-0.5 * math.log(2))

    def test_reflect_negates_drifts(self, mu_bias):
        prof = drift_profile(mu_bias)
        rprof = drift_profile(reflect(mu_bias))
        assert rprof.exact()[2] == -prof.exact()[2]
        assert rprof.infinite_sign == -prof.infinite_sign
        assert rprof.infinite_drift == pytest.approx(-prof.infinite_drift)

    def test_reflect_involution(self, mu_bias, mu_rev):
        assert reflect(reflect(mu_bias)) == mu_bias
        assert reflect(reflect(mu_rev)) == mu_rev

    def test_first_moment_finite(self, mu_bias):
        # 1/4<2> + 3/4(<1/2> + <1>+) = ln2/4 + 3ln2/4 + 3*0/4
        assert first_moment(mu_bias) == pytest.approx(math.log(2))


class TestApproximant:
    def test_bias_powers_of_two(self, mu_bias):
        prof = drift_profile(mu_bias)
        assert q_approximant(prof, 1) == 1
        assert q_approximant(prof, 2) == F(1, 2)
        assert q_approximant(prof, 4) == F(1, 4)

    def test_rev_mirrors(self, mu_rev):
        prof = drift_profile(mu_rev)
        assert q_approximant(prof, 2) == 2
        assert q_approximant(prof, 4) == 4

    def test_null_profile_gives_one(self, mu_sym):
        prof = drift_profile(mu_sym)
        for n in (1, 10, 100):
            assert q_approximant(prof, n) == 1

    def test_matches_valuation_growth(self, mu_bias):
        # v_2(q_n) = -floor(n/2) tracks n * phi_2 / ln 2 within 1
        from affwalk import valuation

        prof = drift_profile(mu_bias)
        for n in (1, 7, 50, 333):
            v = valuation(q_approximant(prof, n), 2)
            assert abs(-v - n * 0.5) <= 1.0


class TestConvolution:
    def test_square_of_fair_coin(self, mu_sym):
        table = power(mu_sym, 2)
        got = {
            (g.a, g.b): w for g, w in table.as_dict().items()
        }
        assert got == {
            (F(4), F(0)): F(1, 4),
            (F(1), F(1)): F(1, 4),
            (F(1), F(2)): F(1, 4),
            (F(1, 4), F(3, 2)): F(1, 4),
        }

    def test_zeroth_power_is_identity(self, mu_sym):
        table = power(mu_sym, 0)
        assert table.as_dict() == {AffineMap(1, 0): F(1)}

    def test_probabilities_sum_to_one(self, mu_bias):
        for n in (1, 3, 6):
            assert sum(power(mu_bias, n).as_dict().values()) == 1

    def test_convolve_matches_power(self, mu_bias):
        t2 = convolve(table_of(mu_bias), table_of(mu_bias))
        assert t2.as_dict() == power(mu_bias, 2).as_dict()

    def test_budget_guard(self, mu_sym):
        with pytest.raises(BudgetError):
            power(mu_sym, 8, cell_budget=10)

    def test_support_growth_quadratic(self, mu_sym):
        # walk group is metabelian: supports grow polynomially, not 2^n
        sizes = [power(mu_sym, n).support_size for n in range(1, 7)]
        assert sizes == sorted(sizes)
        assert sizes[-1] < 2**6 * 4


class TestEntropy:
    def test_single_atom_zero(self):
        assert entropy(table_of(StepDistribution({AffineMap(2, 1): F(1)}))) == 0.0

    def test_fair_coin_ln2(self, mu_sym):
        assert entropy(table_of(mu_sym)) == pytest.approx(math.log(2))

    def test_h2_fair_coin_ln4(self, mu_sym):
        assert entropy(power(mu_sym, 2)) == pytest.approx(math.log(4), abs=1e-12)

    def test_subadditive(self, mu_bias):
        h1 = entropy(table_of(mu_bias))
        h2 = entropy(power(mu_bias, 2))
        h3 = entropy(power(mu_bias, 3))
        assert h2 <= 2 * h1 + 1e-12
        assert h3 <= h1 + h2 + 1e-12

    def test_rate_nonincreasing(self, mu_sym, mu_bias):
        for mu in (mu_sym, mu_bias):
            rates = [entropy(power(mu, n)) / n for n in range(1, 9)]
            for a, b in zip(rates, rates[1:]):
                assert b <= a + 1e-12

    @given(weights_for(3))
    @settings(max_examples=20, deadline=None)
    def test_entropy_bounded_by_log_support(self, ws):
        mu = StepDistribution(
            [(AffineMap(2, 0), ws[0]), (AffineMap(3, 1), ws[1]),
             (AffineMap(F(1, 5), 2), ws[2])]
        )
        table = power(mu, 2)
        assert entropy(table) <= math.log(table.support_size) + 1e-12
