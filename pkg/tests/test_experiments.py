import json
import math
from fractions import Fraction

import pytest

from affwalk import INFINITE_PLACE, AffineMap, StepDistribution
from affwalk.experiments import (
    Report,
    Row,
    render_csv,
    render_json,
    run_drift,
    run_entropy,
    run_gauge,
    run_lln41,
    run_lln43,
    run_prop44,
    run_stationarity,
    run_validate,
    run_walk,
)

F = Fraction


class TestRendering:
    def _report(self):
        rows = [
            Row("demo", "2", 10, 123, "stat", 0.5),
            Row("demo", "", 20, 124, "stat", -1.25),
        ]
        return Report(
            name="demo",
            config={"seed": 1, "alpha": "b"},
            rows=rows,
            summary={"x": 1.5},
            passed=True,
            notes=["truncated early"],
        )

    def test_csv_shape(self):
        text = render_csv(self._report())
        lines = text.splitlines()
        assert lines[0] == "# name demo"
        assert lines[1].startswith("# config ")
        assert json.loads(lines[1][len("# config "):]) == {"alpha": "b", "seed": 1}
        header_at = lines.index("experiment,p,n,seed,statistic,value")
        body = lines[header_at + 1:]
        assert body == ["demo,2,10,123,stat,0.5", "demo,,20,124,stat,-1.25"]
        assert text.endswith("\n")

    def test_csv_float_roundtrip(self):
        # repr round-trips doubles exactly
        row = Row("r", "", 1, 0, "v", 0.1 + 0.2)
        text = render_csv(Report("r", {}, [row], {}))
        value = text.splitlines()[-1].split(",")[-1]
        assert float(value) == 0.1 + 0.2

    def test_json_parses_and_sorts(self):
        blob = json.loads(render_json(self._report()))
        assert blob["name"] == "demo"
        assert blob["passed"] is True
        assert blob["rows"][0]["statistic"] == "stat"


class TestSmallSuites:
    def test_validate_report(self, mu_bias):
        rep = run_validate(mu_bias)
        assert rep.passed is True
        assert rep.summary["degenerate"] is False

    def test_validate_degenerate_fails(self):
        mu = StepDistribution({AffineMap(1, 1): F(1)})
        rep = run_validate(mu)
        assert rep.passed is False

    def test_drift_report(self, mu_bias):
        rep = run_drift(mu_bias)
        assert rep.passed is True
        assert rep.summary["exact_vp_means"] == {"2": "-1/2"}
        assert rep.summary["contracting_set"] == ["inf"]
        phi = {(r.p, r.statistic): r.value for r in rep.rows}
        assert phi[("2", "phi")] == pytest.approx(0.5 * math.log(2))
        assert phi[("inf", "phi")] == pytest.approx(-0.5 * math.log(2))

    def test_gauge_report(self):
        rep = run_gauge(math.log(2))
        stats = {r.statistic: r.value for r in rep.rows}
        assert stats["count"] == 26.0
        assert rep.passed is True

    def test_walk_rows(self, mu_rev):
        rep = run_walk(mu_rev, 20, seed=3, primes=[2])
        v_rows = [r for r in rep.rows if r.statistic == "v_A"]
        assert len(v_rows) == 21  # snapshots at 0..20
        assert v_rows[0].value == 0.0


class TestMonteCarloSuites:
    def test_lln41_decreases(self, mu_bias):
        rep = run_lln41(mu_bias, n_grid=[50, 100, 200], samples=30, seed=2)
        means = rep.summary["means"]
        assert list(means) == ["50", "100", "200"]
        assert means["200"] < means["50"]

    def test_lln43_all_places_trivial_bound(self, mu_bias):
        # P = {} makes the partial height zero, so the event always holds
        rep = run_lln43(mu_bias, [], n_grid=[50, 100], samples=10, seed=0)
        assert rep.summary["final_frequency"] == 1.0

    def test_lln43_rejects_nonpositive_epsilon(self, mu_bias):
        with pytest.raises(ValueError):
            run_lln43(mu_bias, [2], n_grid=[50], samples=5, seed=0, epsilon=0.0)

    def test_prop44_validates_place_set(self, mu_rev):
        # the infinite place does not contract for mu_rev
        with pytest.raises(ValueError):
            run_prop44(mu_rev, [INFINITE_PLACE], n_grid=[50], samples=5, seed=0)

    def test_prop44_rev_runs(self, mu_rev):
        rep = run_prop44(mu_rev, [2], n_grid=[50, 100], samples=15, seed=1)
        assert rep.summary["probe_miss_rate"] <= 0.1
        assert rep.summary["n_stab"] == 400
        assert 0.0 <= rep.summary["final_frequency"] <= 1.0

    def test_cross_suite_height_consistency(self, mu_bias):
        """Same seeds walk the same paths in lln41 and lln43."""
        grid = [60, 120]
        r41 = run_lln41(mu_bias, n_grid=grid, samples=8, seed=5)
        r43 = run_lln43(mu_bias, [2, INFINITE_PLACE], n_grid=grid, samples=8, seed=5)
        seeds41 = {r.seed for r in r41.rows}
        seeds43 = {r.seed for r in r43.rows}
        assert seeds41 == seeds43

    def test_worker_count_invariance(self, mu_bias):
        r1 = run_lln41(mu_bias, n_grid=[40, 80], samples=12, seed=9, workers=1)
        r2 = run_lln41(mu_bias, n_grid=[40, 80], samples=12, seed=9, workers=3)
        assert render_csv(r1) == render_csv(r2)

    def test_stationarity_small(self, mu_rev):
        rep = run_stationarity(
            mu_rev, 2, radius_exponent=4, n=30, samples=400, seed=4
        )
        assert rep.summary["tv_distance"] < 0.25
        assert rep.summary["probe_miss_rate"] < 0.05

    def test_stationarity_rejects_expanding_prime(self, mu_bias):
        with pytest.raises(ValueError):
            run_stationarity(mu_bias, 2, radius_exponent=4, n=10, samples=5, seed=0)


class TestEntropySuite:
    def test_report_fields(self, mu_sym):
        rep = run_entropy(mu_sym, n_max=8)
        assert rep.summary["computed_to"] == 8
        stats = {(r.statistic, r.n) for r in rep.rows}
        assert ("H", 8) in stats and ("H_rate", 8) in stats

    def test_budget_truncation_graceful(self, mu_sym):
        rep = run_entropy(mu_sym, n_max=10, cell_budget=20)
        assert rep.summary["computed_to"] < 10
        assert rep.notes  # says it truncated

    def test_dichotomy_flags(self, mu_sym, mu_bias):
        assert run_entropy(mu_sym, n_max=10).summary["trending_to_zero"] is True
        assert run_entropy(mu_bias, n_max=10).summary["trending_to_zero"] is False
