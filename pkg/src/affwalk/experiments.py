"""Experiment suites and machine-readable reports.

Each suite runs independent seeded replicas, collects rows
(experiment, p, n, seed, statistic, value), and summarizes them against the
configured bound.  Replicas may be fanned out to a process pool; the merge is
an ordered concatenation by replica index, so output bytes are identical for
any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import BudgetError
from .exact import (
    INFINITE_PLACE,
    Place,
    format_place,
    format_rational,
    height,
    log_norm_plus,
    valuation,
)
from .group import gauge_count_bound, gauge_enumerate
from .measure import (
    DEFAULT_CELL_BUDGET,
    StepDistribution,
    DriftProfile,
    convolve,
    drift,
    drift_profile,
    entropy,
    measure_config,
    power,
    q_approximant,
    table_of,
    validate,
)
from .padic import ball_key_exact
from .prng import SplitMix64, cumulative_thresholds, pick_index, replica_seed
from .walk import DEFAULT_MARGIN, _Walker, _min_translation_valuation

__all__ = [
    "Row",
    "Report",
    "render_csv",
    "render_json",
    "run_validate",
    "run_drift",
    "run_gauge",
    "run_walk",
    "run_lln41",
    "run_lln43",
    "run_prop44",
    "run_entropy",
    "run_stationarity",
    "DEFAULT_GRID",
    "DEFAULT_EPSILON",
    "DEFAULT_SAMPLES",
]

DEFAULT_GRID = (125, 250, 500, 1000, 2000)
DEFAULT_EPSILON = 0.1
DEFAULT_SAMPLES = 100

# calibration defaults for pass verdicts; recorded in every report
DEFAULT_FREQ_THRESHOLD_LLN43 = 0.95
DEFAULT_FREQ_THRESHOLD_PROP44 = 0.9
DEFAULT_FINAL_BOUND_LLN41 = 0.05 * math.log(2)
SEED_RULE = "seed_i = seed XOR mix64(i)"


@dataclass(frozen=True)
class Row:
    experiment: str
    p: str
    n: int
    seed: int
    statistic: str
    value: float


@dataclass
class Report:
    """One experiment's resolved config, raw rows, and summary verdict."""

    name: str
    config: dict
    rows: list[Row]
    summary: dict
    passed: Optional[bool] = None
    notes: list[str] = field(default_factory=list)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def render_csv(report: Report) -> str:
    """Deterministic CSV: config and summary as comments, then the rows."""
    lines = [
        f"# name {report.name}",
        f"# config {_dumps(report.config)}",
        f"# summary {_dumps(report.summary)}",
    ]
    for note in report.notes:
        lines.append(f"# note {note}")
    if report.passed is not None:
        lines.append(f"# passed {str(report.passed).lower()}")
    lines.append("experiment,p,n,seed,statistic,value")
    for r in report.rows:
        lines.append(f"{r.experiment},{r.p},{r.n},{r.seed},{r.statistic},{r.value!r}")
    return "\n".join(lines) + "\n"


def render_json(report: Report) -> str:
    payload = {
        "name": report.name,
        "config": report.config,
        "summary": report.summary,
        "notes": report.notes,
        "passed": report.passed,
        "rows": [
            {
                "experiment": r.experiment,
                "p": r.p,
                "n": r.n,
                "seed": r.seed,
                "statistic": r.statistic,
                "value": r.value,
            }
            for r in report.rows
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _log_abs(q: Fraction) -> float:
    """ln|q| through the integer parts; safe for huge numerators."""
    return math.log(abs(q.numerator)) - math.log(q.denominator)


def _partial_plus(z: Fraction, places: Iterable[Place]) -> float:
    return math.fsum(log_norm_plus(z, p) for p in places)


def _seed_config(seed: int, samples: int) -> dict:
    return {"seed": seed, "samples": samples, "seed_rule": SEED_RULE}


# ---------------------------------------------------------------------------
# replica fan-out

_REPLICA_FNS: dict[str, Callable] = {}


def _replica_fn(name: str):
    def register(fn):
        _REPLICA_FNS[name] = fn
        return fn

    return register


def _run_chunk(args) -> list[Row]:
    name, mu, params, base_seed, lo, hi = args
    fn = _REPLICA_FNS[name]
    rows: list[Row] = []
    for i in range(lo, hi):
        rows.extend(fn(mu, params, replica_seed(base_seed, i)))
    return rows


def _fan_out(
    name: str,
    mu: StepDistribution,
    params: dict,
    base_seed: int,
    samples: int,
    workers: int,
) -> list[Row]:
    """Rows of all replicas in index order, identical for any worker count."""
    if workers <= 1:
        return _run_chunk((name, mu, params, base_seed, 0, samples))
    chunk = max(1, math.ceil(samples / (workers * 4)))
    bounds = list(range(0, samples, chunk)) + [samples]
    jobs = [
        (name, mu, params, base_seed, lo, hi)
        for lo, hi in zip(bounds, bounds[1:])
        if lo < hi
    ]
    rows: list[Row] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, jobs):
            rows.extend(part)
    return rows


# ---------------------------------------------------------------------------
# thin wrappers over home-module results


def run_validate(mu: StepDistribution) -> Report:
    report = validate(mu)
    summary = {
        "degenerate": report.degenerate,
        "reason": report.reason,
        "fixed_point": (
            format_rational(report.fixed_point)
            if report.fixed_point is not None
            else None
        ),
    }
    rows = [Row("validate", "", 0, 0, "degenerate", float(report.degenerate))]
    return Report(
        name="validate",
        config={"measure": measure_config(mu)},
        rows=rows,
        summary=summary,
        passed=not report.degenerate,
    )


def run_drift(mu: StepDistribution) -> Report:
    profile = drift_profile(mu)
    rows = []
    for p, phi in profile.finite_drifts:
        rows.append(Row("drift", str(p), 0, 0, "phi", phi))
    rows.append(Row("drift", "inf", 0, 0, "phi", profile.infinite_drift))
    # compare the direct mean of ln|a| with minus the finite-drift sum
    residual = drift(mu, INFINITE_PLACE) + math.fsum(
        v for _, v in profile.finite_drifts
    )
    summary = {
        "exact_vp_means": {str(p): format_rational(c) for p, c in profile.vp_means},
        "contracting_set": sorted(format_place(p) for p in profile.contracting()),
        "product_formula_residual": residual,
        "infinite_sign": profile.infinite_sign,
    }
    return Report(
        name="drift",
        config={"measure": measure_config(mu)},
        rows=rows,
        summary=summary,
        passed=abs(residual) < 1e-12,
    )


def run_gauge(k: float, k_max: float = 5.0) -> Report:
    elements = gauge_enumerate(k, k_max)
    bound = gauge_count_bound(k)
    count = len(elements)
    rows = [
        Row("gauge", "", 0, 0, "count", float(count)),
        Row("gauge", "", 0, 0, "bound", bound),
    ]
    return Report(
        name="gauge",
        config={"k": k, "k_max": k_max},
        rows=rows,
        summary={"count": count, "bound": bound},
        passed=count <= bound,
    )


def run_walk(
    mu: StepDistribution, n: int, seed: int, primes: Sequence[int] = ()
) -> Report:
    """Dump one trajectory's growth statistics (plot-ready)."""
    walker = _Walker(mu, seed)
    rows = []

    def snapshot(m: int):
        rows.append(Row("walk", "", m, seed, "log_abs_A", _log_abs(walker.a)))
        lz = _log_abs(walker.z) if walker.z != 0 else -math.inf
        rows.append(Row("walk", "", m, seed, "log_abs_Z", lz))
        for p in primes:
            rows.append(Row("walk", str(p), m, seed, "v_A", float(valuation(walker.a, p))))
            vz = valuation(walker.z, p)
            rows.append(Row("walk", str(p), m, seed, "v_Z", float(vz)))

    snapshot(0)
    for m in range(1, n + 1):
        walker.step()
        snapshot(m)
    return Report(
        name="walk",
        config={
            "measure": measure_config(mu),
            "n": n,
            "seed": seed,
            "primes": [str(p) for p in primes],
        },
        rows=rows,
        summary={"steps": n},
        passed=None,
    )


# ---------------------------------------------------------------------------
# law-of-large-numbers suites


@_replica_fn("lln41")
def _lln41_replica(mu: StepDistribution, params: dict, seed: int) -> list[Row]:
    grid: Sequence[int] = params["n_grid"]
    profile: DriftProfile = drift_profile(mu)
    targets = {n: q_approximant(profile, n) for n in grid}
    n_max = max(grid)
    atoms = mu.support
    thresholds = cumulative_thresholds(mu.weights)
    rng = SplitMix64(seed)
    a = Fraction(1)
    rows = []
    for m in range(1, n_max + 1):
        a *= atoms[pick_index(rng.next_u64(), thresholds)].a
        if m in targets:
            rows.append(
                Row("lln41", "", m, seed, "height_ratio", height(targets[m] / a) / m)
            )
    return rows


def run_lln41(
    mu: StepDistribution,
    n_grid: Sequence[int] = DEFAULT_GRID,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    final_bound: float = DEFAULT_FINAL_BOUND_LLN41,
    workers: int = 1,
) -> Report:
    """Monte Carlo decay of height(A_n^(-1) q_n)/n along the grid."""
    grid = sorted(set(n_grid))
    params = {"n_grid": grid}
    rows = _fan_out("lln41", mu, params, seed, samples, workers)
    means = _grid_means(rows, grid, "height_ratio")
    decreasing = all(means[b] < means[a] for a, b in zip(grid, grid[1:]))
    final = means[grid[-1]]
    summary = {
        "means": {str(n): means[n] for n in grid},
        "final_mean": final,
        "decreasing": decreasing,
        "final_bound": final_bound,
    }
    config = {
        "measure": measure_config(mu),
        "n_grid": grid,
        "final_bound": final_bound,
        **_seed_config(seed, samples),
    }
    return Report(
        name="lln41",
        config=config,
        rows=rows,
        summary=summary,
        passed=decreasing and final < final_bound,
    )


def _grid_means(rows: list[Row], grid: Sequence[int], statistic: str) -> dict[int, float]:
    by_n: dict[int, list[float]] = {n: [] for n in grid}
    for r in rows:
        if r.statistic == statistic:
            by_n[r.n].append(r.value)
    return {n: math.fsum(vals) / len(vals) for n, vals in by_n.items()}


@_replica_fn("lln43")
def _lln43_replica(mu: StepDistribution, params: dict, seed: int) -> list[Row]:
    grid: Sequence[int] = params["n_grid"]
    places: tuple[Place, ...] = params["places"]
    n_max = max(grid)
    grid_set = set(grid)
    walker = _Walker(mu, seed)
    rows = []
    for m in range(1, n_max + 1):
        walker.step()
        if m in grid_set:
            s = _partial_plus(walker.z, places) / m
            rows.append(Row("lln43", "", m, seed, "partial_height_rate", s))
    return rows


def run_lln43(
    mu: StepDistribution,
    places: Sequence[Place],
    n_grid: Sequence[int] = DEFAULT_GRID,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    freq_threshold: float = DEFAULT_FREQ_THRESHOLD_LLN43,
    workers: int = 1,
) -> Report:
    """Frequency of the partial-height event <Z_n>_P^+ / n <= bound + eps."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    grid = sorted(set(n_grid))
    places = tuple(places)
    profile = drift_profile(mu)
    bound = math.fsum(profile.phi_plus(p) for p in places) + epsilon
    params = {"n_grid": grid, "places": places}
    rows = _fan_out("lln43", mu, params, seed, samples, workers)
    freqs = _event_freqs(rows, grid, "partial_height_rate", bound)
    summary = {
        "bound": bound,
        "frequencies": {str(n): freqs[n] for n in grid},
        "final_frequency": freqs[grid[-1]],
        "freq_threshold": freq_threshold,
    }
    config = {
        "measure": measure_config(mu),
        "n_grid": grid,
        "P": sorted(format_place(p) for p in places),
        "epsilon": epsilon,
        "freq_threshold": freq_threshold,
        **_seed_config(seed, samples),
    }
    return Report(
        name="lln43",
        config=config,
        rows=rows,
        summary=summary,
        passed=freqs[grid[-1]] >= freq_threshold,
    )


def _event_freqs(
    rows: list[Row], grid: Sequence[int], statistic: str, bound: float
) -> dict[int, float]:
    hits: dict[int, int] = {n: 0 for n in grid}
    totals: dict[int, int] = {n: 0 for n in grid}
    for r in rows:
        if r.statistic == statistic:
            totals[r.n] += 1
            if r.value <= bound:
                hits[r.n] += 1
    return {n: hits[n] / totals[n] for n in grid if totals[n]}


@_replica_fn("prop44")
def _prop44_replica(mu: StepDistribution, params: dict, seed: int) -> list[Row]:
    grid: Sequence[int] = params["n_grid"]
    places: tuple[Place, ...] = params["places"]
    cotrunc: tuple[Place, ...] = params["cotrunc"]
    n_stab: int = params["n_stab"]
    margin: int = params["margin"]
    finite_probe: dict[int, int] = params["finite_probe"]
    real_probe: Optional[float] = params["real_probe"]
    profile = drift_profile(mu)
    targets = {n: q_approximant(profile, n) for n in grid}
    grid_set = set(grid)
    walker = _Walker(mu, seed)
    snaps: dict[int, tuple[Fraction, Fraction]] = {}
    for m in range(1, n_stab + 1):
        walker.step()
        if m in grid_set:
            snaps[m] = (walker.a, walker.z)
    rep = walker.z
    for _ in range(margin):
        walker.step()
    after = walker.z

    probe_ok = True
    for p, t in finite_probe.items():
        if ball_key_exact(rep, p, t) != ball_key_exact(after, p, t):
            probe_ok = False
    if real_probe is not None and after != rep:
        if _log_abs(after - rep) > real_probe:
            probe_ok = False

    rows = []
    for n in grid:
        a, z = snaps[n]
        first = height(targets[n] / a) / n
        boundary_term = math.fsum(
            log_norm_plus((rep - z) / a, p) for p in places
        )
        co_term = math.fsum(log_norm_plus(z / a, p) for p in cotrunc)
        total = first + (boundary_term + co_term) / n
        rows.append(Row("prop44", "", n, seed, "height_ratio", first))
        rows.append(Row("prop44", "", n, seed, "adelic_rate", total))
    rows.append(Row("prop44", "", n_stab, seed, "probe_miss", float(not probe_ok)))
    return rows


def run_prop44(
    mu: StepDistribution,
    places: Sequence[Place],
    n_grid: Sequence[int] = DEFAULT_GRID,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    freq_threshold: float = DEFAULT_FREQ_THRESHOLD_PROP44,
    stab_factor: int = 4,
    margin: int = DEFAULT_MARGIN,
    workers: int = 1,
) -> Report:
    """Frequency of the tracking event |x_n^(-1) pi_n(z)| / n <= bound + eps.

    The boundary representative is the exact Z at 4x (configurable) the
    largest grid n; the stabilization error is absorbed into epsilon and the
    probe-miss rate over an extra ``margin`` steps is reported.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    grid = sorted(set(n_grid))
    places = tuple(places)
    profile = drift_profile(mu)
    contracting = profile.contracting()
    for p in places:
        if p not in contracting:
            raise ValueError(f"place {format_place(p)} is not contracting")
    trunc = profile.nonzero_places() | {INFINITE_PLACE}
    cotrunc = tuple(sorted((trunc - set(places)), key=lambda p: (p == INFINITE_PLACE, p)))
    bound = math.fsum(profile.phi_minus(p) for p in cotrunc) + epsilon
    n_stab = stab_factor * max(grid)
    exact = profile.exact()
    finite_probe = {
        p: math.ceil(max(grid) * exact[p]) + 1
        for p in places
        if p != INFINITE_PLACE
    }
    real_probe = (
        max(grid) * profile.infinite_drift if INFINITE_PLACE in places else None
    )
    params = {
        "n_grid": grid,
        "places": places,
        "cotrunc": cotrunc,
        "n_stab": n_stab,
        "margin": margin,
        "finite_probe": finite_probe,
        "real_probe": real_probe,
    }
    rows = _fan_out("prop44", mu, params, seed, samples, workers)
    freqs = _event_freqs(rows, grid, "adelic_rate", bound)
    misses = [r.value for r in rows if r.statistic == "probe_miss"]
    miss_rate = math.fsum(misses) / len(misses) if misses else 0.0
    summary = {
        "bound": bound,
        "frequencies": {str(n): freqs[n] for n in grid},
        "final_frequency": freqs[grid[-1]],
        "freq_threshold": freq_threshold,
        "probe_miss_rate": miss_rate,
        "n_stab": n_stab,
    }
    config = {
        "measure": measure_config(mu),
        "n_grid": grid,
        "P": sorted(format_place(p) for p in places),
        "epsilon": epsilon,
        "freq_threshold": freq_threshold,
        "stab_factor": stab_factor,
        "margin": margin,
        **_seed_config(seed, samples),
    }
    return Report(
        name="prop44",
        config=config,
        rows=rows,
        summary=summary,
        passed=freqs[grid[-1]] >= freq_threshold,
    )


# ---------------------------------------------------------------------------
# entropy dichotomy


def run_entropy(
    mu: StepDistribution,
    n_max: int = 12,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> Report:
    """Exact convolution entropies H_n with rate and increment columns.

    The trend flag compares the final increment to the final average rate:
    sublinear growth (trivial boundary) makes increments collapse well below
    H_n/n, while a positive entropy rate keeps them comparable.
    """
    rows = []
    entropies = [0.0]
    truncated_at: Optional[int] = None
    table = power(mu, 0, cell_budget)
    step = table_of(mu)
    for n in range(1, n_max + 1):
        try:
            table = convolve(table, step, cell_budget)
        except BudgetError:
            truncated_at = n
            break
        h = entropy(table)
        entropies.append(h)
        rows.append(Row("entropy", "", n, 0, "H", h))
        rows.append(Row("entropy", "", n, 0, "H_rate", h / n))
        rows.append(Row("entropy", "", n, 0, "H_increment", h - entropies[n - 1]))
    computed = len(entropies) - 1
    summary: dict = {"n_max": n_max, "computed_to": computed}
    if truncated_at is not None:
        summary["truncated_at"] = truncated_at
    if computed >= 1:
        summary["h_estimate"] = entropies[-1] - entropies[-2] if computed >= 2 else entropies[-1]
        summary["final_rate"] = entropies[-1] / computed
        ratio = summary["h_estimate"] / summary["final_rate"] if summary["final_rate"] > 0 else 0.0
        summary["increment_to_rate_ratio"] = ratio
        summary["trending_to_zero"] = ratio < 0.75
        half = [(n, entropies[n] / n) for n in range(max(1, computed // 2), computed + 1)]
        summary["rate_slope_last_half"] = _ols_slope(half)
    notes = []
    if truncated_at is not None:
        notes.append(
            f"support budget {cell_budget} exceeded at n={truncated_at}; table truncated"
        )
    return Report(
        name="entropy",
        config={"measure": measure_config(mu), "n_max": n_max, "cell_budget": cell_budget},
        rows=rows,
        summary=summary,
        passed=None,
        notes=notes,
    )


def _ols_slope(points: list[tuple[int, float]]) -> float:
    if len(points) < 2:
        return 0.0
    xs = [float(x) for x, _ in points]
    ys = [y for _, y in points]
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    num = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.fsum((x - mx) ** 2 for x in xs)
    return num / den if den else 0.0


# ---------------------------------------------------------------------------
# stationarity of the tail law


@_replica_fn("stationarity")
def _stationarity_replica(mu: StepDistribution, params: dict, seed: int) -> list[Row]:
    p: int = params["p"]
    radius: int = params["radius"]
    n: int = params["n"]
    margin: int = params["margin"]
    min_vb: Optional[int] = params["min_vb"]
    walker = _Walker(mu, seed)
    va = 0
    for _ in range(n):
        g = walker.step()
        va += valuation(g.a, p)
    a_n, z_n = walker.a, walker.z
    # lock the representative at a resolution fine enough for the tail at n
    target = radius + max(va, 0) + 1
    need = None if min_vb is None else target - min_vb
    consecutive = 0
    while consecutive < margin:
        g = walker.step()
        va += valuation(g.a, p)
        consecutive = consecutive + 1 if (need is None or va >= need) else 0
        if walker.count > n + 500_000:
            raise RuntimeError("stationarity lock runaway")
    rep = walker.z
    stab_index = walker.count
    for _ in range(margin):
        walker.step()
    probe_ok = ball_key_exact(rep, p, target) == ball_key_exact(walker.z, p, target)

    t0 = rep
    t1 = (rep - z_n) / a_n
    rows = [
        Row("stationarity", str(p), 0, seed, "ball_bucket", float(_bucket_id(t0, p, radius))),
        Row("stationarity", str(p), n, seed, "ball_bucket", float(_bucket_id(t1, p, radius))),
        Row("stationarity", str(p), stab_index, seed, "probe_miss", float(not probe_ok)),
    ]
    return rows


def _bucket_id(q: Fraction, p: int, radius: int) -> int:
    """Injective float-safe integer id of the ball key at this radius.

    The key is (valuation, unit residue); residue * 128 + (v + 64) separates
    cleanly (id mod 128 recovers v) and stays exact in a 64-bit float for
    every residue below 2^46.
    """
    key = ball_key_exact(q, p, radius)
    v, residue = key[2], key[3]
    if not -64 <= v <= radius or residue >= (1 << 46):
        raise ValueError(f"ball key ({v}, {residue}) outside encodable range")
    return residue * 128 + (v + 64)


def run_stationarity(
    mu: StepDistribution,
    p: int,
    radius_exponent: int,
    n: int,
    samples: int = 1000,
    seed: int = 0,
    tv_threshold: float = 0.1,
    margin: int = DEFAULT_MARGIN,
    workers: int = 1,
) -> Report:
    """Two-sample check that the tail law x_n^(-1) z does not depend on n.

    Buckets tail points at step 0 and step n by p-adic ball and reports the
    total-variation distance of the two histograms.  The threshold is a test
    calibration, not a derived quantity.
    """
    profile = drift_profile(mu)
    if profile.exact().get(p, Fraction(0)) <= 0:
        raise ValueError(f"prime {p} does not contract")
    params = {
        "p": p,
        "radius": radius_exponent,
        "n": n,
        "margin": margin,
        "min_vb": _min_translation_valuation(mu, p),
    }
    rows = _fan_out("stationarity", mu, params, seed, samples, workers)
    hist0: dict[float, int] = {}
    hist1: dict[float, int] = {}
    misses = 0
    for r in rows:
        if r.statistic == "ball_bucket":
            target = hist0 if r.n == 0 else hist1
            target[r.value] = target.get(r.value, 0) + 1
        elif r.statistic == "probe_miss":
            misses += int(r.value)
    keys = set(hist0) | set(hist1)
    tv = 0.5 * math.fsum(
        abs(hist0.get(k, 0) - hist1.get(k, 0)) / samples for k in keys
    )
    summary = {
        "tv_distance": tv,
        "tv_threshold": tv_threshold,
        "probe_miss_rate": misses / samples,
        "buckets": len(keys),
    }
    config = {
        "measure": measure_config(mu),
        "p": p,
        "radius_exponent": radius_exponent,
        "n": n,
        "tv_threshold": tv_threshold,
        "margin": margin,
        **_seed_config(seed, samples),
    }
    return Report(
        name="stationarity",
        config=config,
        rows=rows,
        summary=summary,
        passed=tv < tv_threshold,
    )
