"""Acceptance suite: one test per release criterion.

Each test prints a PASS/FAIL line with its measured quantities (run
pytest with -s to see them as they complete).  Every tolerance is fixed
here; seeds are fixed constants chosen up front.
"""

import csv
import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from sfv.cli import parse_and_dispatch
from sfv.design import (
    DesignSpec,
    SignalSpec,
    generate_dataset,
    load_design_csv,
    write_matrix_csv,
)
from sfv.diagram import double_ranking, least_squares_tstats, separation_condition
from sfv.experiments import ExperimentConfig, SweepPoint, run_experiment
from sfv.paths import EventKind, Method, forward_stepwise_path, lars_path, lasso_lars_path
from sfv.prediction import (
    normal_order_stat_approx,
    predicted_log_rank,
    sparsity_cutoff,
)
from sfv.ranking import compute_gamma, first_spurious_rank
from sfv.reference import greedy_rss_step, lasso_at_lambda


_CAPSYS = None


@pytest.fixture(autouse=True)
def _capture_bridge(capsys):
    # Lets _report escape pytest's capture so every criterion line is
    # visible in any invocation, not only for failing tests or under -s.
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def _report(name, ok, detail, started):
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {name}: {detail} ({time.time() - started:.1f}s)"
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line)
    else:
        print(line)


@contextmanager
def _workers(n):
    before = os.environ.get("SFV_WORKERS")
    os.environ["SFV_WORKERS"] = str(n)
    try:
        yield
    finally:
        if before is None:
            os.environ.pop("SFV_WORKERS", None)
        else:
            os.environ["SFV_WORKERS"] = before


def _cli_predict(capsys, ks):
    code = parse_and_dispatch(
        ["predict", "--n", "634", "--p", "463", "--k", ",".join(map(str, ks))]
    )
    out = capsys.readouterr().out
    assert code == 0
    rows = [line.split(",") for line in out.strip().split("\n")[1:]]
    return {int(r[0]): (float(r[1]), r[2], float(r[3])) for r in rows}


def test_criterion_01_prediction_reproduction(capsys):
    started = time.time()
    above = _cli_predict(capsys, [55, 70, 85, 100])
    expected = {55: 51.3, 70: 45.7, 85: 38.3, 100: 31.8}
    errs = {k: abs(above[k][2] - v) for k, v in expected.items()}
    below = _cli_predict(capsys, [10, 25, 40])
    exact = {k: below[k][2] for k in (10, 25, 40)}
    ok = all(e <= 0.1 for e in errs.values()) and exact == {10: 11.0, 25: 26.0, 40: 41.0}
    _report(
        "criterion 1 (prediction reproduction)",
        ok,
        f"max |err|={max(errs.values()):.3f}, below-cutoff={exact}",
        started,
    )
    assert max(errs.values()) <= 0.1
    assert exact == {10: 11.0, 25: 26.0, 40: 41.0}
    assert time.time() - started < 1.0


def test_criterion_02_cutoff_value(capsys):
    started = time.time()
    rows = _cli_predict(capsys, [10, 55, 100])
    cutoffs = {k: rows[k][0] for k in rows}
    ok = all(abs(c - 51.6) <= 0.05 for c in cutoffs.values())
    _report("criterion 2 (cutoff value)", ok, f"cutoff={cutoffs[10]:.4f}", started)
    assert ok
    assert time.time() - started < 1.0


def test_criterion_03_form_identity_and_monotonicity():
    started = time.time()
    rng = np.random.default_rng(0)
    pairs = [(int(rng.integers(100, 2500)), int(rng.integers(50, 2000))) for _ in range(40)]
    checked = 0
    worst = 0.0
    for n, p in pairs:
        if checked >= 10_000:
            break
        ks = np.unique(np.linspace(1, int(0.99 * p), 500).astype(int))
        values = []
        cutoff = sparsity_cutoff(n, p)
        for k in ks:
            a = predicted_log_rank(n, p, int(k))
            b = -((math.sqrt(math.log(p)) - math.sqrt(n / (2 * k))) ** 2) + math.log(
                n / (2 * math.log(p))
            )
            worst = max(worst, abs(a - b) / max(1.0, abs(a), abs(b)))
            values.append((int(k), a))
            checked += 1
        above = [v for k, v in values if k > cutoff]
        assert all(y < x for x, y in zip(above, above[1:])), (n, p)
    elapsed = time.time() - started
    ok = worst <= 1e-12 and checked >= 10_000
    _report(
        "criterion 3 (form identity)",
        ok,
        f"{checked} points, worst rel diff={worst:.2e}",
        started,
    )
    assert ok
    assert elapsed < 5.0


def test_criterion_04_oracle_equivalence():
    started = time.time()
    worst_knot = 0.0
    stepwise_mismatches = 0
    drops_seen = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        # Tall instances keep the active-set Gram well conditioned, which
        # the coordinate-descent oracle needs to certify convergence at
        # the late (small penalty) knots.
        n = int(rng.integers(10, 26))
        p = int(rng.integers(4, min(16, n - 3)))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)

        trace = lasso_lars_path(X, y)
        drops_seen += sum(1 for e in trace.events if e.kind is EventKind.DROP)
        enters = [e for e in trace.events if e.kind is EventKind.ENTER]
        for i, event in enumerate(enters):
            sol = lasso_at_lambda(X, y, event.knot)
            assert sol.converged
            worst_knot = max(
                worst_knot, float(np.max(np.abs(sol.coefficients - trace.knot_coefficients[i])))
            )

        fs = forward_stepwise_path(X, y)
        active = []
        for event in fs.events:
            j, _ = greedy_rss_step(X, y, active)
            if j != event.variable:
                stepwise_mismatches += 1
            active.append(event.variable)
    ok = worst_knot < 1e-6 and stepwise_mismatches == 0
    _report(
        "criterion 4 (oracle equivalence)",
        ok,
        f"worst knot diff={worst_knot:.2e}, stepwise mismatches={stepwise_mismatches}, "
        f"drop events covered={drops_seen}",
        started,
    )
    assert ok
    assert drops_seen > 0
    assert time.time() - started < 120.0


def test_criterion_05_lasso_lars_identity_and_drop_census():
    started = time.time()
    n, p, k = 300, 270, 60
    magnitude = 100.0 * math.sqrt(2 * math.log(p))
    design = DesignSpec(n=n, p=p, scale=1.0 / n)
    signal = SignalSpec(p=p, blocks=((k, magnitude),), noise_sigma=1.0)
    total_drops = 0
    mismatches = 0
    missing = 0
    for seed in range(200):
        data = generate_dataset(design, signal, seed)
        lars_trace = lars_path(data, stop_support=data.support)
        lasso_trace = lasso_lars_path(data, stop_support=data.support)
        if lars_trace.events != lasso_trace.events:
            mismatches += 1
        report = first_spurious_rank(lasso_trace, data.support)
        if report.T is None:
            missing += 1
        else:
            total_drops += report.drops_before_first_noise
    ok = mismatches == 0 and total_drops == 0 and missing == 0
    _report(
        "criterion 5 (path identity, drop census)",
        ok,
        f"mismatches={mismatches}, drops={total_drops}, missing T={missing}",
        started,
    )
    assert ok
    assert time.time() - started < 300.0


def _phenomenon_ranks(tmp_path):
    n, p = 500, 450
    magnitude = 100.0 * math.sqrt(2 * math.log(p))
    design = DesignSpec(n=n, p=p, scale=1.0 / n)
    points = tuple(
        SweepPoint(
            float(k),
            design,
            SignalSpec(p=p, blocks=((k, magnitude),), noise_sigma=1.0),
        )
        for k in (10, 20, 40, 80, 120, 160)
    )
    config = ExperimentConfig(
        points=points,
        methods=(Method.LEAST_ANGLE, Method.LASSO, Method.FORWARD_STEPWISE),
        replicates=100,
        seed=1,
    )
    run_experiment(config, out_dir=tmp_path)
    ranks = {}
    with open(tmp_path / "ranks.csv", newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["method"], float(rec["sweep_value"]))
            ranks.setdefault(key, {})[int(rec["replicate"])] = (
                int(rec["T"]) if rec["T"] else None
            )
    return ranks


def test_criterion_06_phenomenon_reproduction(tmp_path):
    # Parts (a), lasso/lars (b), and the replicate-level lasso==lars
    # identity hold.  Two parts fail at this problem size and are
    # reported with their measured values: stepwise still sits on its
    # recovery plateau at k=80 (its peak lies past the k=40 grid point,
    # ~6 sigma above the required ordering), and at k=160 the asymptotic
    # log-rank formula undershoots the observed mean by ~0.6.
    started = time.time()
    with _workers(4):
        ranks = _phenomenon_ranks(tmp_path)
    n, p = 500, 450
    methods = ("lars", "lasso", "stepwise")

    def mean_T(method, k):
        ts = [t for t in ranks[(method, float(k))].values() if t is not None]
        return float(np.mean(ts))

    # (a) near-perfect recovery below the cutoff
    a_vals = {m: mean_T(m, 20) for m in methods}
    ok_a = all(abs(v - 21.0) <= 2.0 for v in a_vals.values())
    # (b) the decreasing branch for every method
    curves = {m: tuple(round(mean_T(m, k), 2) for k in (40, 80, 160)) for m in methods}
    ok_b = all(c[2] < c[1] < c[0] for c in curves.values())
    # (c) log-scale agreement with the closed form (lasso and lars only)
    gaps = {}
    for m in ("lars", "lasso"):
        for k in (80, 120, 160):
            ts = [t for t in ranks[(m, float(k))].values() if t is not None]
            gaps[(m, k)] = abs(float(np.mean(np.log(ts))) - predicted_log_rank(n, p, k))
    ok_c = all(g <= 0.35 for g in gaps.values())
    # lasso and least angle agree replicate by replicate
    identical = all(
        ranks[("lars", float(k))] == ranks[("lasso", float(k))]
        for k in (10, 20, 40, 80, 120, 160)
    )
    elapsed = time.time() - started
    ok = ok_a and ok_b and ok_c and identical and elapsed < 600.0
    worst = max(gaps, key=gaps.get)
    _report(
        "criterion 6 (phenomenon reproduction)",
        ok,
        f"meanT(20)={a_vals['lasso']:.1f}; meanT at k=40/80/160: {curves}; "
        f"worst log gap={gaps[worst]:.3f} at {worst}; lasso==lars: {identical}",
        started,
    )
    assert ok_a, f"mean T at k=20: {a_vals}"
    assert identical
    assert ok_b, f"mean T not decreasing over k=40,80,160: {curves}"
    assert ok_c, f"log-rank gaps above 0.35: { {k: round(v, 3) for k, v in gaps.items() if v > 0.35} }"
    assert elapsed < 600.0


def test_criterion_07_gamma_concentration():
    started = time.time()
    n, p, k = 500, 450, 100
    magnitude = 100.0 * math.sqrt(2 * math.log(p))
    design = DesignSpec(n=n, p=p, scale=1.0 / n)
    signal = SignalSpec(p=p, blocks=((k, magnitude),), noise_sigma=1.0)
    values = [compute_gamma(generate_dataset(design, signal, seed)).gamma for seed in range(200)]
    mean = float(np.mean(values))
    ok = 0.95 <= mean <= 1.05
    _report("criterion 7 (gamma concentration)", ok, f"mean gamma={mean:.4f}", started)
    assert ok
    assert time.time() - started < 60.0


def test_criterion_08_separation():
    started = time.time()
    n, p, k = 400, 100, 25
    _, _, threshold = separation_condition(n, p, m_over_sigma=1.0)
    magnitude = 1.1 * threshold
    design = DesignSpec(n=n, p=p, scale=1.0 / n)
    signal = SignalSpec(p=p, blocks=((k, magnitude),), noise_sigma=1.0)
    hits = 0
    total = 0
    for seed in range(200):
        data = generate_dataset(design, signal, seed)
        trace = lars_path(data, stop_support=data.support)
        report = first_spurious_rank(trace, data.support)
        if report.T is None:
            continue
        total += 1
        table = double_ranking(trace, least_squares_tstats(data.X, data.y), data.support)
        v_rank = {r.variable: r.v_rank for r in table.rows}
        if v_rank[report.first_noise_variable] > max(v_rank[j] for j in data.support):
            hits += 1
    rate = hits / total
    ok = rate >= 0.90 and total >= 180
    _report(
        "criterion 8 (vertical-rank separation)",
        ok,
        f"separation rate={rate:.3f} over {total} seeds",
        started,
    )
    assert ok
    assert time.time() - started < 120.0


def test_criterion_09_order_statistic_oracle():
    # Known to fail: the two-term expansion overshoots the finite-sample
    # mean at m = 1e6 (the dropped lower-order terms are still ~0.2-0.3
    # there), so the +-0.05 agreement bound is not attainable.  The test
    # states the claim as specified and reports the measured gaps.
    started = time.time()
    m = 10**6
    indices = (1, 10, 100)
    rng = np.random.default_rng(0)
    sums = dict.fromkeys(indices, 0.0)
    trials = 50
    for _ in range(trials):
        draw = np.sort(rng.standard_normal(m))
        for i in indices:
            sums[i] += draw[m - i]
    gaps = {
        i: abs(sums[i] / trials - normal_order_stat_approx(m, i)) for i in indices
    }
    ok = all(g <= 0.05 for g in gaps.values())
    _report(
        "criterion 9 (order-statistic oracle)",
        ok,
        "gaps " + ", ".join(f"i={i}: {g:.3f}" for i, g in gaps.items()),
        started,
    )
    assert time.time() - started < 180.0
    assert ok, f"measured gaps {gaps} exceed 0.05"


def test_criterion_10_determinism_and_plumbing(tmp_path, capsys):
    started = time.time()
    design = DesignSpec(n=40, p=30, scale=1.0 / 40)
    points = tuple(
        SweepPoint(float(k), design, SignalSpec(p=30, blocks=((k, 9.0),), noise_sigma=1.0))
        for k in (2, 5)
    )
    config = ExperimentConfig(
        points=points,
        methods=(Method.LASSO, Method.FORWARD_STEPWISE),
        replicates=6,
        seed=7,
    )
    with _workers(1):
        run_experiment(config, out_dir=tmp_path / "w1")
    with _workers(2):
        run_experiment(config, out_dir=tmp_path / "w2")
    run_experiment(config, out_dir=tmp_path / "again")
    same_workers = all(
        (tmp_path / "w1" / f).read_bytes() == (tmp_path / "w2" / f).read_bytes()
        for f in ("ranks.csv", "summary.csv", "plot.svg")
    )
    same_rerun = all(
        (tmp_path / "w1" / f).read_bytes() == (tmp_path / "again" / f).read_bytes()
        for f in ("ranks.csv", "summary.csv", "plot.svg")
    )

    # CLI byte determinism
    argv = ["predict", "--n", "634", "--p", "463", "--k", "55,100"]
    assert parse_and_dispatch(argv) == 0
    out1 = capsys.readouterr().out
    assert parse_and_dispatch(argv) == 0
    out2 = capsys.readouterr().out

    # CSV round trip preserves values exactly
    rng = np.random.default_rng(10)
    X = rng.standard_normal((9, 5)) * math.pi
    write_matrix_csv(tmp_path / "m.csv", X)
    round_trip = bool(np.array_equal(load_design_csv(tmp_path / "m.csv"), X))

    ok = same_workers and same_rerun and out1 == out2 and round_trip
    _report(
        "criterion 10 (determinism, plumbing)",
        ok,
        f"workers={same_workers}, rerun={same_rerun}, cli={out1 == out2}, "
        f"csv round trip={round_trip}",
        started,
    )
    assert ok
    assert time.time() - started < 60.0
