import numpy as np
import pytest

from sfv.design import DesignSpec, SignalSpec, generate_dataset
from sfv.paths import (
    EventKind,
    Method,
    Termination,
    _ActiveCholesky,
    forward_stepwise_path,
    lars_path,
    lasso_lars_path,
    trace_csv,
)
from sfv.reference import greedy_rss_step, lasso_at_lambda, lasso_objective


def _random_instance(seed, n=12, p=8):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)), rng.standard_normal(n)


def _enter_events(trace):
    return [e for e in trace.events if e.kind is EventKind.ENTER]


# ---------------------------------------------------------------------------
# Updatable Cholesky factor
# ---------------------------------------------------------------------------


def test_cholesky_insert_delete_matches_fresh_factor():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 12))
    chol = _ActiveCholesky(X, refactor_every=None)
    for j in (3, 7, 1, 9, 0, 5):
        assert chol.insert(j) is not None
    chol.delete(2)  # removes column 1
    chol.delete(0)  # removes column 3
    assert chol.insert(11) is not None
    Xa = X[:, chol.cols]
    fresh = np.linalg.cholesky(Xa.T @ Xa)
    assert np.max(np.abs(chol.L - fresh)) < 1e-10
    rhs = rng.standard_normal(len(chol.cols))
    assert np.max(np.abs(chol.solve(rhs) - np.linalg.solve(Xa.T @ Xa, rhs))) < 1e-9


def test_cholesky_rejects_collinear_insert():
    x = np.random.default_rng(1).standard_normal(10)
    X = np.column_stack([x, x])
    chol = _ActiveCholesky(X)
    assert chol.insert(0) is not None
    assert chol.insert(1) is None


def test_cholesky_periodic_refactor_keeps_accuracy():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 30))
    chol = _ActiveCholesky(X, refactor_every=10)
    cols = list(range(25))
    for j in cols:
        assert chol.insert(j) is not None
    for _ in range(8):
        chol.delete(0)
    Xa = X[:, chol.cols]
    fresh = np.linalg.cholesky(Xa.T @ Xa)
    assert np.max(np.abs(chol.L - fresh)) < 1e-9


# ---------------------------------------------------------------------------
# Least angle path
# ---------------------------------------------------------------------------


def test_lars_orthogonal_design_orders_by_inner_product():
    trace = lars_path(np.eye(3), np.array([3.0, -2.0, 1.0]))
    assert [e.variable for e in trace.events] == [0, 1, 2]
    assert [e.knot for e in trace.events] == pytest.approx([3.0, 2.0, 1.0])
    assert trace.termination is Termination.RESIDUAL_ZERO
    assert np.allclose(trace.final_coefficients, [3.0, -2.0, 1.0])


def test_lars_zero_response():
    trace = lars_path(np.eye(3), np.zeros(3))
    assert trace.events == ()
    assert trace.termination is Termination.RESIDUAL_ZERO


def test_lars_enter_only():
    for seed in range(30):
        X, y = _random_instance(seed, n=15, p=25)
        trace = lars_path(X, y)
        assert all(e.kind is EventKind.ENTER for e in trace.events)


def test_lars_equiangular_invariant_at_knots():
    # All active variables share one absolute correlation which bounds
    # every inactive variable's.
    for seed in range(20):
        X, y = _random_instance(seed)
        trace = lars_path(X, y)
        ynorm = np.linalg.norm(y)
        for i, event in enumerate(_enter_events(trace)):
            b = trace.knot_coefficients[i]
            corr = X.T @ (y - X @ b)
            lam = event.knot
            active = set()
            for e in trace.events[: i + 1]:
                if e.kind is EventKind.ENTER:
                    active.add(e.variable)
                else:
                    active.discard(e.variable)
            for j in range(X.shape[1]):
                if j in active or j == event.variable:
                    assert abs(abs(corr[j]) - lam) <= 1e-8 * max(lam, 1e-12)
                else:
                    assert abs(corr[j]) <= lam + 1e-8 * ynorm


def test_lars_knots_match_lasso_oracle_before_any_drop():
    for seed in range(10):
        X, y = _random_instance(seed)
        trace = lars_path(X, y)
        lasso_trace = lasso_lars_path(X, y)
        n_common = len(_enter_events(trace))
        if any(e.kind is EventKind.DROP for e in lasso_trace.events):
            n_common = next(
                i for i, e in enumerate(lasso_trace.events) if e.kind is EventKind.DROP
            )
        for i, event in enumerate(_enter_events(trace)[:n_common]):
            sol = lasso_at_lambda(X, y, event.knot, tol=1e-12)
            assert sol.converged
            assert np.max(np.abs(sol.coefficients - trace.knot_coefficients[i])) < 1e-6


def test_simultaneous_entry_tie_enters_lowest_index_first():
    trace = lars_path(np.eye(2), np.array([1.0, 1.0]))
    assert [e.variable for e in trace.events] == [0, 1]
    assert [e.knot for e in trace.events] == pytest.approx([1.0, 1.0])
    assert trace.termination is Termination.RESIDUAL_ZERO


def test_zero_column_rejected():
    X = np.eye(3)
    X[:, 1] = 0.0
    with pytest.raises(ValueError, match="zero column"):
        lars_path(X, np.ones(3))


def test_step_limit_termination():
    X, y = _random_instance(0, n=20, p=10)
    trace = lars_path(X, y, max_steps=3)
    assert len(trace.events) == 3
    assert trace.termination is Termination.STEP_LIMIT


def test_dataset_input_equivalent_to_arrays():
    data = generate_dataset(
        DesignSpec(n=15, p=6), SignalSpec(p=6, blocks=((2, 3.0),), noise_sigma=0.5), seed=4
    )
    t1 = lars_path(data)
    t2 = lars_path(data.X, data.y)
    assert t1.events == t2.events


# ---------------------------------------------------------------------------
# Lasso path
# ---------------------------------------------------------------------------


def test_lasso_orthogonal_equals_lars():
    X = np.eye(3)
    y = np.array([3.0, -2.0, 1.0])
    assert lasso_lars_path(X, y).events == lars_path(X, y).events


def test_lasso_knot_solutions_match_oracle():
    checked = 0
    for seed in range(200):
        X, y = _random_instance(seed)
        trace = lasso_lars_path(X, y)
        for i, event in enumerate(_enter_events(trace)):
            sol = lasso_at_lambda(X, y, event.knot, tol=1e-12)
            assert sol.converged
            assert np.max(np.abs(sol.coefficients - trace.knot_coefficients[i])) < 1e-6
            checked += 1
    assert checked > 1000


def test_lasso_kkt_at_every_knot():
    for seed in range(25):
        X, y = _random_instance(seed, n=18, p=24)
        trace = lasso_lars_path(X, y)
        ynorm = np.linalg.norm(y)
        for i, event in enumerate(_enter_events(trace)):
            b = trace.knot_coefficients[i]
            corr = X.T @ (y - X @ b)
            lam = event.knot
            for j in range(X.shape[1]):
                if b[j] != 0.0:
                    assert abs(corr[j] - lam * np.sign(b[j])) <= 1e-8 * max(lam, 1.0)
                else:
                    assert abs(corr[j]) <= lam + 1e-8 * ynorm


def test_lasso_drop_events_observed_and_prefix_matches_lars():
    # On wide correlated-ish instances drops do occur; up to the first
    # drop the two traces must agree event for event.
    drop_seeds = 0
    for seed in range(300):
        X, y = _random_instance(seed, n=20, p=30)
        lasso_trace = lasso_lars_path(X, y)
        drops = [i for i, e in enumerate(lasso_trace.events) if e.kind is EventKind.DROP]
        if not drops:
            continue
        drop_seeds += 1
        lars_trace = lars_path(X, y)
        prefix = lasso_trace.events[: drops[0]]
        for a, b in zip(prefix, lars_trace.events):
            assert a.kind == b.kind and a.variable == b.variable
            assert a.knot == pytest.approx(b.knot, rel=1e-9, abs=1e-12)
        if drop_seeds >= 10:
            break
    assert drop_seeds >= 5


def test_lasso_dropped_variable_leaves_active_set():
    for seed in range(300):
        X, y = _random_instance(seed, n=20, p=30)
        trace = lasso_lars_path(X, y)
        active = set()
        for e in trace.events:
            if e.kind is EventKind.ENTER:
                assert e.variable not in active
                active.add(e.variable)
            else:
                assert e.variable in active
                active.remove(e.variable)
            assert len(active) <= min(X.shape)


def test_monotone_knots():
    for seed in range(50):
        X, y = _random_instance(seed, n=16, p=22)
        trace = lasso_lars_path(X, y)
        knots = [e.knot for e in trace.events]
        assert all(b <= a for a, b in zip(knots, knots[1:]))


def test_mutual_epsilon_optimality():
    # Engine knot solutions and oracle solutions have equal objectives
    # up to a small slack, in both directions.
    for seed in range(10):
        X, y = _random_instance(seed)
        slack = 1e-8 * (1 + float(y @ y))
        trace = lasso_lars_path(X, y)
        for i, event in enumerate(_enter_events(trace)):
            oracle = lasso_at_lambda(X, y, event.knot, tol=1e-12)
            engine_obj = lasso_objective(X, y, trace.knot_coefficients[i], event.knot)
            assert oracle.objective <= engine_obj + slack
            assert engine_obj <= oracle.objective + slack


# ---------------------------------------------------------------------------
# Forward stepwise
# ---------------------------------------------------------------------------


def test_stepwise_orthonormal_orders_by_inner_product():
    rng = np.random.default_rng(13)
    Q, _ = np.linalg.qr(rng.standard_normal((12, 6)))
    y = rng.standard_normal(12)
    trace = forward_stepwise_path(Q, y)
    expected = np.argsort(-np.abs(Q.T @ y), kind="stable").tolist()
    assert trace.enter_variables() == expected


def test_stepwise_duplicate_column_tie_and_skip():
    rng = np.random.default_rng(14)
    x0 = rng.standard_normal(10)
    x1 = rng.standard_normal(10)
    X = np.column_stack([x0, x1, x0.copy()])
    y = x0 + 0.25 * x1
    trace = forward_stepwise_path(X, y)
    assert trace.enter_variables()[0] == 0
    assert 2 not in trace.enter_variables()


def test_stepwise_all_remaining_collinear_stalls():
    rng = np.random.default_rng(15)
    x0 = rng.standard_normal(10)
    X = np.column_stack([x0, 2 * x0, -0.5 * x0])
    y = x0 + 0.01 * rng.standard_normal(10)
    trace = forward_stepwise_path(X, y)
    assert trace.enter_variables() == [0]
    assert trace.termination is Termination.STALLED
    assert trace.stalled_step == 2


def test_stepwise_matches_greedy_oracle():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((15, 10))
        y = rng.standard_normal(15)
        trace = forward_stepwise_path(X, y)
        active = []
        for event in trace.events:
            j, rss = greedy_rss_step(X, y, active)
            assert j == event.variable
            assert event.knot == pytest.approx(rss, rel=1e-9, abs=1e-12)
            active.append(j)


def test_stepwise_rss_strictly_decreasing():
    for seed in range(30):
        X, y = _random_instance(seed, n=20, p=12)
        trace = forward_stepwise_path(X, y)
        knots = [e.knot for e in trace.events]
        assert all(b < a for a, b in zip(knots, knots[1:]))


def test_stepwise_max_steps_bounded_by_dimensions():
    X, y = _random_instance(0, n=10, p=5)
    with pytest.raises(ValueError):
        forward_stepwise_path(X, y, max_steps=6)
    trace = forward_stepwise_path(X, y, max_steps=2)
    assert len(trace.events) == 2
    assert trace.termination is Termination.STEP_LIMIT


# ---------------------------------------------------------------------------
# Shared engine properties
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("engine", [lars_path, lasso_lars_path, forward_stepwise_path])
def test_determinism(engine):
    X, y = _random_instance(21, n=18, p=12)
    t1 = engine(X, y)
    t2 = engine(X, y)
    assert t1.events == t2.events
    assert t1.termination == t2.termination
    for a, b in zip(t1.knot_coefficients, t2.knot_coefficients):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("engine", [lars_path, lasso_lars_path, forward_stepwise_path])
def test_permutation_equivariance(engine):
    rng = np.random.default_rng(22)
    X, y = _random_instance(23, n=20, p=10)
    perm = rng.permutation(10)
    trace = engine(X, y)
    trace_p = engine(X[:, perm], y)
    inverse = np.empty(10, dtype=int)
    inverse[perm] = np.arange(10)
    assert [e.variable for e in trace_p.events] == [
        inverse[e.variable] for e in trace.events
    ]
    for a, b in zip(trace.events, trace_p.events):
        assert a.knot == pytest.approx(b.knot, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("engine", [lars_path, lasso_lars_path, forward_stepwise_path])
def test_early_stop_prefix_matches_full_run(engine):
    data = generate_dataset(
        DesignSpec(n=40, p=30),
        SignalSpec(p=30, blocks=((6, 8.0),), noise_sigma=1.0),
        seed=31,
    )
    full = engine(data)
    stopped = engine(data, stop_support=data.support)
    assert stopped.termination is Termination.EARLY_STOPPED
    k = len(stopped.events)
    assert stopped.events == full.events[:k]
    assert stopped.events[-1].variable not in data.support
    assert all(e.variable in data.support
               for e in stopped.events[:-1] if e.kind is EventKind.ENTER)


def test_knot_coefficient_snapshots_start_at_zero():
    X, y = _random_instance(33)
    for engine in (lars_path, lasso_lars_path, forward_stepwise_path):
        trace = engine(X, y)
        assert np.all(trace.knot_coefficients[0] == 0.0)
        assert len(trace.knot_coefficients) == len(_enter_events(trace))


def test_trace_csv_format():
    trace = lars_path(np.eye(2), np.array([2.0, 1.0]))
    text = trace_csv(trace)
    lines = text.strip().split("\n")
    assert lines[0] == "step,event,variable,knot,active_size"
    assert lines[1] == "1,enter,0,2.0,1"
    assert lines[2] == "2,enter,1,1.0,2"


def test_method_tags():
    X, y = _random_instance(40, n=8, p=4)
    assert lars_path(X, y).method is Method.LEAST_ANGLE
    assert lasso_lars_path(X, y).method is Method.LASSO
    assert forward_stepwise_path(X, y).method is Method.FORWARD_STEPWISE
