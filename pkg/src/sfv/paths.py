"""Sequential selection-path engines.

Three engines produce an ordered trace of variable entry (and, for the
lasso, drop) events:

* ``lars_path``             -- least angle regression, enter-only;
* ``lasso_lars_path``       -- the lasso homotopy: identical to least
  angle regression except an active coefficient crossing zero leaves
  the model at the crossing;
* ``forward_stepwise_path`` -- greedy least-squares forward selection.

Every engine accepts either a ``Dataset`` or an explicit ``(X, y)``
pair, is deterministic (ties broken toward the lowest column index),
and can stop early as soon as a variable outside a caller-supplied
index set enters, which makes long sweeps cheap when only the path
prefix matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from .design import Dataset

__all__ = [
    "Method",
    "EventKind",
    "Termination",
    "PathEvent",
    "PathTrace",
    "lars_path",
    "lasso_lars_path",
    "forward_stepwise_path",
    "trace_csv",
]

_RESIDUAL_RTOL = 1e-10
_COND_LIMIT = 1e12
_ENTRY_TIE_RTOL = 1e-10
_DROP_TIE_ABS = 1e-12


class Method(str, Enum):
    FORWARD_STEPWISE = "stepwise"
    LASSO = "lasso"
    LEAST_ANGLE = "lars"


class EventKind(str, Enum):
    ENTER = "enter"
    DROP = "drop"


class Termination(str, Enum):
    RESIDUAL_ZERO = "residual_zero"
    ALL_VARIABLES_ACTIVE = "all_variables_active"
    STEP_LIMIT = "step_limit"
    STALLED = "stalled"
    EARLY_STOPPED = "early_stopped"


@dataclass(frozen=True)
class PathEvent:
    """One change of the active set.

    ``knot`` is the penalty level at the event for lasso / least angle
    traces and the post-step residual sum of squares for stepwise.
    """

    step: int
    kind: EventKind
    variable: int
    knot: float


@dataclass(frozen=True)
class PathTrace:
    """Ordered event list plus per-entry coefficient snapshots.

    ``knot_coefficients[i]`` is the full p-vector of fitted coefficients
    at the moment the i-th entering variable is about to join (so the
    entry for the first event is the zero vector).
    ``final_coefficients`` is the coefficient vector when the engine
    stopped.  ``stalled_step`` records the offending step for stalled
    terminations.
    """

    method: Method
    p: int
    events: tuple[PathEvent, ...]
    knot_coefficients: tuple[np.ndarray, ...]
    termination: Termination
    final_coefficients: np.ndarray
    stalled_step: int | None = None

    def __post_init__(self):
        for arr in self.knot_coefficients:
            arr.setflags(write=False)
        self.final_coefficients.setflags(write=False)

    def enter_variables(self) -> list[int]:
        """Variables in entry order (drops ignored, re-entries repeated)."""
        return [e.variable for e in self.events if e.kind is EventKind.ENTER]

    def active_sizes(self) -> list[int]:
        """Active-set size after each event."""
        size, out = 0, []
        for e in self.events:
            size += 1 if e.kind is EventKind.ENTER else -1
            out.append(size)
        return out


def trace_csv(trace: PathTrace) -> str:
    """Render a trace as CSV with columns step,event,variable,knot,active_size."""
    lines = ["step,event,variable,knot,active_size"]
    for event, size in zip(trace.events, trace.active_sizes()):
        lines.append(
            f"{event.step},{event.kind.value},{event.variable},"
            f"{repr(float(event.knot))},{size}"
        )
    return "\n".join(lines) + "\n"


def _unpack(data, y):
    if isinstance(data, Dataset):
        if y is not None:
            raise ValueError("pass either a Dataset or (X, y), not both")
        return data.X, data.y
    if y is None:
        raise ValueError("y is required when data is a plain matrix")
    X = np.asarray(data, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d design matrix, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


class _ActiveCholesky:
    """Updatable lower Cholesky factor of the active-column Gram matrix.

    Columns are inserted by appending a row to the factor and removed by
    Givens re-triangularization.  After ``refactor_every`` structural
    updates the factor is rebuilt from scratch to bound drift.  An insert
    is refused (returns None) when the updated factor would indicate a
    condition estimate beyond ``cond_limit``.
    """

    def __init__(self, X, cond_limit=_COND_LIMIT, refactor_every=50):
        self.X = X
        self.cols: list[int] = []
        self.L = np.zeros((0, 0))
        self.cond_limit = cond_limit
        self.refactor_every = refactor_every
        self._updates = 0

    def insert(self, j: int):
        """Try to append column j; return the (w, d) pair used, or None."""
        x = self.X[:, j]
        xnorm2 = float(x @ x)
        a = len(self.cols)
        if a:
            g = self.X[:, self.cols].T @ x
            w = solve_triangular(self.L, g, lower=True)
            d2 = xnorm2 - float(w @ w)
        else:
            w = np.zeros(0)
            d2 = xnorm2
        if d2 <= 0.0:
            return None
        d = math.sqrt(d2)
        diag = np.append(np.diag(self.L), d) if a else np.array([d])
        if (diag.max() / diag.min()) ** 2 > self.cond_limit:
            return None
        L = np.zeros((a + 1, a + 1))
        L[:a, :a] = self.L
        L[a, :a] = w
        L[a, a] = d
        self.L = L
        self.cols.append(j)
        self._bump()
        return w, d

    def delete(self, pos: int) -> None:
        self.cols.pop(pos)
        M = np.delete(self.L, pos, axis=0)
        a = M.shape[0]
        for i in range(pos, a):
            # Rotate columns (i, i+1) to clear the stray superdiagonal entry.
            f, g = M[i, i], M[i, i + 1]
            h = math.hypot(f, g)
            if h == 0.0:
                continue
            c, s = f / h, g / h
            col_i = M[i:, i].copy()
            col_j = M[i:, i + 1].copy()
            M[i:, i] = c * col_i + s * col_j
            M[i:, i + 1] = -s * col_i + c * col_j
            M[i, i + 1] = 0.0
        self.L = M[:, :a]
        for i in range(a):
            if self.L[i, i] < 0:
                self.L[i:, i] *= -1.0
        self._bump()

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        z = solve_triangular(self.L, rhs, lower=True)
        return solve_triangular(self.L.T, z, lower=False)

    def _bump(self):
        self._updates += 1
        if self.refactor_every and self._updates % self.refactor_every == 0:
            self._refactor()

    def _refactor(self):
        if self.cols:
            Xa = self.X[:, self.cols]
            self.L = np.linalg.cholesky(Xa.T @ Xa)


def _finish(method, p, events, knot_coefs, termination, beta, stalled_step=None):
    return PathTrace(
        method=method,
        p=p,
        events=tuple(events),
        knot_coefficients=tuple(knot_coefs),
        termination=termination,
        final_coefficients=np.array(beta),
        stalled_step=stalled_step,
    )


def _check_columns(X):
    norms = np.linalg.norm(X, axis=0)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(f"design contains a zero column at index {int(zero[0])}")
    return norms


def _lars_engine(X, y, max_steps, lasso, stop_support, method):
    n, p = X.shape
    col_norms = _check_columns(X)
    max_colnorm = float(col_norms.max())
    ynorm = float(np.linalg.norm(y))
    limit = min(n, p)

    beta = np.zeros(p)
    r = y.copy()
    active: list[int] = []
    is_active = np.zeros(p, dtype=bool)
    chol = _ActiveCholesky(X)
    events: list[PathEvent] = []
    knot_coefs: list[np.ndarray] = []
    stop = None if stop_support is None else frozenset(int(v) for v in stop_support)
    last_knot = math.inf
    exhausted = False  # a full step toward the joint fit was taken

    def done(term, stalled=False):
        return _finish(method, p, events, knot_coefs, term, beta,
                       stalled_step=len(events) + 1 if stalled else None)

    def emit(kind, var, knot):
        nonlocal last_knot
        knot = min(knot, last_knot)
        last_knot = knot
        if kind is EventKind.ENTER:
            knot_coefs.append(beta.copy())
        events.append(PathEvent(len(events) + 1, kind, var, knot))

    while True:
        rnorm = float(np.linalg.norm(r))
        if rnorm <= _RESIDUAL_RTOL * ynorm:
            return done(Termination.RESIDUAL_ZERO)
        if exhausted:
            # The joint least-squares point was reached without any new
            # boundary crossing; nothing further can change the model.
            if len(active) >= limit:
                return done(Termination.ALL_VARIABLES_ACTIVE)
            return done(Termination.STALLED, stalled=True)

        c = X.T @ r

        if not active:
            cabs = np.abs(c)
            top = float(cabs.max())
            if top <= 1e-14 * max_colnorm * rnorm:
                return done(Termination.STALLED, stalled=True)
            if len(events) >= max_steps:
                return done(Termination.STEP_LIMIT)
            j = int(np.nonzero(cabs >= top - _ENTRY_TIE_RTOL * ynorm)[0][0])
            if chol.insert(j) is None:
                return done(Termination.STALLED, stalled=True)
            emit(EventKind.ENTER, j, top)
            active.append(j)
            is_active[j] = True
            if stop is not None and j not in stop:
                return done(Termination.EARLY_STOPPED)
            continue

        idx = np.asarray(active)
        c_act = c[idx]
        signs = np.sign(c_act)
        signs[signs == 0.0] = 1.0
        lam = float(np.abs(c_act).max())
        if lam <= 1e-14 * max_colnorm * rnorm:
            return done(Termination.STALLED, stalled=True)

        w_bar = chol.solve(signs)
        denom = float(signs @ w_bar)
        if denom <= 0.0:
            return done(Termination.STALLED, stalled=True)
        angle = 1.0 / math.sqrt(denom)
        w = angle * w_bar
        u = X[:, idx] @ w
        a_corr = X.T @ u

        gamma_full = lam / angle

        # Boundary-crossing candidates for inactive variables.  A candidate
        # is a genuine crossing only when its denominator is positive (the
        # penalty level decays onto the variable's correlation); this also
        # admits zero-length segments for exact entry ties while rejecting
        # the tangency of a freshly dropped variable.
        gamma_enter = math.inf
        j_enter = -1
        if len(active) < limit:
            inactive = np.nonzero(~is_active)[0]
            if inactive.size:
                ci = c[inactive]
                ai = a_corr[inactive]
                den_floor = 1e-12 * angle
                gamma_floor = -1e-12 * (ynorm / angle if angle > 0 else 1.0)
                cands = []
                for num, den in ((lam - ci, angle - ai), (lam + ci, angle + ai)):
                    g = np.full(inactive.shape, math.inf)
                    ok = den > den_floor
                    g[ok] = num[ok] / den[ok]
                    g[(g < gamma_floor)] = math.inf
                    cands.append(np.maximum(g, 0.0))
                cand = np.minimum(cands[0], cands[1])
                gmin = float(cand.min())
                if gmin < math.inf:
                    tie = _ENTRY_TIE_RTOL * ynorm / angle
                    j_enter = int(inactive[cand <= gmin + tie].min())
                    gamma_enter = gmin

        gamma_drop = math.inf
        pos_drop = -1
        if lasso:
            with np.errstate(divide="ignore", invalid="ignore"):
                gd = -beta[idx] / w
            gd[~np.isfinite(gd)] = math.inf
            gd[gd <= 0.0] = math.inf
            pos = int(np.argmin(gd))
            if gd[pos] < math.inf:
                gamma_drop, pos_drop = float(gd[pos]), pos

        gamma_move = min(gamma_enter, gamma_full)
        # A drop at (numerically) the same penalty as an entry happens first.
        take_drop = lasso and gamma_drop < math.inf and (
            gamma_drop * angle <= gamma_move * angle + _DROP_TIE_ABS
        )
        gamma = gamma_drop if take_drop else gamma_move

        beta[idx] += gamma * w
        r = r - gamma * u
        knot = max(lam - gamma * angle, 0.0)

        if take_drop:
            if len(events) >= max_steps:
                return done(Termination.STEP_LIMIT)
            var = active.pop(pos_drop)
            beta[var] = 0.0
            is_active[var] = False
            chol.delete(pos_drop)
            emit(EventKind.DROP, var, knot)
        elif gamma_enter <= gamma_full and j_enter >= 0:
            if len(events) >= max_steps:
                return done(Termination.STEP_LIMIT)
            if chol.insert(j_enter) is None:
                return done(Termination.STALLED, stalled=True)
            emit(EventKind.ENTER, j_enter, knot)
            active.append(j_enter)
            is_active[j_enter] = True
            if stop is not None and j_enter not in stop:
                return done(Termination.EARLY_STOPPED)
        else:
            exhausted = True


def lars_path(data, y=None, max_steps: int | None = None, stop_support=None) -> PathTrace:
    """Least angle regression path; Enter events only.

    At every knot all active variables share one absolute inner product
    with the residual, and that value bounds every inactive variable's.
    Stops when the residual is (relatively) zero, the active set reaches
    min(n, p), or ``max_steps`` events were emitted.
    """
    X, y = _unpack(data, y)
    if max_steps is None:
        max_steps = min(X.shape)
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    return _lars_engine(X, y, max_steps, False, stop_support, Method.LEAST_ANGLE)


def lasso_lars_path(data, y=None, max_steps: int | None = None, stop_support=None) -> PathTrace:
    """Lasso solution path via the homotopy method.

    Identical to ``lars_path`` except that an active coefficient hitting
    zero inside a segment produces a Drop event at the crossing and the
    variable leaves the active set.  Coefficient snapshots solve the
    penalized program at their knot.
    """
    X, y = _unpack(data, y)
    if max_steps is None:
        max_steps = 8 * min(X.shape)
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    return _lars_engine(X, y, max_steps, True, stop_support, Method.LASSO)


def forward_stepwise_path(data, y=None, max_steps: int | None = None, stop_support=None) -> PathTrace:
    """Greedy forward selection by exact residual-sum-of-squares descent.

    Each step adds the variable whose inclusion minimizes the RSS of the
    refitted least-squares model, then refits fully; the event knot is
    the post-step RSS.  Candidates whose residualized norm falls below
    1e-10 of their raw norm are skipped as collinear with the active set.
    """
    X, y = _unpack(data, y)
    n, p = X.shape
    limit = min(n, p)
    if max_steps is None:
        max_steps = limit
    if not 1 <= max_steps <= limit:
        raise ValueError(f"max_steps must be in [1, min(n, p)] = [1, {limit}]")
    _check_columns(X)

    ynorm = float(np.linalg.norm(y))
    ynorm2 = ynorm * ynorm
    tie_tol = _ENTRY_TIE_RTOL * ynorm2
    col_norm2 = np.einsum("ij,ij->j", X, X)
    Xty = X.T @ y

    chol = _ActiveCholesky(X, refactor_every=None)
    # Rows of W are the active factor's forward-solves against all of X;
    # column sums of W**2 give squared projections onto the active span.
    W = np.zeros((0, p))
    resid2 = col_norm2.copy()

    beta = np.zeros(p)
    r = y.copy()
    active: list[int] = []
    is_active = np.zeros(p, dtype=bool)
    events: list[PathEvent] = []
    knot_coefs: list[np.ndarray] = []
    stop = None if stop_support is None else frozenset(int(v) for v in stop_support)
    method = Method.FORWARD_STEPWISE

    def done(term, stalled=False):
        return _finish(method, p, events, knot_coefs, term, beta,
                       stalled_step=len(events) + 1 if stalled else None)

    def residualized_norm2(j):
        sol = chol.solve(X[:, active].T @ X[:, j])
        diff = X[:, j] - X[:, active] @ sol
        return float(diff @ diff)

    while True:
        if float(np.linalg.norm(r)) <= _RESIDUAL_RTOL * ynorm:
            return done(Termination.RESIDUAL_ZERO)
        if len(events) >= max_steps:
            return done(Termination.STEP_LIMIT)
        if len(active) >= limit:
            return done(Termination.ALL_VARIABLES_ACTIVE)

        cr = X.T @ r
        denom = np.maximum(resid2, 0.0)
        admissible = ~is_active
        # Candidates too close to the active span for the running sums to
        # resolve get an exact residualized norm before the skip rule.
        if active:
            suspicious = np.nonzero(admissible & (denom <= 1e-16 * col_norm2))[0]
            for j in suspicious:
                denom[j] = residualized_norm2(j)
        skip = denom < 1e-20 * col_norm2
        admissible &= ~skip
        if not np.any(admissible):
            return done(Termination.STALLED, stalled=True)

        scores = np.where(admissible, (cr * cr) / np.where(denom > 0, denom, 1.0), -1.0)
        best = float(scores.max())
        if best <= 1e-30 * ynorm2:
            return done(Termination.STALLED, stalled=True)
        j = int(np.nonzero(scores >= best - tie_tol)[0][0])

        ins = chol.insert(j)
        if ins is None:
            return done(Termination.STALLED, stalled=True)
        w, d = ins
        knot_coefs.append(beta.copy())
        row = (X[:, j] @ X - (w @ W if W.shape[0] else 0.0)) / d
        W = np.vstack([W, row])
        resid2 = resid2 - row * row

        active.append(j)
        is_active[j] = True
        coef = chol.solve(Xty[active])
        beta = np.zeros(p)
        beta[active] = coef
        r = y - X[:, active] @ coef
        rss = float(r @ r)
        events.append(PathEvent(len(events) + 1, EventKind.ENTER, j, rss))
        if stop is not None and j not in stop:
            return done(Termination.EARLY_STOPPED)
