"""Slow reference solvers for validating the path engines.

These are deliberately naive (cyclic coordinate minimization, dense
least-squares refits) and share no code with the homotopy engines, so
that agreement between the two is meaningful evidence of correctness.
Intended for small instances only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["OracleSolution", "lasso_at_lambda", "greedy_rss_step"]


@dataclass(frozen=True)
class OracleSolution:
    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(X, y, b, lam: float) -> float:
    r = y - X @ b
    return 0.5 * float(r @ r) + lam * float(np.abs(b).sum())


def _kkt_residual(X, y, b, lam: float) -> float:
    grad = X.T @ (y - X @ b)
    worst = 0.0
    for j in range(X.shape[1]):
        if b[j] != 0.0:
            worst = max(worst, abs(grad[j] - lam * np.sign(b[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam))
    return worst


def lasso_at_lambda(
    X,
    y,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
) -> OracleSolution:
    """Minimize 0.5*||y - X b||^2 + lam*||b||_1 by coordinate minimization.

    Cyclic exact single-coordinate updates from a zero start.  Declares
    convergence once a full sweep moves no coefficient by more than
    tol*(1 + ||y||) and the stationarity residual is below 10*tol.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    norms2 = np.einsum("ij,ij->j", X, X)
    if np.any(norms2 == 0.0):
        raise ValueError("design contains a zero column")
    b = np.zeros(p)
    r = y.copy()
    move_tol = tol * (1.0 + float(np.linalg.norm(y)))
    converged = False
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        delta = 0.0
        for j in range(p):
            old = b[j]
            rho = float(X[:, j] @ r) + norms2[j] * old
            new = _soft_threshold(rho, lam) / norms2[j]
            if new != old:
                r -= (new - old) * X[:, j]
                b[j] = new
                delta = max(delta, abs(new - old))
        if delta < move_tol and _kkt_residual(X, y, b, lam) < 10.0 * tol:
            converged = True
            break
    return OracleSolution(
        coefficients=b,
        objective=lasso_objective(X, y, b, lam),
        iterations=sweeps,
        converged=converged,
    )


def greedy_rss_step(X, y, active) -> tuple[int, float]:
    """One exhaustive forward-selection step.

    Evaluates the exact least-squares residual sum of squares on
    active + {j} for every admissible j outside the active set and
    returns (best index, its RSS), breaking ties toward the lowest
    index within 1e-10*||y||^2.  Candidates collinear with the active
    set are inadmissible; if none remain, raises ValueError.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    active = sorted(int(a) for a in active)
    Xa = X[:, active]
    best_j, best_rss = None, np.inf
    tie_tol = 1e-10 * float(y @ y)
    for j in range(X.shape[1]):
        if j in active:
            continue
        xj = X[:, j]
        if active:
            proj, *_ = np.linalg.lstsq(Xa, xj, rcond=None)
            resid_part = xj - Xa @ proj
        else:
            resid_part = xj
        if np.linalg.norm(resid_part) < 1e-10 * np.linalg.norm(xj):
            continue
        cols = np.column_stack([Xa, xj]) if active else xj[:, None]
        coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
        rss = float(np.sum((y - cols @ coef) ** 2))
        if rss < best_rss - tie_tol:
            best_j, best_rss = j, rss
    if best_j is None:
        raise ValueError("no admissible candidate: all remaining columns are collinear")
    return best_j, best_rss
