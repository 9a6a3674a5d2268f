"""Double-ranking diagnostics: path rank against least-squares rank.

Columns are ranked two ways: horizontally by when they enter a
selection path, and vertically by the magnitude of their least-squares
t-statistic.  An early false selection tends to show a much larger
vertical rank than horizontal rank, which is what the diagram exposes.
Vertical ranking requires n > p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from .paths import EventKind, PathTrace

__all__ = [
    "DiagramRow",
    "DiagramTable",
    "least_squares_tstats",
    "double_ranking",
    "separation_condition",
    "diagram_csv",
]


@dataclass(frozen=True)
class DiagramRow:
    variable: int
    h_rank: int | None
    v_rank: int
    t_stat: float
    is_signal: bool


@dataclass(frozen=True)
class DiagramTable:
    rows: tuple[DiagramRow, ...]

    def csv(self) -> str:
        return diagram_csv(self)


def diagram_csv(table: DiagramTable) -> str:
    lines = ["variable,h_rank,v_rank,t_stat,is_signal"]
    for row in table.rows:
        h = "" if row.h_rank is None else str(row.h_rank)
        lines.append(
            f"{row.variable},{h},{row.v_rank},{repr(row.t_stat)},"
            f"{str(row.is_signal).lower()}"
        )
    return "\n".join(lines) + "\n"


def least_squares_tstats(X, y) -> np.ndarray:
    """|beta_hat_j| / sqrt([(X^T X)^-1]_jj) for the least-squares fit.

    The noise level is deliberately omitted: it cancels when the values
    are used for ranking.  Computed through a QR factorization; the
    inverse-Gram diagonal comes from triangular solves, not an explicit
    matrix inverse.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if n <= p:
        raise ValueError(
            f"vertical ranking requires n > p, got n={n}, p={p}"
        )
    Q, R = qr(X, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.min() == 0.0 or (diag.max() / diag.min()) ** 2 > 1e12:
        raise ValueError("Gram matrix is numerically singular")
    beta = solve_triangular(R, Q.T @ y, lower=False)
    # Row norms of R^{-1} give the diagonal of (X^T X)^{-1}.
    Rinv = solve_triangular(R, np.eye(p), lower=False)
    gram_diag = np.einsum("ij,ij->i", Rinv, Rinv)
    return np.abs(beta) / np.sqrt(gram_diag)


def double_ranking(trace: PathTrace, tstats, support) -> DiagramTable:
    """Assemble per-variable horizontal and vertical ranks.

    Horizontal rank is the variable's (first) Enter position in the
    trace, absent for variables that never entered.  Vertical rank
    orders descending |t|, ties toward the lower variable index.
    """
    tstats = np.asarray(tstats, dtype=np.float64).ravel()
    p = tstats.shape[0]
    support = frozenset(int(v) for v in support)
    for event in trace.events:
        if event.variable >= p:
            raise ValueError(
                f"trace variable {event.variable} out of range for p={p}"
            )
    h_rank: dict[int, int] = {}
    position = 0
    for event in trace.events:
        if event.kind is EventKind.ENTER:
            position += 1
            h_rank.setdefault(event.variable, position)
    order = np.lexsort((np.arange(p), -tstats))
    v_rank = np.empty(p, dtype=int)
    v_rank[order] = np.arange(1, p + 1)
    rows = tuple(
        DiagramRow(
            variable=j,
            h_rank=h_rank.get(j),
            v_rank=int(v_rank[j]),
            t_stat=float(tstats[j]),
            is_signal=j in support,
        )
        for j in range(p)
    )
    return DiagramTable(rows=rows)


def separation_condition(n: int, p: int, m_over_sigma: float) -> tuple[bool, float, float]:
    """Signal-strength condition for the first false selection to rank last.

    Returns (holds, delta, threshold) with delta = n/p and threshold
    3 * sqrt(2 * delta * ln p / (delta - 1)); the condition holds when
    the signal-to-noise magnitude strictly exceeds the threshold.
    """
    if n <= p:
        raise ValueError(f"requires n > p, got n={n}, p={p}")
    if m_over_sigma <= 0:
        raise ValueError(f"m_over_sigma must be positive, got {m_over_sigma}")
    delta = n / p
    threshold = 3.0 * math.sqrt(2.0 * delta * math.log(p) / (delta - 1.0))
    return m_over_sigma > threshold, delta, threshold
