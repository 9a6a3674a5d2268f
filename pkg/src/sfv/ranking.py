"""Signal/noise labeling of path events and alignment diagnostics.

The central quantity is the rank of the first false selection: one plus
the number of true variables entering strictly before the first
zero-coefficient variable along a path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Dataset
from .paths import EventKind, PathEvent, PathTrace

__all__ = [
    "RankReport",
    "GammaStat",
    "first_spurious_rank",
    "compute_gamma",
    "residual_inner_profile",
    "rank_report_csv_row",
]


@dataclass(frozen=True)
class RankReport:
    """Where the first false selection happened along one trace.

    ``T`` is the 1-based position of the first Enter event whose variable
    lies outside the support, or None when no such event occurs.
    ``signals_before`` counts signal entries strictly before it (so
    ``T == signals_before + 1`` whenever ``T`` is present), and
    ``drops_before_first_noise`` counts Drop events strictly before it.
    Every event appears exactly once in ``labeled_events``.
    """

    T: int | None
    first_noise_variable: int | None
    signals_before: int
    drops_before_first_noise: int
    labeled_events: tuple[tuple[PathEvent, bool], ...]


def first_spurious_rank(trace: PathTrace, support) -> RankReport:
    """Scan Enter events in order and locate the first off-support entry."""
    support = frozenset(int(v) for v in support)
    for var in support:
        if not 0 <= var < trace.p:
            raise ValueError(f"support index {var} out of range for p={trace.p}")
    labeled = tuple((e, e.variable in support) for e in trace.events)

    T = None
    first_noise = None
    signals_before = 0
    drops_before = 0
    enter_position = 0
    for event, is_signal in labeled:
        if event.kind is EventKind.ENTER:
            enter_position += 1
            if not is_signal:
                T = enter_position
                first_noise = event.variable
                break
            signals_before += 1
        else:
            drops_before += 1
    if T is None:
        drops_before = sum(
            1 for event, _ in labeled if event.kind is EventKind.DROP
        )
        signals_before = enter_position
    return RankReport(
        T=T,
        first_noise_variable=first_noise,
        signals_before=signals_before,
        drops_before_first_noise=drops_before,
        labeled_events=labeled,
    )


def rank_report_csv_row(method, seed, k: int, report: RankReport) -> str:
    """One CSV row: method, seed, k, T, signals_before, drops_before_first_noise."""
    t = "" if report.T is None else str(report.T)
    return (
        f"{method},{seed},{k},{t},{report.signals_before},"
        f"{report.drops_before_first_noise}"
    )


@dataclass(frozen=True)
class GammaStat:
    """Normalized signal/response alignment.

    ``gamma = beta^T X^T y / (sqrt(k) * M * ||y||)`` for the common
    signal magnitude M, and ``d = ||y|| / sqrt(k)``.  Concentrates at 1
    under strong equal-magnitude signals.
    """

    gamma: float
    d: float


def compute_gamma(data: Dataset) -> GammaStat:
    """Evaluate the alignment statistic for an equal-magnitude signal."""
    support = sorted(data.support)
    k = len(support)
    if k == 0:
        raise ValueError("gamma statistic requires a nonempty support")
    values = data.beta[support]
    magnitude = values[0]
    if not np.all(values == magnitude):
        raise ValueError(
            "gamma statistic is defined for a single common signal magnitude; "
            "got mixed values"
        )
    ynorm = float(np.linalg.norm(data.y))
    if ynorm == 0.0:
        raise ValueError("response is identically zero")
    numer = float(data.beta @ (data.X.T @ data.y))
    gamma = numer / (np.sqrt(k) * magnitude * ynorm)
    return GammaStat(gamma=gamma, d=ynorm / np.sqrt(k))


def residual_inner_profile(
    data: Dataset, trace: PathTrace, at_rank: int
) -> tuple[float, list[float]]:
    """Inner products of all columns with the residual at an entry knot.

    Reconstructs the residual just before the ``at_rank``-th entering
    variable joins (using the stored coefficient snapshot) and returns
    the largest absolute inner product over off-support columns together
    with the eleven deciles (0%, 10%, ..., 100%) of the absolute inner
    products over support columns.
    """
    n_enter = len(trace.knot_coefficients)
    if not 1 <= at_rank <= n_enter:
        raise ValueError(f"at_rank {at_rank} outside the {n_enter} recorded entries")
    coefs = trace.knot_coefficients[at_rank - 1]
    r = data.y - data.X @ coefs
    inner = np.abs(data.X.T @ r)
    support = sorted(data.support)
    off = np.setdiff1d(np.arange(data.p), support)
    max_off = float(inner[off].max()) if off.size else 0.0
    if support:
        quantiles = [
            float(q) for q in np.quantile(inner[support], np.linspace(0, 1, 11))
        ]
    else:
        quantiles = []
    return max_off, quantiles
