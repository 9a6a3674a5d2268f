"""Closed-form prediction of the first false-selection rank.

For a Gaussian design with n rows, p columns, and k equal-magnitude
signals, the predicted log-rank is

    sqrt(2 n ln p / k) - n / (2 k) + ln(n / (2 p ln p)),

valid above the sparsity cutoff n / (2 ln p); below the cutoff the
predicted rank is simply k + 1 (every signal precedes the first false
selection).  Natural logarithms throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "Regime",
    "Prediction",
    "sparsity_cutoff",
    "predicted_log_rank",
    "predicted_rank",
    "linear_sparsity_bound",
    "normal_order_stat_approx",
]


class Regime(str, Enum):
    BELOW_CUTOFF = "below_cutoff"
    ABOVE_CUTOFF = "above_cutoff"


@dataclass(frozen=True)
class Prediction:
    n: int
    p: int
    k: int
    log_rank: float
    rank: float
    regime: Regime
    cutoff: float


def _check_np(n, p):
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")


def sparsity_cutoff(n: int, p: int) -> float:
    """The sparsity level n / (2 ln p) separating the two regimes."""
    _check_np(n, p)
    return n / (2.0 * math.log(p))


def predicted_log_rank(n: int, p: int, k: float) -> float:
    """Evaluate the closed-form log-rank formula (real-valued k allowed)."""
    _check_np(n, p)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    lp = math.log(p)
    return math.sqrt(2.0 * n * lp / k) - n / (2.0 * k) + math.log(n / (2.0 * p * lp))


def predicted_rank(n: int, p: int, k: int) -> Prediction:
    """Piecewise rank prediction: k + 1 below the cutoff, exp(log-rank) above."""
    log_rank = predicted_log_rank(n, p, k)
    cutoff = sparsity_cutoff(n, p)
    if k <= cutoff:
        return Prediction(n, p, k, log_rank, float(k + 1), Regime.BELOW_CUTOFF, cutoff)
    return Prediction(n, p, k, log_rank, math.exp(log_rank), Regime.ABOVE_CUTOFF, cutoff)


def linear_sparsity_bound(p: int, epsilon: float, delta: float) -> float:
    """Leading-order rank bound exp(sqrt(2 delta ln p / epsilon)).

    ``epsilon`` is the signal fraction k/p and ``delta`` the aspect
    ratio n/p.
    """
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    return math.exp(math.sqrt(2.0 * delta * math.log(p) / epsilon))


def normal_order_stat_approx(m: int, i: int) -> float:
    """Two-term approximation to the i-th largest of m standard normals.

    Returns sqrt(2 ln(m/i)) - ln ln(m/i) / (2 sqrt(2 ln(m/i))), intended
    for i/m small.  When m/i <= e the second term is undefined or
    meaningless; it is set to zero and a warning is issued.
    """
    if not 1 <= i < m:
        raise ValueError(f"need 1 <= i < m, got i={i}, m={m}")
    ratio = m / i
    lead = math.sqrt(2.0 * math.log(ratio))
    if ratio <= math.e:
        warnings.warn(
            f"m/i = {ratio:.6g} <= e: correction term dropped",
            RuntimeWarning,
            stacklevel=2,
        )
        return lead
    return lead - math.log(math.log(ratio)) / (2.0 * lead)
