"""Scikit-learn compatible wrappers around the path engines.

Each estimator runs one selection path on fit and exposes the trace,
the entry order, and the coefficient vector at the end of the path, so
the engines compose with pipelines, grid search, and the rest of the
scikit-learn ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .paths import Method, forward_stepwise_path, lars_path, lasso_lars_path

__all__ = ["LeastAngleSelector", "LassoSelector", "ForwardStepwiseSelector"]


def _validate_fit_inputs(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ValueError(f"X must be 2-d, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(
            f"X has {X.shape[0]} samples but y has {y.shape[0]}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    return X, y


class _PathSelector(BaseEstimator, RegressorMixin):
    """Base class: fit() runs the engine, predict() uses the final fit."""

    _engine = None
    method: Method = None

    def __init__(self, max_steps=None):
        self.max_steps = max_steps

    def fit(self, X, y):
        X, y = _validate_fit_inputs(X, y)
        self.trace_ = type(self)._engine(X, y, max_steps=self.max_steps)
        self.coef_ = np.asarray(self.trace_.final_coefficients)
        self.entry_order_ = self.trace_.enter_variables()
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise RuntimeError("estimator is not fitted; call fit(X, y) first")
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef_


class LeastAngleSelector(_PathSelector):
    """Least angle regression path as an estimator."""

    _engine = staticmethod(lars_path)
    method = Method.LEAST_ANGLE


class LassoSelector(_PathSelector):
    """Lasso homotopy path (with drop events) as an estimator."""

    _engine = staticmethod(lasso_lars_path)
    method = Method.LASSO


class ForwardStepwiseSelector(_PathSelector):
    """Greedy forward stepwise selection as an estimator."""

    _engine = staticmethod(forward_stepwise_path)
    method = Method.FORWARD_STEPWISE
