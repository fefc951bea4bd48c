"""scikit-learn style wrappers around the fractional operators and rate fits.

Paths are passed with time along the rows, so a ``(n_nodes, dim)`` array is a
sampled vector path on a uniform grid of step ``dt``.  These classes compose
with :class:`sklearn.pipeline.Pipeline` and honour ``get_params`` /
``set_params`` and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_path, check_positive, check_times
from .diagnostics import FunctionalSeries, fit_exponential_rate, fit_power_rate
from .errors import DimensionMismatchError, PreconditionError
from .frackernel import caputo_l1_path, rl_integral_path


class _PathTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_path(X)
        check_positive("dt", self.dt)
        self._check_order()
        self.n_features_in_ = X.shape[1]
        return self

    def _validated(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_path(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"fitted on {self.n_features_in_} components, got {X.shape[1]}"
            )
        return X


class CaputoDerivative(_PathTransformer):
    """Caputo derivative (L1 scheme) of each column at every node.

    Node 0 is set by linear extrapolation from nodes 1 and 2.
    """

    def __init__(self, theta=0.5, dt=1e-3):
        self.theta = theta
        self.dt = dt

    def _check_order(self):
        if not (0.0 < self.theta <= 1.0):
            raise PreconditionError(f"theta must lie in (0, 1], got {self.theta}")

    def transform(self, X):
        X = self._validated(X)
        out = caputo_l1_path(X, self.theta, self.dt)
        out[0] = out[1] if X.shape[0] < 3 else 2.0 * out[1] - out[2]
        return out


class RLIntegral(_PathTransformer):
    """Riemann-Liouville integral of order ``theta`` of each column at every node."""

    def __init__(self, theta=0.5, dt=1e-3):
        self.theta = theta
        self.dt = dt

    def _check_order(self):
        check_positive("theta", self.theta)

    def transform(self, X):
        return rl_integral_path(self._validated(X), self.theta, self.dt)


class DecayRateEstimator(RegressorMixin, BaseEstimator):
    """Fits ``y ~ C t^p`` (``model='power'``) or ``y ~ C exp(-r t)``
    (``model='exponential'``); ``model='best'`` keeps whichever has the higher r².

    After ``fit``: ``model_``, ``rate_`` (the exponent ``p`` or the rate ``r``),
    ``r_squared_``, ``intercept_`` and ``report_``.
    """

    def __init__(self, model="best", window=None, envelope=False):
        self.model = model
        self.window = window
        self.envelope = envelope

    def fit(self, X, y):
        t = check_times(X)
        y = check_path(np.asarray(y, dtype=float).reshape(-1), min_nodes=2)[:, 0]
        if y.shape != t.shape:
            raise DimensionMismatchError("X and y hold different numbers of samples")
        if self.model not in ("power", "exponential", "best"):
            raise PreconditionError(f"unknown model {self.model!r}")
        series = FunctionalSeries(t, y, "suboptimality")
        reports = []
        if self.model in ("power", "best"):
            reports.append(fit_power_rate(series, self.window, self.envelope))
        if self.model in ("exponential", "best"):
            reports.append(fit_exponential_rate(series, self.window, self.envelope))
        best = max(reports, key=lambda r: r.r_squared)
        self.report_ = best
        self.model_ = best.model
        self.rate_ = best.exponent_or_rate
        self.r_squared_ = best.r_squared
        self.intercept_ = best.intercept
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        t = check_times(X)
        if self.model_ == "power_law":
            return np.exp(self.intercept_ + self.rate_ * np.log(t))
        return np.exp(self.intercept_ - self.rate_ * t)
