"""scikit-learn style wrappers around the two applications.

``fit`` takes demand samples, builds the empirical distribution, solves the
robust model at ``eps = theta * max_kl(q)`` and stores the decision.
``cost``/``transform`` give the out-of-sample cost of that decision for new
demand samples; ``score`` is the negative mean cost so larger is better.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .apps.newsvendor import NewsvendorInstance, realized_cost, solve_newsvendor
from .apps.ufl import UflInstance, build_line_ufl_instance, closed_form_cost, nearest_open_assignment, solve_ufl
from .harness import empirical
from .kl import max_kl

__all__ = ["KLDRNewsvendor", "KLDRFacilityLocation"]


def _check_theta(theta, epsilon):
    if epsilon is None and not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if epsilon is not None and epsilon < 0:
        raise ValueError("epsilon must be nonnegative")


class KLDRNewsvendor(TransformerMixin, BaseEstimator):
    """Order quantity robust to KL-ambiguous demand.

    Parameters
    ----------
    c, c_b, c_h : unit order, back-order and holding costs.
    theta : robustness level as a fraction of ``max_kl`` of the training data.
    epsilon : absolute radius; overrides ``theta`` when given.
    """

    def __init__(self, c=1.0, c_b=2.0, c_h=1.0, theta=0.0, epsilon=None):
        self.c = c
        self.c_b = c_b
        self.c_h = c_h
        self.theta = theta
        self.epsilon = epsilon

    def _demand(self, X):
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("newsvendor demand has a single column")
            X = X[:, 0]
        return X

    def fit(self, X, y=None):
        _check_theta(self.theta, self.epsilon)
        d = self._demand(X)
        q = empirical(d)
        self.max_kl_ = max_kl(q)
        self.epsilon_ = self.theta * self.max_kl_ if self.epsilon is None else float(self.epsilon)
        self.instance_ = NewsvendorInstance(self.c, self.c_b, self.c_h, q, self.epsilon_)
        self.order_quantity_, self.objective_, _ = solve_newsvendor(self.instance_)
        self.n_features_in_ = 1
        return self

    def cost(self, X):
        check_is_fitted(self, "order_quantity_")
        return realized_cost(self.instance_, self.order_quantity_, self._demand(X))

    def transform(self, X):
        return self.cost(X)[:, None]

    def predict(self, X):
        """The fitted order quantity, once per row of ``X``."""
        check_is_fitted(self, "order_quantity_")
        return np.full(self._demand(X).shape[0], self.order_quantity_)

    def score(self, X, y=None):
        return -float(np.mean(self.cost(X)))


class KLDRFacilityLocation(TransformerMixin, BaseEstimator):
    """Facilities to open under KL-ambiguous per-customer demand.

    ``X`` holds one row per demand observation and one column per customer.
    Without ``f`` and ``t`` the twelve-customer line instance is used.
    """

    def __init__(self, f=None, t=None, theta=0.0, epsilon=None):
        self.f = f
        self.t = t
        self.theta = theta
        self.epsilon = epsilon

    def _skeleton(self) -> UflInstance:
        if (self.f is None) != (self.t is None):
            raise ValueError("give both f and t, or neither")
        if self.f is None:
            return build_line_ufl_instance()
        return UflInstance(self.f, self.t)

    def fit(self, X, y=None):
        _check_theta(self.theta, self.epsilon)
        skeleton = self._skeleton()
        X = check_array(X, dtype=float)
        if X.shape[1] != skeleton.m:
            raise ValueError(f"expected {skeleton.m} customer columns, got {X.shape[1]}")
        qs = [empirical(col) for col in X.T]
        self.max_kl_ = np.array([max_kl(q) for q in qs])
        if self.epsilon is None:
            self.epsilons_ = self.theta * self.max_kl_
        else:
            self.epsilons_ = np.full(skeleton.m, float(self.epsilon))
        self.instance_ = skeleton.with_demands(qs, list(self.epsilons_))
        self.open_, self.objective_, _ = solve_ufl(self.instance_)
        self.assignment_ = nearest_open_assignment(self.instance_.t, self.open_)
        self.n_features_in_ = skeleton.m
        return self

    def cost(self, X):
        check_is_fitted(self, "open_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} customer columns, got {X.shape[1]}")
        return closed_form_cost(self.instance_.f, self.instance_.t, X, self.open_)

    def transform(self, X):
        return self.cost(X)[:, None]

    def predict(self, X):
        """Serving facility of each customer, repeated per row of ``X``."""
        check_is_fitted(self, "open_")
        X = check_array(X, dtype=float)
        return np.tile(self.assignment_, (X.shape[0], 1))

    def score(self, X, y=None):
        return -float(np.mean(self.cost(X)))
