"""scikit-learn style front end to the allocation solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .allocation import PowerBudget, Protocol, _Problem, solve_mu
from .fading import StateSet


class RelayPowerAllocator(BaseEstimator):
    """Learn the relay power multiplier from a sample of channel states.

    ``X`` holds link amplitudes ``(|h31|, |h21|, |h32|)`` row by row; optional
    sample weights act as state probabilities. ``fit`` solves for the
    multiplier that spends ``p2_bar`` on average over ``X``, ``predict`` maps
    new states to relay power and ``score`` returns the average rate.

    Parameters
    ----------
    protocol : {"df", "cf", "hybrid"}, default="hybrid"
    p1_bar : float, default=1.0
        Source power (noise normalised).
    p2_bar : float, default=1.0
        Average relay power budget.
    rel_tol : float, default=1e-4
        Relative tolerance on the spent budget.
    """

    def __init__(self, protocol="hybrid", p1_bar=1.0, p2_bar=1.0, rel_tol=1e-4):
        self.protocol = protocol
        self.p1_bar = p1_bar
        self.p2_bar = p2_bar
        self.rel_tol = rel_tol

    def _validate(self, X, reset):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"X must have 3 columns (a31, a21, a32), got {X.shape[1]}")
        if np.any(X < 0):
            raise ValueError("channel amplitudes must be nonnegative")
        if reset:
            self.n_features_in_ = 3
        return X

    def _states(self, X, sample_weight):
        if sample_weight is None:
            return StateSet(X, np.full(len(X), 1.0 / len(X)), iid=True)
        w = check_array(sample_weight, ensure_2d=False, dtype=np.float64)
        if w.shape != (len(X),) or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("sample_weight must be nonnegative, one per row, with a positive sum")
        return StateSet(X, w / w.sum())

    def fit(self, X, y=None, sample_weight=None):
        X = self._validate(X, reset=True)
        budget = PowerBudget(float(self.p1_bar), float(self.p2_bar))
        self.policy_ = solve_mu(Protocol(self.protocol), budget, states=self._states(X, sample_weight),
                                rel_tol=self.rel_tol)
        self.mu_star_ = self.policy_.mu_star
        self.saturated_ = self.policy_.saturated
        self.budget_slack_ = self.policy_.budget_slack
        self.achieved_power_ = self.policy_.achieved_power.value
        return self

    def predict(self, X):
        """Relay power for each row of ``X``."""
        check_is_fitted(self, "policy_")
        X = self._validate(X, reset=False)
        p2, _ = self.policy_.allocate(X[:, 0], X[:, 1], X[:, 2])
        return p2

    def transform(self, X):
        """Columns ``(s1, t, s2)``: the operating point each state is driven to."""
        check_is_fitted(self, "policy_")
        X = self._validate(X, reset=False)
        prob = _Problem(StateSet(X, np.full(len(X), 1.0 / len(X))), self.policy_.protocol, float(self.p1_bar))
        return np.column_stack([prob.s1, prob.t, prob.s2_at(self.mu_star_)])

    def score(self, X, y=None, sample_weight=None):
        """Average rate in bits per channel use over ``X``."""
        check_is_fitted(self, "policy_")
        X = self._validate(X, reset=False)
        states = self._states(X, sample_weight)
        prob = _Problem(states, self.policy_.protocol, float(self.p1_bar))
        return states.expect(prob.rate_terms(prob.s2_at(self.mu_star_)))[0]
