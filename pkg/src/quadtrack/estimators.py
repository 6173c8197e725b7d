"""scikit-learn style facade over saturation and synthesis.

``fit`` takes target samples (one row per node of a uniform grid on
``[0, tau]``) and synthesizes a control; ``transform`` returns that control on
the same nodes and ``predict`` the closed-loop trajectory.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .saturation import saturation_chain
from .signals import SampledSignal, TimeGrid, relaxation_norm
from .synthesis import TargetCurve, synthesize_tracking_control


class QuadraticTracker(TransformerMixin, BaseEstimator):
    """Tracking-control synthesizer for a fixed quadratic system.

    Parameters mirror :func:`synthesize_tracking_control`; ``seed`` drives the
    certificate search of the saturation chain.
    """

    def __init__(self, system, eps=0.25, tau=1.0, pieces=16, n_osc_start=8, n_osc_max=1024,
                 grid_steps=4000, seed=0):
        self.system = system
        self.eps = eps
        self.tau = tau
        self.pieces = pieces
        self.n_osc_start = n_osc_start
        self.n_osc_max = n_osc_max
        self.grid_steps = grid_steps
        self.seed = seed

    def _grid(self, X):
        return TimeGrid(self.tau, X.shape[0] - 1)

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        if X.shape[1] != self.system.n_x:
            raise ValueError(f"X has {X.shape[1]} columns, system has {self.system.n_x} states")
        self.chain_ = saturation_chain(self.system, seed=self.seed)
        psi = TargetCurve.from_samples(self._grid(X), X)
        self.report_ = synthesize_tracking_control(
            self.system, self.chain_, psi, self.eps, tau=self.tau, pieces=self.pieces,
            n_osc_start=self.n_osc_start, n_osc_max=self.n_osc_max, grid_steps=self.grid_steps,
        )
        self.control_ = self.report_.control
        self.trajectory_ = self.report_.trajectory
        self.n_features_in_ = X.shape[1]
        return self

    def _resample(self, sig, X):
        t = self._grid(X).nodes
        vals = sig.nodes()
        return np.column_stack([np.interp(t, sig.grid.nodes, vals[:, i]) for i in range(vals.shape[1])])

    def transform(self, X):
        """Control values at the nodes implied by ``X``."""
        check_is_fitted(self)
        X = check_array(X, ensure_min_samples=2)
        return self._resample(self.control_, X)

    def predict(self, X):
        """Closed-loop state at the nodes implied by ``X``."""
        check_is_fitted(self)
        X = check_array(X, ensure_min_samples=2)
        return self._resample(self.trajectory_, X)

    def score(self, X, y=None):
        """Negative relaxation-norm distance between the trajectory and ``X``."""
        X = check_array(X, ensure_min_samples=2)
        return -relaxation_norm(SampledSignal(self._grid(X), self.predict(X) - X))
