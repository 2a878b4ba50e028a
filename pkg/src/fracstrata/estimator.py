"""Estimator-style facade over the solvers.

Nothing is learned from data here; ``fit`` only validates the constants so the
object plugs into ``get_params``/``set_params``/``clone`` and parameter grids.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .laplace import QuadSpec
from .solvers import SOLVER_QUAD, solve_line
from .transforms import PROBLEMS, Forcing, StratumParams


class TemperatureField(BaseEstimator):
    """Temperature u(h, z, t) of one stratum problem.

    ``predict`` takes rows ``(x_or_r, z, t)``.  Rows sharing a spatial point are
    evaluated together, which is much cheaper than one call per row.
    """

    def __init__(self, problem="T1", beta=0.25, a=1.0, lam=1.0, alpha=1.0, gamma=1.0, amp=1.0,
                 nu=0.5, forcing="one", rel_tol=SOLVER_QUAD.rel_tol):
        self.problem = problem
        self.beta = beta
        self.a = a
        self.lam = lam
        self.alpha = alpha
        self.gamma = gamma
        self.amp = amp
        self.nu = nu
        self.forcing = forcing
        self.rel_tol = rel_tol

    def fit(self, X=None, y=None):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        self.params_ = StratumParams(a=self.a, lam=self.lam, alpha=self.alpha, gamma=self.gamma,
                                     amp_A=self.amp, nu=self.nu, beta=self.beta)
        self.params_.check_tau_envelope()
        self.forcing_ = self.forcing if isinstance(self.forcing, Forcing) else Forcing.parse(self.forcing)
        self.qspec_ = QuadSpec(self.rel_tol, SOLVER_QUAD.abs_tol, SOLVER_QUAD.max_subdivisions)
        return self

    def predict_with_error(self, X):
        check_is_fitted(self, "params_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.ndim != 2 or X.shape[1] != 3:
            raise ValueError(f"expected rows (x_or_r, z, t), got shape {X.shape}")
        if np.any(X < 0) or not np.all(np.isfinite(X)):
            raise ValueError("coordinates must be finite and non-negative")
        u = np.empty(len(X))
        err = np.empty(len(X))
        keys, inverse = np.unique(X[:, :2], axis=0, return_inverse=True)
        for k, (h, z) in enumerate(keys):
            rows = np.flatnonzero(inverse.ravel() == k)
            u[rows], err[rows] = solve_line(self.problem, h, z, X[rows, 2], self.params_, self.forcing_,
                                            self.qspec_)
        return u, err

    def predict(self, X):
        return self.predict_with_error(X)[0]
