"""scikit-learn style facade over the scenario runners.

The estimator maps temperature ratios ``u = T'/T`` to the scenario's main
observable in SI units (force in N, or torque about z in N m).  ``fit``
validates the parameters and builds the body; nothing is learned from
data, so ``y`` is ignored.

Examples
--------
>>> from qvac.estimators import VacuumForceRegressor
>>> est = VacuumForceRegressor("plate").fit()
>>> est.predict([[1.0], [2.0]]).shape
(2,)
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import scenarios as sc
from .quadrature import QuadratureSpec


class VacuumForceRegressor(RegressorMixin, BaseEstimator):
    """Nonequilibrium vacuum force or torque as a function of ``T'/T``.

    Parameters
    ----------
    scenario : str
        Any name in ``scenarios.SCENARIO_SCHEMA``.
    parameters : dict, optional
        Overrides of the scenario's default parameters (SI units).
    method : {"auto", "exact", "asymptotic"}
        Spectral evaluation route.
    rel_tol : float
        Relative tolerance of every integral.
    seed : int
        Seed of any Monte Carlo estimate.
    threads : int
        Worker threads; results do not depend on it.

    Attributes
    ----------
    params_ : dict
        Fully resolved parameters.
    body_ : TwoPartBody or None
        The body (None for the first-order torque toy).
    observable_ : str
        ``"force"``, ``"torque"`` or ``"first-order"``.
    error_, converged_ : ndarray
        Error estimates and convergence flags of the last ``predict``.
    """

    def __init__(self, scenario: str = "needle", parameters: Optional[dict] = None, method: str = "auto",
                 rel_tol: float = 1e-8, seed: int = 12345, threads: int = 1):
        self.scenario = scenario
        self.parameters = parameters
        self.method = method
        self.rel_tol = rel_tol
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        if self.scenario not in sc.SCENARIO_SCHEMA:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.method not in ("auto", "exact", "asymptotic"):
            raise ValueError(f"unknown method {self.method!r}")
        p = sc.defaults(self.scenario)
        schema = sc.schema(self.scenario)
        for k, v in (self.parameters or {}).items():
            if k not in schema:
                raise ValueError(f"unknown parameter {k!r} for scenario {self.scenario!r}")
            p[k] = v
        self.params_ = p
        self.quad_ = QuadratureSpec(rel_tol=self.rel_tol, seed=self.seed, threads=self.threads)
        self.observable_ = sc._observable(self.scenario)
        self.body_ = None if self.observable_ == "first-order" else sc.build_body(self.scenario, p)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Observable in SI units for each temperature ratio in ``X``."""
        check_is_fitted(self, "params_")
        X = check_array(X, ensure_2d=False, dtype=float)
        u = X.reshape(-1) if X.ndim == 1 or X.shape[1] == 1 else None
        if u is None:
            raise ValueError("X must hold a single feature, the temperature ratio u")
        if np.any(u <= 0):
            raise ValueError("temperature ratios must be positive")
        out = sc.run_curve(self.scenario, self.params_, {"variable": "u", "grid": list(u)}, self.quad_, self.method)
        rows = np.array(out.rows, dtype=float)
        self.error_ = rows[:, 3]
        self.converged_ = rows[:, 4].astype(bool)
        self.reduced_ = rows[:, 1]
        return rows[:, 2]

    def _more_tags(self):
        return {"requires_y": False, "poor_score": True}
