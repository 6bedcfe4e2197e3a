"""scikit-learn style wrappers.

Both estimators are fitted to a population of :class:`AgentProfile` and then
queried with cue bundles, so they compose with ``clone``, ``get_params`` and
parameter sweeps.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bundles, check_norm
from .attacker import (
    AttackerParams,
    as_population,
    grid_oracle_optimize,
    objective,
    optimize_bundle,
)
from .core import InformationRegime, som_matrix, validate_cue_bundle
from .exceptions import ConfigurationError


def _check_feasible(X, norm):
    bad = []
    for i, row in enumerate(X):
        report = validate_cue_bundle(row, norm)
        if not report.ok:
            bad.append(f"X[{i}]: " + "; ".join(report.violations))
    if bad:
        raise ConfigurationError(bad)


class StateOfMindModel(BaseEstimator):
    """Selection probabilities of a fitted population for arbitrary bundles.

    Parameters
    ----------
    regime : {"prior", "posterior"}
        Which susceptibility matrices to use.
    norm : {"l1", "l2", "linf"}
        Norm for the feasibility check on incoming bundles.
    """

    def __init__(self, regime="prior", norm="l2"):
        self.regime = regime
        self.norm = norm

    def fit(self, agents, y=None):
        self.regime_ = InformationRegime.coerce(self.regime)
        self.norm_ = check_norm(self.norm)
        self.population_ = as_population(agents)
        self.n_agents_ = int(self.population_.baseline.shape[0])
        self.n_features_in_ = self.population_.A
        return self

    def _bundles(self, X):
        check_is_fitted(self, "population_")
        X = check_bundles(X, self.n_features_in_)
        _check_feasible(X, self.norm_)
        return X

    def agent_proba(self, X):
        """Per-agent probabilities, shape (n_samples, n_agents, 4)."""
        return som_matrix(self._bundles(X), self.population_, self.regime_)

    def predict_proba(self, X):
        """Population-mean probabilities, shape (n_samples, 4)."""
        return self.agent_proba(X).mean(axis=1)

    def transform(self, X):
        return self.predict_proba(X)

    def predict(self, X):
        """Most likely criterion (1..4) for each bundle."""
        return np.argmax(self.predict_proba(X), axis=1) + 1

    def click_rate(self, X):
        """Expected click-through rate per bundle, averaged over agents."""
        pi = self.agent_proba(X)
        return np.einsum("pnc,nc->pn", pi, self.population_.clickthrough).mean(axis=1)


class CueBundleOptimizer(BaseEstimator):
    """Attacker best response against a fitted population.

    ``method="gradient"`` runs multi-start projected gradient ascent;
    ``method="grid"`` runs the exhaustive lattice search (A <= 4).
    """

    def __init__(
        self,
        value_of_success=1.0,
        effort_base=0.0,
        effort_weights=None,
        norm="l2",
        regime="prior",
        method="gradient",
        starts=16,
        max_iters=500,
        tol=1e-8,
        step=0.01,
    ):
        self.value_of_success = value_of_success
        self.effort_base = effort_base
        self.effort_weights = effort_weights
        self.norm = norm
        self.regime = regime
        self.method = method
        self.starts = starts
        self.max_iters = max_iters
        self.tol = tol
        self.step = step

    def _params(self, A):
        w = np.zeros(A) if self.effort_weights is None else self.effort_weights
        return AttackerParams(self.value_of_success, w, self.effort_base, self.norm)

    def fit(self, agents, y=None):
        pop = as_population(agents)
        self.params_ = self._params(pop.A)
        if self.method == "gradient":
            res = optimize_bundle(pop, self.params_, self.regime, self.starts, self.max_iters, self.tol)
        elif self.method == "grid":
            res = grid_oracle_optimize(pop, self.params_, self.regime, self.step)
        else:
            raise ConfigurationError(f"method must be 'gradient' or 'grid', got {self.method!r}")
        self.result_ = res
        self.best_alpha_ = np.array(res.best_alpha.alpha)
        self.best_value_ = res.best_value
        self.n_features_in_ = pop.A
        return self

    def score(self, agents, y=None):
        """Attacker objective of the fitted bundle on ``agents``."""
        check_is_fitted(self, "best_alpha_")
        return objective(self.best_alpha_, agents, self.params_, self.regime)
