import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from phishsim.attacker import AttackerParams, grid_oracle_optimize, optimize_bundle
from phishsim.core import som_distribution
from phishsim.estimators import CueBundleOptimizer, StateOfMindModel
from phishsim.exceptions import ConfigurationError

from conftest import random_agent


@pytest.fixture
def population(rng):
    return [random_agent(rng, 2, target=i < 2, boost=0.5) for i in range(4)]


class TestStateOfMindModel:
    def test_matches_core(self, population):
        model = StateOfMindModel(regime="posterior").fit(population)
        X = np.array([[0.0, 0.0], [0.3, 0.6], [1.0, 0.0]])
        per_agent = model.agent_proba(X)
        for p, x in enumerate(X):
            for n, agent in enumerate(population):
                np.testing.assert_allclose(per_agent[p, n], som_distribution(x, agent, "posterior").pi, atol=1e-15)
        np.testing.assert_allclose(model.predict_proba(X).sum(axis=1), 1.0, atol=1e-12)
        assert set(model.predict(X)) <= {1, 2, 3, 4}
        assert model.click_rate(X).shape == (3,)

    def test_rejects_infeasible(self, population):
        model = StateOfMindModel().fit(population)
        with pytest.raises(ConfigurationError):
            model.predict_proba([[0.9, 0.9]])

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            StateOfMindModel().predict_proba([[0.1]])

    def test_clone(self):
        model = StateOfMindModel(regime="posterior", norm="l1")
        twin = clone(model)
        assert twin.get_params() == {"regime": "posterior", "norm": "l1"}


class TestCueBundleOptimizer:
    def test_matches_functions(self, population):
        params = AttackerParams(3.0, [0.1, 0.2], 0.05)
        est = CueBundleOptimizer(3.0, 0.05, [0.1, 0.2]).fit(population)
        assert est.best_value_ == optimize_bundle(population, params).best_value
        grid = CueBundleOptimizer(3.0, 0.05, [0.1, 0.2], method="grid", step=0.05).fit(population)
        assert grid.best_value_ == grid_oracle_optimize(population, params, step=0.05).best_value
        assert est.score(population) == pytest.approx(est.best_value_, abs=1e-12)

    def test_bad_method(self, population):
        with pytest.raises(ConfigurationError):
            CueBundleOptimizer(method="newton").fit(population)

    def test_clone_and_set_params(self, population):
        est = CueBundleOptimizer(value_of_success=2.0, starts=4)
        twin = clone(est).set_params(starts=8)
        assert twin.get_params()["starts"] == 8 and est.get_params()["starts"] == 4
        assert twin.fit(population).best_alpha_.shape == (2,)


def test_readme_api_example():
    from phishsim import dominance_report, example_scenario_path, load_scenario, run_monte_carlo

    sc = load_scenario(example_scenario_path())
    frac, hw = run_monte_carlo(sc, 200).aggregates["stepping_stone_fraction"]
    assert 0 <= frac <= 1 and hw >= 0
    assert dominance_report(sc.agents, sc.attacker).to_dict()["routine_dominates_impulsive_posterior"]["holds"]
    opt = CueBundleOptimizer(10, 0.2, [0.05, 0.05, 0.6], regime="posterior").fit(sc.agents)
    proba = StateOfMindModel(regime="posterior").fit(sc.agents).predict_proba([opt.best_alpha_])
    assert proba.shape == (1, 4)
