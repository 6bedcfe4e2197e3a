import copy
import csv

import numpy as np
import pytest
import yaml

from phishsim.campaign import SimulationResult, run_monte_carlo
from phishsim.exceptions import ConfigurationError
from phishsim.output import fmt, write_results
from phishsim.scenario import dump_scenario, load_scenario, parse_scenario, scenario_to_dict

from test_campaign import forced_breach_scenario


def minimal_doc():
    agent = {"susceptibility_prior": [[0.1], [0.2], [0.3], [0.4]], "baseline": [1, 1, 1, 1], "clickthrough": [0.01, 0.1, 1, 1]}
    return {
        "n": 2,
        "m": 1,
        "A": 1,
        "attacker": {"value_of_success": 1.0, "effort_weights": [0.1]},
        "agents": [dict(agent, is_target=True), dict(agent)],
    }


def errors_for(doc):
    with pytest.raises(ConfigurationError) as err:
        parse_scenario(doc)
    return err.value.errors


def test_minimal_document_defaults(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(minimal_doc()))
    s = load_scenario(path)
    assert (s.n, s.m, s.A) == (2, 1, 1)
    assert s.norm == "l2" and s.seed == 0 and s.horizon == 100
    assert s.attacker.effort_base == 0.0
    assert (s.payoffs.b_tn, s.payoffs.b_tp, s.payoffs.c_fn, s.payoffs.c_fp) == (1, 1, 1, 1)
    np.testing.assert_array_equal(s.agents[1].susceptibility_posterior, s.agents[1].susceptibility_prior)


def test_json_carrier(tmp_path):
    import json

    path = tmp_path / "s.json"
    path.write_text(json.dumps(minimal_doc()))
    assert load_scenario(path).n == 2


def test_m_equals_n():
    doc = minimal_doc()
    doc["m"] = 2
    assert any("1 <= m < n" in e for e in errors_for(doc))


def test_rho3_fixed():
    doc = minimal_doc()
    doc["agents"][0]["clickthrough"] = [0.01, 0.1, 0.9, 1]
    assert "agents[0].clickthrough[2] must equal 1" in errors_for(doc)


def test_unknown_field():
    doc = minimal_doc()
    doc["colour"] = "blue"
    doc["agents"][1]["mood"] = 3
    errs = errors_for(doc)
    assert "colour: unknown field" in errs
    assert "agents[1].mood: unknown field" in errs


def test_parse_error_has_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("n: 2\nm: [1,\nA: 1\n")
    with pytest.raises(ConfigurationError, match=r"line \d+"):
        load_scenario(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_scenario(tmp_path / "absent.yaml")


@pytest.mark.parametrize(
    "mutate,message",
    [
        (lambda d: d["agents"][1].update(baseline=[1, 0, 1, 1]), "agents[1].baseline[1] must be > 0"),
        (lambda d: d["agents"][0].update(susceptibility_prior=[[0.1], [1.2], [0.3], [0.4]]), "agents[0].susceptibility_prior[1][0] must be in [0, 1]"),
        (lambda d: d["agents"][0].update(susceptibility_posterior=[[0.1], [0.2], [0.3], [0.1]]), "agents[0].susceptibility_posterior[3][0] must be >= susceptibility_prior[3][0]"),
        (lambda d: d["agents"][0].update(clickthrough=[1.5, 0.1, 1, 1]), "agents[0].clickthrough[0] must be in [0, 1]"),
        (lambda d: d["agents"][0].update(clickthrough=[0.1, 0.1, 1, 0.5]), "agents[0].clickthrough[3] must equal 1"),
        (lambda d: d["agents"][0].update(susceptibility_prior=[[0.1, 0], [0.2, 0], [0.3, 0], [0.4, 0]]), "agents[0].susceptibility_prior must have A=1 columns"),
        (lambda d: d["agents"][0].update(is_target="yes"), "agents[0].is_target must be true or false"),
        (lambda d: d.update(m=0), "1 <= m < n"),
        (lambda d: d.update(n=3), "expected n=3 agents"),
        (lambda d: d.update(norm="l3"), "norm must be one of"),
        (lambda d: d.update(horizon=0), "horizon must be an integer >= 1"),
        (lambda d: d.update(seed=-4), "seed must be an integer"),
        (lambda d: d["attacker"].update(effort_weights=[-1.0]), "attacker.effort_weights[0] must be >= 0"),
        (lambda d: d["attacker"].update(effort_weights=[0.1, 0.2]), "attacker.effort_weights must have A=1 entries"),
        (lambda d: d.update(cue_labels=["a", "b"]), "cue_labels must have A=1 entries"),
    ],
)
def test_validation_totality(mutate, message):
    doc = copy.deepcopy(minimal_doc())
    mutate(doc)
    errs = errors_for(doc)
    assert any(message in e for e in errs), errs


def test_all_errors_reported_together():
    doc = minimal_doc()
    doc["agents"][0]["baseline"] = [0, 1, 1, 1]
    doc["agents"][1]["clickthrough"] = [0, 0, 0, 1]
    errs = errors_for(doc)
    assert any(e.startswith("agents[0].") for e in errs)
    assert any(e.startswith("agents[1].") for e in errs)


def test_round_trip(example, tmp_path):
    again = load_scenario(dump_scenario(example, tmp_path / "dump.yaml"))
    assert scenario_to_dict(again) == scenario_to_dict(example)
    for a, b in zip(example.agents, again.agents):
        assert np.array_equal(a.susceptibility_prior, b.susceptibility_prior)
        assert np.array_equal(a.baseline, b.baseline)


def test_generator_deterministic(example):
    from phishsim.scenario import example_scenario_path

    again = load_scenario(example_scenario_path())
    assert scenario_to_dict(again) == scenario_to_dict(example)
    assert [a.is_target for a in example.agents] == [True] * 2 + [False] * 10


def test_generator_seed_changes_agents(tmp_path):
    from phishsim.scenario import example_scenario_path

    doc = yaml.safe_load(example_scenario_path().read_text())
    doc["agents"]["generation_seed"] = 8
    other = parse_scenario(doc)
    doc["agents"]["generation_seed"] = 7
    same = parse_scenario(doc)
    assert not np.array_equal(other.agents[0].baseline, same.agents[0].baseline)


class TestWriteResults:
    HEADER = "replication,breached,breach_round,breach_path,rounds,recipient_payoff"

    def test_empty_result_header_only(self, tmp_path):
        reps, aggs = write_results(SimulationResult(()), tmp_path)
        assert reps.read_text().strip() == self.HEADER
        assert aggs.read_text().splitlines()[0] == "metric,value,ci_halfwidth"

    def test_byte_identical(self, example, tmp_path):
        res = run_monte_carlo(example, 30)
        first = [p.read_bytes() for p in write_results(res, tmp_path / "a")]
        second = [p.read_bytes() for p in write_results(res, tmp_path / "b")]
        assert first == second

    def test_forced_breach_direct(self, tmp_path):
        reps, _ = write_results(run_monte_carlo(forced_breach_scenario(), 3), tmp_path)
        rows = list(csv.DictReader(reps.open()))
        assert [r["breach_path"] for r in rows] == ["direct"] * 3
        assert all(r["breach_round"] == "1" for r in rows)

    def test_constant_column_count_and_exact_floats(self, example, tmp_path):
        res = run_monte_carlo(example, 20)
        reps, aggs = write_results(res, tmp_path)
        for path in (reps, aggs):
            rows = list(csv.reader(path.open()))
            assert len({len(r) for r in rows}) == 1
        payoffs = [float(r["recipient_payoff"]) for r in csv.DictReader(reps.open())]
        assert payoffs == [r.recipient_payoff for r in res.records]

    def test_fmt(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert float(fmt(1 / 3)) == 1 / 3
        assert fmt(True) == "1" and fmt(None) == ""
