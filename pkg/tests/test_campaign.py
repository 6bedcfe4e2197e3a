import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishsim.attacker import AttackerParams
from phishsim.campaign import (
    BreachPath,
    CampaignState,
    InfoState,
    ScenarioConfig,
    plan_campaign,
    run_monte_carlo,
    run_replication,
    step,
)
from phishsim.core import ChoiceCriterion, PayoffMatrix
from phishsim.exceptions import CampaignError, ConfigurationError
from phishsim.rng import RandomStream

from conftest import homogeneous_scenario, make_agent, random_agent

TINY = 1e-9
ORDER = {InfoState.NO_INSIDER: 0, InfoState.INSIDER: 1, InfoState.BREACHED: 2}


def forced_breach_scenario(horizon=5, **kw):
    """Every recipient clicks whatever criterion it draws."""
    prior = np.zeros((4, 1))
    prior[2, 0] = 1.0
    agents = [make_agent((1, 1, 1, 1), prior, rho=(1, 1, 1, 1), target=i == 0) for i in range(2)]
    return ScenarioConfig(agents=agents, attacker=AttackerParams(1.0, [0.0]), horizon=horizon, **kw)


def stepping_stone_only_scenario(horizon=6, seed=0):
    """Non-targets react to impulsive cues; targets only to posterior routine cues."""
    chi = (1.0, 1.0, TINY, TINY)
    nontarget = np.zeros((4, 1))
    nontarget[2, 0] = 1.0
    target_post = np.zeros((4, 1))
    target_post[3, 0] = 1.0
    agents = [make_agent(chi, np.zeros((4, 1)), target_post, rho=(0, 0, 1, 1), target=True) for _ in range(2)]
    agents += [make_agent(chi, nontarget, rho=(0, 0, 1, 1)) for _ in range(4)]
    return ScenarioConfig(agents=agents, attacker=AttackerParams(1.0, [0.1]), horizon=horizon, seed=seed)


class TestScenarioConfig:
    def test_needs_nontarget(self):
        with pytest.raises(ConfigurationError, match="m < n"):
            homogeneous_scenario((1, 1, 1, 1), n=2, m=2)

    def test_needs_target(self):
        with pytest.raises(ConfigurationError):
            homogeneous_scenario((1, 1, 1, 1), n=2, m=0)

    def test_counts(self):
        s = homogeneous_scenario((1, 1, 1, 1), n=5, m=2)
        assert (s.n, s.m, s.A) == (5, 2, 1)


class TestStep:
    def test_zero_click_scenario_only_advances(self):
        s = homogeneous_scenario((1, 1, TINY, TINY), n=4, m=1, horizon=5)
        state = CampaignState()
        rng = RandomStream(0, 0)
        for r in range(1, 6):
            state = step(state, s, rng)
            assert state.round == r
            assert state.info is InfoState.NO_INSIDER
            assert not any(e.clicked for e in state.event_log)

    def test_forced_breach_round_one_direct(self):
        s = forced_breach_scenario(payoffs=PayoffMatrix(c_fn=5.0))
        state = step(CampaignState(), s, RandomStream(1, 0))
        assert state.info is InfoState.BREACHED
        assert state.breach_round == 1
        assert state.breach_path is BreachPath.DIRECT
        assert state.recipient_payoff == -10.0

    def test_nontarget_click_gives_insider_first(self):
        s = stepping_stone_only_scenario()
        plan = plan_campaign(s)
        assert plan.insider_aim is ChoiceCriterion.ROUTINE
        for idx in range(200):
            state = run_replication(s, idx, plan).state
            transitions = [a.info for a in state.attack_log]
            if state.info is InfoState.NO_INSIDER:
                continue
            assert state.insider_acquired_round is not None
            if state.info is InfoState.BREACHED:
                assert state.breach_path is BreachPath.STEPPING_STONE
                assert state.insider_acquired_round < state.breach_round
            assert transitions[0] is InfoState.NO_INSIDER

    def test_breached_state_rejected(self):
        s = forced_breach_scenario()
        state = step(CampaignState(), s, RandomStream(0))
        with pytest.raises(CampaignError):
            step(state, s, RandomStream(0))

    def test_horizon_reached_rejected(self):
        s = homogeneous_scenario((1, 1, 1, 1), n=2, m=1, horizon=1)
        with pytest.raises(CampaignError):
            step(CampaignState(round=1), s, RandomStream(0))

    def test_draw_order(self):
        """One criterion draw per recipient, plus one click draw when it deliberates."""
        s = homogeneous_scenario((1, 1, 1, 1), n=3, m=1, rho=(0.5, 0.5, 1, 1), horizon=1)
        rng = RandomStream(3)
        state = step(CampaignState(), s, rng)
        deliberative = sum(e.criterion in (ChoiceCriterion.DELIBERATIVE, ChoiceCriterion.BEHAVIORAL) for e in state.event_log)
        assert rng.draws == 3 + deliberative


class TestInsiderChoice:
    def test_impulsive_kept_when_routine_is_worse(self):
        """No posterior boost and costly routine cue: the insider bundle stays impulsive."""
        prior = np.zeros((4, 2))
        prior[2, 0] = 0.8
        prior[3, 1] = 0.8
        agents = [make_agent((1, 1, 0.5, 0.5), prior, target=i == 0) for i in range(3)]
        s = ScenarioConfig(agents=agents, attacker=AttackerParams(1.0, [0.0, 5.0]), horizon=3, grid_step=0.05)
        plan = plan_campaign(s)
        assert plan.insider_aim is ChoiceCriterion.IMPULSIVE
        assert plan.insider_values[ChoiceCriterion.IMPULSIVE] >= plan.insider_values[ChoiceCriterion.ROUTINE]

    def test_example_prefers_routine(self, example):
        plan = plan_campaign(example)
        assert plan.insider_aim is ChoiceCriterion.ROUTINE
        assert plan.insider_values[ChoiceCriterion.ROUTINE] > plan.insider_values[ChoiceCriterion.IMPULSIVE]


class TestReplication:
    def test_zero_horizon_censored(self):
        rec = run_replication(homogeneous_scenario((1, 1, 1, 1), n=2, m=1, horizon=0), 0)
        assert not rec.breached and rec.rounds == 0 and rec.breach_round is None
        assert rec.state.event_log == ()

    def test_bit_identical(self, example):
        a = run_replication(example, 17)
        b = run_replication(example, 17)
        assert a == b and a.state == b.state

    def test_forced_breach_every_replication(self):
        res = run_monte_carlo(forced_breach_scenario(), 50)
        assert all(r.breach_round == 1 for r in res.records)
        assert res.aggregates["breach_probability"] == (1.0, 0.0)


class TestMonteCarlo:
    def test_zero_susceptibility_never_breaches(self):
        s = homogeneous_scenario((1, 1, TINY, TINY), n=4, m=1, horizon=5)
        assert run_monte_carlo(s, 500).aggregates["breach_probability"][0] == 0.0

    def test_prefix_stable(self, example):
        small = run_monte_carlo(example, 40)
        big = run_monte_carlo(example, 80)
        assert big.records[:40] == small.records

    def test_serial_parallel_identical(self, example, monkeypatch):
        serial = run_monte_carlo(example, 60, n_jobs=1)
        parallel = run_monte_carlo(example, 60, n_jobs=2)
        assert serial.records == parallel.records
        monkeypatch.setenv("PHISHSIM_THREADS", "2")
        assert run_monte_carlo(example, 60).records == serial.records

    def test_bad_thread_env(self, example, monkeypatch):
        monkeypatch.setenv("PHISHSIM_THREADS", "many")
        with pytest.raises(ConfigurationError):
            run_monte_carlo(example, 2)

    def test_aggregates_recomputable(self, example):
        res = run_monte_carlo(example, 300)
        agg = res.aggregates
        breached = [r for r in res.records if r.breached]
        assert agg["breach_probability"][0] == len(breached) / 300
        stones = sum(r.breach_path is BreachPath.STEPPING_STONE for r in breached)
        assert agg["stepping_stone_fraction"][0] == stones / len(breached)
        assert 0 <= agg["stepping_stone_fraction"][0] <= 1
        assert agg["censored"][0] == 300 - len(breached)

    def test_round_one_closed_form(self):
        """Homogeneous impulsive click chance 0.1: non-target click frequency vs 1 - 0.9**8."""
        s = homogeneous_scenario((0.45, 0.45, 0.1, TINY), n=10, m=2, horizon=1)
        R = 4000
        res = run_monte_carlo(s, R, keep_states=True)
        nontarget = np.mean([any(e.clicked and not e.was_target for e in r.state.event_log) for r in res.records])
        target = np.mean([r.breached for r in res.records])
        p_non, p_tar = 1 - 0.9**8, 1 - 0.9**2
        assert abs(nontarget - p_non) < 4 * math.sqrt(p_non * (1 - p_non) / R)
        assert abs(target - p_tar) < 4 * math.sqrt(p_tar * (1 - p_tar) / R)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5), horizon=st.integers(0, 6))
def test_state_monotonicity_property(seed, n, horizon):
    rng = np.random.default_rng(seed)
    agents = [random_agent(rng, 2, target=i == 0, boost=0.5) for i in range(n)]
    s = ScenarioConfig(agents=agents, attacker=AttackerParams(2.0, [0.1, 0.2]), horizon=horizon, grid_step=0.1)
    plan = plan_campaign(s)
    stream = RandomStream(seed)
    state = CampaignState()
    while state.info is not InfoState.BREACHED and state.round < horizon:
        nxt = step(state, s, stream, plan)
        assert ORDER[nxt.info] >= ORDER[state.info]
        assert len(nxt.event_log) == nxt.round * n
        if nxt.info is InfoState.BREACHED:
            assert (nxt.breach_path is BreachPath.STEPPING_STONE) == (nxt.insider_acquired_round is not None)
        state = nxt
