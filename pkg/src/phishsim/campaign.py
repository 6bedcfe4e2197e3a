"""Multi-round phishing campaign and its Monte Carlo driver.

Each round the attacker broadcasts one bundle to every recipient. Without
insider information the bundle is aimed at the Impulsive criterion under the
prior regime. Once a non-target has clicked, the posterior regime applies to
everyone and the attacker sends whichever of the Impulsive- or Routine-aimed
posterior bundles scores higher on the attacker objective. Any target click
ends the campaign in a breach; target clicks take precedence over non-target
clicks in the same round.

Random draws for replication ``r`` come from ``RandomStream(seed, r)`` and
are consumed in the order round, agent index, purpose (criterion draw, then
click draw when the criterion needs one).
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .attacker import AttackerParams, aim_bundle, objective
from .core import (
    AgentProfile,
    ChoiceCriterion,
    CueBundle,
    InformationRegime,
    PayoffMatrix,
    PopulationArrays,
    SoMDistribution,
    resolve_clickthrough,
    sample_criterion,
    som_matrix,
)
from ._validation import check_norm
from .exceptions import CampaignError, ConfigurationError
from .rng import RandomStream

logger = logging.getLogger(__name__)

THREADS_ENV = "PHISHSIM_THREADS"
Z95 = 1.959963984540054


class InfoState(str, enum.Enum):
    NO_INSIDER = "no_insider"
    INSIDER = "insider"
    BREACHED = "breached"


class BreachPath(str, enum.Enum):
    DIRECT = "direct"
    STEPPING_STONE = "stepping_stone"


class Event(NamedTuple):
    round: int
    agent: int
    criterion: ChoiceCriterion
    clicked: bool
    was_target: bool


class Attack(NamedTuple):
    """The bundle the attacker broadcast in one round."""

    round: int
    info: InfoState
    aim: ChoiceCriterion
    alpha: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully materialized experiment description."""

    agents: tuple
    attacker: AttackerParams
    horizon: int = 100
    payoffs: PayoffMatrix = field(default_factory=PayoffMatrix)
    norm: str = "l2"
    seed: int = 0
    grid_step: float = 0.01
    cue_labels: tuple | None = None

    def __post_init__(self):
        agents = tuple(self.agents)
        errors = []
        if not all(isinstance(a, AgentProfile) for a in agents):
            raise ConfigurationError("agents must be AgentProfile instances")
        if len(agents) < 2:
            errors.append("n must be >= 2 (need 1 <= m < n)")
        n_targets = sum(a.is_target for a in agents)
        if not 1 <= n_targets < max(len(agents), 1):
            errors.append(f"need 1 <= m < n, got m={n_targets}, n={len(agents)}")
        shapes = {a.susceptibility_prior.shape for a in agents}
        if len(shapes) > 1:
            errors.append(f"agents disagree on susceptibility shape: {sorted(shapes)}")
        if agents and self.attacker.A != agents[0].A:
            errors.append(f"attacker.effort_weights has length {self.attacker.A}, expected A={agents[0].A}")
        if int(self.horizon) < 0:
            errors.append("horizon must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            errors.append("seed must be a 64-bit unsigned integer")
        if not 0 < float(self.grid_step) <= 0.5:
            errors.append("grid_step must be in (0, 0.5]")
        if self.cue_labels is not None and agents and len(self.cue_labels) != agents[0].A:
            errors.append(f"cue_labels must have {agents[0].A} entries")
        if errors:
            raise ConfigurationError(errors)
        norm = check_norm(self.norm)
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "norm", norm)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "grid_step", float(self.grid_step))
        if self.cue_labels is not None:
            object.__setattr__(self, "cue_labels", tuple(str(s) for s in self.cue_labels))
        if self.attacker.norm != norm:
            object.__setattr__(self, "attacker", self.attacker.replace(norm=norm))

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return sum(a.is_target for a in self.agents)

    @property
    def A(self) -> int:
        return self.agents[0].A

    def with_agents(self, agents) -> "ScenarioConfig":
        return replace(self, agents=tuple(agents))


@dataclass(frozen=True)
class CampaignState:
    round: int = 0
    info: InfoState = InfoState.NO_INSIDER
    insider_acquired_round: int | None = None
    breach_round: int | None = None
    breach_path: BreachPath | None = None
    event_log: tuple = ()
    attack_log: tuple = ()
    recipient_payoff: float = 0.0


@dataclass(frozen=True, eq=False)
class CampaignPlan:
    """Bundles the attacker uses in each information state.

    The attacker re-optimizes every round, but with full information and a
    fixed population the optimum only depends on the information state, so
    it is computed once.
    """

    no_insider_alpha: CueBundle
    insider_alpha: CueBundle
    insider_aim: ChoiceCriterion
    insider_values: dict  # aim -> attacker objective under the posterior regime
    no_insider_dists: tuple
    insider_dists: tuple


def plan_campaign(scenario: ScenarioConfig) -> CampaignPlan:
    pop = PopulationArrays.from_agents(scenario.agents)
    prior, post = InformationRegime.PRIOR, InformationRegime.POSTERIOR
    I, R = ChoiceCriterion.IMPULSIVE, ChoiceCriterion.ROUTINE
    step = scenario.grid_step

    first, _ = aim_bundle(I, pop, prior, scenario.norm, step)
    candidates = {c: aim_bundle(c, pop, post, scenario.norm, step)[0] for c in (I, R)}
    values = {c: objective(b.alpha, pop, scenario.attacker, post) for c, b in candidates.items()}
    aim = R if values[R] > values[I] else I

    def dists(bundle, regime):
        pi = som_matrix(bundle.alpha, pop, regime)
        return tuple(SoMDistribution(row / row.sum()) for row in pi)

    return CampaignPlan(
        no_insider_alpha=first,
        insider_alpha=candidates[aim],
        insider_aim=aim,
        insider_values=values,
        no_insider_dists=dists(first, prior),
        insider_dists=dists(candidates[aim], post),
    )


def step(state: CampaignState, scenario: ScenarioConfig, rng, plan: CampaignPlan | None = None) -> CampaignState:
    """Advance the campaign by one broadcast round."""
    if state.info is InfoState.BREACHED:
        raise CampaignError("cannot step a breached campaign")
    if state.round >= scenario.horizon:
        raise CampaignError(f"round {state.round} already at horizon {scenario.horizon}")
    if plan is None:
        plan = plan_campaign(scenario)

    rnd = state.round + 1
    if state.info is InfoState.NO_INSIDER:
        dists, alpha, aim = plan.no_insider_dists, plan.no_insider_alpha, ChoiceCriterion.IMPULSIVE
    else:
        dists, alpha, aim = plan.insider_dists, plan.insider_alpha, plan.insider_aim

    payoffs = scenario.payoffs
    events = []
    payoff = 0.0
    target_click = nontarget_click = False
    for i, agent in enumerate(scenario.agents):
        c = sample_criterion(dists[i], rng)
        clicked = resolve_clickthrough(c, agent, rng)
        events.append(Event(rnd, i, c, clicked, agent.is_target))
        payoff += payoffs.malicious_email_payoff(clicked)
        if clicked:
            if agent.is_target:
                target_click = True
            else:
                nontarget_click = True

    changes = dict(
        round=rnd,
        event_log=state.event_log + tuple(events),
        attack_log=state.attack_log + (Attack(rnd, state.info, aim, tuple(alpha.alpha.tolist())),),
        recipient_payoff=state.recipient_payoff + payoff,
    )
    if target_click:
        stepping = state.insider_acquired_round is not None
        changes.update(
            info=InfoState.BREACHED,
            breach_round=rnd,
            breach_path=BreachPath.STEPPING_STONE if stepping else BreachPath.DIRECT,
        )
    elif nontarget_click and state.info is InfoState.NO_INSIDER:
        changes.update(info=InfoState.INSIDER, insider_acquired_round=rnd)
    return replace(state, **changes)


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    breached: bool
    breach_round: int | None
    breach_path: BreachPath | None
    rounds: int
    recipient_payoff: float
    state: CampaignState | None = field(default=None, compare=False, repr=False)


def run_replication(
    scenario: ScenarioConfig, replication_index: int, plan: CampaignPlan | None = None, keep_state: bool = True
) -> ReplicationRecord:
    """Run one campaign until breach or horizon; censored runs are not breaches."""
    if plan is None:
        plan = plan_campaign(scenario)
    rng = RandomStream(scenario.seed, replication_index)
    state = CampaignState()
    while state.info is not InfoState.BREACHED and state.round < scenario.horizon:
        state = step(state, scenario, rng, plan)
    return ReplicationRecord(
        replication=int(replication_index),
        breached=state.info is InfoState.BREACHED,
        breach_round=state.breach_round,
        breach_path=state.breach_path,
        rounds=state.round,
        recipient_payoff=state.recipient_payoff,
        state=state if keep_state else None,
    )


def _run_chunk(scenario, plan, start, stop, keep_states):
    return [run_replication(scenario, r, plan, keep_states) for r in range(start, stop)]


def _proportion(k: int, n: int):
    if n == 0:
        return 0.0, 0.0
    p = k / n
    return p, Z95 * math.sqrt(p * (1 - p) / n)


@dataclass(frozen=True)
class SimulationResult:
    records: tuple

    @property
    def replications(self) -> int:
        return len(self.records)

    @property
    def aggregates(self) -> dict:
        """metric -> (value, 95% half-width), recomputed from the records.

        Half-widths use the normal approximation. The stepping-stone fraction
        is 0 when there are no breaches; mean rounds-to-breach is NaN then.
        """
        R = len(self.records)
        breaches = [r for r in self.records if r.breached]
        B = len(breaches)
        stones = sum(r.breach_path is BreachPath.STEPPING_STONE for r in breaches)
        out = {
            "replications": (float(R), 0.0),
            "breaches": (float(B), 0.0),
            "censored": (float(R - B), 0.0),
            "breach_probability": _proportion(B, R),
            "stepping_stone_fraction": _proportion(stones, B),
        }
        if B:
            rounds = np.array([r.breach_round for r in breaches], dtype=float)
            sd = float(rounds.std(ddof=1)) if B > 1 else 0.0
            out["mean_rounds_to_breach"] = (float(rounds.mean()), Z95 * sd / math.sqrt(B))
        else:
            out["mean_rounds_to_breach"] = (float("nan"), float("nan"))
        if R:
            pay = np.array([r.recipient_payoff for r in self.records])
            sd = float(pay.std(ddof=1)) if R > 1 else 0.0
            out["mean_recipient_payoff"] = (float(pay.mean()), Z95 * sd / math.sqrt(R))
        else:
            out["mean_recipient_payoff"] = (float("nan"), float("nan"))
        return out

    def breach_indicator(self) -> np.ndarray:
        return np.array([r.breached for r in self.records], dtype=float)


def resolve_jobs(n_jobs: int | None) -> int:
    if n_jobs is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            n_jobs = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, int(n_jobs))


def run_monte_carlo(
    scenario: ScenarioConfig,
    replications: int,
    n_jobs: int | None = None,
    keep_states: bool = False,
    plan: CampaignPlan | None = None,
) -> SimulationResult:
    """Independent replications ``0..replications-1``.

    Records come back in index order whatever the worker count, so results
    do not depend on scheduling. ``n_jobs`` defaults to ``PHISHSIM_THREADS``
    or 1.
    """
    if replications < 0:
        raise ConfigurationError("replications must be >= 0")
    if plan is None:
        plan = plan_campaign(scenario)
    jobs = resolve_jobs(n_jobs)
    if jobs == 1 or replications < 2:
        return SimulationResult(tuple(_run_chunk(scenario, plan, 0, replications, keep_states)))

    chunk = max(1, math.ceil(replications / (jobs * 4)))
    bounds = [(s, min(s + chunk, replications)) for s in range(0, replications, chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_chunk, scenario, plan, s, e, keep_states) for s, e in bounds]
        records = [rec for fut in futures for rec in fut.result()]
    return SimulationResult(tuple(records))
