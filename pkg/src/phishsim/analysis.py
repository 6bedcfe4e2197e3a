"""Closed-form results and defensive-policy experiments."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .campaign import Z95, ScenarioConfig, plan_campaign, run_monte_carlo
from .core import (
    CRITERIA,
    AgentProfile,
    ChoiceCriterion,
    CueBundle,
    InformationRegime,
    PopulationArrays,
    SoMDistribution,
    resolve_clickthrough,
    sample_criterion,
    som_matrix,
)
from .exceptions import ConfigurationError, DomainError
from .rng import RandomStream

D, B, I, R = CRITERIA


def first_click_probabilities(pi3_max: float, n: int, m: int):
    """Chance that at least one non-target / at least one target clicks.

    Each of ``n`` recipients clicks independently with probability
    ``pi3_max``; ``m`` of them are targets.
    """
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < n, got m={m}, n={n}")
    if not 0 <= pi3_max <= 1:
        raise DomainError("pi3_max must be in [0, 1]")
    miss = 1.0 - pi3_max
    return 1.0 - miss ** (n - m), 1.0 - miss**m


def disjunctive_accumulation(p: float, k: int) -> float:
    """Probability that at least one of ``k`` independent emails succeeds."""
    if not 0 <= p <= 1:
        raise DomainError("p must be in [0, 1]")
    if k < 0:
        raise DomainError("k must be >= 0")
    return 1.0 - (1.0 - p) ** k


class InterventionKind(str, enum.Enum):
    REDUCE_RHO1 = "reduce_rho1"
    REDUCE_RHO2 = "reduce_rho2"
    RAISE_CHI1 = "raise_chi1"
    SCALE_CHI34 = "scale_chi34"
    SCALE_SUSCEPTIBILITY34 = "scale_susceptibility34"


_ALIASES = {
    "reducerho1": InterventionKind.REDUCE_RHO1,
    "reducerho2": InterventionKind.REDUCE_RHO2,
    "raisechi1": InterventionKind.RAISE_CHI1,
    "scalechi34": InterventionKind.SCALE_CHI34,
    "scalesusceptibility34": InterventionKind.SCALE_SUSCEPTIBILITY34,
}


@dataclass(frozen=True)
class TrainingIntervention:
    """Multiplicative change to recipient profiles.

    Click-rate reductions accept factors in [0, 1], baseline and
    susceptibility scalings (0, 1], and the deliberative-baseline raise any
    factor >= 1.
    """

    kind: InterventionKind
    magnitude: float
    label: str | None = None

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, InterventionKind):
            key = str(kind).lower().replace("_", "")
            if key not in _ALIASES:
                raise ConfigurationError(f"unknown intervention kind {self.kind!r}")
            kind = _ALIASES[key]
        f = float(self.magnitude)
        if not math.isfinite(f):
            raise ConfigurationError("intervention magnitude must be finite")
        if kind in (InterventionKind.REDUCE_RHO1, InterventionKind.REDUCE_RHO2):
            ok = 0.0 <= f <= 1.0
        elif kind is InterventionKind.RAISE_CHI1:
            ok = f >= 1.0
        else:
            ok = 0.0 < f <= 1.0
        if not ok:
            raise ConfigurationError(f"magnitude {f} out of range for {kind.value}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "magnitude", f)

    @property
    def name(self) -> str:
        return self.label or f"{self.kind.value}({self.magnitude:g})"


def _train_agent(agent: AgentProfile, iv: TrainingIntervention) -> AgentProfile:
    f, kind = iv.magnitude, iv.kind
    rho = agent.clickthrough.copy()
    chi = agent.baseline.copy()
    prior = agent.susceptibility_prior.copy()
    post = agent.susceptibility_posterior.copy()
    if kind is InterventionKind.REDUCE_RHO1:
        rho[D.index] *= f
    elif kind is InterventionKind.REDUCE_RHO2:
        rho[B.index] *= f
    elif kind is InterventionKind.RAISE_CHI1:
        chi[D.index] *= f
    elif kind is InterventionKind.SCALE_CHI34:
        chi[[I.index, R.index]] *= f
    else:
        prior[[I.index, R.index]] *= f
        post[[I.index, R.index]] *= f
    return AgentProfile(
        susceptibility_prior=prior,
        susceptibility_posterior=post,
        baseline=chi,
        clickthrough=rho,
        is_target=agent.is_target,
    )


def apply_training(population: Sequence[AgentProfile], intervention: TrainingIntervention) -> list:
    """Transformed copy of the population; rejects profiles that break invariants."""
    out, errors = [], []
    for i, agent in enumerate(population):
        try:
            out.append(_train_agent(agent, intervention))
        except ConfigurationError as exc:
            errors.extend(f"agents[{i}].{msg}" for msg in exc.errors)
    if errors:
        raise ConfigurationError([f"{intervention.name} rejected:"] + errors)
    return out


class CriterionShare(NamedTuple):
    criterion: ChoiceCriterion
    mean_pi: float
    click_contribution: float


@dataclass(frozen=True)
class TestEmailReport:
    click_rate: float
    per_criterion: tuple
    alpha: tuple
    regime: InformationRegime
    mode: str
    events: int
    single_bundle_caveat: bool = True

    __test__ = False  # not a pytest class

    @property
    def standard_error(self) -> float:
        if self.mode == "analytic" or not self.events:
            return 0.0
        p = self.click_rate
        return math.sqrt(p * (1 - p) / self.events)


def evaluate_test_email(
    population,
    alpha,
    regime=InformationRegime.PRIOR,
    mode: str = "analytic",
    replications: int = 10_000,
    seed: int = 0,
) -> TestEmailReport:
    """Click rate of one blinded test email and its per-criterion split.

    ``analytic`` averages ``sum_c pi_c * rho_c`` over recipients exactly.
    ``sampled`` simulates ``replications`` send events, cycling through the
    recipients in index order, from ``RandomStream(seed)``. A single bundle
    only probes susceptibility to that bundle, which the report flags.
    """
    agents = [population] if isinstance(population, AgentProfile) else list(population)
    pop = PopulationArrays.from_agents(agents)
    regime = InformationRegime.coerce(regime)
    x = np.asarray(alpha.alpha if isinstance(alpha, CueBundle) else alpha, dtype=float)
    pi = som_matrix(x, pop, regime)  # (N, C)

    if mode == "analytic":
        contrib = pi * pop.clickthrough
        shares = tuple(
            CriterionShare(c, float(pi[:, c.index].mean()), float(contrib[:, c.index].mean())) for c in CRITERIA
        )
        rate = float(contrib.sum(axis=1).mean())
        return TestEmailReport(rate, shares, tuple(x.tolist()), regime, "analytic", 0)
    if mode != "sampled":
        raise ConfigurationError(f"mode must be 'analytic' or 'sampled', got {mode!r}")
    if replications < 1:
        raise ConfigurationError("replications must be >= 1")

    rng = RandomStream(seed)
    dists = [SoMDistribution(row / row.sum()) for row in pi]
    drawn = np.zeros(len(CRITERIA))
    clicked_by = np.zeros(len(CRITERIA))
    N = len(agents)
    for r in range(replications):
        i = r % N
        c = sample_criterion(dists[i], rng)
        drawn[c.index] += 1
        if resolve_clickthrough(c, agents[i], rng):
            clicked_by[c.index] += 1
    shares = tuple(
        CriterionShare(c, drawn[c.index] / replications, clicked_by[c.index] / replications) for c in CRITERIA
    )
    rate = float(clicked_by.sum() / replications)
    return TestEmailReport(rate, shares, tuple(x.tolist()), regime, "sampled", replications)


class PolicyRow(NamedTuple):
    label: str
    breach_probability: float
    halfwidth: float
    delta: float  # intervention minus base
    delta_halfwidth: float  # paired, common random numbers
    stepping_stone_fraction: float


def policy_comparison(
    scenario: ScenarioConfig,
    interventions: Sequence[TrainingIntervention],
    replications: int,
    n_jobs: int | None = None,
) -> list:
    """Breach probability under each intervention against the untreated base.

    Every run reuses the scenario's master seed, so replication ``r`` sees the
    same uniforms in every arm and the paired deltas have small variance.
    """
    base = run_monte_carlo(scenario, replications, n_jobs)
    base_hits = base.breach_indicator()
    agg = base.aggregates
    rows = [
        PolicyRow("base", *agg["breach_probability"], 0.0, 0.0, agg["stepping_stone_fraction"][0])
    ]
    for iv in interventions:
        treated = scenario.with_agents(apply_training(scenario.agents, iv))
        res = run_monte_carlo(treated, replications, n_jobs, plan=plan_campaign(treated))
        diff = res.breach_indicator() - base_hits
        hw = Z95 * float(diff.std(ddof=1)) / math.sqrt(len(diff)) if len(diff) > 1 else 0.0
        a = res.aggregates
        rows.append(
            PolicyRow(iv.name, *a["breach_probability"], float(diff.mean()) if len(diff) else 0.0, hw,
                      a["stepping_stone_fraction"][0])
        )
    return rows
