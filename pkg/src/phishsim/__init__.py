"""Coexisting-choice-criteria model of phishing responses.

Simulates recipients whose State of Mind (Deliberative, Behavioral,
Impulsive, Routine) is drawn from cue-dependent selection probabilities,
solves the attacker's cue-design program, runs stepping-stone campaigns and
compares training interventions.
"""

__version__ = "0.1.0"

from .core import (
    AgentProfile,
    ChoiceCriterion,
    CueBundle,
    InformationRegime,
    PayoffMatrix,
    SoMDistribution,
    match_quality,
    resolve_clickthrough,
    sample_criterion,
    som_distribution,
    validate_cue_bundle,
)
from .attacker import (
    AttackerParams,
    criterion_optimal_bundle,
    dominance_report,
    effort,
    grid_oracle_optimize,
    mixture_dominance_check,
    objective,
    optimize_bundle,
)
from .campaign import ScenarioConfig, run_monte_carlo, run_replication, step
from .analysis import (
    TrainingIntervention,
    apply_training,
    disjunctive_accumulation,
    evaluate_test_email,
    first_click_probabilities,
    policy_comparison,
)
from .estimators import CueBundleOptimizer, StateOfMindModel
from .rng import RandomStream
from .output import write_results
from .scenario import dump_scenario, example_scenario_path, load_scenario

__all__ = [
    "AgentProfile",
    "AttackerParams",
    "ChoiceCriterion",
    "CueBundle",
    "CueBundleOptimizer",
    "InformationRegime",
    "PayoffMatrix",
    "RandomStream",
    "ScenarioConfig",
    "SoMDistribution",
    "StateOfMindModel",
    "TrainingIntervention",
    "apply_training",
    "criterion_optimal_bundle",
    "disjunctive_accumulation",
    "dump_scenario",
    "dominance_report",
    "effort",
    "evaluate_test_email",
    "example_scenario_path",
    "first_click_probabilities",
    "grid_oracle_optimize",
    "load_scenario",
    "match_quality",
    "mixture_dominance_check",
    "objective",
    "optimize_bundle",
    "policy_comparison",
    "resolve_clickthrough",
    "run_monte_carlo",
    "run_replication",
    "sample_criterion",
    "som_distribution",
    "step",
    "validate_cue_bundle",
    "write_results",
]
