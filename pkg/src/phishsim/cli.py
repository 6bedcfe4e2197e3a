"""Command-line interface.

Exit status: 0 on success, 1 on validation or usage errors, 2 on runtime
errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .analysis import (
    TrainingIntervention,
    disjunctive_accumulation,
    first_click_probabilities,
    policy_comparison,
)
from .attacker import dominance_report, grid_oracle_optimize, optimize_bundle
from .campaign import plan_campaign, run_monte_carlo
from .core import InformationRegime
from .exceptions import ConfigurationError, DomainError, PhishsimError
from .output import write_json, write_results, write_table
from .scenario import load_scenario

logger = logging.getLogger("phishsim")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phishsim", description="Coexisting-choice-criteria phishing campaign simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte Carlo campaign replications")
    sim.add_argument("--scenario", required=True, type=Path)
    sim.add_argument("--replications", required=True, type=_positive)
    sim.add_argument("--out", type=Path, default=Path("results"))
    sim.add_argument("--jobs", type=_positive, default=None, help="worker processes (default: PHISHSIM_THREADS or 1)")

    opt = sub.add_parser("optimize", help="attacker best-response bundle")
    opt.add_argument("--scenario", required=True, type=Path)
    opt.add_argument("--regime", choices=["prior", "posterior"], default="prior")
    opt.add_argument("--oracle", action="store_true", help="exhaustive lattice search instead of gradient ascent")
    opt.add_argument("--step", type=float, default=0.01, help="lattice step for --oracle")
    opt.add_argument("--starts", type=_positive, default=16)
    opt.add_argument("--out", type=Path, default=Path("results"))

    ana = sub.add_parser("analyze", help="dominance report and closed forms")
    ana.add_argument("--scenario", required=True, type=Path)
    ana.add_argument("--step", type=float, default=None, help="lattice step (default: scenario grid_step)")
    ana.add_argument("--out", type=Path, default=Path("results"))

    pol = sub.add_parser("policy", help="compare training interventions")
    pol.add_argument("--scenario", required=True, type=Path)
    pol.add_argument("--interventions", required=True, type=Path)
    pol.add_argument("--replications", required=True, type=_positive)
    pol.add_argument("--out", type=Path, default=Path("results"))
    pol.add_argument("--jobs", type=_positive, default=None)
    return parser


def load_interventions(path) -> list:
    """Read a YAML list of ``{kind, magnitude, label}`` mappings."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read interventions: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: parse error: {exc}") from None
    if isinstance(doc, dict) and set(doc) == {"interventions"}:
        doc = doc["interventions"]
    if not isinstance(doc, list):
        raise ConfigurationError(f"{path}: expected a list of interventions")
    out, errors = [], []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            errors.append(f"interventions[{i}] must be a mapping")
            continue
        extra = set(item) - {"kind", "magnitude", "label"}
        if extra:
            errors.append(f"interventions[{i}]: unknown fields {sorted(extra)}")
            continue
        try:
            out.append(TrainingIntervention(item.get("kind"), item.get("magnitude", float("nan")), item.get("label")))
        except ConfigurationError as exc:
            errors.extend(f"interventions[{i}]: {m}" for m in exc.errors)
    if errors:
        raise ConfigurationError(errors)
    return out


def _simulate(args):
    scenario = load_scenario(args.scenario)
    result = run_monte_carlo(scenario, args.replications, args.jobs)
    paths = write_results(result, args.out)
    agg = result.aggregates
    p, hw = agg["breach_probability"]
    ss, ss_hw = agg["stepping_stone_fraction"]
    print(f"replications: {result.replications}")
    print(f"breach probability: {p:.4f} +/- {hw:.4f}")
    print(f"stepping-stone fraction of breaches: {ss:.4f} +/- {ss_hw:.4f}")
    print(f"mean rounds to breach: {agg['mean_rounds_to_breach'][0]:.3f}")
    for path in paths:
        print(f"wrote {path}")


def _optimize(args):
    scenario = load_scenario(args.scenario)
    regime = InformationRegime.coerce(args.regime)
    if args.oracle:
        res = grid_oracle_optimize(scenario.agents, scenario.attacker, regime, args.step)
    else:
        res = optimize_bundle(scenario.agents, scenario.attacker, regime, starts=args.starts)
    args.out.mkdir(parents=True, exist_ok=True)
    payload = {
        "regime": regime.value,
        "method": res.method,
        "best_alpha": res.best_alpha.alpha.tolist(),
        "best_value": res.best_value,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "cue_labels": list(scenario.cue_labels) if scenario.cue_labels else None,
    }
    path = write_json(args.out / "optimization.json", payload)
    labels = scenario.cue_labels or [f"cue{i}" for i in range(scenario.A)]
    print(f"method: {res.method} ({regime.value} regime)")
    print("best bundle: " + ", ".join(f"{n}={v:.4f}" for n, v in zip(labels, res.best_alpha.alpha)))
    print(f"objective: {res.best_value:.6f}  converged: {res.converged}")
    print(f"wrote {path}")


def _analyze(args):
    scenario = load_scenario(args.scenario)
    step = scenario.grid_step if args.step is None else args.step
    report = dominance_report(scenario.agents, scenario.attacker, step)
    pi3 = report.target(3, "prior").max_pi
    p_nontarget, p_target = first_click_probabilities(pi3, scenario.n, scenario.m)
    plan = plan_campaign(scenario)
    curve = [(k, disjunctive_accumulation(p_target, k)) for k in range(1, scenario.horizon + 1)]

    args.out.mkdir(parents=True, exist_ok=True)
    payload = {
        "dominance": report.to_dict(),
        "first_click": {"max_pi3": pi3, "n": scenario.n, "m": scenario.m,
                        "p_nontarget": p_nontarget, "p_target": p_target},
        "insider_aim": plan.insider_aim.name.lower(),
    }
    j = write_json(args.out / "analysis.json", payload)
    c = write_table(args.out / "accumulation.csv", ("emails", "breach_probability"), curve)

    impulsive_vs_behavioral, routine_vs_impulsive = report.behavioral_dominated_by_impulsive, report.routine_dominates_impulsive_posterior
    print(f"deliberative dominated by behavioral: {report.deliberative_dominated}")
    print(f"impulsive dominates behavioral: {impulsive_vs_behavioral.holds} (rho2 {impulsive_vs_behavioral.left:.4g} vs selection ratio {impulsive_vs_behavioral.right:.4g})")
    print(f"routine dominates impulsive after insider: {routine_vs_impulsive.holds} (effort ratio {routine_vs_impulsive.left:.4g} vs selection ratio {routine_vs_impulsive.right:.4g})")
    print(f"first click, max pi3={pi3:.4f}: non-target {p_nontarget:.4f} vs target {p_target:.4f}")
    print(f"wrote {j}")
    print(f"wrote {c}")


def _policy(args):
    scenario = load_scenario(args.scenario)
    interventions = load_interventions(args.interventions)
    rows = policy_comparison(scenario, interventions, args.replications, args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)
    header = ("intervention", "breach_probability", "ci_halfwidth", "delta", "delta_ci_halfwidth", "stepping_stone_fraction")
    path = write_table(args.out / "policy.csv", header, rows)
    for row in rows:
        print(f"{row.label:<28} breach {row.breach_probability:.4f} +/- {row.halfwidth:.4f}"
              f"  delta {row.delta:+.4f} +/- {row.delta_halfwidth:.4f}")
    print(f"wrote {path}")


COMMANDS = {"simulate": _simulate, "optimize": _optimize, "analyze": _analyze, "policy": _policy}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ConfigurationError, DomainError) as exc:
        print("error: " + "\n  ".join(getattr(exc, "errors", None) or [str(exc)]), file=sys.stderr)
        return EXIT_INVALID
    except (PhishsimError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


cli_dispatch = main

if __name__ == "__main__":
    sys.exit(main())
