"""Scenario documents: parsing, validation, generation and dumping.

Scenario files are YAML (so plain JSON works too). Every problem is reported
with a field path such as ``agents[3].baseline[0]``; unknown keys are
rejected rather than ignored.

Top-level keys::

    n, m, A                  required integers, 1 <= m < n
    horizon                  rounds per replication (default 100)
    seed                     master seed, 64-bit unsigned (default 0)
    norm                     "l1" | "l2" | "linf" (default "l2")
    grid_step                lattice step for criterion-aimed bundles (0.01)
    cue_labels               optional list of A names, metadata only
    attacker                 {value_of_success, effort_base, effort_weights}
    payoffs                  {b_tn, b_tp, c_fn, c_fp}
    agents                   explicit list, or a generator mapping

Explicit agents carry ``susceptibility_prior``, ``susceptibility_posterior``
(defaults to the prior), ``baseline``, ``clickthrough`` and ``is_target``.
A generator mapping has ``count_targets``, ``count_nontargets``,
``generation_seed``, ``ranges`` and optional ``target_ranges`` overriding
``ranges`` for targets. Targets are generated first.
"""

from __future__ import annotations

from numbers import Integral, Real
from pathlib import Path

import numpy as np
import yaml

from ._validation import NORMS
from .attacker import AttackerParams
from .campaign import ScenarioConfig
from .core import N_CRITERIA, AgentProfile, PayoffMatrix, agent_errors
from .exceptions import ConfigurationError
from .rng import RandomStream

TOP_KEYS = {"n", "m", "A", "horizon", "seed", "norm", "grid_step", "cue_labels", "attacker", "payoffs", "agents"}
ATTACKER_KEYS = {"value_of_success", "effort_base", "effort_weights"}
PAYOFF_KEYS = {"b_tn", "b_tp", "c_fn", "c_fp"}
AGENT_KEYS = {"susceptibility_prior", "susceptibility_posterior", "baseline", "clickthrough", "is_target"}
GENERATOR_KEYS = {"count_targets", "count_nontargets", "generation_seed", "ranges", "target_ranges"}
RANGE_KEYS = {
    "susceptibility_prior",
    "posterior_routine",
    "baseline",
    "clickthrough_deliberative",
    "clickthrough_behavioral",
}
DEFAULTS = {"horizon": 100, "seed": 0, "norm": "l2", "grid_step": 0.01}
RANGE_DEFAULTS = {"clickthrough_deliberative": [0.01, 0.01], "clickthrough_behavioral": [0.10, 0.10]}


def _is_int(v) -> bool:
    return isinstance(v, Integral) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, Real) and not isinstance(v, bool)


def _unknown(doc: dict, allowed: set, path: str, errors: list):
    for key in doc:
        if key not in allowed:
            errors.append(f"{path}{key}: unknown field")


def _real(doc, key, path, errors, default=None, minimum=None, strict=False):
    v = doc.get(key, default)
    if v is None:
        errors.append(f"{path}{key}: required")
        return None
    if not _is_real(v) or not np.isfinite(v):
        errors.append(f"{path}{key} must be a finite number")
        return None
    if minimum is not None and (v <= minimum if strict else v < minimum):
        errors.append(f"{path}{key} must be {'>' if strict else '>='} {minimum}")
        return None
    return float(v)


def _load_text(text: str, source: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"{source}: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{source}: scenario must be a mapping at top level")
    return doc


def load_scenario(path) -> ScenarioConfig:
    """Read, validate and materialize a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read scenario: {exc.strerror or exc}") from None
    return parse_scenario(_load_text(text, str(path)))


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Validate a scenario mapping and build the config.

    Generated agents are materialized here, before any simulation draws.
    """
    errors: list = []
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario must be a mapping")
    _unknown(doc, TOP_KEYS, "", errors)

    ints = {}
    for key in ("n", "m", "A"):
        v = doc.get(key)
        if v is None:
            errors.append(f"{key}: required")
        elif not _is_int(v):
            errors.append(f"{key} must be an integer")
        else:
            ints[key] = int(v)
    n, m, A = ints.get("n"), ints.get("m"), ints.get("A")
    if n is not None and m is not None and not 1 <= m < n:
        errors.append(f"m: need 1 <= m < n, got m={m}, n={n}")
    if A is not None and A < 1:
        errors.append("A must be >= 1")
        A = None

    horizon = doc.get("horizon", DEFAULTS["horizon"])
    if not _is_int(horizon) or horizon < 1:
        errors.append("horizon must be an integer >= 1")
    seed = doc.get("seed", DEFAULTS["seed"])
    if not _is_int(seed) or not 0 <= seed < 2**64:
        errors.append("seed must be an integer in [0, 2^64)")
    norm = doc.get("norm", DEFAULTS["norm"])
    if not isinstance(norm, str) or norm.lower() not in NORMS:
        errors.append(f"norm must be one of {list(NORMS)}")
    grid_step = _real(doc, "grid_step", "", errors, DEFAULTS["grid_step"], 0.0, strict=True)
    if grid_step is not None and grid_step > 0.5:
        errors.append("grid_step must be <= 0.5")
    labels = doc.get("cue_labels")
    if labels is not None:
        if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
            errors.append("cue_labels must be a list of strings")
        elif A is not None and len(labels) != A:
            errors.append(f"cue_labels must have A={A} entries, got {len(labels)}")

    attacker = _parse_attacker(doc.get("attacker", {}), A, errors)
    payoffs = _parse_payoffs(doc.get("payoffs", {}), errors)

    agents_doc = doc.get("agents")
    agents = []
    if agents_doc is None:
        errors.append("agents: required")
    elif isinstance(agents_doc, list):
        agents = _parse_explicit(agents_doc, A, errors)
    elif isinstance(agents_doc, dict):
        agents = _generate(agents_doc, A, errors)
    else:
        errors.append("agents must be a list of agent profiles or a generator mapping")

    if agents and n is not None and len(agents) != n:
        errors.append(f"agents: expected n={n} agents, got {len(agents)}")
    if agents and m is not None:
        got = sum(a.is_target for a in agents)
        if got != m:
            errors.append(f"agents: expected m={m} targets, got {got}")
    if errors:
        raise ConfigurationError(errors)
    return ScenarioConfig(
        agents=tuple(agents),
        attacker=attacker,
        horizon=horizon,
        payoffs=payoffs,
        norm=norm.lower(),
        seed=seed,
        grid_step=grid_step,
        cue_labels=tuple(labels) if labels is not None else None,
    )


def _parse_attacker(doc, A, errors):
    if not isinstance(doc, dict):
        errors.append("attacker must be a mapping")
        return None
    _unknown(doc, ATTACKER_KEYS, "attacker.", errors)
    n0 = len(errors)
    v = _real(doc, "value_of_success", "attacker.", errors, 1.0, 0.0, strict=True)
    base = _real(doc, "effort_base", "attacker.", errors, 0.0, 0.0)
    w = doc.get("effort_weights", [0.0] * (A or 0))
    if not isinstance(w, list) or not all(_is_real(x) and np.isfinite(x) for x in w):
        errors.append("attacker.effort_weights must be a list of finite numbers")
    else:
        for i, x in enumerate(w):
            if x < 0:
                errors.append(f"attacker.effort_weights[{i}] must be >= 0")
        if A is not None and len(w) != A:
            errors.append(f"attacker.effort_weights must have A={A} entries, got {len(w)}")
    if len(errors) > n0 or A is None:
        return None
    return AttackerParams(value_of_success=v, effort_weights=np.array(w, dtype=float), effort_base=base)


def _parse_payoffs(doc, errors):
    if not isinstance(doc, dict):
        errors.append("payoffs must be a mapping")
        return None
    _unknown(doc, PAYOFF_KEYS, "payoffs.", errors)
    vals = {k: _real(doc, k, "payoffs.", errors, 1.0, 0.0) for k in sorted(PAYOFF_KEYS)}
    if any(v is None for v in vals.values()):
        return None
    return PayoffMatrix(**vals)


def _parse_explicit(items, A, errors):
    agents = []
    for i, item in enumerate(items):
        path = f"agents[{i}]"
        if not isinstance(item, dict):
            errors.append(f"{path} must be a mapping")
            continue
        n0 = len(errors)
        _unknown(item, AGENT_KEYS, f"{path}.", errors)
        for key in ("susceptibility_prior", "baseline", "clickthrough"):
            if key not in item:
                errors.append(f"{path}.{key}: required")
        target = item.get("is_target", False)
        if not isinstance(target, bool):
            errors.append(f"{path}.is_target must be true or false")
        if len(errors) > n0:
            continue
        prior = item["susceptibility_prior"]
        post = item.get("susceptibility_posterior", prior)
        problems = agent_errors(prior, post, item["baseline"], item["clickthrough"])
        if not problems and A is not None and np.shape(prior)[1] != A:
            problems.append(f"susceptibility_prior must have A={A} columns, got {np.shape(prior)[1]}")
        if problems:
            errors.extend(f"{path}.{p}" for p in problems)
            continue
        agents.append(
            AgentProfile(
                susceptibility_prior=prior,
                susceptibility_posterior=post,
                baseline=item["baseline"],
                clickthrough=item["clickthrough"],
                is_target=target,
            )
        )
    return agents


def _range_array(bounds, shape, path, errors):
    """Expand a range description to arrays (lo, hi) of ``shape``.

    Accepts one ``[lo, hi]`` pair for every entry, one pair per row, or one
    pair per entry.
    """
    try:
        arr = np.array(bounds, dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{path} must be a [lo, hi] pair or nested list of pairs")
        return None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        errors.append(f"{path} must end in [lo, hi] pairs")
        return None
    lead = arr.shape[:-1]
    if lead != () and lead != shape[: len(lead)]:
        errors.append(f"{path} has shape {lead}, expected a prefix of {shape}")
        return None
    arr = arr.reshape(lead + (1,) * (len(shape) - len(lead)) + (2,))
    arr = np.broadcast_to(arr, shape + (2,))
    lo, hi = arr[..., 0], arr[..., 1]
    if not np.all(np.isfinite(arr)) or np.any(lo > hi):
        errors.append(f"{path} must have finite bounds with lo <= hi")
        return None
    return lo, hi


def _generate(doc, A, errors):
    _unknown(doc, GENERATOR_KEYS, "agents.", errors)
    counts = {}
    for key in ("count_targets", "count_nontargets"):
        v = doc.get(key)
        if not _is_int(v) or v < 0:
            errors.append(f"agents.{key} must be a non-negative integer")
        else:
            counts[key] = v
    gseed = doc.get("generation_seed", 0)
    if not _is_int(gseed) or not 0 <= gseed < 2**64:
        errors.append("agents.generation_seed must be an integer in [0, 2^64)")
    if A is None or len(counts) < 2 or errors:
        return []

    C = N_CRITERIA
    shapes = {
        "susceptibility_prior": (C, A),
        "posterior_routine": (A,),
        "baseline": (C,),
        "clickthrough_deliberative": (),
        "clickthrough_behavioral": (),
    }

    def ranges_for(key_doc, path, fallback):
        if not isinstance(key_doc, dict):
            errors.append(f"{path} must be a mapping")
            return None
        _unknown(key_doc, RANGE_KEYS, f"{path}.", errors)
        out = dict(fallback)
        for name, shape in shapes.items():
            if name in key_doc:
                r = _range_array(key_doc[name], shape, f"{path}.{name}", errors)
                if r is not None:
                    out[name] = r
        return out

    base_defaults = {k: _range_array(v, (), k, errors) for k, v in RANGE_DEFAULTS.items()}
    ranges = ranges_for(doc.get("ranges", {}), "agents.ranges", base_defaults)
    if ranges is None:
        return []
    for name in ("susceptibility_prior", "baseline"):
        if name not in ranges:
            errors.append(f"agents.ranges.{name}: required")
    target_ranges = ranges_for(doc.get("target_ranges", {}), "agents.target_ranges", ranges)
    if errors or target_ranges is None:
        return []

    rng = RandomStream(gseed)

    def draw(lohi):
        lo, hi = lohi
        flat = [lo_ + (hi_ - lo_) * rng.random() for lo_, hi_ in zip(np.ravel(lo), np.ravel(hi))]
        return np.array(flat).reshape(np.shape(lo))

    agents = []
    r4 = C - 1
    plan = [(True, counts["count_targets"]), (False, counts["count_nontargets"])]
    for is_target, count in plan:
        rs = target_ranges if is_target else ranges
        for _ in range(count):
            idx = len(agents)
            chi = draw(rs["baseline"])
            prior = draw(rs["susceptibility_prior"])
            post = prior.copy()
            if "posterior_routine" in rs:
                post[r4] = np.maximum(prior[r4], draw(rs["posterior_routine"]))
            rho = np.array([float(draw(rs["clickthrough_deliberative"])), float(draw(rs["clickthrough_behavioral"])), 1.0, 1.0])
            problems = agent_errors(prior, post, chi, rho)
            if problems:
                errors.extend(f"agents[{idx}] (generated).{p}" for p in problems)
                agents.append(None)
                continue
            agents.append(AgentProfile(prior, chi, post, rho, is_target))
    if errors:
        return []
    return agents


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Materialized document with explicit agents (round-trips exactly)."""
    doc = {
        "n": config.n,
        "m": config.m,
        "A": config.A,
        "horizon": config.horizon,
        "seed": config.seed,
        "norm": config.norm,
        "grid_step": config.grid_step,
        "attacker": {
            "value_of_success": config.attacker.value_of_success,
            "effort_base": config.attacker.effort_base,
            "effort_weights": config.attacker.effort_weights.tolist(),
        },
        "payoffs": {k: getattr(config.payoffs, k) for k in ("b_tn", "b_tp", "c_fn", "c_fp")},
        "agents": [
            {
                "susceptibility_prior": a.susceptibility_prior.tolist(),
                "susceptibility_posterior": a.susceptibility_posterior.tolist(),
                "baseline": a.baseline.tolist(),
                "clickthrough": a.clickthrough.tolist(),
                "is_target": a.is_target,
            }
            for a in config.agents
        ],
    }
    if config.cue_labels is not None:
        doc["cue_labels"] = list(config.cue_labels)
    return doc


def dump_scenario(config: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(scenario_to_dict(config), sort_keys=False))
    return path


def example_scenario_path() -> Path:
    """The shipped scenario whose parameters follow the targeting table orderings."""
    return Path(__file__).parent / "data" / "stepping_stone.yaml"
