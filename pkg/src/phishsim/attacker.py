"""The attacker's cue-design program and the dominance criteria built on it.

The attacker picks one bundle per email to maximize

    V * sum_{targets i} sum_c pi_c^i(alpha) * rho_c^i  -  effort(alpha)

over the box [0, 1]^A intersected with the unit norm ball. Selection
probabilities are ratios of affine functions of ``alpha``, so the objective
is smooth and its gradient is available in closed form. Two independent
routes solve it: projected gradient ascent from quasi-random starts, and an
exhaustive lattice search used as an oracle for small ``A``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

from ._validation import NORM_TOL, as_float_vector, check_norm, vector_norm
from .core import (
    CRITERIA,
    AgentProfile,
    ChoiceCriterion,
    CueBundle,
    InformationRegime,
    PopulationArrays,
)
from .exceptions import ConfigurationError, DomainError, NumericalError, OracleGuardError

logger = logging.getLogger(__name__)

GRID_MAX_CUES = 4
GRADIENT = "gradient_multistart"
GRID = "grid_oracle"


@dataclass(frozen=True, eq=False)
class AttackerParams:
    """Value of a breach, effort cost model and feasibility norm.

    Effort is linear: ``effort_base + effort_weights . alpha``.
    """

    value_of_success: float
    effort_weights: np.ndarray
    effort_base: float = 0.0
    norm: str = "l2"

    def __post_init__(self):
        v = float(self.value_of_success)
        if not np.isfinite(v) or v <= 0:
            raise ConfigurationError("attacker.value_of_success must be > 0")
        w = as_float_vector(self.effort_weights, "attacker.effort_weights")
        if np.any(w < 0):
            raise ConfigurationError("attacker.effort_weights must be >= 0")
        base = float(self.effort_base)
        if not np.isfinite(base) or base < 0:
            raise ConfigurationError("attacker.effort_base must be finite and >= 0")
        w.setflags(write=False)
        object.__setattr__(self, "value_of_success", v)
        object.__setattr__(self, "effort_weights", w)
        object.__setattr__(self, "effort_base", base)
        object.__setattr__(self, "norm", check_norm(self.norm))

    @property
    def A(self) -> int:
        return int(self.effort_weights.shape[0])

    def replace(self, **changes) -> "AttackerParams":
        kw = dict(
            value_of_success=self.value_of_success,
            effort_weights=self.effort_weights,
            effort_base=self.effort_base,
            norm=self.norm,
        )
        kw.update(changes)
        return AttackerParams(**kw)


@dataclass(frozen=True)
class OptimizationResult:
    best_alpha: CueBundle
    best_value: float
    method: str
    evaluations: int
    converged: bool


class Verdict(NamedTuple):
    """Outcome of a strict inequality ``left < right``.

    ``holds`` is None when an operand is undefined (division by zero).
    """

    holds: bool | None
    left: float | None
    right: float | None


@dataclass(frozen=True)
class CriterionTarget:
    """Best bundle for raising one criterion's mean selection probability."""

    criterion: ChoiceCriterion
    regime: InformationRegime
    alpha: CueBundle
    max_pi: float
    effort: float
    value: float  # attacker objective at ``alpha`` under ``regime``


@dataclass(frozen=True)
class DominanceReport:
    deliberative_dominated: bool
    behavioral_dominated_by_impulsive: Verdict
    routine_dominates_impulsive_posterior: Verdict
    rho_deliberative: float
    rho_behavioral: float
    criteria: tuple = field(default_factory=tuple)  # CriterionTarget for every (regime, c)

    def target(self, c, regime="prior") -> CriterionTarget:
        c = ChoiceCriterion(c)
        regime = InformationRegime.coerce(regime)
        for entry in self.criteria:
            if entry.criterion is c and entry.regime is regime:
                return entry
        raise KeyError((c, regime))

    def to_dict(self) -> dict:
        def verdict(v):
            return {"holds": v.holds, "left": v.left, "right": v.right}

        return {
            "deliberative_dominated": self.deliberative_dominated,
            "behavioral_dominated_by_impulsive": verdict(self.behavioral_dominated_by_impulsive),
            "routine_dominates_impulsive_posterior": verdict(self.routine_dominates_impulsive_posterior),
            "rho_deliberative": self.rho_deliberative,
            "rho_behavioral": self.rho_behavioral,
            "criteria": [
                {
                    "criterion": e.criterion.name.lower(),
                    "regime": e.regime.value,
                    "alpha": e.alpha.alpha.tolist(),
                    "max_pi": e.max_pi,
                    "effort": e.effort,
                    "value": e.value,
                }
                for e in self.criteria
            ],
        }


def as_population(population) -> PopulationArrays:
    if isinstance(population, PopulationArrays):
        return population
    if isinstance(population, AgentProfile):
        population = [population]
    return PopulationArrays.from_agents(population)


def _target_arrays(population) -> PopulationArrays:
    pop = as_population(population)
    targets = pop.targets()
    if targets.is_target.shape[0] == 0:
        raise DomainError("attacker objective is undefined without target agents (m = 0)")
    return targets


def project(x, norm: str = "l2") -> np.ndarray:
    """Clip to the unit box, then shrink radially onto the norm ball.

    Feasible by construction; not the exact Euclidean projection.
    """
    y = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    size = float(vector_norm(y, norm))
    if size > 1.0:
        y = y / size
    return y


def effort(alpha, params: AttackerParams) -> float:
    x = np.asarray(alpha, dtype=float)
    if x.shape != params.effort_weights.shape:
        raise ConfigurationError(
            f"cue bundle has shape {x.shape}, effort weights have {params.effort_weights.shape}"
        )
    return float(params.effort_base + params.effort_weights @ x)


class _Objective:
    """Attacker objective over a fixed set of targets, vectorized."""

    def __init__(self, targets: PopulationArrays, params: AttackerParams, regime):
        self.S = targets.susceptibility(regime)
        self.chi = targets.baseline
        self.rho = targets.clickthrough
        self.V = params.value_of_success
        self.w = params.effort_weights
        self.e0 = params.effort_base
        if self.S.shape[2] != self.w.shape[0]:
            raise ConfigurationError(
                f"agents have {self.S.shape[2]} cues, effort weights have {self.w.shape[0]}"
            )
        self.evaluations = 0

    def values(self, X: np.ndarray) -> np.ndarray:
        m = self.chi[None] + np.einsum("nca,pa->pnc", self.S, X)
        pi = m / m.sum(axis=2, keepdims=True)
        gross = np.einsum("pnc,nc->p", pi, self.rho)
        self.evaluations += X.shape[0]
        return self.V * gross - (self.e0 + X @ self.w)

    def value_grad(self, x: np.ndarray):
        m = self.chi + self.S @ x  # (N, C)
        M = m.sum(axis=1)
        pi = m / M[:, None]
        click = np.einsum("nc,nc->n", pi, self.rho)
        d = (np.einsum("nc,nca->na", self.rho, self.S) - click[:, None] * self.S.sum(axis=1)) / M[:, None]
        self.evaluations += 1
        with np.errstate(over="ignore", invalid="ignore"):  # caller checks finiteness
            value = self.V * click.sum() - (self.e0 + self.w @ x)
            grad = self.V * d.sum(axis=0) - self.w
        return float(value), grad


class _CriterionShare:
    """Mean selection probability of one criterion over a set of agents."""

    def __init__(self, agents: PopulationArrays, c: ChoiceCriterion, regime):
        self.S = agents.susceptibility(regime)
        self.chi = agents.baseline
        self.k = ChoiceCriterion(c).index
        self.evaluations = 0

    def values(self, X: np.ndarray) -> np.ndarray:
        m = self.chi[None] + np.einsum("nca,pa->pnc", self.S, X)
        self.evaluations += X.shape[0]
        return (m[:, :, self.k] / m.sum(axis=2)).mean(axis=1)

    def value_grad(self, x: np.ndarray):
        m = self.chi + self.S @ x
        M = m.sum(axis=1)
        pi_k = m[:, self.k] / M
        d = (self.S[:, self.k, :] - pi_k[:, None] * self.S.sum(axis=1)) / M[:, None]
        self.evaluations += 1
        return float(pi_k.mean()), d.mean(axis=0)


def objective(alpha, population, params: AttackerParams, regime=InformationRegime.PRIOR) -> float:
    """Exact attacker objective; the breach sum runs over target agents only."""
    x = np.asarray(alpha, dtype=float)
    fn = _Objective(_target_arrays(population), params, InformationRegime.coerce(regime))
    if x.shape != (fn.S.shape[2],):
        raise ConfigurationError(f"cue bundle has shape {x.shape}, expected ({fn.S.shape[2]},)")
    return float(fn.values(x[None])[0])


def _start_points(A: int, starts: int, norm: str) -> np.ndarray:
    if starts < 1:
        raise ConfigurationError("starts must be >= 1")
    pts = qmc.Halton(d=A, scramble=False).random(starts)
    return np.array([project(p, norm) for p in pts])


def _ascend(fn, x0: np.ndarray, norm: str, max_iters: int, tol: float):
    """Projected gradient ascent with adaptive step (grow on success, halve on failure)."""
    x = project(x0, norm)
    f, g = fn.value_grad(x)
    _check_finite(f, g, x)
    t = 1.0
    for _ in range(max_iters):
        cand = project(x + t * g, norm)
        if np.array_equal(cand, x):
            return x, f, True
        fc, gc = fn.value_grad(cand)
        _check_finite(fc, gc, cand)
        if fc > f:
            gain = fc - f
            x, f, g = cand, fc, gc
            t = min(t * 2.0, 1e6)
            if gain < tol:
                return x, f, True
        else:
            t *= 0.5
            if t < 1e-15:
                return x, f, True
    return x, f, False


def _check_finite(f, g, x):
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalError(f"non-finite objective at alpha={x.tolist()}", alpha=x.copy())


def _multistart(fn, A: int, norm: str, starts: int, max_iters: int, tol: float):
    best = None
    for x0 in _start_points(A, starts, norm):
        x, f, conv = _ascend(fn, x0, norm, max_iters, tol)
        if best is None or f > best[1]:
            best = (x, f, conv)
    return best


def optimize_bundle(
    population,
    params: AttackerParams,
    regime=InformationRegime.PRIOR,
    starts: int = 16,
    max_iters: int = 500,
    tol: float = 1e-8,
) -> OptimizationResult:
    """Maximize the attacker objective by multi-start projected gradient ascent."""
    fn = _Objective(_target_arrays(population), params, InformationRegime.coerce(regime))
    x, f, conv = _multistart(fn, params.A, params.norm, starts, max_iters, tol)
    return OptimizationResult(CueBundle(x, params.norm), f, GRADIENT, fn.evaluations, conv)


def _lattice_chunks(A: int, step: float, norm: str):
    """Feasible lattice points in lexicographic order, in chunks."""
    k = int(np.floor(1.0 / step + 1e-9))
    levels = np.minimum(np.arange(k + 1) * step, 1.0)
    lead = max(A - 2, 0)
    tail = A - lead
    tail_pts = np.stack(np.meshgrid(*([levels] * tail), indexing="ij"), axis=-1).reshape(-1, tail)
    for head in itertools.product(levels, repeat=lead):
        pts = np.hstack([np.tile(np.asarray(head, dtype=float), (tail_pts.shape[0], 1)), tail_pts])
        pts = pts[vector_norm(pts, norm) <= 1.0 + NORM_TOL]
        if pts.shape[0]:
            yield pts


def _grid_guard(A: int, step: float):
    if A > GRID_MAX_CUES:
        raise OracleGuardError(
            f"grid oracle refuses A={A}: exhaustive lattice search requires A <= {GRID_MAX_CUES}"
        )
    if not 0 < step <= 1.0:
        raise ConfigurationError(f"grid step must be in (0, 1], got {step}")


def _grid_argmax(fn, A: int, step: float, norm: str):
    _grid_guard(A, step)
    best_x, best_f = None, -np.inf
    for pts in _lattice_chunks(A, step, norm):
        vals = fn.values(pts)
        if not np.all(np.isfinite(vals)):
            bad = pts[~np.isfinite(vals)][0]
            raise NumericalError(f"non-finite objective at alpha={bad.tolist()}", alpha=bad)
        j = int(np.argmax(vals))
        if vals[j] > best_f:
            best_x, best_f = pts[j].copy(), float(vals[j])
    return best_x, best_f


def grid_oracle_optimize(
    population, params: AttackerParams, regime=InformationRegime.PRIOR, step: float = 0.01
) -> OptimizationResult:
    """Exhaustive search over the feasible lattice ``{0, step, ..., 1}^A``.

    Ties go to the lexicographically smallest bundle.
    """
    _grid_guard(params.A, step)
    fn = _Objective(_target_arrays(population), params, InformationRegime.coerce(regime))
    x, f = _grid_argmax(fn, params.A, step, params.norm)
    return OptimizationResult(CueBundle(x, params.norm), f, GRID, fn.evaluations, True)


def criterion_optimal_bundle(
    c, population, regime=InformationRegime.PRIOR, step: float = 0.01, norm: str = "l2"
):
    """Bundle maximizing the target-mean selection probability of ``c``.

    Returns ``(CueBundle, attained mean)``; searched on the lattice.
    """
    targets = _target_arrays(population)
    fn = _CriterionShare(targets, ChoiceCriterion(c), InformationRegime.coerce(regime))
    norm = check_norm(norm)
    x, f = _grid_argmax(fn, targets.A, step, norm)
    return CueBundle(x, norm), f


def aim_bundle(
    c,
    population,
    regime=InformationRegime.PRIOR,
    norm: str = "l2",
    step: float = 0.01,
    starts: int = 16,
    max_iters: int = 500,
    tol: float = 1e-10,
):
    """Criterion-aimed bundle: lattice search when ``A`` is small, ascent otherwise."""
    targets = _target_arrays(population)
    if targets.A <= GRID_MAX_CUES:
        return criterion_optimal_bundle(c, targets, regime, step, norm)
    norm = check_norm(norm)
    fn = _CriterionShare(targets, ChoiceCriterion(c), InformationRegime.coerce(regime))
    x, f, _ = _multistart(fn, targets.A, norm, starts, max_iters, tol)
    return CueBundle(x, norm), f


def impulsive_dominates_behavioral(rho_behavioral: float, max_pi3: float, max_pi2: float) -> Verdict:
    """Behavioral aim is strictly dominated when ``rho_2 < max pi_3 / max pi_2``."""
    if max_pi2 == 0:
        return Verdict(None, float(rho_behavioral), None)
    right = max_pi3 / max_pi2
    return Verdict(bool(rho_behavioral < right), float(rho_behavioral), float(right))


def routine_dominates_impulsive(
    effort_routine: float, effort_impulsive: float, max_pi4: float, max_pi3: float
) -> Verdict:
    """Routine aim dominates when the effort ratio is below the selection ratio."""
    left = None if effort_impulsive == 0 else effort_routine / effort_impulsive
    right = None if max_pi3 == 0 else max_pi4 / max_pi3
    if left is None or right is None:
        return Verdict(None, left, right)
    return Verdict(bool(left < right), float(left), float(right))


def dominance_report(population, params: AttackerParams, step: float = 0.01) -> DominanceReport:
    """Per-criterion pure strategies and the dominance verdicts between them.

    Maxima are target means of ``pi_c`` found on the lattice. Impulsive vs
    Behavioral uses the prior regime; Routine vs Impulsive uses the posterior
    regime. ``rho`` values are target means.
    """
    targets = _target_arrays(population)
    _grid_guard(targets.A, step)
    entries = []
    for regime in InformationRegime:
        fn = _Objective(targets, params, regime)
        for c in CRITERIA:
            bundle, best = criterion_optimal_bundle(c, targets, regime, step, params.norm)
            value = float(fn.values(bundle.alpha[None])[0])
            entries.append(CriterionTarget(c, regime, bundle, best, effort(bundle.alpha, params), value))
    by_key = {(e.criterion, e.regime): e for e in entries}
    prior, post = InformationRegime.PRIOR, InformationRegime.POSTERIOR
    D, B, I, R = CRITERIA

    rho1 = float(targets.clickthrough[:, D.index].mean())
    rho2 = float(targets.clickthrough[:, B.index].mean())
    impulsive_vs_behavioral = impulsive_dominates_behavioral(rho2, by_key[I, prior].max_pi, by_key[B, prior].max_pi)
    routine_vs_impulsive = routine_dominates_impulsive(
        by_key[R, post].effort, by_key[I, post].effort, by_key[R, post].max_pi, by_key[I, post].max_pi
    )
    deliberative_dominated = by_key[B, prior].value > by_key[D, prior].value
    return DominanceReport(deliberative_dominated, impulsive_vs_behavioral, routine_vs_impulsive, rho1, rho2, tuple(entries))


def mixture_value(pure_values: Sequence[float], weights: Sequence[float]) -> float:
    v = np.asarray(pure_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    return float(v.max() - w @ (v.max() - v))


def mixture_dominance_check(pure_values: Sequence[float], weights: Sequence[float]) -> bool:
    """True iff mixing pure strategies never beats the best of them.

    Strictness is required whenever weight sits on a non-maximal value. The
    shortfall ``sum w_k (max - v_k)`` is a sum of non-negative terms, so it
    is positive exactly when such weight exists.
    """
    v = np.asarray(pure_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape or v.ndim != 1 or v.size == 0:
        raise ConfigurationError("pure_values and weights must be equal-length non-empty vectors")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ConfigurationError("weights must be non-negative and sum to 1")
    top = v.max()
    shortfall = float(w @ (top - v))
    if shortfall < 0:
        return False
    needs_strict = bool(np.any((w > 0) & (v < top)))
    return shortfall > 0 if needs_strict else True
