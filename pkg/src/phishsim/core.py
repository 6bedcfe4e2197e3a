"""State-of-Mind mathematics: match quality, selection probabilities, sampling.

An email with cue bundle ``alpha`` reaches a recipient whose characteristics
are a C x A susceptibility matrix and a length-C vector of strictly positive
baseline propensities. The match quality of criterion ``c`` is linear in the
bundle,

    m_c(alpha) = baseline_c + susceptibility_c . alpha,

and the criterion-selection probabilities are the normalized qualities
``pi_c = m_c / sum(m)``. Given the operative criterion the recipient clicks
with probability ``clickthrough_c``; Impulsive and Routine always click.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from ._validation import (
    MIN_BASELINE,
    NORM_TOL,
    as_float_vector,
    check_norm,
    frozen,
    vector_norm,
)
from .exceptions import ConfigurationError

N_CRITERIA = 4

# Implementation defaults for the unquantified "negligible" and "low" rates.
DEFAULT_RHO_DELIBERATIVE = 0.01
DEFAULT_RHO_BEHAVIORAL = 0.10


class ChoiceCriterion(enum.IntEnum):
    DELIBERATIVE = 1
    BEHAVIORAL = 2
    IMPULSIVE = 3
    ROUTINE = 4

    @property
    def index(self) -> int:
        """Zero-based position in probability vectors and matrix rows."""
        return int(self) - 1


CRITERIA = tuple(ChoiceCriterion)
_ALWAYS_CLICK = (ChoiceCriterion.IMPULSIVE, ChoiceCriterion.ROUTINE)


class InformationRegime(str, enum.Enum):
    """Which susceptibility matrix is operative.

    ``POSTERIOR`` applies once the attacker holds insider information.
    """

    PRIOR = "prior"
    POSTERIOR = "posterior"

    @classmethod
    def coerce(cls, value) -> "InformationRegime":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(
                f"regime must be 'prior' or 'posterior', got {value!r}"
            ) from None


class ValidationReport(NamedTuple):
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def validate_cue_bundle(alpha, norm: str = "l2") -> ValidationReport:
    """Check the box and norm-ball constraints without raising.

    Returns a report whose ``violations`` name each failed condition and the
    offending component indices.
    """
    if isinstance(alpha, CueBundle):
        alpha = alpha.alpha
    try:
        x = np.asarray(alpha, dtype=float)
    except (TypeError, ValueError):
        return ValidationReport(False, ("alpha is not numeric",))
    if x.ndim != 1 or x.shape[0] == 0:
        return ValidationReport(False, (f"alpha must be a non-empty vector, got shape {x.shape}",))
    problems = []
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        problems.append(f"components {bad.tolist()} are not finite")
    low = np.flatnonzero(x < 0)
    if low.size:
        problems.append(f"components {low.tolist()} below 0")
    high = np.flatnonzero(x > 1)
    if high.size:
        problems.append(f"components {high.tolist()} above 1")
    try:
        norm = check_norm(norm)
    except ConfigurationError as exc:
        problems.append(str(exc))
    else:
        if not bad.size:
            size = float(vector_norm(x, norm))
            if size > 1 + NORM_TOL:
                problems.append(f"{norm} norm {size:.6g} exceeds 1")
    return ValidationReport(not problems, tuple(problems))


@dataclass(frozen=True)
class CueBundle:
    """An email design: emphasis in [0, 1] on each of ``A`` cues."""

    alpha: np.ndarray
    norm: str = "l2"
    labels: tuple | None = None

    def __post_init__(self):
        report = validate_cue_bundle(self.alpha, self.norm)
        if not report.ok:
            raise ConfigurationError(list(report.violations))
        object.__setattr__(self, "alpha", frozen(self.alpha))
        object.__setattr__(self, "norm", check_norm(self.norm))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.A:
                raise ConfigurationError(f"expected {self.A} cue labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

    @property
    def A(self) -> int:
        return int(self.alpha.shape[0])

    @classmethod
    def zeros(cls, A: int, norm: str = "l2") -> "CueBundle":
        return cls(np.zeros(A), norm)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.alpha, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, CueBundle):
            return NotImplemented
        return self.norm == other.norm and np.array_equal(self.alpha, other.alpha)

    def __hash__(self):
        return hash((self.norm, self.alpha.tobytes()))


def agent_errors(susceptibility_prior, susceptibility_posterior, baseline, clickthrough) -> list:
    """Field-addressed invariant violations for one recipient profile."""
    errors = []
    arrays = {}
    for name, value, ndim in (
        ("susceptibility_prior", susceptibility_prior, 2),
        ("susceptibility_posterior", susceptibility_posterior, 2),
        ("baseline", baseline, 1),
        ("clickthrough", clickthrough, 1),
    ):
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError):
            errors.append(f"{name} must be numeric")
            continue
        if arr.ndim != ndim:
            errors.append(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
            continue
        if not np.all(np.isfinite(arr)):
            errors.append(f"{name} must be finite")
            continue
        arrays[name] = arr
    if errors:
        return errors

    prior = arrays["susceptibility_prior"]
    post = arrays["susceptibility_posterior"]
    chi = arrays["baseline"]
    rho = arrays["clickthrough"]
    C = N_CRITERIA
    if prior.shape[0] != C or prior.shape[1] < 1:
        errors.append(f"susceptibility_prior must have shape ({C}, A), got {prior.shape}")
    if post.shape != prior.shape:
        errors.append(
            f"susceptibility_posterior shape {post.shape} differs from susceptibility_prior {prior.shape}"
        )
    for name, arr in (("susceptibility_prior", prior), ("susceptibility_posterior", post)):
        for idx in zip(*np.nonzero((arr < 0) | (arr > 1))):
            errors.append(f"{name}[{idx[0]}][{idx[1]}] must be in [0, 1]")
    if chi.shape != (C,):
        errors.append(f"baseline must have length {C}, got {chi.shape[0]}")
    else:
        for k in np.flatnonzero(chi < MIN_BASELINE):
            errors.append(f"baseline[{k}] must be > 0 (at least {MIN_BASELINE:g})")
    if rho.shape != (C,):
        errors.append(f"clickthrough must have length {C}, got {rho.shape[0]}")
    else:
        for k in np.flatnonzero((rho < 0) | (rho > 1)):
            errors.append(f"clickthrough[{k}] must be in [0, 1]")
        for c in _ALWAYS_CLICK:
            if rho[c.index] != 1.0:
                errors.append(f"clickthrough[{c.index}] must equal 1")
    if not errors and post.shape == prior.shape:
        r = ChoiceCriterion.ROUTINE.index
        for a in np.flatnonzero(post[r] < prior[r]):
            errors.append(
                f"susceptibility_posterior[{r}][{a}] must be >= susceptibility_prior[{r}][{a}]"
            )
    return errors


@dataclass(frozen=True, eq=False)
class AgentProfile:
    """One email recipient.

    ``susceptibility_posterior`` defaults to a copy of the prior matrix, and
    ``clickthrough`` to ``(0.01, 0.10, 1, 1)``.
    """

    susceptibility_prior: np.ndarray
    baseline: np.ndarray
    susceptibility_posterior: np.ndarray | None = None
    clickthrough: np.ndarray | None = None
    is_target: bool = False

    def __post_init__(self):
        post = self.susceptibility_prior if self.susceptibility_posterior is None else self.susceptibility_posterior
        rho = self.clickthrough
        if rho is None:
            rho = (DEFAULT_RHO_DELIBERATIVE, DEFAULT_RHO_BEHAVIORAL, 1.0, 1.0)
        errors = agent_errors(self.susceptibility_prior, post, self.baseline, rho)
        if errors:
            raise ConfigurationError(errors)
        object.__setattr__(self, "susceptibility_prior", frozen(self.susceptibility_prior))
        object.__setattr__(self, "susceptibility_posterior", frozen(post))
        object.__setattr__(self, "baseline", frozen(self.baseline))
        object.__setattr__(self, "clickthrough", frozen(rho))
        object.__setattr__(self, "is_target", bool(self.is_target))

    @property
    def A(self) -> int:
        return int(self.susceptibility_prior.shape[1])

    @property
    def C(self) -> int:
        return int(self.susceptibility_prior.shape[0])

    def susceptibility(self, regime) -> np.ndarray:
        if InformationRegime.coerce(regime) is InformationRegime.POSTERIOR:
            return self.susceptibility_posterior
        return self.susceptibility_prior

    def replace(self, **changes) -> "AgentProfile":
        fields = dict(
            susceptibility_prior=self.susceptibility_prior,
            susceptibility_posterior=self.susceptibility_posterior,
            baseline=self.baseline,
            clickthrough=self.clickthrough,
            is_target=self.is_target,
        )
        fields.update(changes)
        return AgentProfile(**fields)

    def __eq__(self, other):
        if not isinstance(other, AgentProfile):
            return NotImplemented
        return (
            self.is_target == other.is_target
            and np.array_equal(self.susceptibility_prior, other.susceptibility_prior)
            and np.array_equal(self.susceptibility_posterior, other.susceptibility_posterior)
            and np.array_equal(self.baseline, other.baseline)
            and np.array_equal(self.clickthrough, other.clickthrough)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SoMDistribution:
    """Selection probabilities over the four choice criteria."""

    pi: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        if pi.shape != (N_CRITERIA,):
            raise ConfigurationError(f"pi must have length {N_CRITERIA}, got shape {pi.shape}")
        if np.any(pi < 0) or np.any(pi > 1) or abs(pi.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"pi must be a probability vector, got {pi.tolist()}")
        object.__setattr__(self, "pi", frozen(pi))

    @cached_property
    def cdf(self) -> tuple:
        return tuple(np.cumsum(self.pi).tolist())

    def __getitem__(self, c: ChoiceCriterion) -> float:
        return float(self.pi[ChoiceCriterion(c).index])

    def __iter__(self):
        return iter(self.pi.tolist())


@dataclass(frozen=True)
class PayoffMatrix:
    """Recipient payoffs per classification outcome (welfare reporting only)."""

    b_tn: float = 1.0
    b_tp: float = 1.0
    c_fn: float = 1.0
    c_fp: float = 1.0

    def __post_init__(self):
        for name in ("b_tn", "b_tp", "c_fn", "c_fp"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ConfigurationError(f"payoffs.{name} must be finite and >= 0")
            object.__setattr__(self, name, v)

    def malicious_email_payoff(self, clicked: bool) -> float:
        """Payoff for one phishing email: clicking is a false negative."""
        return -self.c_fn if clicked else self.b_tp


class PopulationArrays(NamedTuple):
    """Stacked per-agent arrays for vectorized evaluation."""

    prior: np.ndarray  # (N, C, A)
    posterior: np.ndarray  # (N, C, A)
    baseline: np.ndarray  # (N, C)
    clickthrough: np.ndarray  # (N, C)
    is_target: np.ndarray  # (N,) bool

    @classmethod
    def from_agents(cls, agents: Sequence[AgentProfile]) -> "PopulationArrays":
        agents = list(agents)
        if not agents:
            raise ConfigurationError("population is empty")
        shapes = {a.susceptibility_prior.shape for a in agents}
        if len(shapes) != 1:
            raise ConfigurationError(f"agents disagree on susceptibility shape: {sorted(shapes)}")
        return cls(
            np.stack([a.susceptibility_prior for a in agents]),
            np.stack([a.susceptibility_posterior for a in agents]),
            np.stack([a.baseline for a in agents]),
            np.stack([a.clickthrough for a in agents]),
            np.array([a.is_target for a in agents], dtype=bool),
        )

    @property
    def A(self) -> int:
        return int(self.prior.shape[2])

    def susceptibility(self, regime) -> np.ndarray:
        if InformationRegime.coerce(regime) is InformationRegime.POSTERIOR:
            return self.posterior
        return self.prior

    def subset(self, mask) -> "PopulationArrays":
        return PopulationArrays(*(arr[mask] for arr in self))

    def targets(self) -> "PopulationArrays":
        return self.subset(self.is_target)


def _alpha_vector(alpha) -> np.ndarray:
    if isinstance(alpha, CueBundle):
        return alpha.alpha
    return np.asarray(alpha, dtype=float)


def match_quality(alpha, agent: AgentProfile, c, regime=InformationRegime.PRIOR) -> float:
    """``baseline_c + susceptibility_c . alpha`` under the chosen regime."""
    x = _alpha_vector(alpha)
    c = ChoiceCriterion(c)
    row = agent.susceptibility(regime)[c.index]
    if x.shape != row.shape:
        raise ConfigurationError(
            f"cue bundle has {x.shape[0] if x.ndim else 0} components, agent expects {row.shape[0]}"
        )
    return float(agent.baseline[c.index] + row @ x)


def som_distribution(alpha, agent: AgentProfile, regime=InformationRegime.PRIOR) -> SoMDistribution:
    """Selection probabilities for one agent and one bundle."""
    m = np.array([match_quality(alpha, agent, c, regime) for c in CRITERIA])
    return SoMDistribution(m / m.sum())


def som_matrix(alphas, population: PopulationArrays, regime=InformationRegime.PRIOR) -> np.ndarray:
    """Vectorized selection probabilities.

    Args:
        alphas: bundles, shape (P, A) or (A,).
        population: stacked agent arrays with N agents.
        regime: information regime selecting the susceptibility matrices.

    Returns:
        Array of shape (P, N, C), or (N, C) for a single bundle.
    """
    x = np.asarray(alphas, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    S = population.susceptibility(regime)
    if x.shape[1] != S.shape[2]:
        raise ConfigurationError(f"cue bundles have {x.shape[1]} components, agents expect {S.shape[2]}")
    m = population.baseline[None, :, :] + np.einsum("nca,pa->pnc", S, x)
    pi = m / m.sum(axis=2, keepdims=True)
    return pi[0] if single else pi


def sample_criterion(dist: SoMDistribution, rng) -> ChoiceCriterion:
    """Inverse-CDF draw over the fixed order Deliberative..Routine.

    Consumes exactly one uniform from ``rng`` (anything with ``random()``).
    """
    u = rng.random()
    for c, edge in zip(CRITERIA, dist.cdf):
        if u < edge:
            return c
    # cumulative sum fell a hair short of 1: take the last criterion with mass
    for c in reversed(CRITERIA):
        if dist.pi[c.index] > 0:
            return c
    raise AssertionError("unreachable: probability vector has no mass")


def resolve_clickthrough(c, agent: AgentProfile, rng) -> bool:
    """Whether the recipient clicks given the operative criterion.

    Impulsive and Routine click without consuming a draw; the other two
    consume exactly one uniform.
    """
    c = ChoiceCriterion(c)
    if c in _ALWAYS_CLICK:
        return True
    return rng.random() < agent.clickthrough[c.index]
