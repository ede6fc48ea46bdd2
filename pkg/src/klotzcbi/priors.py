"""Prior-knowledge constraints and discrete bivariate priors.

An assessor's evidence is encoded as equality constraints on the joint
prior of (failure-rate X, dependence Lam):

    P(X >= p_l)   = 1        certainty in a lower bound
    P(X <= eps)   = theta    confidence the engineering goal was met
    P(Lam < X)    = phi1     confidence in negative dependence
    P(Lam > X)    = phi2     confidence in positive dependence

Worst-case priors place mass at *limit points*: locations approached
along a sequence from one side of a constraint line.  Side tags keep
that exact (no numerically perturbed coordinates), so the infimum's
strict-inequality semantics -- P(X < b | evidence), not P(X <= b) -- is
represented symbolically and is testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .klotz import (
    NEG_INF,
    KlotzPoint,
    ObservationSummary,
    TransitionCounts,
    ValidationError,
    log_likelihood,
    region_contains,
    transitions_from_summary,
)

__all__ = [
    "AssessmentResult",
    "DiscretePrior",
    "IndependenceBelief",
    "LambdaSide",
    "PriorKnowledge",
    "SupportPoint",
    "Violation",
    "XSide",
    "posterior_confidence",
    "validate_prior",
]

MASS_TOL = 1e-9


class IndependenceBelief(str, Enum):
    NONE = "none"
    STRONG = "strong"
    WEAK = "weak"


class XSide(str, Enum):
    EXACT = "exact"
    FROM_LEFT = "from_left"
    FROM_RIGHT = "from_right"


class LambdaSide(str, Enum):
    EXACT = "exact"
    FROM_ABOVE = "from_above"
    FROM_BELOW = "from_below"


class Violation(str, Enum):
    MASS_NOT_NORMALIZED = "MassNotNormalized"
    NEGATIVE_MASS = "NegativeMass"
    OUT_OF_REGION = "OutOfRegion"
    LOWER_BOUND_VIOLATED = "LowerBoundViolated"
    THETA_VIOLATED = "ThetaViolated"
    PHI1_VIOLATED = "Phi1Violated"
    PHI2_VIOLATED = "Phi2Violated"


@dataclass(frozen=True)
class PriorKnowledge:
    """The constraint parameters, plus the optional independence-belief mode."""

    p_l: float = 0.0
    epsilon: float = 0.0
    theta: float = 0.5
    phi1: float = 0.0
    phi2: float = 0.0
    independence_belief: IndependenceBelief = IndependenceBelief.NONE

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_l <= self.epsilon < 1.0:
            raise ValidationError(
                f"need 0 <= p_l <= epsilon < 1, got p_l={self.p_l}, epsilon={self.epsilon}"
            )
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError(f"theta={self.theta} outside [0, 1]")
        if self.phi1 < 0.0 or self.phi2 < 0.0 or self.phi1 + self.phi2 > 1.0 + 1e-15:
            raise ValidationError(
                f"need phi1, phi2 >= 0 and phi1 + phi2 <= 1, got {self.phi1}, {self.phi2}"
            )

    def check_claim(self, b: float) -> None:
        """Claim bounds must satisfy epsilon < b < 1/2.

        Behaviour of the worst-case constructions for b >= 1/2 is not
        established, so such claims are rejected rather than guessed at.
        """
        if not self.epsilon < b < 0.5:
            raise ValidationError(
                f"claim bound b={b} must satisfy epsilon={self.epsilon} < b < 0.5"
            )


@dataclass(frozen=True)
class SupportPoint:
    """A weighted, side-tagged location of a discrete prior.

    The tags encode limit points: ``x_side=FROM_RIGHT`` at x = b means the
    mass sits on a sequence approaching b from above, so the indicator of
    [X <= b] evaluates to 0 there.  On the diagonal, ``lambda_side``
    decides whether the mass counts as negative dependence, independence
    or positive dependence.
    """

    point: KlotzPoint
    mass: float
    x_side: XSide = XSide.EXACT
    lambda_side: LambdaSide = LambdaSide.EXACT

    def indicator_leq(self, b: float) -> bool:
        """Value of 1_{X <= b} honouring the x-side tag."""
        if self.point.x < b:
            return True
        if self.point.x > b:
            return False
        return self.x_side is not XSide.FROM_RIGHT

    def in_quantile(self, eps: float) -> bool:
        """Whether the mass counts toward P(X <= eps)."""
        return self.indicator_leq(eps)

    def below_lower_bound(self, p_l: float) -> bool:
        if self.point.x < p_l:
            return True
        return self.point.x == p_l and self.x_side is XSide.FROM_LEFT

    def dependence_class(self) -> int:
        """-1 below the diagonal, 0 on it, +1 above it (tag-aware)."""
        if self.point.lam > self.point.x:
            return 1
        if self.point.lam < self.point.x:
            return -1
        if self.lambda_side is LambdaSide.FROM_ABOVE:
            return 1
        if self.lambda_side is LambdaSide.FROM_BELOW:
            return -1
        return 0


@dataclass(frozen=True)
class DiscretePrior:
    """A finite set of weighted support points over the support region."""

    support: tuple[SupportPoint, ...]

    def __init__(self, support) -> None:
        object.__setattr__(self, "support", tuple(support))

    def total_mass(self) -> float:
        return math.fsum(sp.mass for sp in self.support)

    def mass_where(self, pred) -> float:
        return math.fsum(sp.mass for sp in self.support if pred(sp))

    def normalized(self) -> "DiscretePrior":
        total = self.total_mass()
        if total <= 0.0:
            raise ValidationError("cannot normalise a prior with no mass")
        return DiscretePrior(
            SupportPoint(sp.point, sp.mass / total, sp.x_side, sp.lambda_side)
            for sp in self.support
        )


def validate_prior(prior: DiscretePrior, pk: PriorKnowledge, tol: float = MASS_TOL) -> list[Violation]:
    """Check every structural and constraint invariant; violations are data."""
    out: list[Violation] = []
    if any(sp.mass < -tol for sp in prior.support):
        out.append(Violation.NEGATIVE_MASS)
    if any(not region_contains(sp.point) for sp in prior.support):
        out.append(Violation.OUT_OF_REGION)
    if abs(prior.total_mass() - 1.0) > max(tol, 1e-12):
        out.append(Violation.MASS_NOT_NORMALIZED)
    if any(sp.below_lower_bound(pk.p_l) for sp in prior.support if sp.mass > 0.0):
        out.append(Violation.LOWER_BOUND_VIOLATED)
    if abs(prior.mass_where(lambda sp: sp.in_quantile(pk.epsilon)) - pk.theta) > tol:
        out.append(Violation.THETA_VIOLATED)
    if abs(prior.mass_where(lambda sp: sp.dependence_class() < 0) - pk.phi1) > tol:
        out.append(Violation.PHI1_VIOLATED)
    if abs(prior.mass_where(lambda sp: sp.dependence_class() > 0) - pk.phi2) > tol:
        out.append(Violation.PHI2_VIOLATED)
    return out


@dataclass(frozen=True)
class AssessmentResult:
    """Posterior confidence plus the evidence trail that produced it.

    ``log_numerator``/``log_denominator`` are the log-space values of the
    two expectations whose ratio is the confidence; ``degenerate`` flags a
    zero denominator (every support point had zero likelihood), reported
    as confidence 0 so parameter sweeps stay total.
    """

    confidence: float
    prior: DiscretePrior
    regime: str
    log_numerator: float
    log_denominator: float
    degenerate: bool = False
    detail: dict = field(default_factory=dict)


def _logsumexp(terms: list[float]) -> float:
    finite = [t for t in terms if t != NEG_INF]
    if not finite:
        return NEG_INF
    m = max(finite)
    return m + math.log(math.fsum(math.exp(t - m) for t in finite))


def posterior_confidence(
    prior: DiscretePrior,
    obs: ObservationSummary | TransitionCounts,
    b: float,
    pk: PriorKnowledge | None = None,
    regime: str = "direct",
) -> AssessmentResult:
    """Exact posterior P(X <= b | evidence) for a discrete prior.

    The ratio of prior-weighted likelihoods is evaluated with
    log-sum-exp; the numerator honours each point's x-side tag.  When
    ``pk`` is supplied the prior is validated against it first and the
    claim bound is range-checked.
    """
    if pk is not None:
        pk.check_claim(b)
        violations = validate_prior(prior, pk)
        if violations:
            raise ValidationError(f"prior violates constraints: {[v.value for v in violations]}")
    t = obs if isinstance(obs, TransitionCounts) else transitions_from_summary(obs)

    num_terms: list[float] = []
    den_terms: list[float] = []
    for sp in prior.support:
        if sp.mass <= 0.0:
            continue
        term = math.log(sp.mass) + log_likelihood(sp.point, t)
        den_terms.append(term)
        if sp.indicator_leq(b):
            num_terms.append(term)
    log_num = _logsumexp(num_terms)
    log_den = _logsumexp(den_terms)
    if log_den == NEG_INF:
        return AssessmentResult(0.0, prior, regime, log_num, log_den, degenerate=True)
    confidence = math.exp(log_num - log_den) if log_num != NEG_INF else 0.0
    return AssessmentResult(min(confidence, 1.0), prior, regime, log_num, log_den)
