"""Curve generation, baselines and confidence-bound root finding.

Everything a parameter study needs: confidence-versus-n (or versus any
other knob) tables for the conservative methods and for two
independence-assuming baselines, large-n asymptotes, and inversion of a
method's confidence-in-b function to the least bound supporting a target
confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .klotz import ObservationSummary, ValidationError, transitions_from_summary
from .priors import IndependenceBelief, PriorKnowledge, posterior_confidence
from .worstcase import (
    UnsupportedRegimeError,
    conservative_confidence,
    univariate_worst_prior,
)

__all__ = [
    "FitError",
    "Method",
    "NoBoundError",
    "SweepAxis",
    "SweepRow",
    "SweepSpec",
    "asymptote",
    "AsymptoteResult",
    "beta_baseline",
    "confidence_bound",
    "curve",
    "method_confidence",
    "regularized_incomplete_beta",
    "univariate_confidence",
]


class FitError(ValueError):
    """The requested prior quantile cannot be met by the shape family."""


class NoBoundError(ValueError):
    """No bound below 1/2 reaches the target confidence."""


class Method(str, Enum):
    UNIVARIATE = "univariate"
    KLOTZ_CBI = "klotz_cbi"
    BETA_BI = "beta_bi"
    STRONG_PK5 = "strong_pk5"
    WEAK_PK6 = "weak_pk6"


class SweepAxis(str, Enum):
    N = "n"
    B = "b"
    EPSILON = "epsilon"
    THETA = "theta"
    PHI1 = "phi1"
    PHI2 = "phi2"
    S = "s"
    R = "r"


# ---------------------------------------------------------------------------
# regularized incomplete beta, continued-fraction evaluation
#
# Needed at extreme shape parameters (posterior updates add n up to 1e9 to
# the second shape), where series expansions are hopeless.  Classic
# even/odd-stepped continued fraction with the symmetry reduction
# I_x(a,b) = 1 - I_{1-x}(b,a) applied outside the rapid-convergence zone.

_BETAINC_EPS = 1e-15
_BETAINC_ITMAX = 600
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETAINC_ITMAX + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETAINC_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction stalled (a={a}, b={b}, x={x})")


def _lgamma_ratio(small: float, big: float) -> float:
    """lgamma(big + small) - lgamma(big), formed without cancellation.

    Direct subtraction loses ~big * ulp absolute accuracy, which at
    big ~ 1e9 wrecks six digits of the beta prefactor; the Stirling
    expansion keeps the difference term-by-term instead.
    """
    if big < 1e4:
        return math.lgamma(big + small) - math.lgamma(big)
    return (
        (big - 0.5) * math.log1p(small / big)
        + small * math.log(big + small)
        - small
        - small / (12.0 * big * (big + small))
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValidationError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        _lgamma_ratio(min(a, b), max(a, b))
        - math.lgamma(min(a, b))
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front) if log_front > -745.0 else 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return min(max(front * _betacf(a, b, x) / a, 0.0), 1.0)
    return min(max(1.0 - front * _betacf(b, a, 1.0 - x) / b, 0.0), 1.0)


def _fit_beta_second_shape(alpha_shape: float, eps: float, theta: float) -> float:
    """Second Beta shape making P(X <= eps) = theta, by monotone bisection."""
    if not 0.0 < theta < 1.0:
        raise FitError("the quantile level must be inside (0, 1)")
    if eps <= 0.0 or eps >= 1.0:
        raise FitError("a continuous Beta prior cannot place mass at an endpoint quantile")

    def quantile_gap(beta_shape: float) -> float:
        return regularized_incomplete_beta(alpha_shape, beta_shape, eps) - theta

    lo, hi = 1e-8, 1.0
    while quantile_gap(hi) < 0.0:
        hi *= 4.0
        if hi > 1e18:
            raise FitError(
                f"P(X <= {eps}) = {theta} unreachable for first shape {alpha_shape}"
            )
    if quantile_gap(lo) > 0.0:
        raise FitError(
            f"P(X <= {eps}) = {theta} unreachable for first shape {alpha_shape}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if quantile_gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def beta_baseline(
    alpha_shape: float,
    pk: PriorKnowledge,
    obs: ObservationSummary,
    b: float,
) -> float:
    """Posterior P(X <= b) from a conjugate Beta prior fitted to the quantile.

    The prior is Beta(alpha_shape, fitted) with the second shape chosen so
    P(X <= eps) = theta; executions are treated as independent, so n
    failure-free observations update the second shape by n.
    """
    if obs.s != 0:
        raise ValidationError("the conjugate baseline is defined for failure-free evidence")
    fitted = _fit_beta_second_shape(alpha_shape, pk.epsilon, pk.theta)
    return regularized_incomplete_beta(alpha_shape, fitted + obs.n, b)


# ---------------------------------------------------------------------------
# method dispatch


def univariate_confidence(pk: PriorKnowledge, obs: ObservationSummary, b: float) -> float:
    """Confidence from the independence-assuming two-point worst-case prior."""
    prior = univariate_worst_prior(pk, b)
    return posterior_confidence(prior, transitions_from_summary(obs), b).confidence


def method_confidence(
    method: Method,
    pk: PriorKnowledge,
    obs: ObservationSummary,
    b: float,
    beta_alpha: float = 0.03,
) -> tuple[float, str]:
    """(confidence, regime tag) for one method on one scenario."""
    if method is Method.UNIVARIATE:
        return univariate_confidence(pk, obs, b), "Univariate"
    if method is Method.BETA_BI:
        return beta_baseline(beta_alpha, pk, obs, b), "BetaBI"
    if method is Method.KLOTZ_CBI:
        pk_eff = replace(pk, independence_belief=IndependenceBelief.NONE)
        res = conservative_confidence(pk_eff, obs, b)
        return res.confidence, res.regime
    belief = IndependenceBelief.STRONG if method is Method.STRONG_PK5 else IndependenceBelief.WEAK
    pk_eff = replace(pk, independence_belief=belief)
    res = conservative_confidence(pk_eff, obs, b)
    return res.confidence, res.regime


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    pk: PriorKnowledge
    obs: ObservationSummary
    b: float
    axis: SweepAxis
    values: tuple
    methods: tuple[Method, ...]
    beta_alpha: float = 0.03

    def __post_init__(self) -> None:
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "methods", tuple(self.methods))
        if any(b0 >= b1 for b0, b1 in zip(vals, vals[1:])):
            raise ValidationError("axis values must be strictly increasing")


@dataclass(frozen=True)
class SweepRow:
    method: Method
    axis: SweepAxis
    value: float
    n: int
    s: int
    r: int
    b: float
    confidence: float | None
    regime: str
    first: str
    last: str
    error: str | None = None


def _instantiate(spec: SweepSpec, value) -> tuple[PriorKnowledge, ObservationSummary, float]:
    pk, obs, b = spec.pk, spec.obs, spec.b
    axis = spec.axis
    if axis is SweepAxis.N:
        obs = ObservationSummary.from_counts(int(value), obs.s, obs.r)
    elif axis is SweepAxis.S:
        obs = ObservationSummary.from_counts(obs.n, int(value), min(obs.r, max(int(value) - 1, 0)))
    elif axis is SweepAxis.R:
        obs = ObservationSummary.from_counts(obs.n, obs.s, int(value))
    elif axis is SweepAxis.B:
        b = float(value)
    elif axis is SweepAxis.EPSILON:
        pk = replace(pk, epsilon=float(value), p_l=min(pk.p_l, float(value)))
    elif axis is SweepAxis.THETA:
        pk = replace(pk, theta=float(value))
    elif axis is SweepAxis.PHI1:
        pk = replace(pk, phi1=float(value))
    elif axis is SweepAxis.PHI2:
        pk = replace(pk, phi2=float(value))
    return pk, obs, b


def curve(spec: SweepSpec) -> list[SweepRow]:
    """One row per (method, axis value); per-row errors recorded, not raised."""
    rows: list[SweepRow] = []
    for method in spec.methods:
        for value in spec.values:
            try:
                pk, obs, b = _instantiate(spec, value)
                conf, regime = method_confidence(method, pk, obs, b, spec.beta_alpha)
                rows.append(
                    SweepRow(
                        method, spec.axis, float(value), obs.n, obs.s, obs.r, b,
                        conf, regime, obs.first.value, obs.last.value,
                    )
                )
            except (ValidationError, UnsupportedRegimeError, FitError) as exc:
                rows.append(
                    SweepRow(
                        method, spec.axis, float(value), spec.obs.n, spec.obs.s,
                        spec.obs.r, spec.b, None, "", spec.obs.first.value,
                        spec.obs.last.value, error=str(exc),
                    )
                )
    return rows


# ---------------------------------------------------------------------------
# asymptotes and bounds


@dataclass(frozen=True)
class AsymptoteResult:
    value: float
    kind: str  # "certainty" | "horizontal" | "zero"
    detail: str = ""


def asymptote(pk: PriorKnowledge, b: float) -> AsymptoteResult:
    """Large-n limit of the conservative confidence under failure-free evidence.

    With a credible fault-free goal (eps = 0) the limit is the horizontal
    line theta / (theta + (1-b) min(phi2, 1-theta)); the min captures that
    at most 1-theta of mass can sit past the bound, so phi2 beyond that
    has no further effect.  Any eps > 0 with phi2 > 0 decays to zero:
    accumulating successes eventually favour the perfectly-correlated
    explanation over every nonzero failure-rate below the goal.
    """
    pk.check_claim(b)
    if pk.phi2 == 0.0:
        return AsymptoteResult(1.0, "certainty", "no prior weight on positive dependence")
    if pk.epsilon > 0.0:
        return AsymptoteResult(0.0, "zero", "eps > 0 with phi2 > 0 decays to zero confidence")
    effective = min(pk.phi2, 1.0 - pk.theta)
    value = pk.theta / (pk.theta + (1.0 - b) * effective)
    return AsymptoteResult(value, "horizontal")


def confidence_bound(
    pk: PriorKnowledge,
    obs: ObservationSummary,
    target_confidence: float,
    method: Method,
    beta_alpha: float = 0.03,
    rel_tol: float = 1e-6,
) -> float:
    """Least bound b with confidence >= target, by bisection in log b.

    Monotonicity of the method's confidence in b is verified by sampling
    before the bisection is trusted.
    """
    if not 0.0 < target_confidence < 1.0:
        raise NoBoundError(f"target confidence {target_confidence} outside (0, 1)")

    lo = max(pk.epsilon * (1.0 + 1e-9), 1e-12)
    hi = 0.5 * (1.0 - 1e-9)
    if lo >= hi:
        raise NoBoundError("no admissible bound range above epsilon")

    def conf(b: float) -> float:
        c, _ = method_confidence(method, pk, obs, b, beta_alpha)
        return c

    samples = [lo * (hi / lo) ** (i / 15.0) for i in range(16)]
    vals = [conf(bb) for bb in samples]
    if any(v1 < v0 - 1e-9 for v0, v1 in zip(vals, vals[1:])):
        raise NoBoundError("confidence is not monotone in b on (epsilon, 1/2)")
    if vals[-1] < target_confidence:
        raise NoBoundError(
            f"confidence reaches only {vals[-1]:.6g} < {target_confidence} below 1/2"
        )
    if vals[0] >= target_confidence:
        return lo

    log_lo, log_hi = math.log(lo), math.log(hi)
    while log_hi - log_lo > rel_tol:
        mid = 0.5 * (log_lo + log_hi)
        if conf(math.exp(mid)) >= target_confidence:
            log_hi = mid
        else:
            log_lo = mid
    return math.exp(log_hi)
