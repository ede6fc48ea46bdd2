"""Two-state Markov model of correlated pass/fail executions.

A system's executions are Bernoulli trials with first-order Markov
dependence, parameterised by

    x   = P(an execution fails)            (unconditional failure-rate)
    lam = P(failure | previous failure)    (dependence parameter)

Stationarity fixes the remaining transition probabilities:

    P(failure | previous success) = (1 - lam) * x / (1 - x)

All four transition probabilities lie in [0, 1] exactly on the region

    R = { (x, lam) : 0 <= x <= 1,  max(0, (2x-1)/x) <= lam <= 1 }.

The substitution y = (1 - lam) * x / (1 - x) maps R onto the unit square
in (lam, y) coordinates, where the likelihood factorises cleanly; both
coordinate systems are used below.  All likelihood arithmetic is done in
log-space: realistic campaigns have exponents up to 1e9 on bases near 1,
which underflows fatally in linear space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DomainError",
    "IllDefinedLikelihoodError",
    "KlotzPoint",
    "Outcome",
    "ObservationSummary",
    "TransitionCounts",
    "ValidationError",
    "correlation_coefficient",
    "diagonal_mode",
    "golden_max",
    "likelihood",
    "likelihood_argmax",
    "log_likelihood",
    "log_likelihood_ly",
    "log_likelihood_many",
    "lower_envelope",
    "region_contains",
    "transitions_from_summary",
]

NEG_INF = float("-inf")

#: Parameter tolerance for the derivative-free line searches.  Per-line
#: unimodality of the likelihood makes golden-section search exact up to
#: this resolution.
GOLDEN_TOL = 1e-9


class DomainError(ValueError):
    """A point lies outside the support region of the model."""


class IllDefinedLikelihoodError(DomainError):
    """The likelihood has no unambiguous value at the requested point.

    Only the corner (1, 1) is affected, and only when the first execution
    failed and failure is an absorbing state (delta = 0) while success
    transitions occurred.
    """


class ValidationError(ValueError):
    """Inconsistent observation, prior-knowledge or prior data."""


class Outcome(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"


def lower_envelope(x: float) -> float:
    """Smallest feasible dependence parameter at failure-rate ``x``.

    Equals max(0, (2x-1)/x); the indeterminate ratio at x = 0 is taken
    as 0 by continuity from x <= 1/2 where the envelope vanishes.
    """
    if x <= 0.5:
        return 0.0
    return (2.0 * x - 1.0) / x


@dataclass(frozen=True)
class KlotzPoint:
    """A (failure-rate, dependence) pair; ``lam`` is P(fail | prev fail)."""

    x: float
    lam: float

    def y(self) -> float:
        """Transformed coordinate y = (1-lam) x / (1-x); requires x < 1."""
        return (1.0 - self.lam) * self.x / (1.0 - self.x)


def region_contains(p: KlotzPoint) -> bool:
    """True iff ``p`` satisfies the support-region inequalities exactly."""
    if not (0.0 <= p.x <= 1.0):
        return False
    return lower_envelope(p.x) <= p.lam <= 1.0


def correlation_coefficient(p: KlotzPoint) -> float:
    """Correlation of two successive execution outcomes at ``p``.

    Zero on the diagonal (independent executions), positive above it
    (outcome clustering), negative below it (alternation).  The value is
    1 at the degenerate point x = 1.
    """
    if not region_contains(p):
        raise DomainError(f"point ({p.x}, {p.lam}) outside the support region")
    if p.x == 1.0:
        return 1.0
    return (p.lam - p.x) / (1.0 - p.x)


@dataclass(frozen=True)
class ObservationSummary:
    """Operational-testing evidence over ``n`` executions.

    ``s`` counts failed executions and ``r`` counts failures immediately
    preceded by a failure.  ``first``/``last`` select among the four
    transition-count reconstructions; they are forced for failure-free
    and all-failure campaigns.  ``n = 0`` encodes "no evidence yet"
    (likelihood identically 1).
    """

    n: int
    s: int
    r: int
    first: Outcome = Outcome.SUCCESS
    last: Outcome = Outcome.SUCCESS

    def __post_init__(self) -> None:
        if self.n < 0 or self.s < 0 or self.r < 0:
            raise ValidationError("n, s, r must be nonnegative")
        if self.s > self.n:
            raise ValidationError(f"s={self.s} exceeds n={self.n}")
        if self.n == 0:
            if self.s or self.r:
                raise ValidationError("n=0 forces s=r=0")
            return
        if self.s == 0:
            if self.r != 0:
                raise ValidationError("s=0 forces r=0")
            if self.first is not Outcome.SUCCESS or self.last is not Outcome.SUCCESS:
                raise ValidationError("a failure-free campaign must start and end in success")
        else:
            if not self.r < self.s:
                raise ValidationError(f"need r < s, got r={self.r}, s={self.s}")
        if self.s == self.n:
            if self.first is not Outcome.FAILURE or self.last is not Outcome.FAILURE:
                raise ValidationError("an all-failure campaign must start and end in failure")
            if self.r != self.n - 1:
                raise ValidationError("an all-failure campaign has r = n-1")
        # Any remaining inconsistency surfaces as a negative exponent.
        transitions_from_summary(self)

    @classmethod
    def from_counts(
        cls,
        n: int,
        s: int,
        r: int,
        first: Outcome | None = None,
        last: Outcome | None = None,
    ) -> "ObservationSummary":
        """Build a summary, filling unspecified endpoint outcomes.

        The convention is first = success where feasible, then last =
        success where feasible; the filled values are part of the result
        and should be echoed by any report built on it.  Explicitly
        supplied outcomes are never overridden: an inconsistent pair is
        rejected instead.
        """
        all_failed = n > 0 and s == n
        fill = [Outcome.FAILURE] if all_failed else [Outcome.SUCCESS, Outcome.FAILURE]
        firsts = [first] if first is not None else fill
        lasts = [last] if last is not None else fill
        err: Exception | None = None
        for f in firsts:
            for l in lasts:
                try:
                    return cls(n=n, s=s, r=r, first=f, last=l)
                except ValidationError as exc:
                    err = exc
        raise ValidationError(f"no consistent endpoint outcomes for (n={n}, s={s}, r={r}): {err}")


@dataclass(frozen=True)
class TransitionCounts:
    """Exponents of the likelihood: counts of the four transition kinds.

    alpha: success->failure, beta: success->success, gamma: failure->failure,
    delta: failure->success.  They satisfy alpha+beta+gamma+delta + 1 = n.
    ``first`` is the outcome of the initial execution; ``None`` marks the
    empty-evidence case n = 0.
    """

    alpha: int
    beta: int
    gamma: int
    delta: int
    first: Outcome | None

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma, self.delta) < 0:
            raise ValidationError(
                "negative transition count: "
                f"({self.alpha}, {self.beta}, {self.gamma}, {self.delta})"
            )

    @classmethod
    def empty(cls) -> "TransitionCounts":
        return cls(0, 0, 0, 0, None)

    @property
    def n(self) -> int:
        if self.first is None:
            return 0
        return self.alpha + self.beta + self.gamma + self.delta + 1


def transitions_from_summary(obs: ObservationSummary) -> TransitionCounts:
    """Reconstruct transition counts from (n, s, r, first, last).

    There is one closed form per (first, last) combination; an
    inconsistent summary produces a negative component and is rejected.
    """
    if obs.n == 0:
        return TransitionCounts.empty()
    n, s, r = obs.n, obs.s, obs.r
    key = (obs.first, obs.last)
    if key == (Outcome.FAILURE, Outcome.FAILURE):
        parts = (s - r - 1, n - 2 * s + r + 1, r, s - r - 1)
    elif key == (Outcome.SUCCESS, Outcome.FAILURE):
        parts = (s - r, n - 2 * s + r, r, s - r - 1)
    elif key == (Outcome.SUCCESS, Outcome.SUCCESS):
        parts = (s - r, n - 2 * s + r - 1, r, s - r)
    else:
        parts = (s - r - 1, n - 2 * s + r, r, s - r)
    if min(parts) < 0:
        raise ValidationError(
            f"summary (n={n}, s={s}, r={r}, first={obs.first.value}, last={obs.last.value}) "
            f"yields negative transition counts {parts}"
        )
    if s == 0 and parts[1] != n - 1:
        raise ValidationError("failure-free summary must give beta = n-1")
    return TransitionCounts(*parts, first=obs.first)


def _xlog(k: int, v: float) -> float:
    # k * log(v) under the 0**0 = 1 convention: a zero exponent
    # deactivates its factor entirely, so v is never even inspected.
    if k == 0:
        return 0.0
    if v <= 0.0:
        return NEG_INF
    return k * math.log(v)


def log_likelihood(p: KlotzPoint, t: TransitionCounts) -> float:
    """Natural log of the probability of the observed transitions at ``p``.

    Returns -inf where the likelihood vanishes.  Raises
    IllDefinedLikelihoodError at (1, 1) when the value is genuinely
    path-dependent (first execution failed, delta = 0, and success
    transitions occurred).
    """
    if not region_contains(p):
        raise DomainError(f"point ({p.x}, {p.lam}) outside the support region")
    if t.first is None:
        return 0.0
    x, lam = p.x, p.lam

    if t.first is Outcome.FAILURE:
        acc = NEG_INF if x <= 0.0 else math.log(x)
    else:
        acc = NEG_INF if x >= 1.0 else math.log1p(-x)
    acc += _xlog(t.gamma, lam)
    if t.delta > 0:
        acc += NEG_INF if lam >= 1.0 else t.delta * math.log1p(-lam)
    if acc == NEG_INF:
        return NEG_INF

    if t.alpha == 0 and t.beta == 0:
        return acc
    if x == 1.0:
        # Only reachable with first=failure and delta=0; the all-failure
        # chain (alpha = beta = 0) was already returned above.
        raise IllDefinedLikelihoodError("likelihood not well-defined at (1, 1)")
    y = (1.0 - lam) * x / (1.0 - x)
    acc += _xlog(t.alpha, y)
    if t.beta > 0:
        if y <= 0.5:
            acc += t.beta * math.log1p(-y)
        else:
            # 1 - y = (1 - x(2-lam)) / (1-x), formed without cancellation in y
            one_minus_y = max((1.0 - x * (2.0 - lam)) / (1.0 - x), 0.0)
            acc += _xlog(t.beta, one_minus_y)
    return acc


def likelihood(p: KlotzPoint, t: TransitionCounts) -> float:
    """exp of :func:`log_likelihood`; a probability in [0, 1]."""
    ll = log_likelihood(p, t)
    return 0.0 if ll == NEG_INF else math.exp(ll)


def log_likelihood_ly(lam: float, y: float, t: TransitionCounts) -> float:
    """Log-likelihood in (lam, y) coordinates, where the region is the unit square.

    Kept independent of :func:`log_likelihood` so the two coordinate forms
    can be checked against each other.
    """
    if not (0.0 <= lam <= 1.0 and 0.0 <= y <= 1.0):
        raise DomainError(f"({lam}, {y}) outside the unit square")
    if t.first is None:
        return 0.0
    denom = y + 1.0 - lam
    if t.first is Outcome.FAILURE:
        if denom <= 0.0:
            # lam = 1, y = 0: the whole x-axis collapses here.
            raise IllDefinedLikelihoodError("prefactor 0/0 at (lam, y) = (1, 0)")
        acc = NEG_INF if y <= 0.0 else math.log(y) - math.log(denom)
    else:
        if denom <= 0.0:
            raise IllDefinedLikelihoodError("prefactor 0/0 at (lam, y) = (1, 0)")
        acc = NEG_INF if lam >= 1.0 else math.log1p(-lam) - math.log(denom)
    acc += _xlog(t.alpha, y)
    if t.beta > 0:
        acc += NEG_INF if y >= 1.0 else t.beta * math.log1p(-y)
    acc += _xlog(t.gamma, lam)
    if t.delta > 0:
        acc += NEG_INF if lam >= 1.0 else t.delta * math.log1p(-lam)
    return acc


def log_likelihood_many(xs: np.ndarray, lams: np.ndarray, t: TransitionCounts) -> np.ndarray:
    """Vectorised :func:`log_likelihood` over parallel coordinate arrays.

    Ill-defined (1,1) evaluations are returned as -inf rather than raised;
    callers gridding the region are expected to have excluded that corner
    for the affected observation shapes.
    """
    xs = np.asarray(xs, dtype=float)
    lams = np.asarray(lams, dtype=float)
    if t.first is None:
        return np.zeros(np.broadcast(xs, lams).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        if t.first is Outcome.FAILURE:
            acc = np.where(xs > 0.0, np.log(np.maximum(xs, 1e-320)), NEG_INF)
        else:
            acc = np.where(xs < 1.0, np.log1p(-np.minimum(xs, 1.0)), NEG_INF)
        if t.gamma > 0:
            acc = acc + np.where(lams > 0.0, t.gamma * np.log(np.maximum(lams, 1e-320)), NEG_INF)
        if t.delta > 0:
            acc = acc + np.where(lams < 1.0, t.delta * np.log1p(-np.minimum(lams, 1.0)), NEG_INF)
        if t.alpha > 0 or t.beta > 0:
            safe_x = np.minimum(xs, 1.0 - 1e-17)
            y = (1.0 - lams) * safe_x / (1.0 - safe_x)
            if t.alpha > 0:
                term = np.where(y > 0.0, t.alpha * np.log(np.maximum(y, 1e-320)), NEG_INF)
                acc = acc + np.where(xs >= 1.0, NEG_INF, term)
            if t.beta > 0:
                omy = np.maximum((1.0 - safe_x * (2.0 - lams)) / (1.0 - safe_x), 0.0)
                term = np.where(
                    y <= 0.5,
                    t.beta * np.log1p(-np.minimum(y, 1.0)),
                    np.where(omy > 0.0, t.beta * np.log(np.maximum(omy, 1e-320)), NEG_INF),
                )
                acc = acc + np.where(xs >= 1.0, NEG_INF, term)
    return np.where(np.isnan(acc), NEG_INF, acc)


def diagonal_mode(t: TransitionCounts) -> float:
    """Failure-rate maximising the likelihood along the independence diagonal."""
    if t.first is None:
        raise ValidationError("no evidence: the diagonal likelihood is flat")
    n = t.n
    if t.first is Outcome.FAILURE:
        return (1 + t.alpha + t.gamma) / n
    return (t.alpha + t.gamma) / n


def golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max).

    Endpoints are evaluated too, so monotone sections resolve correctly.
    -inf values are tolerated.
    """
    if hi < lo:
        lo, hi = hi, lo
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best = max(((c, fc), (d, fd)), key=lambda p: p[1])
    for endpoint in (lo, hi):
        fe = f(endpoint)
        if fe > best[1]:
            best = (endpoint, fe)
    return best


def _profile_over_y(lam: float, t: TransitionCounts) -> tuple[float, float]:
    return golden_max(lambda y: _safe_ly(lam, y, t), 0.0, 1.0)


def _safe_ly(lam: float, y: float, t: TransitionCounts) -> float:
    try:
        return log_likelihood_ly(lam, y, t)
    except IllDefinedLikelihoodError:
        return NEG_INF


def _point_from_ly(lam: float, y: float) -> KlotzPoint:
    denom = y + 1.0 - lam
    x = y / denom if denom > 0.0 else 1.0
    x = min(max(x, 0.0), 1.0)
    lam = min(max(lam, lower_envelope(x)), 1.0)
    return KlotzPoint(x, lam)


def likelihood_argmax(t: TransitionCounts) -> KlotzPoint:
    """Global maximiser of the likelihood over the support region.

    Searches (lam, y) space with nested golden-section passes (the
    likelihood is unimodal along every axis-parallel line there and has a
    single interior stationary point), then sweeps the square's edges and
    the independence diagonal as fallbacks for boundary maxima.
    """
    if t.first is None:
        raise ValidationError("no evidence: the likelihood is flat")
    # All-failure chain: failure is absorbing and observed throughout.
    if t.alpha == 0 and t.beta == 0 and t.delta == 0 and t.first is Outcome.FAILURE:
        return KlotzPoint(1.0, 1.0)

    candidates: list[tuple[float, KlotzPoint]] = []

    lam_star, val = golden_max(lambda lam: _profile_over_y(lam, t)[1], 0.0, 1.0)
    y_star = _profile_over_y(lam_star, t)[0]
    candidates.append((val, _point_from_ly(lam_star, y_star)))

    for lam_edge in (0.0, 1.0):
        y_e, v = golden_max(lambda y: _safe_ly(lam_edge, y, t), 0.0, 1.0)
        candidates.append((v, _point_from_ly(lam_edge, y_e)))
    for y_edge in (0.0, 1.0):
        lam_e, v = golden_max(lambda lam: _safe_ly(lam, y_edge, t), 0.0, 1.0)
        candidates.append((v, _point_from_ly(lam_e, y_edge)))
    d, v = golden_max(
        lambda z: log_likelihood(KlotzPoint(z, z), t), 0.0, 1.0 - 1e-12
    )
    candidates.append((v, KlotzPoint(d, d)))

    best_val, best_point = max(candidates, key=lambda c: c[0])
    del best_val
    return best_point
