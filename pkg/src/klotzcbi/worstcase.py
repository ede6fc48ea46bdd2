"""Worst-case prior constructions and conservative confidence.

The conservative confidence in a failure-rate bound b is the infimum of
the posterior P(X <= b | evidence) over every prior consistent with the
stated constraints.  The infimum is attained (as a limit) by discrete
priors supported on a handful of limit points, and the attaining prior
has a closed-form structure per parameter regime:

* failure-free evidence: four-point priors whose shape depends on how
  phi1/phi2 compare with theta / 1-theta;
* evidence with failures: the support locations move with the transition
  counts, so the exact lambda-coordinates are recovered by per-line
  one-dimensional optimisation, which is exact because the likelihood is
  unimodal along every cell edge;
* strong/weak prior belief in independent, failure-free executions:
  the diagonal mass is pinned first (to the diagonal argmax or argmin of
  the failure-free likelihood), then the off-diagonal mass is allocated
  as usual.

Two facts organise the search.  First, mass constrained to x > eps is
never better placed on the numerator side x <= b: moving it beyond b
(where the bound indicator vanishes) can only lower the posterior ratio,
because adding a term to both numerator and denominator pulls a ratio
below one upwards.  Second, with per-cell locations fixed, the remaining
freedom is how much of the quantile mass theta sits below/above the
diagonal, a two-variable linear-fractional program whose optimum lies at
a vertex of a small polygon.  Enumerating those vertices is therefore an
exact minimisation, not a heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .klotz import (
    NEG_INF,
    IllDefinedLikelihoodError,
    KlotzPoint,
    ObservationSummary,
    Outcome,
    TransitionCounts,
    ValidationError,
    golden_max,
    likelihood_argmax,
    log_likelihood,
    lower_envelope,
    transitions_from_summary,
)
from .priors import (
    AssessmentResult,
    DiscretePrior,
    IndependenceBelief,
    LambdaSide,
    PriorKnowledge,
    SupportPoint,
    XSide,
    posterior_confidence,
)

__all__ = [
    "ScenarioRegime",
    "Theorem",
    "UnsupportedRegimeError",
    "conservative_confidence",
    "engine_worst_prior",
    "independence_belief_worst_prior",
    "no_failure_worst_prior",
    "univariate_worst_prior",
    "with_failure_worst_prior",
]

_TOL = 1e-12


class UnsupportedRegimeError(ValueError):
    """The requested construction is not established for these parameters."""


class Theorem(str, Enum):
    UNIVARIATE = "Univariate"
    NO_FAILURES = "NoFailures"
    WITH_FAILURES = "WithFailures"
    STRONG_INDEPENDENCE = "StrongIndependence"
    WEAK_INDEPENDENCE = "WeakIndependence"


@dataclass(frozen=True)
class ScenarioRegime:
    """Structured form of a regime tag: which theorem applied, under which
    parameter-range branch (e.g. "phi1>=theta" or "r=0,phi2>=theta")."""

    theorem: Theorem
    branch: str

    @property
    def tag(self) -> str:
        return f"{self.theorem.value}/{self.branch}" if self.branch else self.theorem.value

    @classmethod
    def parse(cls, tag: str) -> "ScenarioRegime":
        head, _, rest = tag.partition("/")
        return cls(Theorem(head), rest)


# ---------------------------------------------------------------------------
# tagged candidate locations


@dataclass(frozen=True)
class _Candidate:
    point: KlotzPoint
    x_side: XSide
    lambda_side: LambdaSide
    log_l: float


def _safe_log_l(x: float, lam: float, t: TransitionCounts) -> float:
    lam = min(max(lam, lower_envelope(x)), 1.0)
    try:
        return log_likelihood(KlotzPoint(x, lam), t)
    except IllDefinedLikelihoodError:
        return NEG_INF


def _num_candidate(x: float, lam: float, t: TransitionCounts, cls: int) -> _Candidate:
    # cls: -1 below-diagonal cell, 0 on-diagonal, +1 above-diagonal
    side = LambdaSide.EXACT
    if lam == x and cls < 0:
        side = LambdaSide.FROM_BELOW
    elif lam == x and cls > 0:
        side = LambdaSide.FROM_ABOVE
    return _Candidate(KlotzPoint(x, lam), XSide.EXACT, side, _safe_log_l(x, lam, t))


def _keep_min(cands: list[_Candidate]) -> _Candidate:
    best = cands[0]
    for c in cands[1:]:
        if c.log_l < best.log_l:
            best = c
    return best


def _keep_max(cands: list[_Candidate]) -> _Candidate:
    best = cands[0]
    for c in cands[1:]:
        if c.log_l > best.log_l:
            best = c
    return best


def _numerator_minima(pk: PriorKnowledge, t: TransitionCounts) -> dict[int, _Candidate]:
    """Likelihood minima of the three x <= eps cells.

    Along every cell edge the likelihood is unimodal, so the minimum over
    a cell sits at one of its corner points.  Candidate order breaks ties
    toward the eps-variant, keeping constructions deterministic.
    """
    pl, eps = pk.p_l, pk.epsilon
    below = [
        _num_candidate(eps, 0.0, t, -1),
        _num_candidate(pl, 0.0, t, -1),
        _num_candidate(eps, eps, t, -1),
        _num_candidate(pl, pl, t, -1),
    ]
    on = [
        _num_candidate(eps, eps, t, 0),
        _num_candidate(pl, pl, t, 0),
    ]
    above = [
        _num_candidate(eps, 1.0, t, +1),
        _num_candidate(pl, 1.0, t, +1),
        _num_candidate(eps, eps, t, +1),
        _num_candidate(pl, pl, t, +1),
    ]
    return {-1: _keep_min(below), 0: _keep_min(on), +1: _keep_min(above)}


def _den_candidate(x: float, lam: float, b: float, t: TransitionCounts, cls: int) -> _Candidate:
    lam = min(max(lam, lower_envelope(x)), 1.0)
    x_side = XSide.FROM_RIGHT if x == b else XSide.EXACT
    side = LambdaSide.EXACT
    if lam == x and cls < 0:
        side = LambdaSide.FROM_BELOW
    elif lam == x and cls > 0:
        side = LambdaSide.FROM_ABOVE
    return _Candidate(KlotzPoint(x, lam), x_side, side, _safe_log_l(x, lam, t))


def _seg_max_vertical(x: float, lam_lo: float, lam_hi: float, t: TransitionCounts) -> tuple[float, float]:
    lam, val = golden_max(lambda l: _safe_log_l(x, l, t), lam_lo, lam_hi)
    return lam, val


def _denominator_maxima(pk: PriorKnowledge, b: float, t: TransitionCounts) -> dict[int, _Candidate]:
    """Likelihood maxima of the three x >= b cells (approached from the right).

    The cell maximum is the global stationary point when it falls inside
    the cell, otherwise a point on one of the cell's edges, each of which
    is a line the likelihood is unimodal along.
    """
    hi = 1.0 - 1e-12
    try:
        star = likelihood_argmax(t)
    except ValidationError:
        star = None

    def interior(cls: int) -> list[_Candidate]:
        if star is None:
            return []
        if star.x <= b:
            return []
        rel = star.lam - star.x
        if (cls < 0 and rel < 0) or (cls > 0 and rel > 0) or (cls == 0 and rel == 0):
            return [_den_candidate(star.x, star.lam, b, t, cls)]
        return []

    # below-diagonal: corners, interior, then the four bounding edges
    below = [
        _den_candidate(b, b, b, t, -1),
        _den_candidate(b, 0.0, b, t, -1),
    ]
    below += interior(-1)
    lam_e, _ = _seg_max_vertical(b, 0.0, b, t)
    below.append(_den_candidate(b, lam_e, b, t, -1))
    d_e, _ = golden_max(lambda d: _safe_log_l(d, d, t), b, hi)
    below.append(_den_candidate(d_e, d_e, b, t, -1))
    x_e, _ = golden_max(lambda x: _safe_log_l(x, 0.0, t), b, 0.5)
    below.append(_den_candidate(x_e, 0.0, b, t, -1))
    lam_env, _ = golden_max(lambda l: _safe_log_l(1.0 / (2.0 - l), l, t), 0.0, hi)
    below.append(_den_candidate(1.0 / (2.0 - lam_env), lam_env, b, t, -1))

    # on-diagonal
    on = [_den_candidate(b, b, b, t, 0)]
    d_e, _ = golden_max(lambda d: _safe_log_l(d, d, t), b, hi)
    on.append(_den_candidate(d_e, d_e, b, t, 0))
    if (
        t.first is Outcome.FAILURE
        and t.alpha == 0
        and t.beta == 0
        and t.delta == 0
    ):
        # all-failure chain: the diagonal limit at (1,1) is the value 1
        on.append(_Candidate(KlotzPoint(1.0, 1.0), XSide.EXACT, LambdaSide.EXACT, 0.0))

    # above-diagonal
    above = [
        _den_candidate(b, 1.0, b, t, +1),
        _den_candidate(b, b, b, t, +1),
    ]
    above += interior(+1)
    lam_e, _ = _seg_max_vertical(b, b, 1.0, t)
    above.append(_den_candidate(b, lam_e, b, t, +1))
    d_e, _ = golden_max(lambda d: _safe_log_l(d, d, t), b, hi)
    above.append(_den_candidate(d_e, d_e, b, t, +1))
    x_e, _ = golden_max(lambda x: _safe_log_l(x, 1.0, t), b, hi)
    above.append(_den_candidate(x_e, 1.0, b, t, +1))

    return {-1: _keep_max(below), 0: _keep_max(on), +1: _keep_max(above)}


# ---------------------------------------------------------------------------
# mass allocation


def allocation_vertices(theta: float, phi1: float, phi2: float) -> list[tuple[float, float]]:
    """Vertices of the feasible (below-mass, above-mass) split of theta.

    tb/ta are the amounts of the quantile mass theta carried below/above
    the diagonal.  Feasibility: tb, ta >= 0, tb <= phi1, ta <= phi2,
    tb + ta <= theta, and the on-diagonal remainder beyond eps must stay
    nonnegative: tb + ta >= theta + phi1 + phi2 - 1.
    """
    lo_sum = theta + phi1 + phi2 - 1.0
    lines = [
        (1.0, 0.0, 0.0),        # tb = 0
        (0.0, 1.0, 0.0),        # ta = 0
        (1.0, 0.0, phi1),       # tb = phi1
        (0.0, 1.0, phi2),       # ta = phi2
        (1.0, 1.0, theta),      # tb + ta = theta
        (1.0, 1.0, lo_sum),     # tb + ta = lower bound
    ]

    def feasible(tb: float, ta: float) -> bool:
        return (
            tb >= -_TOL
            and ta >= -_TOL
            and tb <= phi1 + _TOL
            and ta <= phi2 + _TOL
            and tb + ta <= theta + _TOL
            and tb + ta >= lo_sum - _TOL
        )

    verts: list[tuple[float, float]] = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            a1, b1, c1 = lines[i]
            a2, b2, c2 = lines[j]
            det = a1 * b2 - a2 * b1
            if abs(det) < 1e-15:
                continue
            tb = (c1 * b2 - c2 * b1) / det
            ta = (a1 * c2 - a2 * c1) / det
            if feasible(tb, ta):
                tb = min(max(tb, 0.0), phi1)
                ta = min(max(ta, 0.0), phi2)
                if all(abs(tb - u) > 1e-14 or abs(ta - v) > 1e-14 for u, v in verts):
                    verts.append((tb, ta))
    verts.sort()
    return verts


def _assemble(entries: list[tuple[_Candidate, float]]) -> DiscretePrior:
    merged: dict[tuple, tuple[_Candidate, float]] = {}
    for cand, mass in entries:
        if mass <= _TOL:
            continue
        key = (cand.point.x, cand.point.lam, cand.x_side, cand.lambda_side)
        if key in merged:
            prev_c, prev_m = merged[key]
            merged[key] = (prev_c, prev_m + mass)
        else:
            merged[key] = (cand, mass)
    support = [
        SupportPoint(c.point, m, c.x_side, c.lambda_side) for c, m in merged.values()
    ]
    return DiscretePrior(support)


def engine_worst_prior(pk: PriorKnowledge, t: TransitionCounts, b: float) -> tuple[DiscretePrior, float]:
    """Exact infimum search over limit-point allocations; returns (prior, confidence).

    Fixes per-cell extremal locations by line searches, then evaluates the
    posterior at every vertex of the mass-split polygon; the least value
    is the infimum and the corresponding prior is its witness.
    """
    mins = _numerator_minima(pk, t)
    maxs = _denominator_maxima(pk, b, t)
    theta, phi1, phi2 = pk.theta, pk.phi1, pk.phi2

    best: tuple[float, bool, DiscretePrior] | None = None
    for tb, ta in allocation_vertices(theta, phi1, phi2):
        entries = [
            (mins[-1], tb),
            (mins[+1], ta),
            (mins[0], theta - tb - ta),
            (maxs[-1], phi1 - tb),
            (maxs[+1], phi2 - ta),
            (maxs[0], 1.0 - theta - phi1 - phi2 + tb + ta),
        ]
        prior = _assemble(entries)
        res = posterior_confidence(prior, t, b)
        key = (res.confidence, res.degenerate)
        if best is None or key < (best[0], best[1]):
            best = (res.confidence, res.degenerate, prior)
    assert best is not None
    return best[2], best[0]


# ---------------------------------------------------------------------------
# explicit constructions


def _eps_floor_point(pk: PriorKnowledge, t: TransitionCounts, mass: float) -> tuple[_Candidate, float]:
    """Mass at (eps, 0), tagged below-diagonal (a limit when eps = 0)."""
    return _num_candidate(pk.epsilon, 0.0, t, -1), mass


def univariate_worst_prior(pk: PriorKnowledge, b: float) -> DiscretePrior:
    """Two diagonal points: theta at the engineering goal, the rest just past b."""
    pk.check_claim(b)
    eps, theta = pk.epsilon, pk.theta
    if theta >= 1.0:
        return DiscretePrior([SupportPoint(KlotzPoint(eps, eps), 1.0)])
    return DiscretePrior(
        [
            SupportPoint(KlotzPoint(eps, eps), theta),
            SupportPoint(KlotzPoint(b, b), 1.0 - theta, x_side=XSide.FROM_RIGHT),
        ]
    )


def _no_failure_branches(pk: PriorKnowledge, b: float, t: TransitionCounts) -> list[tuple[str, DiscretePrior]]:
    theta, phi1, phi2 = pk.theta, pk.phi1, pk.phi2
    eps = pk.epsilon
    at_b_top = _Candidate(KlotzPoint(b, 1.0), XSide.FROM_RIGHT, LambdaSide.EXACT, 0.0)
    at_b_diag = _Candidate(KlotzPoint(b, b), XSide.FROM_RIGHT, LambdaSide.EXACT, 0.0)
    at_b_below = _Candidate(KlotzPoint(b, b), XSide.FROM_RIGHT, LambdaSide.FROM_BELOW, 0.0)
    eps_diag = _Candidate(KlotzPoint(eps, eps), XSide.EXACT, LambdaSide.EXACT, 0.0)
    eps_above = _Candidate(KlotzPoint(eps, eps), XSide.EXACT, LambdaSide.FROM_ABOVE, 0.0)

    out: list[tuple[str, DiscretePrior]] = []
    if phi1 >= theta:
        prior = _assemble(
            [
                _eps_floor_point(pk, t, theta),
                (at_b_top, phi2),
                (at_b_below, phi1 - theta),
                (at_b_diag, 1.0 - phi1 - phi2),
            ]
        )
        out.append(("phi1>=theta", prior))
    if phi2 >= 1.0 - theta:
        prior = _assemble(
            [
                _eps_floor_point(pk, t, phi1),
                (eps_diag, 1.0 - phi1 - phi2),
                (eps_above, phi2 - (1.0 - theta)),
                (at_b_top, 1.0 - theta),
            ]
        )
        out.append(("phi2>=1-theta", prior))
    if phi1 <= theta and phi2 <= 1.0 - theta:
        prior = _assemble(
            [
                _eps_floor_point(pk, t, phi1),
                (eps_diag, theta - phi1),
                (at_b_top, phi2),
                (at_b_diag, 1.0 - theta - phi2),
            ]
        )
        out.append(("phi1<=theta,phi2<=1-theta", prior))
    return out


def no_failure_worst_prior(pk: PriorKnowledge, b: float, n: int) -> DiscretePrior:
    """Worst-case prior for ``n`` failure-free executions.

    Every branch construction whose parameter range applies is evaluated
    and the least-confidence one returned; the ranges overlap and the
    infimum over a union of feasible constructions is the least of them.
    """
    prior, _ = _no_failure_best(pk, b, n)
    return prior


def _no_failure_best(pk: PriorKnowledge, b: float, n: int) -> tuple[DiscretePrior, str]:
    pk.check_claim(b)
    obs = ObservationSummary.from_counts(n=n, s=0, r=0)
    t = transitions_from_summary(obs)
    best: tuple[float, str, DiscretePrior] | None = None
    for tag, prior in _no_failure_branches(pk, b, t):
        conf = posterior_confidence(prior, t, b).confidence
        if best is None or conf < best[0]:
            best = (conf, tag, prior)
    assert best is not None, "branch conditions are exhaustive"
    return best[2], best[1]


def with_failure_worst_prior(pk: PriorKnowledge, b: float, obs: ObservationSummary) -> DiscretePrior:
    """Worst-case prior for evidence containing failures (s >= 1)."""
    pk.check_claim(b)
    if obs.s < 1:
        raise ValidationError("with-failure construction needs s >= 1")
    t = transitions_from_summary(obs)
    prior, _ = engine_worst_prior(pk, t, b)
    return prior


def _with_failure_regime_tag(pk: PriorKnowledge, t: TransitionCounts, confidence: float) -> str:
    theta, phi1, phi2 = pk.theta, pk.phi1, pk.phi2
    r_positive = t.gamma > 0
    parts = ["WithFailures", "r>0" if r_positive else "r=0"]
    if r_positive:
        if phi1 >= theta:
            parts.append("phi1>=theta")
        elif phi2 >= 1.0 - theta:
            parts.append("phi2>=1-theta")
        else:
            parts.append("phi1<=theta,phi2<=1-theta")
    else:
        if phi2 >= theta:
            parts.append("phi2>=theta")
        elif phi1 >= 1.0 - theta:
            parts.append("phi1>=1-theta")
        else:
            parts.append("phi1<=1-theta,phi2<=theta")
    if confidence == 0.0:
        parts.append("zero-confidence")
    else:
        l_pl = _safe_log_l(pk.p_l, pk.p_l, t)
        l_eps = _safe_log_l(pk.epsilon, pk.epsilon, t)
        parts.append("L(pl,pl)<=L(eps,eps)" if l_pl < l_eps else "L(pl,pl)>=L(eps,eps)")
    return "/".join(parts)


def independence_belief_worst_prior(pk: PriorKnowledge, b: float, n: int) -> DiscretePrior:
    """Worst-case prior under a strong or weak independence belief (s = 0).

    The belief pins the prior probability of "independent and failure-free
    executions" to its supremum (strong) or infimum (weak) over the
    feasible set, which fixes where the diagonal mass sits; the remaining
    masses are allocated as in the failure-free construction.  Proven only
    for strong: phi1 + phi2 >= 1 - theta and phi2 <= 1 - theta; weak:
    phi1 + phi2 >= theta and phi1 <= theta.  Outside those ranges the
    construction is refused.
    """
    pk.check_claim(b)
    obs = ObservationSummary.from_counts(n=n, s=0, r=0)
    t = transitions_from_summary(obs)
    theta, phi1, phi2 = pk.theta, pk.phi1, pk.phi2
    belief = pk.independence_belief

    if belief is IndependenceBelief.STRONG:
        if not (phi1 + phi2 >= 1.0 - theta - _TOL and phi2 <= 1.0 - theta + _TOL):
            raise UnsupportedRegimeError(
                "strong-belief construction needs phi1 + phi2 >= 1 - theta and phi2 <= 1 - theta"
            )
        diag_total = 1.0 - phi1 - phi2
        if theta >= diag_total:
            diag = [
                (_Candidate(KlotzPoint(pk.p_l, pk.p_l), XSide.EXACT, LambdaSide.EXACT, 0.0), diag_total)
            ]
            theta_off = theta - diag_total
        else:
            diag = [
                (_Candidate(KlotzPoint(pk.p_l, pk.p_l), XSide.EXACT, LambdaSide.EXACT, 0.0), theta),
                (
                    _Candidate(KlotzPoint(pk.epsilon, pk.epsilon), XSide.FROM_RIGHT, LambdaSide.EXACT, 0.0),
                    diag_total - theta,
                ),
            ]
            theta_off = 0.0
    elif belief is IndependenceBelief.WEAK:
        if not (phi1 + phi2 >= theta - _TOL and phi1 <= theta + _TOL):
            raise UnsupportedRegimeError(
                "weak-belief construction needs phi1 + phi2 >= theta and phi1 <= theta"
            )
        # Failure-free likelihood vanishes along the diagonal at (1,1), the
        # infimum of the belief probability; all diagonal mass sits there.
        diag = [(_Candidate(KlotzPoint(1.0, 1.0), XSide.EXACT, LambdaSide.EXACT, 0.0), 1.0 - phi1 - phi2)]
        theta_off = theta
    else:
        raise UnsupportedRegimeError("no independence belief declared")

    mins = _numerator_minima(pk, t)
    maxs = _denominator_maxima(pk, b, t)

    lo = max(0.0, theta_off - phi2)
    hi = min(phi1, theta_off)
    if lo > hi + _TOL:
        raise UnsupportedRegimeError("off-diagonal masses cannot absorb the quantile mass")
    best: tuple[float, DiscretePrior] | None = None
    for tb in {lo, hi}:
        ta = theta_off - tb
        entries = list(diag) + [
            (mins[-1], tb),
            (mins[+1], ta),
            (maxs[-1], phi1 - tb),
            (maxs[+1], phi2 - ta),
        ]
        prior = _assemble(entries)
        conf = posterior_confidence(prior, t, b).confidence
        if best is None or conf < best[0]:
            best = (conf, prior)
    assert best is not None
    return best[1]


def conservative_confidence(pk: PriorKnowledge, obs: ObservationSummary, b: float) -> AssessmentResult:
    """Dispatch to the applicable construction and evaluate its posterior."""
    pk.check_claim(b)
    t = transitions_from_summary(obs)

    if pk.independence_belief is not IndependenceBelief.NONE:
        if obs.s != 0:
            raise UnsupportedRegimeError(
                "independence-belief constructions are proven for failure-free evidence only"
            )
        prior = independence_belief_worst_prior(pk, b, obs.n)
        tag = (
            "StrongIndependence"
            if pk.independence_belief is IndependenceBelief.STRONG
            else "WeakIndependence"
        )
        return posterior_confidence(prior, t, b, pk=pk, regime=tag)

    if obs.s == 0:
        prior, branch = _no_failure_best(pk, b, obs.n)
        return posterior_confidence(prior, t, b, pk=pk, regime=f"NoFailures/{branch}")

    prior, conf = engine_worst_prior(pk, t, b)
    tag = _with_failure_regime_tag(pk, t, conf)
    return posterior_confidence(prior, t, b, pk=pk, regime=tag)
