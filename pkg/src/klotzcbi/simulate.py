"""Seeded generation of execution-outcome sequences from the Markov chain.

Traces are bit-exact reproducible: the generator is PCG64 (recorded in
the trace metadata), one uniform draw is consumed per execution, and an
execution fails when its draw falls below the applicable failure
probability (x for the first, lam or (1-lam)x/(1-x) for the rest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .klotz import (
    DomainError,
    KlotzPoint,
    ObservationSummary,
    Outcome,
    ValidationError,
    region_contains,
)

__all__ = [
    "CampaignTrace",
    "EstimateResult",
    "GENERATOR_NAME",
    "estimate",
    "replicate_outcomes",
    "simulate",
    "summarize",
]

GENERATOR_NAME = "pcg64"


@dataclass(frozen=True)
class CampaignTrace:
    outcomes: tuple[Outcome, ...]
    ground_truth: KlotzPoint
    seed: int
    generator: str = GENERATOR_NAME


def _check_simulable(p: KlotzPoint, allow_degenerate: bool) -> None:
    if not region_contains(p):
        raise DomainError(f"point ({p.x}, {p.lam}) outside the support region")
    if p.x == 1.0 and p.lam == 1.0 and not allow_degenerate:
        raise DomainError(
            "(1, 1) only produces the all-failure chain; pass allow_degenerate=True to opt in"
        )


def simulate(p: KlotzPoint, n: int, seed: int, allow_degenerate: bool = False) -> CampaignTrace:
    """Draw one campaign of ``n`` executions at ground truth ``p``."""
    _check_simulable(p, allow_degenerate)
    if n < 1:
        raise ValidationError("a campaign needs at least one execution")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(n)
    fail_after_success = (1.0 - p.lam) * p.x / (1.0 - p.x) if p.x < 1.0 else 1.0
    outcomes = []
    failed = u[0] < p.x
    outcomes.append(Outcome.FAILURE if failed else Outcome.SUCCESS)
    for i in range(1, n):
        prob = p.lam if failed else fail_after_success
        failed = u[i] < prob
        outcomes.append(Outcome.FAILURE if failed else Outcome.SUCCESS)
    return CampaignTrace(tuple(outcomes), p, seed)


def replicate_outcomes(p: KlotzPoint, n: int, reps: int, seed: int) -> np.ndarray:
    """(reps, n) boolean failure matrix; row i equals simulate(p, n, ...) drawn in bulk.

    Row semantics match :func:`simulate`'s per-step uniform-draw rule, so
    frequency checks against the exact sequence probabilities apply.
    """
    _check_simulable(p, allow_degenerate=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((reps, n))
    fail_after_success = (1.0 - p.lam) * p.x / (1.0 - p.x) if p.x < 1.0 else 1.0
    out = np.empty((reps, n), dtype=bool)
    out[:, 0] = u[:, 0] < p.x
    for i in range(1, n):
        prob = np.where(out[:, i - 1], p.lam, fail_after_success)
        out[:, i] = u[:, i] < prob
    return out


def summarize(trace: CampaignTrace) -> ObservationSummary:
    """Count (n, s, r, first, last) from a trace."""
    fails = [o is Outcome.FAILURE for o in trace.outcomes]
    n = len(fails)
    s = sum(fails)
    r = sum(1 for i in range(1, n) if fails[i] and fails[i - 1])
    return ObservationSummary(
        n=n,
        s=s,
        r=r,
        first=trace.outcomes[0],
        last=trace.outcomes[-1],
    )


@dataclass(frozen=True)
class EstimateResult:
    x_hat: float
    x_se: float
    lambda_hat: float | None
    lambda_se: float | None
    executions: int
    failure_predecessors: int

    @property
    def lambda_defined(self) -> bool:
        return self.lambda_hat is not None


def estimate(traces: list[CampaignTrace]) -> EstimateResult:
    """Pooled frequency estimates of (x, lam) with frequentist standard errors.

    lam is estimated from transitions leaving a failure; with no failure
    among positions 1..n-1 of any trace it is reported as undefined.
    """
    if not traces:
        raise ValidationError("need at least one trace")
    total = 0
    fail_total = 0
    leaving_failure = 0
    fail_to_fail = 0
    for trace in traces:
        fails = [o is Outcome.FAILURE for o in trace.outcomes]
        total += len(fails)
        fail_total += sum(fails)
        for prev, cur in zip(fails, fails[1:]):
            if prev:
                leaving_failure += 1
                if cur:
                    fail_to_fail += 1
    x_hat = fail_total / total
    x_se = math.sqrt(x_hat * (1.0 - x_hat) / total)
    if leaving_failure == 0:
        return EstimateResult(x_hat, x_se, None, None, total, 0)
    lam_hat = fail_to_fail / leaving_failure
    lam_se = math.sqrt(lam_hat * (1.0 - lam_hat) / leaving_failure)
    return EstimateResult(x_hat, x_se, lam_hat, lam_se, total, leaving_failure)
