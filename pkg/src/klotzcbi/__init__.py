"""Conservative Bayesian failure-rate bounds for possibly correlated executions.

The central quantity is the worst case, over every prior distribution
consistent with an assessor's stated constraints, of the posterior
confidence that a system's failure-rate is below a claim bound -- under a
two-state Markov model of dependent pass/fail executions.  Closed-form
worst-case priors are provided per parameter regime and every one of them
is checkable against an independent brute-force fractional-programming
oracle.
"""

__version__ = "0.1.0"

from .analysis import (
    AsymptoteResult,
    FitError,
    Method,
    NoBoundError,
    SweepAxis,
    SweepRow,
    SweepSpec,
    asymptote,
    beta_baseline,
    confidence_bound,
    curve,
    method_confidence,
    regularized_incomplete_beta,
    univariate_confidence,
)
from .klotz import (
    DomainError,
    IllDefinedLikelihoodError,
    KlotzPoint,
    ObservationSummary,
    Outcome,
    TransitionCounts,
    ValidationError,
    correlation_coefficient,
    diagonal_mode,
    likelihood,
    likelihood_argmax,
    log_likelihood,
    log_likelihood_ly,
    log_likelihood_many,
    lower_envelope,
    region_contains,
    transitions_from_summary,
)
from .oracle import GridCandidate, GridSpec, OracleResult, grid_candidates, infimum
from .priors import (
    AssessmentResult,
    DiscretePrior,
    IndependenceBelief,
    LambdaSide,
    PriorKnowledge,
    SupportPoint,
    Violation,
    XSide,
    posterior_confidence,
    validate_prior,
)
from .simulate import (
    CampaignTrace,
    EstimateResult,
    estimate,
    replicate_outcomes,
    simulate,
    summarize,
)
from .worstcase import (
    ScenarioRegime,
    Theorem,
    UnsupportedRegimeError,
    conservative_confidence,
    engine_worst_prior,
    independence_belief_worst_prior,
    no_failure_worst_prior,
    univariate_worst_prior,
    with_failure_worst_prior,
)

__all__ = [name for name in dir() if not name.startswith("_")]
