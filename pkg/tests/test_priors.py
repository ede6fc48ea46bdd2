"""Prior constraints, side-tag semantics and exact posterior evaluation."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from klotzcbi import (
    DiscretePrior,
    KlotzPoint,
    LambdaSide,
    ObservationSummary,
    PriorKnowledge,
    SupportPoint,
    ValidationError,
    Violation,
    XSide,
    posterior_confidence,
    transitions_from_summary,
    univariate_worst_prior,
    no_failure_worst_prior,
    validate_prior,
)


def fig_style_two_point(eps, theta, b):
    return DiscretePrior(
        [
            SupportPoint(KlotzPoint(eps, eps), theta),
            SupportPoint(KlotzPoint(b, b), 1 - theta, x_side=XSide.FROM_RIGHT),
        ]
    )


class TestPriorKnowledge:
    def test_rejects_bad_ordering(self):
        with pytest.raises(ValidationError):
            PriorKnowledge(p_l=0.2, epsilon=0.1, theta=0.5)
        with pytest.raises(ValidationError):
            PriorKnowledge(theta=1.5)
        with pytest.raises(ValidationError):
            PriorKnowledge(theta=0.5, phi1=0.7, phi2=0.6)

    def test_claim_range(self):
        pk = PriorKnowledge(epsilon=1e-3, theta=0.5)
        with pytest.raises(ValidationError):
            pk.check_claim(1e-4)  # below epsilon
        with pytest.raises(ValidationError):
            pk.check_claim(0.5)  # not below one half
        pk.check_claim(0.01)


class TestSideTags:
    def test_from_right_excluded_from_bound(self):
        sp = SupportPoint(KlotzPoint(0.1, 0.1), 1.0, x_side=XSide.FROM_RIGHT)
        assert not sp.indicator_leq(0.1)
        assert sp.indicator_leq(0.2)
        assert SupportPoint(KlotzPoint(0.1, 0.1), 1.0).indicator_leq(0.1)

    def test_lambda_side_decides_diagonal_class(self):
        on = SupportPoint(KlotzPoint(0.2, 0.2), 1.0)
        above = SupportPoint(KlotzPoint(0.2, 0.2), 1.0, lambda_side=LambdaSide.FROM_ABOVE)
        below = SupportPoint(KlotzPoint(0.2, 0.2), 1.0, lambda_side=LambdaSide.FROM_BELOW)
        assert on.dependence_class() == 0
        assert above.dependence_class() == 1
        assert below.dependence_class() == -1
        off = SupportPoint(KlotzPoint(0.2, 0.5), 1.0, lambda_side=LambdaSide.FROM_BELOW)
        assert off.dependence_class() == 1  # coordinates win off the diagonal


class TestValidatePrior:
    def test_constructed_prior_is_clean(self):
        pk = PriorKnowledge(epsilon=1e-4, theta=0.6, phi1=0.7, phi2=0.1)
        prior = no_failure_worst_prior(pk, 1e-3, 100)
        assert validate_prior(prior, pk) == []

    def test_mass_not_normalized(self):
        pk = PriorKnowledge(epsilon=0.0, theta=1.0)
        prior = DiscretePrior([SupportPoint(KlotzPoint(0.0, 0.0), 0.9)])
        assert Violation.MASS_NOT_NORMALIZED in validate_prior(prior, pk)

    def test_diagonal_only_prior_violates_declared_phi1(self):
        pk = PriorKnowledge(epsilon=1e-5, theta=0.75, phi1=0.2, phi2=0.0)
        prior = fig_style_two_point(1e-5, 0.75, 1e-4)
        assert Violation.PHI1_VIOLATED in validate_prior(prior, pk)

    def test_theta_accounting_uses_x_side(self):
        pk = PriorKnowledge(epsilon=0.1, theta=0.5)
        inside = DiscretePrior(
            [
                SupportPoint(KlotzPoint(0.1, 0.1), 0.5),
                SupportPoint(KlotzPoint(0.3, 0.3), 0.5),
            ]
        )
        assert validate_prior(inside, pk) == []
        escaped = DiscretePrior(
            [
                SupportPoint(KlotzPoint(0.1, 0.1), 0.5, x_side=XSide.FROM_RIGHT),
                SupportPoint(KlotzPoint(0.3, 0.3), 0.5),
            ]
        )
        assert Violation.THETA_VIOLATED in validate_prior(escaped, pk)

    def test_lower_bound_respected(self):
        pk = PriorKnowledge(p_l=0.05, epsilon=0.1, theta=1.0)
        bad = DiscretePrior([SupportPoint(KlotzPoint(0.01, 0.01), 1.0)])
        assert Violation.LOWER_BOUND_VIOLATED in validate_prior(bad, pk)
        edge = DiscretePrior([SupportPoint(KlotzPoint(0.05, 0.05), 1.0)])
        assert Violation.LOWER_BOUND_VIOLATED not in validate_prior(edge, pk)

    def test_out_of_region(self):
        pk = PriorKnowledge(epsilon=0.9, theta=1.0)
        bad = DiscretePrior([SupportPoint(KlotzPoint(0.9, 0.5), 1.0)])
        assert Violation.OUT_OF_REGION in validate_prior(bad, pk)


class TestPosteriorConfidence:
    def test_two_point_closed_form(self):
        eps, theta, b, n = 1e-5, 0.75, 1e-4, 5000
        prior = fig_style_two_point(eps, theta, b)
        obs = ObservationSummary.from_counts(n, 0, 0)
        res = posterior_confidence(prior, obs, b)
        expected = (
            theta * (1 - eps) ** n / (theta * (1 - eps) ** n + (1 - theta) * (1 - b) ** n)
        )
        assert res.confidence == pytest.approx(expected, rel=1e-12)

    def test_empty_evidence_returns_prior_mass(self):
        prior = fig_style_two_point(1e-5, 0.75, 1e-4)
        obs = ObservationSummary(0, 0, 0)
        res = posterior_confidence(prior, obs, 1e-4)
        assert res.confidence == pytest.approx(0.75, rel=1e-15)

    def test_four_point_closed_form(self):
        # the failure-free worst case with phi1 >= theta, checked against
        # its published algebraic reduction
        eps, theta, phi1, phi2, b, n = 1e-5, 0.7, 0.75, 0.1, 1e-4, 10**5
        pk = PriorKnowledge(epsilon=eps, theta=theta, phi1=phi1, phi2=phi2)
        prior = no_failure_worst_prior(pk, b, n)
        obs = ObservationSummary.from_counts(n, 0, 0)
        res = posterior_confidence(prior, obs, b, pk=pk)
        l_eps = (1 - eps) * (1 - eps / (1 - eps)) ** (n - 1)
        expected = theta * l_eps / (
            theta * l_eps + (1 - theta - phi2) * (1 - b) ** n + (1 - b) * phi2
        )
        assert res.confidence == pytest.approx(expected, rel=1e-10)

    def test_invalid_prior_rejected_when_pk_given(self):
        pk = PriorKnowledge(epsilon=1e-5, theta=0.75, phi1=0.2)
        prior = fig_style_two_point(1e-5, 0.75, 1e-4)
        with pytest.raises(ValidationError):
            posterior_confidence(prior, ObservationSummary.from_counts(10, 0, 0), 1e-4, pk=pk)

    def test_degenerate_denominator_flagged(self):
        # all support mass has zero likelihood for this evidence
        prior = DiscretePrior([SupportPoint(KlotzPoint(0.2, 0.0), 1.0)])
        obs = ObservationSummary.from_counts(10, 3, 2)  # r > 0 but lam = 0
        res = posterior_confidence(prior, obs, 0.3)
        assert res.degenerate and res.confidence == 0.0

    @given(st.floats(min_value=1e-6, max_value=1e6))
    def test_scale_invariance(self, k):
        prior = fig_style_two_point(1e-5, 0.75, 1e-4)
        scaled = DiscretePrior(
            SupportPoint(sp.point, sp.mass * k, sp.x_side, sp.lambda_side)
            for sp in prior.support
        ).normalized()
        obs = ObservationSummary.from_counts(321, 0, 0)
        a = posterior_confidence(prior, obs, 1e-4).confidence
        b = posterior_confidence(scaled, obs, 1e-4).confidence
        assert b == pytest.approx(a, rel=1e-12)

    def test_side_move_changes_only_numerator(self):
        b = 1e-4
        base = fig_style_two_point(1e-5, 0.75, b)
        moved = DiscretePrior(
            [
                SupportPoint(KlotzPoint(1e-5, 1e-5), 0.75),
                SupportPoint(KlotzPoint(b, b), 0.25, x_side=XSide.EXACT),
            ]
        )
        obs = ObservationSummary.from_counts(100, 0, 0)
        res_a = posterior_confidence(base, obs, b)
        res_b = posterior_confidence(moved, obs, b)
        assert res_a.log_denominator == pytest.approx(res_b.log_denominator, rel=1e-14)
        assert res_b.log_numerator > res_a.log_numerator

    def test_diagonal_prior_matches_univariate_formula(self, rng):
        # a diagonal prior under the dependence-aware evaluator must equal
        # the independent-executions posterior computed from scratch
        for _ in range(50):
            theta = rng.uniform(0.05, 0.95)
            eps = 10 ** rng.uniform(-8, -2)
            b = eps * 10 ** rng.uniform(0.5, 2)
            if not eps < b < 0.5:
                continue
            n = rng.randint(1, 10**6)
            pk = PriorKnowledge(epsilon=eps, theta=theta)
            prior = univariate_worst_prior(pk, b)
            obs = ObservationSummary.from_counts(n, 0, 0)
            got = posterior_confidence(prior, obs, b).confidence
            log_ratio = math.log1p(-b) - math.log1p(-eps)
            expected = 1.0 / (1.0 + (1 - theta) / theta * math.exp(n * log_ratio))
            assert got == pytest.approx(expected, rel=1e-12)


class TestUnivariatePrior:
    def test_example_support(self):
        pk = PriorKnowledge(epsilon=1e-5, theta=0.75)
        prior = univariate_worst_prior(pk, 1e-4)
        pts = sorted((sp.point.x, sp.mass, sp.x_side) for sp in prior.support)
        assert pts[0] == (1e-5, 0.75, XSide.EXACT)
        assert pts[1] == (1e-4, 0.25, XSide.FROM_RIGHT)

    def test_full_confidence_degenerates_to_single_point(self):
        pk = PriorKnowledge(epsilon=1e-3, theta=1.0)
        prior = univariate_worst_prior(pk, 1e-2)
        assert len(prior.support) == 1
        assert prior.support[0].point == KlotzPoint(1e-3, 1e-3)

    def test_rejects_bound_at_or_below_epsilon(self):
        pk = PriorKnowledge(epsilon=1e-3, theta=0.5)
        with pytest.raises(ValidationError):
            univariate_worst_prior(pk, 1e-3)

    def test_universal_bound_example(self):
        # theta=0.7, eps=0, n=1e5: the 99% point sits near b = 3.7e-5
        pk = PriorKnowledge(epsilon=0.0, theta=0.7)
        obs = ObservationSummary.from_counts(10**5, 0, 0)
        b = 3.7477e-5
        prior = univariate_worst_prior(pk, b)
        conf = posterior_confidence(prior, transitions_from_summary(obs), b).confidence
        assert conf == pytest.approx(0.99, abs=2e-4)
