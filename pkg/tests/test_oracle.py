"""Grid oracle: structure, Dinkelbach certificate, refinement, witnesses."""

from collections import Counter

import pytest

from klotzcbi import (
    GridSpec,
    IndependenceBelief,
    ObservationSummary,
    PriorKnowledge,
    UnsupportedRegimeError,
    ValidationError,
    conservative_confidence,
    grid_candidates,
    infimum,
    posterior_confidence,
    region_contains,
    transitions_from_summary,
    validate_prior,
)

from conftest import random_obs, random_pk

SMALL = GridSpec(resolution=61, refine_rounds=1)


class TestGridCandidates:
    def test_structure(self):
        pk = PriorKnowledge(p_l=0.0, epsilon=0.1, theta=0.5, phi1=0.2, phi2=0.2)
        cands = grid_candidates(pk, 0.2, GridSpec(resolution=11))
        assert all(region_contains(c.point) for c in cands)
        subsets = Counter(c.subset for c in cands)
        expected = {
            "diagonal",
            "above_leq_eps",
            "above_mid",
            "above_right",
            "below_leq_eps",
            "below_mid",
            "below_right",
        }
        assert set(subsets) == expected

    def test_side_padding_adds_bound_companions(self):
        pk = PriorKnowledge(p_l=0.0, epsilon=0.1, theta=0.5, phi1=0.2, phi2=0.2)
        b = 0.2
        cands = grid_candidates(pk, b, GridSpec(resolution=11, side_padding=True))
        right = [c for c in cands if c.point.x == b and c.x_side.value == "from_right"]
        # a FromRight companion exists above the diagonal for the b column
        assert any(c.point.lam > b for c in right)
        exact = [c for c in cands if c.point.x == b and c.x_side.value == "exact"]
        assert exact, "the b column keeps its numerator-side points too"

    def test_respects_lower_bound(self):
        pk = PriorKnowledge(p_l=0.01, epsilon=0.05, theta=0.5)
        cands = grid_candidates(pk, 0.1, GridSpec(resolution=11))
        assert all(c.point.x >= pk.p_l for c in cands)


class TestInfimum:
    def test_no_evidence_returns_theta(self):
        pk = PriorKnowledge(epsilon=1e-3, theta=0.65, phi1=0.1, phi2=0.2)
        res = infimum(pk, ObservationSummary(0, 0, 0), 0.01, SMALL)
        assert res.confidence == pytest.approx(0.65, abs=1e-12)

    def test_zero_regime_hits_zero(self):
        pk = PriorKnowledge(epsilon=1e-4, theta=0.6, phi1=0.7, phi2=0.1)
        obs = ObservationSummary.from_counts(500, 3, 1)
        res = infimum(pk, obs, 1e-3, SMALL)
        assert res.confidence <= res.resolution_bound

    def test_witness_is_valid_and_reproduces_value(self, rng):
        for kind in ("nofail", "r0", "rpos"):
            for _ in range(5):
                pk, b = random_pk(rng)
                obs = random_obs(rng, kind, n_max=2000)
                res = infimum(pk, obs, b, SMALL)
                assert validate_prior(res.prior, pk) == []
                again = posterior_confidence(res.prior, transitions_from_summary(obs), b)
                assert again.confidence == pytest.approx(res.confidence, abs=1e-12)

    def test_dinkelbach_certificate(self, rng):
        for _ in range(10):
            pk, b = random_pk(rng)
            obs = random_obs(rng, "nofail", n_max=5000)
            res = infimum(pk, obs, b, SMALL)
            # auxiliary minimum at c* brackets zero at the scaled tolerance
            assert abs(res.certificate) <= 1e-12
            assert res.c_star == pytest.approx(res.confidence, abs=1e-7)

    def test_monotone_refinement(self, rng):
        spec = GridSpec(resolution=61, refine_rounds=3)
        for kind in ("nofail", "rpos"):
            for _ in range(4):
                pk, b = random_pk(rng)
                obs = random_obs(rng, kind, n_max=2000)
                res = infimum(pk, obs, b, spec)
                for earlier, later in zip(res.round_values, res.round_values[1:]):
                    assert later <= earlier + 1e-15

    def test_resolution_convergence(self, rng):
        for kind in ("nofail", "r0"):
            for _ in range(5):
                pk, b = random_pk(rng)
                obs = random_obs(rng, kind, n_max=2000)
                coarse = infimum(pk, obs, b, GridSpec(resolution=41, refine_rounds=1))
                fine = infimum(pk, obs, b, GridSpec(resolution=81, refine_rounds=1))
                assert abs(fine.confidence - coarse.confidence) <= coarse.resolution_bound

    def test_matches_closed_form_on_theorem_2(self):
        pk = PriorKnowledge(epsilon=1e-5, theta=0.75, phi1=0.75, phi2=0.1)
        obs = ObservationSummary.from_counts(100, 0, 0)
        res = infimum(pk, obs, 1e-4, GridSpec())
        cf = conservative_confidence(pk, obs, 1e-4)
        assert abs(cf.confidence - res.confidence) <= res.resolution_bound

    def test_matches_closed_form_at_road_testing_scale(self):
        # fifteen orders of magnitude between the hardware floor and the
        # claim bound; one isolated failure in 1e8..1e9 miles
        pk = PriorKnowledge(p_l=1e-15, epsilon=1e-10, theta=0.9, phi1=0.01, phi2=0.01)
        for n in (10**8, 10**9):
            obs = ObservationSummary.from_counts(n, 1, 0)
            res = infimum(pk, obs, 1e-8, GridSpec())
            cf = conservative_confidence(pk, obs, 1e-8)
            assert abs(cf.confidence - res.confidence) <= res.resolution_bound

    def test_prefixed_diagonal_gates(self):
        pk = PriorKnowledge(
            theta=0.3, phi1=0.1, phi2=0.2, independence_belief=IndependenceBelief.STRONG
        )
        with pytest.raises(UnsupportedRegimeError):
            infimum(pk, ObservationSummary.from_counts(10, 0, 0), 1e-2, SMALL)

    def test_grid_spec_validation(self):
        with pytest.raises(ValidationError):
            GridSpec(resolution=5)
        with pytest.raises(ValidationError):
            GridSpec(refine_rounds=-1)
