import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("ci")

from klotzcbi import KlotzPoint, ObservationSummary, PriorKnowledge, ValidationError


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_pk(rng, branch=None, allow_eps_zero=True):
    """Draw a valid (pk, b) pair, optionally inside a named parameter branch."""
    while True:
        theta = rng.uniform(0.15, 0.92)
        b = 10 ** rng.uniform(-4.0, -0.5)
        if b >= 0.45:
            continue
        eps = 0.0
        if not allow_eps_zero or rng.random() < 0.7:
            eps = b * 10 ** rng.uniform(-3.0, -0.5)
        pl = eps * rng.uniform(0.0, 1.0) if rng.random() < 0.5 else 0.0
        try:
            if branch is None:
                phi1 = rng.uniform(0.0, 1.0)
                phi2 = rng.uniform(0.0, 1.0 - phi1)
            elif branch == "phi1>=theta":
                phi1 = rng.uniform(theta, min(1.0, theta + 0.3))
                phi2 = rng.uniform(0.0, 1.0 - phi1)
            elif branch == "phi2>=1-theta":
                phi2 = rng.uniform(1.0 - theta, min(1.0, 1.0 - theta + 0.3))
                phi1 = rng.uniform(0.0, 1.0 - phi2)
            elif branch == "interior":
                phi1 = rng.uniform(0.0, theta)
                phi2 = rng.uniform(0.0, min(1.0 - theta, 1.0 - phi1))
            elif branch == "phi1>=1-theta":
                phi1 = rng.uniform(1.0 - theta, min(1.0, 1.0 - theta + 0.3))
                phi2 = rng.uniform(0.0, 1.0 - phi1)
            elif branch == "phi2>=theta":
                phi2 = rng.uniform(theta, min(1.0, theta + 0.3))
                phi1 = rng.uniform(0.0, 1.0 - phi2)
            elif branch == "r0-interior":
                phi2 = rng.uniform(0.0, theta)
                phi1 = rng.uniform(0.0, min(1.0 - theta, 1.0 - phi2))
            else:
                raise AssertionError(branch)
            return PriorKnowledge(p_l=pl, epsilon=eps, theta=theta, phi1=phi1, phi2=phi2), b
        except ValidationError:
            continue


def random_obs(rng, kind, n_max=10000):
    n = rng.randint(20, n_max)
    if kind == "nofail":
        return ObservationSummary.from_counts(n, 0, 0)
    if kind == "r0":
        return ObservationSummary.from_counts(n, rng.randint(1, 3), 0)
    s = rng.randint(2, 4)
    return ObservationSummary.from_counts(n, s, rng.randint(1, s - 1))


def random_point(rng):
    from klotzcbi import lower_envelope

    x = rng.uniform(0.0, 1.0)
    lo = lower_envelope(x)
    return KlotzPoint(x, rng.uniform(lo, 1.0))
