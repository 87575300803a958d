import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from moebius_curves import jets as J
from moebius_curves.models import Curve
from moebius_curves.verification import helix_curve, polynomial_curve, spherical_closed_curve

settings.register_profile(
    "repo", max_examples=25, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def helix():
    return helix_curve(1.0, 0.5)


@pytest.fixture
def quartic4():
    rng = np.random.default_rng(2024)
    return polynomial_curve(rng.normal(size=(5, 4)))


@pytest.fixture
def quartic3():
    rng = np.random.default_rng(77)
    return polynomial_curve(rng.normal(size=(5, 3)))


@pytest.fixture
def tennis():
    return spherical_closed_curve(0.7)


def circle_curve(R=1.0, center=(0.0, 0.0)):
    def fn(t):
        s, c = J.sincos(t)
        return J.stack([R * c + center[0], R * s + center[1]], axis=-1)

    return Curve.from_jet_function(fn, (0.0, 2 * np.pi), "euclidean", closed=True)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
