import numpy as np
import pytest

from hilfer_extremal.monotone import (
    Discretization,
    Impulse,
    ImpulsiveProblem,
    WeightedTrajectory,
    iterate_extremal,
)
from hilfer_extremal.operators import Generator
from hilfer_extremal.specialfn import FractionalOrder

LOGISTIC_TOL = 1e-9


def logistic_rhs(t, x):
    return x * (1.0 - x)


def quarter(x):
    return x / 4.0


@pytest.fixture(scope="session")
def logistic():
    """Logistic test problem: g = x(1-x), one impulse x/4 at t = 1/2, seeds 0 and 1.

    g + C x is increasing on [0, 1] for C >= 1, so C = 1 is used.
    """
    problem = ImpulsiveProblem(
        FractionalOrder(0.6, 1.0),
        Generator([[0.0]], 1.0),
        logistic_rhs,
        (Impulse(0.5, quarter),),
        np.array([0.5]),
        1.0,
        vectorized=True,
    )
    disc = Discretization.for_problem(problem, 256)
    y0 = WeightedTrajectory.constant(disc, 0.0)
    z0 = WeightedTrajectory.constant(disc, 1.0)
    return problem, disc, y0, z0


@pytest.fixture(scope="session")
def logistic_enclosure(logistic):
    problem, disc, y0, z0 = logistic
    return iterate_extremal(problem, y0, z0, tol=LOGISTIC_TOL)


@pytest.fixture
def linear_problem():
    """Factory for scalar linear problems x' type: D x + a x = 0 with an optional constant jump."""

    def make(mu, nu, a, C=1.0, impulse=None, x0=1.0, T=1.0, nodes=256):
        imps = () if impulse is None else (Impulse(impulse[0], lambda x, c=impulse[1]: np.full_like(x, c)),)
        problem = ImpulsiveProblem(
            FractionalOrder(mu, nu), Generator([[a]], C), lambda t, x: 0.0 * x, imps, np.array([x0]), T,
            vectorized=True,
        )
        return problem, Discretization.for_problem(problem, nodes)

    return make


# --------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the summary

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
