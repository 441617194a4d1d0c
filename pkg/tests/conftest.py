import numpy as np
import pytest

from maryspace.charpoly import find_roots
from maryspace.fixpoint import FixedPointSpec
from maryspace.recurrence import estimate_mu, exact_mean_X

# high-precision values of lambda2 (mpmath findroot at 50 digits)
LAMBDA2_26 = complex(0.499143265217225584091033, 2.205382678537200880620933)
LAMBDA2_27 = complex(0.5169701218484807139876819, 2.178865353624830409448389)


@pytest.fixture(scope="session")
def roots27():
    return find_roots(27)


@pytest.fixture(scope="session")
def table27(roots27):
    return exact_mean_X(27, 100_000, sigma=roots27.sigma)


@pytest.fixture(scope="session")
def fit27(table27, roots27):
    return estimate_mu(table27, roots27.lambda2, (10_000, 30_000))


@pytest.fixture(scope="session")
def spec27(fit27):
    return FixedPointSpec.for_m(27, fit27.mu_hat)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
