import pytest

from iffl.model import ModelParams

# a=b=c=delta=lambda=1, kappa=2: linear closed loop settling at (p, y) = (2/3, 2/3)
LINEAR = ModelParams(a=1, b=1, c=1, delta=1, kappa=2, lam=1)

# autocatalytic set with four alternating outcome bands along lambda
BANDS = ModelParams(a=0.8, b=1, c=0.1, delta=1, n=2, V=1.95, K=1, kappa=20, lam=25)

# bistable y-subsystem used for the locking step response
LOCKING = ModelParams(a=1, b=1, c=1, delta=3, n=2, V=10, K=2)

LOW_A = ModelParams(a=0.1, b=1, c=0.1, delta=1, n=2, V=2, K=1, kappa=20)
HIGH_A = LOW_A.with_(a=1.2)


@pytest.fixture
def linear():
    return LINEAR


@pytest.fixture
def bands():
    return BANDS


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
