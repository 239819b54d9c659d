import numpy as np
import pytest

from mdpgamma import StationaryPolicy, load_fixture

FIXTURES = ("cliff", "cliff_slippery", "cliff_fixed_gamma", "single_state")


def det(**actions):
    return StationaryPolicy.deterministic(actions)


DOWN = det(L="LL", M="ML", H="HM")
STAY = det(L="LL", M="MM", H="HH")
HH = det(L="LL", M="ML", H="HH")  # stay high, fall back to the down path
MIDDLE = det(L="LL", M="MM", H="HM")  # drop to the middle path and stay there


@pytest.fixture(scope="session")
def cliff():
    return load_fixture("cliff")


@pytest.fixture(scope="session")
def slippery():
    return load_fixture("cliff_slippery")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def classical_value(sdp, reward, gamma, actions):
    """Discounted value of a deterministic policy built straight from the raw tables."""
    states = list(sdp.states)
    n = len(states)
    t = np.zeros((n, n))
    r = np.zeros(n)
    for i, s in enumerate(states):
        a = actions[s]
        r[i] = reward[(s, a)]
        for s2, p in sdp.transition[(s, a)]:
            t[i, states.index(s2)] += p
    return np.linalg.solve(np.eye(n) - gamma * t, r)


def all_deterministic(model):
    import itertools

    for combo in itertools.product(*(model.available(s) for s in model.states)):
        yield dict(zip(model.states, combo))


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = getattr(item.function, "criterion", None)
    if label is not None and rep.when == "call":
        status = "XFAIL" if hasattr(rep, "wasxfail") else "PASS" if rep.passed else "FAIL"
        _criteria.append((label, status, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, seconds in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(f"{status:<5}  {label}  ({seconds:.2f} s)")


def criterion(label):
    """Tag an acceptance test so its outcome is listed in the terminal summary."""

    def tag(fn):
        fn.criterion = label
        return fn

    return tag
