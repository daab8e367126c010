import pytest

from renorm_lab import quadratic_dynamics as qd
from renorm_lab import renormalization as rn


@pytest.fixture(scope="session")
def c_feig():
    return qd.feigenbaum_parameter(10).value


@pytest.fixture(scope="session")
def f_feig(c_feig):
    return qd.QuadraticMap(c_feig)


@pytest.fixture(scope="session")
def levels_feig(f_feig):
    return qd.renorm_cascade(f_feig, 2, 6)


@pytest.fixture(scope="session")
def g_feig(f_feig, levels_feig):
    """Rescaled maps R^{q_n} f keyed by n, with L = 1.05."""
    return {n: rn.rescale(f_feig, levels_feig[n - 1], 1.05) for n in range(1, 7)}


@pytest.fixture(scope="session")
def g_minus1():
    f = qd.QuadraticMap(-1.0)
    lvl = qd.detect_renormalization(f, 2)
    return rn.rescale(f, lvl, 1.05)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
