import numpy as np
import pytest

from kornshell.geometry import ShellDomain, make_cylinder, make_developable, make_torus_band


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cylinder_shell():
    return ShellDomain(make_cylinder(1.0, 0.2), 0.01)


@pytest.fixture
def torus_outer():
    return make_torus_band(2.0, 1.0, "outer", 0.2)


@pytest.fixture
def torus_inner():
    return make_torus_band(2.0, 1.0, "inner", 0.2)


@pytest.fixture
def sloped_developable():
    return make_developable((0.0, 1.0), 1.0, 1.0, (0.0, 1.0), 0.1)


def embedded_patches():
    """One embedded patch per curvature class, plus a non-cylindrical developable."""
    return [
        make_cylinder(1.0, 0.2),
        make_torus_band(2.0, 1.0, "outer", 0.2),
        make_torus_band(2.0, 1.0, "inner", 0.2),
        make_developable((0.0, 1.0), 1.0, 1.0, (0.0, 1.0), 0.1),
    ]


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
