import numpy as np
import pytest

from layerfields import procedural


@pytest.fixture(scope="session")
def cube():
    return procedural.make_cube(1.0)


@pytest.fixture(scope="session")
def sphere():
    return procedural.make_uv_sphere(0.3, n_lat=16, n_lon=32)


@pytest.fixture(scope="session")
def open_cylinder():
    return procedural.make_open_cylinder(0.3, 0.6, n_seg=48, n_rings=12)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


# one line per acceptance criterion, echoed after the test summary
CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
