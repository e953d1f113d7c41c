import numpy as np
import pytest

from freeconv.measures import Arcsine, Atoms, GridDensity, Semicircle, shift


@pytest.fixture
def two_atom():
    return Atoms([0.0, 1.0], [0.5, 0.5])


@pytest.fixture
def sym_atoms():
    return Atoms([-1.0, 1.0], [0.5, 0.5])


def sample_measures():
    """One of each family, used by the property suites."""
    xs = np.linspace(-1.0, 2.0, 301)
    return [
        Atoms([0.0], [1.0]),
        Atoms([0.0, 1.0], [0.5, 0.5]),
        Atoms([-2.0, 0.3, 1.5], [0.2, 0.5, 0.3]),
        Semicircle(1.0),
        Semicircle(0.25),
        Arcsine(1.0),
        Arcsine(2.5),
        shift(Semicircle(0.5), -0.8),
        GridDensity(xs, np.exp(-4 * (xs - 0.5) ** 2) * (xs + 1.0) * (2.0 - xs)),
    ]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
