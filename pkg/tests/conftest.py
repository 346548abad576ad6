import numpy as np
import pytest

from beamgap.lattice import MaterialParams, UnitCellGraph, build_square_example, make_beam, stiff_subgraph


def segment_graph(a, alpha=0.0, material=None, component="soft"):
    """One beam of length 2a centred at the origin, both ends clamped."""
    t = np.array([np.cos(np.radians(alpha)), np.sin(np.radians(alpha))])
    verts = np.array([-a * t, a * t])
    beam = make_beam(verts, 0, 1, material or MaterialParams(), component)
    return UnitCellGraph(verts, [beam], 4 * a * np.eye(2) + np.eye(2), clamped=frozenset({0, 1}))


@pytest.fixture(scope="session")
def square():
    return build_square_example(45.0, 0.25)


@pytest.fixture(scope="session")
def cross(square):
    return stiff_subgraph(square)


@pytest.fixture(scope="session")
def direct45():
    return build_square_example(45.0, attachment="direct")


ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    """Store and print the one-line verdict of an acceptance criterion."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
