import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from leapdg.discretization import build_discretization
from leapdg.mesh import build_mesh, generate_structured_square


@pytest.fixture
def unit_square_mesh():
    return generate_structured_square(1)


@pytest.fixture
def two_triangles():
    """Two non-congruent triangles sharing the edge (1,0)-(0.2,1.1)."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.2, 1.1], [1.3, 0.9]])
    tris = np.array([[0, 1, 2], [1, 3, 2]])
    return build_mesh(verts, tris, regions=[0, 1])


@pytest.fixture
def small_disc():
    return build_discretization(generate_structured_square(4), 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# {{{ acceptance report

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record a criterion outcome: ``acceptance_report(criterion, passed, detail)``."""
    def record(criterion, passed, detail=""):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append((criterion, passed, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    verdict = {}
    for crit, passed, _ in ACCEPTANCE_LINES:
        key = str(crit).split()[0]
        verdict[key] = verdict.get(key, True) and passed
    terminalreporter.write_line("")
    for key in sorted(verdict, key=int):
        terminalreporter.write_line(f"criterion {key} overall: {'PASS' if verdict[key] else 'FAIL'}")

# }}}
