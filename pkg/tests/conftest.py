import pytest

from geosim.geometry import Point
from geosim.topology import DiscHole, build_topology


def grid_with_void(cells, spacing, hole_r, radius=40.0):
    """Square lattice with a disc-shaped void in the middle."""
    c = (cells - 1) * spacing / 2
    hole = DiscHole(Point(c, c), hole_r)
    pts = [
        (x * spacing, y * spacing)
        for y in range(cells)
        for x in range(cells)
        if not hole.contains(x * spacing, y * spacing)
    ]
    side = (cells - 1) * spacing
    return build_topology(pts, radius, (hole,), area=(side, side))


# 9-node "U": node 1 is a local minimum toward node 6, the upper arm leads out
U_POINTS = [(0, 0), (30, 0), (30, 30), (45, 60), (80, 65), (105, 40), (125, 10), (30, -30), (45, -60)]


@pytest.fixture(scope="session")
def u_topology():
    return build_topology(U_POINTS, 40.0)


@pytest.fixture(scope="session")
def void_grid():
    """13x13 lattice, 25 m pitch, 70 m void; pair (17, 102) detours then shortens."""
    return grid_with_void(13, 25.0, 70.0)


@pytest.fixture(scope="session")
def fan_grid():
    """17x17 lattice, 25 m pitch, 110 m void; node 8 sits below the void."""
    return grid_with_void(17, 25.0, 110.0)


# --- acceptance verdicts -------------------------------------------------------

VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[VERDICTS] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts = config.stash.get(VERDICTS, {})
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        terminalreporter.write_line(verdicts[n])


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[VERDICTS][n] = line
        print(line)
        return ok

    return record
