import itertools

import numpy as np
import pytest

from sensograph import _backend
from sensograph.panel import Panel, Tablecloth


def brute_force_gabriel(xy, tau=1e-9):
    """Closed-disk Gabriel test over every triple, in plain Python."""
    q = len(xy)
    adj = np.zeros((q, q), dtype=np.uint8)
    for i, j in itertools.combinations(range(q), 2):
        dij = (xy[i][0] - xy[j][0]) ** 2 + (xy[i][1] - xy[j][1]) ** 2
        ok = True
        for k in range(q):
            if k in (i, j):
                continue
            dik = (xy[i][0] - xy[k][0]) ** 2 + (xy[i][1] - xy[k][1]) ** 2
            djk = (xy[j][0] - xy[k][0]) ** 2 + (xy[j][1] - xy[k][1]) ** 2
            if dik + djk <= dij + tau:
                ok = False
                break
        if ok:
            adj[i, j] = adj[j, i] = 1
    return adj


def connected(adj):
    q = len(adj)
    parent = list(range(q))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(q):
        for j in range(i + 1, q):
            if adj[i][j]:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(q)}) == 1


def make_tablecloth(xy, assessor="A1", codes=None):
    xy = np.asarray(xy, dtype=float)
    codes = codes or tuple(str(k + 1) for k in range(len(xy)))
    return Tablecloth(assessor, codes, xy)


def make_panel(stack, codes=None):
    stack = np.asarray(stack, dtype=float)
    codes = codes or tuple(str(k + 1) for k in range(stack.shape[1]))
    return Panel(codes, tuple(Tablecloth(f"A{i + 1:03d}", codes, xy) for i, xy in enumerate(stack)))


# two clusters with internal structure, kept clear of the sheet edges
TWO_CLUSTERS = np.array([
    [12.0, 30.0], [19.0, 24.0], [11.0, 18.0], [20.0, 12.0],
    [41.0, 31.0], [48.0, 25.0], [40.0, 17.0], [49.0, 11.0], [44.0, 21.0],
])


@pytest.fixture
def two_clusters():
    return TWO_CLUSTERS.copy()


@pytest.fixture(params=["python", "cython"])
def kernels(request, monkeypatch):
    """Run a test against each available kernel backend."""
    if request.param == "cython":
        if _backend.compiled_kernels is None:
            pytest.skip("compiled extension not built")
        mod = _backend.compiled_kernels
    else:
        mod = _backend.python_kernels
    monkeypatch.setattr(_backend, "kernels", mod)
    return mod


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {status}  {detail}")
