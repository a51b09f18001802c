import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensograph import _backend
from sensograph.geometry import GABRIEL_TAU, pairwise_distances

pytestmark = pytest.mark.skipif(_backend.compiled_kernels is None,
                                reason="compiled extension not built")
py = _backend.python_kernels
cy = _backend.compiled_kernels


def test_backend_flag():
    assert _backend.BACKEND in ("cython", "python")


@given(st.integers(0, 10**6), st.integers(2, 20), st.booleans())
@settings(max_examples=200, deadline=None)
def test_gabriel_backends_agree(seed, q, lattice):
    rng = np.random.default_rng(seed)
    xy = rng.integers(0, 8, size=(q, 2)).astype(float) if lattice else rng.uniform(0, 60, (q, 2))
    if len({tuple(p) for p in xy}) < q:
        return
    np.testing.assert_array_equal(py.gabriel_adjacency(xy, GABRIEL_TAU),
                                  cy.gabriel_adjacency(xy, GABRIEL_TAU))


@given(st.integers(0, 10**6), st.integers(2, 12))
@settings(max_examples=60, deadline=None)
def test_kk_backends_agree(seed, q):
    rng = np.random.default_rng(seed)
    t = np.maximum(pairwise_distances(rng.uniform(0, 1, (q, 2))) + rng.uniform(0, .3, (q, q)), .05)
    t = np.triu(t, 1) + np.triu(t, 1).T
    init = np.ascontiguousarray(rng.uniform(0, 1, (q, 2)))
    a = py.kk_solve(t, init, 1e-4, 2000)
    b = cy.kk_solve(t, init, 1e-4, 2000)
    assert a[1] == b[1] and a[2] == b[2]
    np.testing.assert_allclose(a[0], b[0], atol=1e-8)
    np.testing.assert_allclose(a[3], b[3], rtol=0, atol=1e-9 * a[3][0])


def test_pure_python_env_switch():
    import subprocess
    import sys

    code = "import sensograph; print(sensograph.BACKEND)"
    env = {"SENSOGRAPH_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
