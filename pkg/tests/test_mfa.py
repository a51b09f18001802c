import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensograph.errors import DegenerateBlockError, DomainError
from sensograph.mfa import (
    first_eigenvalue,
    format_eigenvalues,
    format_scores,
    group_weight,
    mfa_consensus,
)
from sensograph.panel import Panel

from conftest import make_panel


def _rotate(xy, angle):
    c, s = np.cos(angle), np.sin(angle)
    return xy @ np.array([[c, -s], [s, c]]).T


def _distances(x):
    return np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))


def _two_by_two_eigs(xy):
    """Closed-form eigenvalues of the 2x2 sample covariance."""
    c = xy - xy.mean(0)
    q = len(xy)
    a = (c[:, 0] ** 2).sum() / (q - 1)
    b = (c[:, 0] * c[:, 1]).sum() / (q - 1)
    d = (c[:, 1] ** 2).sum() / (q - 1)
    mid, rad = (a + d) / 2, np.sqrt(((a - d) / 2) ** 2 + b * b)
    return mid + rad, mid - rad


@given(st.integers(0, 10**6), st.integers(3, 9), st.integers(2, 6))
@settings(max_examples=60, deadline=None)
def test_identical_tablecloths_closed_form(seed, q, n):
    xy = np.random.default_rng(seed).uniform(0, 40, size=(q, 2))
    l1, l2 = _two_by_two_eigs(xy)
    assert abs(first_eigenvalue(xy) - l1) < 1e-10 * l1
    res = mfa_consensus(make_panel([xy] * n))
    np.testing.assert_allclose(res.eigenvalues[:2], [1.0, l2 / l1], rtol=0, atol=1e-10)
    np.testing.assert_allclose(res.eigenvalues[2:], 0.0, atol=1e-10)
    np.testing.assert_allclose(res.explained[:2], 100 * np.array([l1, l2]) / (l1 + l2), atol=1e-8)


@given(st.integers(0, 10**6), st.integers(3, 9), st.integers(2, 8))
@settings(max_examples=60, deadline=None)
def test_eigenvalues_match_cross_product(seed, q, n):
    stack = np.random.default_rng(seed).uniform(0, 40, size=(n, q, 2))
    res = mfa_consensus(make_panel(stack))
    # brute force: weight blocks, stack, eigendecompose Z Z^T / ((q-1) n)
    blocks = []
    for xy in stack:
        c = xy - xy.mean(0)
        lam = np.linalg.eigvalsh(c.T @ c / (q - 1)).max()
        blocks.append(c / np.sqrt(lam))
    z = np.hstack(blocks)
    ref = np.sort(np.linalg.eigvalsh(z @ z.T / ((q - 1) * n)))[::-1][: min(q - 1, 2 * n)]
    np.testing.assert_allclose(res.eigenvalues, ref, rtol=1e-9, atol=1e-12)
    assert abs(res.explained.sum() - 100) < 1e-9
    assert np.all(np.diff(res.eigenvalues) <= 1e-12)
    assert res.scores.d == min(q - 1, 2 * n)
    # the scores carry the eigenvalues: column variance (1/(q-1)) = eigenvalue
    var = (res.scores.coords ** 2).sum(0) / (q - 1)
    np.testing.assert_allclose(var, res.eigenvalues, rtol=1e-9, atol=1e-12)


def test_collinear_consensus_is_one_dimensional():
    line = np.column_stack([np.arange(6.0) * 5 + 3, np.arange(6.0) * 2 + 4])
    res = mfa_consensus(make_panel([line, line * 1.3 + 2, _rotate(line, 0.4) + 10]))
    assert abs(res.explained[0] - 100.0) < 1e-9


def test_duplicated_panel_gives_same_result():
    stack = np.random.default_rng(3).uniform(0, 40, size=(5, 7, 2))
    a = mfa_consensus(make_panel(stack))
    b = mfa_consensus(make_panel(np.concatenate([stack, stack])))
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues[: len(a.eigenvalues)], atol=1e-12)
    np.testing.assert_allclose(a.scores.coords, b.scores.coords[:, : a.scores.d], atol=1e-9)


@given(st.integers(0, 10**6), st.floats(0.2, 5), st.floats(0, 6.28))
@settings(max_examples=40, deadline=None)
def test_similarity_moves_of_one_tablecloth_do_nothing(seed, scale, angle):
    stack = np.random.default_rng(seed).uniform(0, 40, size=(4, 6, 2))
    moved = stack.copy()
    moved[1] = scale * _rotate(stack[1], angle) + 3.0
    a, b = mfa_consensus(make_panel(stack)), mfa_consensus(make_panel(moved))
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-9, atol=1e-12)
    # scores may differ by a rotation inside tied subspaces but distances agree
    np.testing.assert_allclose(_distances(a.scores.coords), _distances(b.scores.coords), atol=1e-8)


def test_sign_convention_is_deterministic():
    stack = np.random.default_rng(5).uniform(0, 40, size=(6, 8, 2))
    a = mfa_consensus(make_panel(stack))
    flipped = stack.copy()
    flipped[..., 0] = 60 - flipped[..., 0]  # mirror every tablecloth
    b = mfa_consensus(make_panel(flipped))
    np.testing.assert_allclose(np.abs(a.scores.coords), np.abs(b.scores.coords), atol=1e-9)
    again = mfa_consensus(make_panel(stack))
    np.testing.assert_array_equal(a.scores.coords, again.scores.coords)


def test_nine_samples_give_eight_dimensions():
    stack = np.random.default_rng(0).uniform(0, 40, size=(20, 9, 2))
    res = mfa_consensus(make_panel(stack))
    assert res.scores.d == 8 and len(res.eigenvalues) == 8
    assert mfa_consensus(make_panel(stack), max_dims=2).scores.labels == ("Dim1", "Dim2")


def test_degenerate_tablecloth_is_excluded():
    stack = np.random.default_rng(0).uniform(0, 40, size=(4, 5, 2))
    stack[2] = 7.0
    res = mfa_consensus(make_panel(stack))
    ref = mfa_consensus(make_panel(np.delete(stack, 2, axis=0)))
    assert res.excluded == ("A003",)
    np.testing.assert_allclose(res.eigenvalues, ref.eigenvalues, atol=1e-12)
    with pytest.raises(DegenerateBlockError):
        group_weight(stack[2])


def test_too_few_assessors_or_samples():
    xy = np.random.default_rng(0).uniform(0, 40, size=(1, 5, 2))
    with pytest.raises(DomainError):
        mfa_consensus(make_panel(xy))
    with pytest.raises(DomainError):
        mfa_consensus(make_panel(np.random.default_rng(0).uniform(0, 40, size=(3, 2, 2))))


def test_exports():
    res = mfa_consensus(make_panel(np.random.default_rng(1).uniform(0, 40, size=(3, 4, 2))))
    lines = format_scores(res).splitlines()
    assert lines[0].startswith("# explained_variance_pct,Dim1=")
    assert lines[1] == "code,Dim1,Dim2,Dim3"
    eig = format_eigenvalues(res).splitlines()
    assert eig[0] == "dim,eigenvalue,explained_pct,cumulative_pct"
    assert eig[-1].endswith(",100")
