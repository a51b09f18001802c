"""Acceptance criteria, each at its stated tolerance.

Criteria 1-5 need the public cookie napping panel (349 assessors, 9 products)
in the canonical long format; point ``SENSOGRAPH_PUBLIC_DATASET`` at the CSV to
run them. Criteria 6-10 are self-contained.
"""

import contextlib
import os
import time

import numpy as np
import pytest

from sensograph.consensus import consensus_layout, distance_mismatch, hierarchical_cluster, \
    kamada_kawai
from sensograph.geometry import gabriel_graph, pairwise_distances
from sensograph.mfa import mfa_consensus
from sensograph.panel import generate_panel, jitter_duplicates, read_panel, validate_panel
from sensograph.similarity import DISTANCES, GABRIEL, global_similarity, tune_similarity
from sensograph.stability import Method, bootstrap_stability, mantel_coefficient, rv_coefficient

from conftest import ACCEPTANCE_RESULTS, TWO_CLUSTERS, brute_force_gabriel, connected

DATASET = os.environ.get("SENSOGRAPH_PUBLIC_DATASET")
needs_dataset = pytest.mark.skipif(
    not DATASET or not os.path.exists(DATASET),
    reason="public panel not available (set SENSOGRAPH_PUBLIC_DATASET)")


@contextlib.contextmanager
def criterion(key, name):
    details = []
    try:
        yield details
    except AssertionError as exc:
        ACCEPTANCE_RESULTS[key] = ("FAIL", f"{name}: {str(exc).splitlines()[0]}")
        print(f"criterion {key}: FAIL {name}")
        raise
    note = "; ".join(details)
    ACCEPTANCE_RESULTS[key] = ("PASS", f"{name}" + (f" ({note})" if note else ""))
    print(f"criterion {key}: PASS {name} {note}")


DATASET_CRITERIA = {
    1: "Gabriel strongest edge 2-5 = 187/349",
    2: "MFA explained variance 25.64/15.48, 4 dims 65.95",
    3: "cross-method RV 0.8785 / 0.7407 / 0.6390",
    4: "stability crossings of 0.95",
    5: "dendrogram groups {2,5,6,9} {1,3,4,7} {8}",
}
if not DATASET or not os.path.exists(DATASET):
    for _key, _name in DATASET_CRITERIA.items():
        ACCEPTANCE_RESULTS[_key] = ("SKIP", f"{_name}: public panel not available")


@pytest.fixture(scope="module")
def public_panel():
    panel = read_panel(DATASET)
    report = validate_panel(panel)
    if not report.accepted:
        panel = jitter_duplicates(panel, 0.01, seed=0)
    return panel


def _label_groups(groups, labels):
    return sorted(sorted(labels[m] for m in grp) for grp in groups)


# --- dataset criteria -------------------------------------------------------

@needs_dataset
def test_criterion_01_strongest_gabriel_edge(public_panel):
    with criterion(1, "Gabriel strongest edge 2-5 = 187/349") as note:
        start = time.perf_counter()
        g = global_similarity(public_panel, GABRIEL)
        elapsed = time.perf_counter() - start
        v = np.triu(g.values, 1)
        i, j = np.unravel_index(np.argmax(v), v.shape)
        note.append(f"edge {g.labels[i]}-{g.labels[j]} = {v[i, j]:g}/{g.n}, {elapsed:.2f}s")
        assert g.n == 349
        assert {g.labels[i], g.labels[j]} == {"2", "5"}
        assert v[i, j] == 187
        assert (v == v[i, j]).sum() == 1
        assert elapsed < 5.0


@needs_dataset
def test_criterion_02_mfa_explained(public_panel):
    with criterion(2, "MFA explained variance 25.64/15.48, 4 dims 65.95") as note:
        res = mfa_consensus(public_panel)
        ex = res.explained
        note.append(f"{ex[0]:.2f}/{ex[1]:.2f}, 4 dims {ex[:4].sum():.2f}")
        assert abs(ex[0] - 25.64) <= 0.10
        assert abs(ex[1] - 15.48) <= 0.10
        assert abs(ex[:4].sum() - 65.95) <= 0.25


@needs_dataset
def test_criterion_03_cross_method_rv(public_panel):
    with criterion(3, "cross-method RV 0.8785 / 0.7407 / 0.6390") as note:
        mfa2 = mfa_consensus(public_panel, max_dims=2).scores.coords
        gab = consensus_layout(global_similarity(public_panel, GABRIEL)).coords
        dist = consensus_layout(global_similarity(public_panel, DISTANCES, p=2.0)).coords
        a, b, c = rv_coefficient(mfa2, gab), rv_coefficient(dist, mfa2), rv_coefficient(dist, gab)
        note.append(f"{a:.4f} / {b:.4f} / {c:.4f}")
        assert abs(a - 0.8785) <= 0.03
        assert abs(b - 0.7407) <= 0.05
        assert abs(c - 0.6390) <= 0.05


@needs_dataset
@pytest.mark.slow
def test_criterion_04_stability_crossings(public_panel):
    with criterion(4, "stability crossings of 0.95") as note:
        expected = [(Method("mfa", dims=2), 200), (Method("mfa", dims=4), 150),
                    (Method("mfa", dims=8), 40), (Method("gabriel"), 300),
                    (Method("distances", p=2.0), 200)]
        for method, target in expected:
            start = time.perf_counter()
            curve = bootstrap_stability(public_panel, method, reps=100, seed=0)
            elapsed = time.perf_counter() - start
            m = curve.crossing(0.95)
            # a curve that never reaches 0.95 crosses beyond the panel size
            m_eff = m if m is not None else curve.grid[-1] + 10
            note.append(f"{method.tag} {m} in {elapsed:.0f}s")
            assert abs(m_eff - target) <= 40, f"{method.tag} crosses at {m}, expected ~{target}"
            assert elapsed < 1800
            if method.kind == GABRIEL:
                mean200, _ = curve.at(200)
                note.append(f"Gabriel mean at 200 = {mean200:.3f}")
                assert abs(mean200 - 0.92) <= 0.02


@needs_dataset
def test_criterion_05_groups(public_panel):
    with criterion(5, "dendrogram groups {2,5,6,9} {1,3,4,7} {8}") as note:
        want = sorted([["2", "5", "6", "9"], ["1", "3", "4", "7"], ["8"]])
        for variant in (GABRIEL, DISTANCES):
            g = global_similarity(public_panel, variant)
            got = _label_groups(hierarchical_cluster(g).cut(3), g.labels)
            note.append(f"{variant} {got}")
            assert got == want


# --- self-contained criteria ------------------------------------------------

def test_criterion_06_gabriel_oracle():
    with criterion(6, "Gabriel vs brute force on 1,000 tablecloths") as note:
        rng = np.random.default_rng(20260101)
        done = 0
        while done < 1000:
            q = int(rng.integers(3, 13))
            # half the cases on a coarse lattice so exact ties get exercised
            if done % 2:
                xy = rng.integers(0, 7, size=(q, 2)).astype(float) * 5.0
            else:
                xy = rng.uniform([0, 0], [60, 40], size=(q, 2))
            if len({tuple(p) for p in xy}) < q:
                continue
            adj = gabriel_graph(xy)
            assert np.array_equal(adj, brute_force_gabriel(xy)), f"mismatch on case {done}"
            assert connected(adj)
            assert adj.sum() // 2 <= 3 * q - 6
            done += 1
        note.append("1000 cases")


def test_criterion_07_tune_fixed_points():
    with criterion(7, "tune_similarity fixed points, monotone, symmetric") as note:
        grid = np.linspace(0.0, 1.0, 1001)
        worst = 0.0
        for p in (1.0, 1.5, 2.0, 3.0):
            for s, want in ((0.0, 0.0), (0.5, 0.5), (1.0, 1.0)):
                worst = max(worst, abs(tune_similarity(s, p) - want))
            out = tune_similarity(grid, p)
            assert np.all(np.diff(out) >= 0)
            worst = max(worst, float(np.abs(tune_similarity(1.0 - grid, p) - (1.0 - out)).max()))
        note.append(f"max deviation {worst:.1e}")
        assert worst < 1e-12


def test_criterion_08_coefficient_identities():
    with criterion(8, "RV and Mantel identities") as note:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(100):
            q = int(rng.integers(3, 15))
            x = rng.normal(size=(q, 2))
            q_mat, _ = np.linalg.qr(rng.normal(size=(2, 2)))  # random rotation or reflection
            moved = float(rng.uniform(0.01, 100)) * x @ q_mat + rng.normal(size=2)
            worst = max(worst, abs(rv_coefficient(x, x) - 1), abs(rv_coefficient(x, moved) - 1))
            a = np.triu(rng.uniform(0, 10, size=(q, q)), 1)
            a = a + a.T
            c = float(rng.uniform(0.1, 10)) * (1 if rng.random() < 0.5 else -1)
            d = float(rng.normal(0, 5))
            worst = max(worst, abs(mantel_coefficient(a, c * a + d) - np.sign(c)))
        note.append(f"max deviation {worst:.1e}")
        assert worst < 1e-10


def test_criterion_09_layout_recovery():
    with criterion(9, "Kamada-Kawai recovers planar distances") as note:
        rng = np.random.default_rng(9)
        worst_stress = worst_dist = 0.0
        for _ in range(100):
            q = int(rng.integers(3, 11))
            pts = rng.uniform(0, 1, size=(q, 2))
            config, info = kamada_kawai(pairwise_distances(pts), return_info=True)
            worst_stress = max(worst_stress, info.stress)
            worst_dist = max(worst_dist, distance_mismatch(config, pts))
        note.append(f"max stress {worst_stress:.1e}, max distance error {worst_dist:.1e}")
        assert worst_stress < 1e-6
        assert worst_dist < 1e-3


@pytest.mark.slow
def test_criterion_10_synthetic_stability_shape():
    with criterion(10, "synthetic stability curves rise and tighten") as note:
        panel = generate_panel(TWO_CLUSTERS, 0.15 * 60.0, 300, seed=2020)
        panel = jitter_duplicates(panel, 0.01, seed=0)  # clamping can stack points on an edge
        assert validate_panel(panel).accepted
        for method in (Method("mfa", dims=2), Method("gabriel"), Method("distances", p=2.0)):
            curve = bootstrap_stability(panel, method, reps=100, seed=0)
            drop = float(np.min(np.diff(curve.mean)))
            sd10, sd300 = curve.at(10)[1], curve.at(300)[1]
            note.append(f"{method.tag} worst step {drop:+.4f}, sd {sd10:.4f}->{sd300:.4f}")
            assert drop >= -0.01, f"{method.tag} drops by {-drop:.4f}"
            assert sd300 < sd10 / 2
