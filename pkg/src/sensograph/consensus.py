"""Consensus maps from a global similarity matrix.

Two views are produced: a planar Kamada-Kawai layout whose target distances
shrink as similarity grows, and an average-linkage dendrogram whose leaf
order is used to permute the matrix for display.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError
from .similarity import GlobalSimilarity, normalize_strengths

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.05


@dataclass(frozen=True, eq=False)
class Configuration:
    """Coordinates of the samples, one row per product code."""

    coords: np.ndarray
    codes: tuple | None = None
    labels: tuple | None = None  # axis names, e.g. ("Dim1", "Dim2")

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise DomainError("configuration must be a (q, d) array with d >= 1")
        if not np.isfinite(coords).all():
            raise DomainError("configuration has non-finite coordinates")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        if self.codes is None:
            object.__setattr__(self, "codes", tuple(str(k + 1) for k in range(coords.shape[0])))
        else:
            object.__setattr__(self, "codes", tuple(self.codes))
        if len(self.codes) != coords.shape[0]:
            raise DomainError("codes do not match the number of rows")
        if self.labels is None:
            names = ("x", "y") if coords.shape[1] == 2 else tuple(
                f"Dim{k + 1}" for k in range(coords.shape[1]))
            object.__setattr__(self, "labels", names)

    @property
    def q(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class LayoutSettings:
    """Kamada-Kawai controls.

    With ``seed = 0`` the start is deterministic: classical (Torgerson) scaling
    of the targets, or a circle when ``init = "circle"``. Any other seed draws
    a uniform random start in the unit square.
    """

    seed: int = 0
    max_iterations: int = 10_000
    gradient_tolerance: float = 1e-4
    delta: float = DEFAULT_DELTA
    init: str = "mds"

    def __post_init__(self):
        if self.init not in ("mds", "circle"):
            raise DomainError(f"unknown init {self.init!r}")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if not self.gradient_tolerance > 0:
            raise DomainError("gradient tolerance must be positive")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be >= 0")


@dataclass(frozen=True, eq=False)
class LayoutInfo:
    stress: float
    initial_stress: float
    updates: int
    converged: bool
    trace: np.ndarray = field(repr=False)


def target_distances(g, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """``max(1 - normalized_strength, delta)`` off the diagonal, zero on it."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    t = np.maximum(1.0 - normalize_strengths(g), delta)
    np.fill_diagonal(t, 0.0)
    return t


def stress(coords, targets) -> float:
    """``sum_{i<j} (|x_i - x_j| - t_ij)^2 / t_ij^2``."""
    x = np.asarray(coords, dtype=float)
    t = np.asarray(targets, dtype=float)
    iu = np.triu_indices(t.shape[0], 1)
    diff = x[iu[0]] - x[iu[1]]
    r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return float(np.sum(((r - t[iu]) / t[iu]) ** 2))


def circle_layout(targets: np.ndarray) -> np.ndarray:
    """Sample ``i`` at angle ``2 pi i / q``, radius half the mean target."""
    q = targets.shape[0]
    iu = np.triu_indices(q, 1)
    radius = 0.5 * float(np.mean(targets[iu])) if q > 1 else 0.0
    angles = 2.0 * np.pi * np.arange(q) / q
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])


def classical_scaling(targets: np.ndarray) -> np.ndarray:
    """Torgerson scaling to the plane, each axis signed by its largest entry.

    Recovers an exactly planar metric up to a rigid motion. A flat result
    (rank < 2) gets a small circular offset on the second axis so the layout
    can leave the line.
    """
    t = np.asarray(targets, dtype=float)
    q = t.shape[0]
    centering = np.eye(q) - 1.0 / q
    b = -0.5 * centering @ (t * t) @ centering
    w, v = np.linalg.eigh((b + b.T) / 2)
    top = np.argsort(w)[::-1][:2]
    coords = v[:, top] * np.sqrt(np.maximum(w[top], 0.0))
    for k in range(coords.shape[1]):
        j = int(np.argmax(np.abs(v[:, top[k]])))
        if v[j, top[k]] < 0:
            coords[:, k] = -coords[:, k]
    if coords.shape[1] < 2:
        coords = np.column_stack([coords, np.zeros(q)])
    scale = float(np.abs(t).max()) or 1.0
    if np.abs(coords[:, 1]).max() <= 1e-9 * scale:
        coords[:, 1] = 1e-3 * scale * np.sin(2.0 * np.pi * np.arange(q) / q + 0.5)
    return coords


def initial_layout(targets: np.ndarray, seed: int, init: str = "mds") -> np.ndarray:
    q = targets.shape[0]
    if seed == 0:
        return circle_layout(targets) if init == "circle" else classical_scaling(targets)
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(q, 2))


def kamada_kawai(targets, settings: LayoutSettings | None = None, codes=None,
                 return_info: bool = False, init=None):
    """Planar layout minimising the Kamada-Kawai stress.

    The node with the largest energy gradient is moved by safeguarded
    Newton-Raphson steps until its gradient drops below the tolerance, then
    the next node is picked. Each step is line-searched, so the stress never
    increases.

    Parameters
    ----------
    targets : array_like, shape (q, q)
        Symmetric target distances, positive off the diagonal.
    settings : LayoutSettings, optional
    codes : sequence of str, optional
        Labels for the returned configuration.
    return_info : bool
        Also return a :class:`LayoutInfo` with the stress trace.
    init : array_like, shape (q, 2), optional
        Explicit starting layout; overrides ``settings.seed``.
    """
    settings = settings or LayoutSettings()
    t = np.ascontiguousarray(targets, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DomainError("targets must be a square matrix")
    if not np.isfinite(t).all():
        raise DomainError("targets must be finite")
    q = t.shape[0]
    off = ~np.eye(q, dtype=bool)
    if q < 1 or (q > 1 and not (t[off] > 0).all()):
        raise DomainError("targets must be positive off the diagonal")
    if not np.allclose(t, t.T, rtol=0, atol=1e-12):
        raise DomainError("targets must be symmetric")

    if init is None:
        init = initial_layout(t, settings.seed, settings.init)
    init = np.ascontiguousarray(init, dtype=float)
    if init.shape != (q, 2):
        raise DomainError(f"initial layout must have shape {(q, 2)}")
    if q == 1:
        coords, updates, converged, trace = init, 0, True, np.zeros(1)
    else:
        coords, updates, converged, trace = _backend.kernels.kk_solve(
            t, init, float(settings.gradient_tolerance), int(settings.max_iterations))
    if not converged:
        log.warning("Kamada-Kawai stopped after %d updates without reaching tolerance", updates)
    config = Configuration(np.asarray(coords), codes)
    if return_info:
        info = LayoutInfo(float(trace[-1]), float(trace[0]), int(updates), bool(converged),
                          np.asarray(trace))
        return config, info
    return config


def consensus_layout(g: GlobalSimilarity, settings: LayoutSettings | None = None,
                     return_info: bool = False):
    """Kamada-Kawai layout of a global similarity matrix."""
    settings = settings or LayoutSettings()
    return kamada_kawai(target_distances(g, settings.delta), settings,
                        codes=getattr(g, "labels", None), return_info=return_info)


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge tree over ``q`` leaves.

    ``merges[k] = (a, b, height, size)`` in scipy's linkage convention: ids
    below ``q`` are leaves, id ``q + k`` is the cluster formed by merge ``k``.
    ``leaf_order`` lists leaves left to right.
    """

    merges: tuple
    leaf_order: tuple
    q: int

    @property
    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def linkage_matrix(self) -> np.ndarray:
        return np.array([[a, b, h, s] for a, b, h, s in self.merges], dtype=float)

    def members(self, node: int) -> tuple:
        if node < self.q:
            return (node,)
        a, b, _, _ = self.merges[node - self.q]
        return tuple(sorted(self.members(a) + self.members(b)))

    def children(self, node: int) -> tuple:
        if node < self.q:
            return ()
        a, b, _, _ = self.merges[node - self.q]
        return (a, b)

    @property
    def root(self) -> int:
        return self.q + len(self.merges) - 1 if self.merges else 0

    def cut(self, n_clusters: int) -> list:
        """Split into ``n_clusters`` groups by undoing the highest merges.

        Groups are returned in leaf order, each as a tuple of leaf indices in
        leaf order.
        """
        if not 1 <= n_clusters <= self.q:
            raise DomainError(f"n_clusters must be in 1..{self.q}")
        nodes = {self.root}
        for k in range(len(self.merges) - 1, len(self.merges) - n_clusters, -1):
            node = self.q + k
            nodes.discard(node)
            nodes.update(self.children(node))
        position = {leaf: pos for pos, leaf in enumerate(self.leaf_order)}
        groups = [tuple(sorted(self.members(nd), key=position.get)) for nd in nodes]
        groups.sort(key=lambda grp: position[grp[0]])
        return groups

    def largest_gap_clusters(self) -> int:
        """Cluster count that cuts the tree at its widest height gap."""
        h = self.heights
        if len(h) < 2:
            return 1
        gaps = np.diff(h)
        k = int(np.argmax(gaps))
        # cutting between merge k and k+1 leaves q - (k + 1) clusters
        return self.q - (k + 1)


def hierarchical_cluster(g) -> Dendrogram:
    """Average-linkage (UPGMA) clustering on ``s_max - s``.

    Ties between candidate pairs go to the pair whose smallest members are
    lowest; in the leaf order the child holding the lower index comes first.
    """
    values = np.asarray(g, dtype=float)
    q = values.shape[0]
    if q < 2:
        raise DomainError("need q >= 2")
    iu = np.triu_indices(q, 1)
    diss = values[iu].max() - values
    np.fill_diagonal(diss, 0.0)
    scale = max(float(np.abs(diss).max()), 1.0)

    clusters = {k: (k,) for k in range(q)}  # id -> members
    merges = []
    next_id = q
    while len(clusters) > 1:
        best = None
        ids = sorted(clusters, key=lambda c: min(clusters[c]))
        for ai, a in enumerate(ids):
            for b in ids[ai + 1:]:
                ma, mb = clusters[a], clusters[b]
                h = float(diss[np.ix_(ma, mb)].sum()) / (len(ma) * len(mb))
                key = (min(ma), min(mb))
                if best is None or h < best[0] - 1e-12 * scale or (
                        abs(h - best[0]) <= 1e-12 * scale and key < best[1]):
                    best = (h, key, a, b)
        h, _, a, b = best
        members = tuple(sorted(clusters.pop(a) + clusters.pop(b)))
        merges.append((a, b, h, len(members)))
        clusters[next_id] = members
        next_id += 1

    def order(node):
        if node < q:
            return [node]
        a, b, _, _ = merges[node - q]
        return order(a) + order(b)

    return Dendrogram(tuple(merges), tuple(order(next_id - 1)), q)


def reorder_matrix(g, dendrogram: Dendrogram):
    """Permute rows and columns into dendrogram leaf order.

    Returns ``(matrix, permutation)``; a :class:`GlobalSimilarity` input yields
    a :class:`GlobalSimilarity` with permuted codes.
    """
    values = np.asarray(g, dtype=float)
    if values.shape != (dendrogram.q, dendrogram.q):
        raise DomainError(f"matrix {values.shape} does not match dendrogram over {dendrogram.q} leaves")
    perm = np.array(dendrogram.leaf_order, dtype=int)
    permuted = values[np.ix_(perm, perm)]
    if isinstance(g, GlobalSimilarity):
        permuted = GlobalSimilarity(permuted, g.variant, g.n, g.p,
                                    tuple(g.labels[k] for k in perm))
    return permuted, perm


def to_newick(dendrogram: Dendrogram, labels=None) -> str:
    """Nested-parentheses tree; branch lengths are height differences.

    Leaf order in the text follows ``dendrogram.leaf_order``.
    """
    q = dendrogram.q
    labels = labels or tuple(str(k + 1) for k in range(q))

    def height(node):
        return 0.0 if node < q else dendrogram.merges[node - q][2]

    def render(node):
        if node < q:
            return labels[node]
        a, b, h, _ = dendrogram.merges[node - q]
        return "(" + ",".join(f"{render(c)}:{h - height(c):.6g}" for c in (a, b)) + ")"

    if not dendrogram.merges:
        return labels[0] + ";"
    return render(dendrogram.root) + ";"


def format_configuration(config: Configuration) -> str:
    buf = io.StringIO()
    buf.write("code," + ",".join(config.labels) + "\n")
    for code, row in zip(config.codes, config.coords):
        buf.write(code + "," + ",".join(f"{v:.6g}" for v in row) + "\n")
    return buf.getvalue()


def write_configuration(config: Configuration, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_configuration(config))


def read_configuration(path) -> Configuration:
    codes, rows, labels = [], [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if labels is None:
                labels = tuple(cells[1:])
                continue
            codes.append(cells[0])
            rows.append([float(c) for c in cells[1:]])
    return Configuration(np.array(rows), tuple(codes), labels)


def distance_mismatch(a, b) -> float:
    """Largest absolute difference between the distance matrices of two configurations."""
    da = np.asarray(a, dtype=float)
    db = np.asarray(b, dtype=float)
    pa = np.sqrt(((da[:, None] - da[None]) ** 2).sum(-1))
    pb = np.sqrt(((db[:, None] - db[None]) ** 2).sum(-1))
    return float(np.abs(pa - pb).max()) if len(pa) else 0.0


__all__ = [
    "Configuration", "LayoutSettings", "LayoutInfo", "Dendrogram",
    "target_distances", "stress", "kamada_kawai", "consensus_layout",
    "hierarchical_cluster", "reorder_matrix", "to_newick",
    "format_configuration", "write_configuration", "read_configuration",
    "distance_mismatch",
]
