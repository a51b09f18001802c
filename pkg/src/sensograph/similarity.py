"""Local and global similarity matrices, strength normalisation, decile filtering.

Two local constructions are available:

* ``gabriel``: 1 when the two samples are Gabriel neighbours on the tablecloth.
* ``distances``: inverse min-max normalised distance, optionally pushed towards
  the extremes by :func:`tune_similarity` with exponent ``p``.

The global matrix is the sum of local matrices over the panel.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError
from .geometry import gabriel_graph, pairwise_distances

GABRIEL = "gabriel"
DISTANCES = "distances"
VARIANTS = (GABRIEL, DISTANCES)

DEFAULT_P = 2.0
# Value given to every pair when a tablecloth or a global matrix has no spread.
NEUTRAL = 0.5


@dataclass(frozen=True, eq=False)
class GlobalSimilarity:
    """Symmetric matrix of aggregated strengths with its provenance."""

    values: np.ndarray
    variant: str
    n: int
    p: float | None = None
    codes: tuple | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DomainError("similarity matrix must be square")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.codes is not None:
            object.__setattr__(self, "codes", tuple(self.codes))
            if len(self.codes) != values.shape[0]:
                raise DomainError("codes do not match matrix size")

    @property
    def q(self) -> int:
        return self.values.shape[0]

    @property
    def labels(self) -> tuple:
        return self.codes if self.codes is not None else tuple(str(k + 1) for k in range(self.q))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


class Edge(NamedTuple):
    i: int
    j: int
    strength: float
    normalized: float


def _offdiag(values: np.ndarray) -> np.ndarray:
    return values[np.triu_indices(values.shape[0], 1)]


def gabriel_similarity(tablecloth) -> np.ndarray:
    """Binary local similarity: the Gabriel adjacency as floats."""
    return gabriel_graph(tablecloth).astype(float)


def raw_distance_similarity(tablecloth) -> np.ndarray:
    """``1 - (d - d_min) / (d_max - d_min)`` over the off-diagonal pairs.

    With no spread every pair gets 0.5. Spreads below ``1e-12 * d_max`` count
    as none, so round-off on equal distances cannot flip pairs to 0 and 1.
    """
    d = pairwise_distances(tablecloth)
    q = d.shape[0]
    if q < 2:
        raise DomainError("need at least two samples")
    off = _offdiag(d)
    lo, hi = off.min(), off.max()
    if hi - lo > 1e-12 * hi:
        s = 1.0 - (d - lo) / (hi - lo)
    else:
        s = np.full_like(d, NEUTRAL)
    np.fill_diagonal(s, 0.0)
    return s


def tune_similarity(s, p: float = DEFAULT_P):
    """S-shaped reshaping of a similarity in [0, 1].

    ``2**(p-1) * s**p`` below 1/2 and ``1 - 2**(p-1) * |s - 1|**p`` from 1/2
    on. ``p = 1`` is the identity. Accepts scalars or arrays.
    """
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    arr = np.asarray(s, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("similarity must lie in [0, 1]")
    k = 2.0 ** (p - 1.0)
    out = np.where(arr < 0.5, k * arr ** p, 1.0 - k * np.abs(arr - 1.0) ** p)
    if np.ndim(s) == 0:
        return float(out)
    return out


def distance_similarity(tablecloth, p: float = DEFAULT_P) -> np.ndarray:
    s = tune_similarity(raw_distance_similarity(tablecloth), p)
    np.fill_diagonal(s, 0.0)
    return s


def local_similarity(tablecloth, variant: str, p: float = DEFAULT_P) -> np.ndarray:
    if variant == GABRIEL:
        return gabriel_similarity(tablecloth)
    if variant == DISTANCES:
        return distance_similarity(tablecloth, p)
    raise DomainError(f"unknown similarity variant {variant!r}")


def local_stack(panel, variant: str, p: float = DEFAULT_P) -> np.ndarray:
    """``(n, q, q)`` array of the local matrices of every tablecloth."""
    return np.stack([local_similarity(t, variant, p) for t in panel.tablecloths])


def aggregate(locals_: Sequence[np.ndarray], variant: str, p: float | None = None,
              codes=None) -> GlobalSimilarity:
    """Sum local similarity matrices into a global one."""
    mats = [np.asarray(m, dtype=float) for m in locals_]
    if not mats:
        raise DomainError("cannot aggregate an empty list")
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape or m.ndim != 2 or shape[0] != shape[1]:
            raise DomainError(f"local matrices disagree in shape: {shape} vs {m.shape}")
    total = np.sum(mats, axis=0)
    return GlobalSimilarity(total, variant, len(mats), p if variant == DISTANCES else None, codes)


def global_similarity(panel, variant: str, p: float = DEFAULT_P) -> GlobalSimilarity:
    """Global similarity matrix of a whole panel."""
    return aggregate(local_stack(panel, variant, p), variant, p, codes=panel.products)


def normalize_strengths(g) -> np.ndarray:
    """Min-max normalise off-diagonal strengths to [0, 1]; zero diagonal.

    Equal strengths everywhere map to 0.5.
    """
    values = np.asarray(g, dtype=float)
    if values.shape[0] < 2:
        raise DomainError("need q >= 2")
    off = _offdiag(values)
    lo, hi = off.min(), off.max()
    if hi > lo:
        out = (values - lo) / (hi - lo)
    else:
        out = np.full_like(values, NEUTRAL)
    np.fill_diagonal(out, 0.0)
    return out


def filter_deciles(g, k: int) -> list:
    """Edges whose normalised strength is in the top ``10 * k`` percent band.

    An edge survives when ``normalized >= 1 - k / 10``; ``k = 10`` keeps every
    pair. Result is sorted by strength, strongest first, ties by ``(i, j)``.
    """
    if int(k) != k or not 1 <= k <= 10:
        raise DomainError(f"decile k must be an integer in 1..10, got {k}")
    k = int(k)
    values = np.asarray(g, dtype=float)
    norm = normalize_strengths(values)
    off = _offdiag(values)
    lo, hi = off.min(), off.max()
    q = values.shape[0]
    edges = []
    for i in range(q):
        for j in range(i + 1, q):
            s = values[i, j]
            if k == 10:
                keep = True
            elif hi > lo:
                # 10 (s - lo) >= (10 - k)(hi - lo): exact for integer strengths
                keep = 10.0 * (s - lo) >= (10 - k) * (hi - lo) - 1e-12 * max(abs(hi), 1.0)
            else:
                keep = NEUTRAL >= 1 - k / 10
            if keep:
                edges.append(Edge(i, j, float(s), float(norm[i, j])))
    edges.sort(key=lambda e: (-e.strength, e.i, e.j))
    return edges


def format_matrix(g: GlobalSimilarity) -> str:
    """Matrix export: provenance comment, header row of codes, 6 significant digits."""
    buf = io.StringIO()
    p = "" if g.p is None else f"{g.p:g}"
    buf.write(f"# variant={g.variant} n={g.n} p={p}\n")
    labels = g.labels
    buf.write("," + ",".join(labels) + "\n")
    for code, row in zip(labels, g.values):
        buf.write(code + "," + ",".join(f"{v:.6g}" for v in row) + "\n")
    return buf.getvalue()


def write_matrix(g: GlobalSimilarity, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_matrix(g))


def read_matrix(path) -> GlobalSimilarity:
    """Inverse of :func:`write_matrix`."""
    meta = {}
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    meta[key] = value
                continue
            cells = line.split(",")
            if header is None:
                header = cells[1:]
                continue
            rows.append([float(c) for c in cells[1:]])
    if header is None:
        raise DomainError(f"{path}: no matrix header")
    p = meta.get("p") or None
    return GlobalSimilarity(
        np.array(rows), meta.get("variant", GABRIEL), int(meta.get("n", 0)),
        float(p) if p else None, tuple(header),
    )
