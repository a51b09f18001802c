"""Multiple Factor Analysis of napping tablecloths.

Each assessor contributes a centred ``q x 2`` block scaled so that its first
principal variance is 1. The blocks are concatenated and a PCA of the
result gives the consensus scores.

Conventions
-----------
* Variances use the ``1 / (q - 1)`` normalisation, both for the block
  eigenvalue and for the global decomposition.
* The concatenated matrix is divided by ``sqrt(n_groups)`` so eigenvalues are
  an average over assessors; duplicating every tablecloth leaves the result
  unchanged.
* Each component is signed so that its largest-magnitude loading is positive.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from .consensus import Configuration
from .errors import DegenerateBlockError, DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MfaResult:
    scores: Configuration
    eigenvalues: np.ndarray
    explained: np.ndarray
    group_weights: np.ndarray
    excluded: tuple = ()

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.explained)


def _block(tablecloth) -> np.ndarray:
    xy = np.asarray(getattr(tablecloth, "xy", tablecloth), dtype=float)
    if not np.isfinite(xy).all():
        raise DomainError("tablecloth has missing positions")
    return xy - xy.mean(axis=0)


def first_eigenvalue(tablecloth) -> float:
    """Largest variance (``1/(q-1)`` convention) of the centred block."""
    block = _block(tablecloth)
    q = block.shape[0]
    sv = np.linalg.svd(block, compute_uv=False)
    return float(sv[0] ** 2 / (q - 1))


def group_weight(tablecloth) -> float:
    """``1 / lambda_1`` of the centred coordinate block.

    Raises
    ------
    DegenerateBlockError
        All samples at one point.
    """
    lam = first_eigenvalue(tablecloth)
    xy = np.asarray(getattr(tablecloth, "xy", tablecloth), dtype=float)
    scale = max(float(np.abs(xy).max()), 1.0)
    if lam <= (1e-12 * scale) ** 2:
        raise DegenerateBlockError("tablecloth has no spread")
    return 1.0 / lam


def weighted_blocks(panel) -> tuple:
    """Centred blocks scaled by ``sqrt(weight)``; degenerate ones are skipped.

    Returns ``(blocks, weights, kept)``: ``blocks`` has shape ``(len(kept), q, 2)``
    and ``kept`` holds the indices of the tablecloths used.
    """
    blocks, weights, kept = [], [], []
    for k, t in enumerate(panel.tablecloths):
        try:
            w = group_weight(t)
        except DegenerateBlockError:
            log.warning("assessor %s has no spread; excluded from MFA", t.assessor_id)
            continue
        blocks.append(_block(t) * np.sqrt(w))
        weights.append(w)
        kept.append(k)
    arr = np.stack(blocks) if blocks else np.zeros((0, panel.q, 2))
    return arr, np.asarray(weights), np.asarray(kept, dtype=int)


def mfa_from_blocks(blocks: np.ndarray, max_dims: int | None = None, codes=None):
    """Global PCA of already weighted blocks.

    Returns ``(scores, eigenvalues, explained)``; ``scores`` is ``q x D`` with
    ``D = min(max_dims, q - 1, 2 * n)``.
    """
    n, q, _ = blocks.shape
    if n < 2:
        raise DomainError(f"MFA needs at least 2 non-degenerate assessors, got {n}")
    if q < 3:
        raise DomainError("MFA needs at least 3 samples")
    z = np.concatenate(list(blocks), axis=1) / np.sqrt(n)
    u, s, vt = np.linalg.svd(z, full_matrices=False)
    rank_cap = min(q - 1, 2 * n)
    s = s[:rank_cap]
    u = u[:, :rank_cap]
    vt = vt[:rank_cap]
    eig = s ** 2 / (q - 1)
    total = eig.sum()
    if total <= 0:
        raise DomainError("all blocks are degenerate")
    explained = 100.0 * eig / total

    flip = np.sign(vt[np.arange(len(vt)), np.argmax(np.abs(vt), axis=1)])
    flip[flip == 0] = 1.0
    scores = u * s * flip
    d = rank_cap if max_dims is None else max(1, min(int(max_dims), rank_cap))
    labels = tuple(f"Dim{k + 1}" for k in range(d))
    return Configuration(scores[:, :d], codes, labels), eig, explained


def mfa_consensus(panel, max_dims: int | None = None) -> MfaResult:
    """MFA consensus of a panel.

    Parameters
    ----------
    panel : Panel
    max_dims : int, optional
        Number of score dimensions kept; all ``min(q - 1, 2n)`` by default.
        Eigenvalues and explained percentages always cover every dimension.
    """
    blocks, weights, kept = weighted_blocks(panel)
    kept_set = set(kept.tolist())
    excluded = tuple(t.assessor_id for k, t in enumerate(panel.tablecloths) if k not in kept_set)
    scores, eig, explained = mfa_from_blocks(blocks, max_dims, codes=panel.products)
    return MfaResult(scores, eig, explained, weights, excluded)


def format_scores(result: MfaResult) -> str:
    """Scores table with the explained variance as a leading comment line."""
    buf = io.StringIO()
    labels = result.scores.labels
    buf.write("# explained_variance_pct," + ",".join(
        f"{label}={result.explained[k]:.6g}" for k, label in enumerate(labels)) + "\n")
    buf.write("code," + ",".join(labels) + "\n")
    for code, row in zip(result.scores.codes, result.scores.coords):
        buf.write(code + "," + ",".join(f"{v:.6g}" for v in row) + "\n")
    return buf.getvalue()


def format_eigenvalues(result: MfaResult) -> str:
    buf = io.StringIO()
    buf.write("dim,eigenvalue,explained_pct,cumulative_pct\n")
    for k, (e, p, c) in enumerate(zip(result.eigenvalues, result.explained, result.cumulative)):
        buf.write(f"Dim{k + 1},{e:.6g},{p:.6g},{c:.6g}\n")
    return buf.getvalue()
