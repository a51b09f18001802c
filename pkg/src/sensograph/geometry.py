"""Pairwise distances and Gabriel graphs of single tablecloths."""

import numpy as np

from . import _backend
from .errors import DomainError
from .panel import Tablecloth, coincident_groups

# Closed-disk tie tolerance in cm^2: a third point on the diameter circle blocks the edge.
GABRIEL_TAU = 1e-9


def _points(tablecloth) -> np.ndarray:
    xy = tablecloth.xy if isinstance(tablecloth, Tablecloth) else tablecloth
    xy = np.ascontiguousarray(xy, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise DomainError(f"expected (q, 2) coordinates, got shape {xy.shape}")
    if not np.isfinite(xy).all():
        raise DomainError("tablecloth has missing or non-finite positions")
    return xy


def pairwise_distances(tablecloth) -> np.ndarray:
    """Euclidean distance matrix of a tablecloth (or a ``(q, 2)`` array)."""
    xy = _points(tablecloth)
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return d


def gabriel_graph(tablecloth, tau: float = GABRIEL_TAU) -> np.ndarray:
    """Gabriel graph adjacency (0/1, symmetric, zero diagonal).

    Samples ``i`` and ``j`` are joined iff no third sample ``k`` satisfies
    ``d(i,k)^2 + d(j,k)^2 <= d(i,j)^2 + tau``, i.e. no sample lies in the
    closed disk having segment ``ij`` as diameter.

    Raises
    ------
    DomainError
        If two samples share a position.
    """
    xy = _points(tablecloth)
    if coincident_groups(xy):
        raise DomainError("Gabriel graph undefined for coincident samples")
    return np.asarray(_backend.kernels.gabriel_adjacency(xy, float(tau)), dtype=np.uint8)
