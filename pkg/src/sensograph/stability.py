"""Bootstrap stability of consensus results.

Virtual panels of ``m`` assessors are drawn with replacement from the full
panel. MFA replicates are compared with the full-panel scores by the RV
coefficient; global similarity matrices are compared by the Mantel
coefficient (Pearson correlation of off-diagonal entries).
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UndefinedCoefficientError
from .mfa import mfa_from_blocks, weighted_blocks
from .similarity import DEFAULT_P, DISTANCES, GABRIEL, local_stack

log = logging.getLogger(__name__)

MFA = "mfa"
METHODS = (MFA, GABRIEL, DISTANCES)
MAX_REDRAWS = 10


def _centered(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a - a.mean(axis=0)


def rv_coefficient(x, y) -> float:
    """Escoufier's RV coefficient of two configurations over the same samples.

    ``trace(XX'YY') / sqrt(trace((XX')^2) trace((YY')^2))`` after column
    centring. The column counts of ``x`` and ``y`` may differ.

    Raises
    ------
    UndefinedCoefficientError
        If either configuration collapses to a single point.
    """
    a = _centered(x)
    b = _centered(y)
    if a.shape[0] != b.shape[0]:
        raise DomainError("configurations must have the same number of samples")
    # trace(AA'BB') = ||A'B||_F^2, trace((AA')^2) = ||A'A||_F^2
    num = np.sum((a.T @ b) ** 2)
    da = np.sum((a.T @ a) ** 2)
    db = np.sum((b.T @ b) ** 2)
    if da <= 0 or db <= 0:
        raise UndefinedCoefficientError("RV undefined for a zero configuration")
    return float(min(1.0, num / np.sqrt(da * db)))


def mantel_coefficient(a, b) -> float:
    """Pearson correlation of the upper-triangle entries of two square matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrices must be square and of equal size")
    if a.shape[0] < 3:
        raise DomainError("Mantel coefficient needs at least 3 samples")
    iu = np.triu_indices(a.shape[0], 1)
    u = a[iu] - a[iu].mean()
    v = b[iu] - b[iu].mean()
    su = np.sqrt(np.dot(u, u))
    sv = np.sqrt(np.dot(v, v))
    scale_u = max(np.abs(a[iu]).max(), 1e-300)
    scale_v = max(np.abs(b[iu]).max(), 1e-300)
    if su <= 1e-13 * scale_u * np.sqrt(len(u)) or sv <= 1e-13 * scale_v * np.sqrt(len(v)):
        raise UndefinedCoefficientError("Mantel undefined for a constant matrix")
    r = np.dot(u, v) / (su * sv)
    return float(max(-1.0, min(1.0, r)))


@dataclass(frozen=True)
class Method:
    """What to bootstrap: ``mfa`` (with ``dims``), ``gabriel`` or ``distances`` (with ``p``)."""

    kind: str
    dims: int = 2
    p: float = DEFAULT_P

    def __post_init__(self):
        if self.kind not in METHODS:
            raise DomainError(f"unknown method {self.kind!r}; expected one of {METHODS}")
        if self.kind == MFA and self.dims < 1:
            raise DomainError("dims must be >= 1")
        if self.kind == DISTANCES and not self.p >= 1:
            raise DomainError("p must be >= 1")

    @property
    def tag(self) -> str:
        if self.kind == MFA:
            return f"MFA-{self.dims}dims"
        if self.kind == GABRIEL:
            return "Gabriel"
        return f"distances-p{self.p:g}"

    @property
    def coefficient(self) -> str:
        return "RV" if self.kind == MFA else "Mantel"


@dataclass(frozen=True, eq=False)
class StabilityCurve:
    method: str
    grid: tuple
    mean: np.ndarray
    sd: np.ndarray
    replicates: np.ndarray  # valid replicate count per m
    seed: int
    values: tuple = field(default=(), repr=False)  # per-m arrays, NaN = missing

    def crossing(self, threshold: float = 0.95):
        """First grid size whose mean reaches ``threshold``, or None."""
        for m, mu in zip(self.grid, self.mean):
            if mu >= threshold:
                return m
        return None

    def at(self, m: int) -> tuple:
        k = self.grid.index(m)
        return float(self.mean[k]), float(self.sd[k])


def make_grid(n: int, step: int = 10) -> tuple:
    """``step, 2 step, ...`` up to ``n``, then ``n`` itself if not already present."""
    if n < 2:
        raise DomainError("panel needs at least 2 assessors")
    if step < 1:
        raise DomainError("grid step must be >= 1")
    grid = [m for m in range(step, n + 1, step) if m >= 2]
    if not grid or grid[-1] != n:
        grid.append(n)
    return tuple(grid)


def replicate_rng(seed: int, m: int, r: int) -> np.random.Generator:
    """Independent stream for replicate ``r`` at size ``m``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(m), int(r))))


def bootstrap_stability(panel, method: Method, grid=None, reps: int = 100, seed: int = 0,
                        step: int = 10) -> StabilityCurve:
    """Agreement between bootstrap virtual panels and the full panel.

    Parameters
    ----------
    panel : Panel
    method : Method
    grid : sequence of int, optional
        Virtual panel sizes; defaults to :func:`make_grid` with ``step``.
    reps : int
        Replicates per size.
    seed : int
        Master seed; each (m, replicate) pair gets its own child stream.
    """
    if reps < 1:
        raise DomainError("reps must be >= 1")
    grid = tuple(int(m) for m in (grid if grid is not None else make_grid(panel.n, step)))
    if any(m < 2 for m in grid):
        raise DomainError("grid values must be >= 2")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly increasing")

    if method.kind == MFA:
        blocks, _, kept = weighted_blocks(panel)
        # pool index -> row in blocks, -1 when the tablecloth is degenerate
        row_of = np.full(panel.n, -1)
        row_of[kept] = np.arange(len(kept))
        reference, _, _ = mfa_from_blocks(blocks, method.dims)
        d = reference.d

        def score(idx):
            rows = row_of[idx]
            rows = rows[rows >= 0]
            if len(rows) < 2:
                return None
            config, _, _ = mfa_from_blocks(blocks[rows], d)
            return rv_coefficient(config.coords, reference.coords)
    else:
        stack = local_stack(panel, method.kind, method.p)
        reference = stack.sum(axis=0)

        def score(idx):
            try:
                return mantel_coefficient(stack[idx].sum(axis=0), reference)
            except UndefinedCoefficientError:
                return None

    means, sds, counts, values = [], [], [], []
    redraws = 0
    for m in grid:
        vals = np.full(reps, np.nan)
        for r in range(reps):
            rng = replicate_rng(seed, m, r)
            for _ in range(MAX_REDRAWS + 1):
                value = score(rng.integers(0, panel.n, size=m))
                if value is not None:
                    vals[r] = value
                    break
                redraws += 1
        ok = vals[~np.isnan(vals)]
        means.append(float(ok.mean()) if len(ok) else np.nan)
        sds.append(float(ok.std(ddof=1)) if len(ok) > 1 else 0.0 if len(ok) else np.nan)
        counts.append(len(ok))
        values.append(vals)
    if redraws:
        log.info("%s: %d degenerate replicates redrawn", method.tag, redraws)
    return StabilityCurve(method.tag, grid, np.array(means), np.array(sds),
                          np.array(counts), int(seed), tuple(values))


def format_curve(curve: StabilityCurve) -> str:
    buf = io.StringIO()
    buf.write("method,m,mean,sd,R\n")
    for m, mu, sd, r in zip(curve.grid, curve.mean, curve.sd, curve.replicates):
        buf.write(f"{curve.method},{m},{mu:.6g},{sd:.6g},{r}\n")
    return buf.getvalue()


def format_replicates(curve: StabilityCurve) -> str:
    buf = io.StringIO()
    buf.write("method,m,replicate,value\n")
    for m, vals in zip(curve.grid, curve.values):
        for r, v in enumerate(vals):
            buf.write(f"{curve.method},{m},{r},{'' if np.isnan(v) else f'{v:.10g}'}\n")
    return buf.getvalue()


def read_curve(path) -> StabilityCurve:
    grid, mean, sd, reps, method = [], [], [], [], ""
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            method, m, mu, s, r = line.strip().split(",")
            grid.append(int(m))
            mean.append(float(mu))
            sd.append(float(s))
            reps.append(int(r))
    return StabilityCurve(method, tuple(grid), np.array(mean), np.array(sd), np.array(reps), 0)
