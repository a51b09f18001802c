"""Tablecloth panels: data model, CSV reader/writer, validation and simulation.

A panel file is long-format CSV with one row per (assessor, sample)::

    assessor_id,sample_code,x_cm,y_cm
    A001,s1,12.5,30.0
    A001,s2,40.1,8.25

The origin is the bottom-left corner of the sheet and y grows upward.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DomainError, ParseError, SchemaError

SHEET = (60.0, 40.0)
COLUMNS = ("assessor_id", "sample_code", "x_cm", "y_cm")

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"

MISSING_CODE = "missing_code"
OUT_OF_BOUNDS = "out_of_bounds"
DUPLICATE_COORDINATES = "duplicate_coordinates"


@dataclass(frozen=True, eq=False)
class Tablecloth:
    """One assessor's placement of every sample on the sheet.

    ``xy`` is a ``(q, 2)`` array aligned with ``codes``; a row of NaN marks a
    sample the assessor did not place.
    """

    assessor_id: str
    codes: tuple
    xy: np.ndarray
    sheet: tuple = SHEET

    def __post_init__(self):
        xy = np.array(self.xy, dtype=float)
        if xy.shape != (len(self.codes), 2):
            raise DomainError(
                f"tablecloth {self.assessor_id!r}: expected {(len(self.codes), 2)} "
                f"coordinates, got {xy.shape}"
            )
        xy.flags.writeable = False
        object.__setattr__(self, "codes", tuple(self.codes))
        object.__setattr__(self, "sheet", (float(self.sheet[0]), float(self.sheet[1])))
        object.__setattr__(self, "xy", xy)

    @property
    def q(self) -> int:
        return len(self.codes)

    @property
    def positions(self) -> dict:
        """Mapping ``code -> (x, y)`` for the samples that were placed."""
        return {
            code: (float(x), float(y))
            for code, (x, y) in zip(self.codes, self.xy)
            if not (math.isnan(x) or math.isnan(y))
        }

    @property
    def complete(self) -> bool:
        return bool(np.isfinite(self.xy).all())

    def __eq__(self, other):
        if not isinstance(other, Tablecloth):
            return NotImplemented
        return (
            self.assessor_id == other.assessor_id
            and self.codes == other.codes
            and self.sheet == other.sheet
            and np.array_equal(self.xy, other.xy, equal_nan=True)
        )

    __hash__ = None


@dataclass(frozen=True)
class Panel:
    """Ordered tablecloths over a fixed product list."""

    products: tuple
    tablecloths: tuple

    def __post_init__(self):
        products = tuple(self.products)
        tablecloths = tuple(self.tablecloths)
        if len(products) < 2:
            raise DomainError("a panel needs at least two products")
        if len(set(products)) != len(products):
            raise DomainError("product codes must be unique")
        if not tablecloths:
            raise DomainError("a panel needs at least one tablecloth")
        for t in tablecloths:
            if t.codes != products:
                raise SchemaError(
                    f"tablecloth {t.assessor_id!r} does not use the panel product list"
                )
        object.__setattr__(self, "products", products)
        object.__setattr__(self, "tablecloths", tablecloths)

    @property
    def n(self) -> int:
        return len(self.tablecloths)

    @property
    def q(self) -> int:
        return len(self.products)

    def coordinates(self) -> np.ndarray:
        """Stack all tablecloths into an ``(n, q, 2)`` array."""
        return np.stack([t.xy for t in self.tablecloths])

    def subset(self, indices: Iterable[int]) -> "Panel":
        """Panel made of the tablecloths at ``indices`` (repeats allowed)."""
        return Panel(self.products, tuple(self.tablecloths[i] for i in indices))


@dataclass(frozen=True)
class Violation:
    assessor_id: str
    kind: str
    codes: tuple
    severity: str
    message: str

    def __str__(self):
        return f"[{self.severity}] {self.assessor_id}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    """Every invariant violation found in a panel.

    Missing codes and coincident positions are errors; out-of-sheet
    positions are warnings and do not block analysis.
    """

    violations: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def errors(self) -> list:
        return [v for v in self.violations if v.severity == SEVERITY_ERROR]

    @property
    def warnings(self) -> list:
        return [v for v in self.violations if v.severity == SEVERITY_WARNING]

    @property
    def accepted(self) -> bool:
        return not self.errors

    def by_tablecloth(self) -> dict:
        out: dict = {}
        for v in self.violations:
            out.setdefault(v.assessor_id, []).append(v)
        return out

    def format(self) -> str:
        if not self.violations:
            return "panel OK"
        return "\n".join(str(v) for v in self.violations)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def read_products(source) -> tuple:
    """Read an explicit product list, one code per line."""
    stream, owned = _open_text(source)
    try:
        codes = [line.strip() for line in stream]
    finally:
        if owned:
            stream.close()
    codes = tuple(c for c in codes if c and not c.startswith("#"))
    if len(set(codes)) != len(codes):
        raise SchemaError("duplicate codes in product list")
    return codes


def parse_panel(source, sheet: Sequence[float] = SHEET, products: Sequence[str] | None = None) -> Panel:
    """Parse a long-format panel file.

    Parameters
    ----------
    source : path or text stream
        CSV with header ``assessor_id,sample_code,x_cm,y_cm`` (any column
        order). Blank lines and lines starting with ``#`` are skipped.
    sheet : (width, height)
        Sheet size in cm attached to every tablecloth.
    products : sequence of str, optional
        Explicit product order. Defaults to the codes of the first assessor
        in order of appearance.

    Raises
    ------
    ParseError
        Malformed row, repeated (assessor, sample) pair, missing header.
    SchemaError
        An assessor uses a code outside the product list.
    """
    stream, owned = _open_text(source)
    try:
        lines = list(stream)
    finally:
        if owned:
            stream.close()

    reader = csv.reader(lines)
    header = None
    col = {}
    blocks: dict = {}
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        cells = [cell.strip() for cell in row]
        if header is None:
            header = cells
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise ParseError(f"header lacks column(s) {', '.join(missing)}", lineno)
            col = {name: header.index(name) for name in COLUMNS}
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(cells)}", lineno)
        assessor = cells[col["assessor_id"]]
        code = cells[col["sample_code"]]
        if not assessor or not code:
            raise ParseError("empty assessor_id or sample_code", lineno)
        try:
            x = float(cells[col["x_cm"]])
            y = float(cells[col["y_cm"]])
        except ValueError:
            raise ParseError(
                f"non-numeric coordinate {cells[col['x_cm']]!r}, {cells[col['y_cm']]!r}", lineno
            ) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError("coordinates must be finite", lineno)
        block = blocks.setdefault(assessor, {})
        if code in block:
            raise ParseError(f"sample {code!r} given twice for assessor {assessor!r}", lineno)
        block[code] = (x, y, lineno)

    if header is None:
        raise ParseError("empty input: header row required", 1)
    if not blocks:
        raise SchemaError("panel has no data rows")

    if products is None:
        first = next(iter(blocks.values()))
        products = tuple(first)
    products = tuple(products)
    known = set(products)

    tablecloths = []
    for assessor, block in blocks.items():
        xy = np.full((len(products), 2), np.nan)
        index = {c: k for k, c in enumerate(products)}
        for code, (x, y, lineno) in block.items():
            if code not in known:
                raise SchemaError(
                    f"line {lineno}: assessor {assessor!r} uses sample {code!r} "
                    f"outside the product list {list(products)}"
                )
            xy[index[code]] = (x, y)
        tablecloths.append(Tablecloth(assessor, products, xy, tuple(sheet)))
    return Panel(products, tuple(tablecloths))


def read_panel(path, sheet=SHEET, products=None) -> Panel:
    return parse_panel(path, sheet=sheet, products=products)


def serialize_panel(panel: Panel, stream: TextIO | None = None) -> str:
    """Write ``panel`` in the canonical schema with 6 significant digits.

    Returns the text; also writes it to ``stream`` when given. Samples an
    assessor did not place are omitted.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for t in panel.tablecloths:
        for code, (x, y) in zip(t.codes, t.xy):
            if math.isnan(x) or math.isnan(y):
                continue
            writer.writerow((t.assessor_id, code, f"{x:.6g}", f"{y:.6g}"))
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def write_panel(panel: Panel, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        serialize_panel(panel, fh)


def coincident_groups(xy: np.ndarray) -> list:
    """Groups (index tuples, size >= 2) of exactly coinciding placed points."""
    seen: dict = {}
    for k, (x, y) in enumerate(xy):
        if math.isnan(x) or math.isnan(y):
            continue
        seen.setdefault((float(x), float(y)), []).append(k)
    return [tuple(g) for g in seen.values() if len(g) > 1]


def validate_panel(panel: Panel) -> ValidationReport:
    """List every violation in ``panel`` without modifying it.

    One violation per missing sample, per out-of-sheet sample, and per group
    of samples sharing identical coordinates.
    """
    found = []
    for t in panel.tablecloths:
        width, height = t.sheet
        for code, (x, y) in zip(t.codes, t.xy):
            if math.isnan(x) or math.isnan(y):
                found.append(Violation(
                    t.assessor_id, MISSING_CODE, (code,), SEVERITY_ERROR,
                    f"sample {code} has no position",
                ))
            elif not (0.0 <= x <= width and 0.0 <= y <= height):
                found.append(Violation(
                    t.assessor_id, OUT_OF_BOUNDS, (code,), SEVERITY_WARNING,
                    f"sample {code} at ({x:g}, {y:g}) lies outside the "
                    f"{width:g} x {height:g} sheet",
                ))
        for group in coincident_groups(t.xy):
            codes = tuple(t.codes[k] for k in group)
            x, y = t.xy[group[0]]
            found.append(Violation(
                t.assessor_id, DUPLICATE_COORDINATES, codes, SEVERITY_ERROR,
                f"samples {', '.join(codes)} share position ({x:g}, {y:g})",
            ))
    return ValidationReport(tuple(found))


def jitter_duplicates(panel: Panel, eps: float = 0.01, seed: int = 0) -> Panel:
    """Break coincident positions by uniform noise in ``[-eps, eps]``.

    Only the points of a coincident group move; every other coordinate is
    left bit-identical. Deterministic for a given ``seed``.
    """
    if eps <= 0:
        raise DomainError("jitter eps must be positive")
    rng = np.random.default_rng(seed)
    out = []
    for t in panel.tablecloths:
        xy = np.array(t.xy)
        groups = coincident_groups(xy)
        while groups:
            for group in groups:
                idx = list(group)
                xy[idx] += rng.uniform(-eps, eps, size=(len(idx), 2))
            groups = coincident_groups(xy)
        out.append(t if np.array_equal(xy, t.xy, equal_nan=True)
                   else Tablecloth(t.assessor_id, t.codes, xy, t.sheet))
    return Panel(panel.products, tuple(out))


def generate_panel(
    truth,
    noise_sd: float,
    n: int,
    seed: int,
    sheet: Sequence[float] = SHEET,
    codes: Sequence[str] | None = None,
) -> Panel:
    """Simulate ``n`` assessors placing samples around a true configuration.

    Each tablecloth is ``truth`` plus independent N(0, noise_sd^2) noise per
    sample and axis, clamped to the sheet.

    Parameters
    ----------
    truth : array_like, shape (q, 2)
        True positions in cm, inside the sheet.
    noise_sd : float
        Noise standard deviation in cm.
    n : int
        Number of tablecloths.
    seed : int
        Seed for ``numpy.random.default_rng``.
    codes : sequence of str, optional
        Sample codes; defaults to ``codes`` of a Configuration or ``"1".."q"``.
    """
    if noise_sd < 0:
        raise DomainError("noise_sd must be >= 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    if codes is None:
        codes = getattr(truth, "codes", None)
    xy = np.asarray(truth, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] < 2:
        raise DomainError("truth must be a (q, 2) configuration with q >= 2")
    width, height = float(sheet[0]), float(sheet[1])
    if not ((xy[:, 0] >= 0) & (xy[:, 0] <= width) & (xy[:, 1] >= 0) & (xy[:, 1] <= height)).all():
        raise DomainError("truth points must lie inside the sheet")
    q = xy.shape[0]
    if codes is None:
        codes = tuple(str(k + 1) for k in range(q))
    codes = tuple(codes)
    if len(codes) != q:
        raise DomainError("codes must match the truth size")

    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sd, size=(n, q, 2)) if noise_sd > 0 else np.zeros((n, q, 2))
    placed = xy[None, :, :] + noise
    np.clip(placed[..., 0], 0.0, width, out=placed[..., 0])
    np.clip(placed[..., 1], 0.0, height, out=placed[..., 1])
    width_id = max(3, len(str(n)))
    tablecloths = tuple(
        Tablecloth(f"A{i + 1:0{width_id}d}", codes, placed[i], (width, height))
        for i in range(n)
    )
    return Panel(codes, tablecloths)
