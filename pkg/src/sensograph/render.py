"""Static SVG figures: consensus maps, reordered heatmaps, dendrograms, stability curves.

Output is plain text built from fixed-precision numbers, so identical inputs
give byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError
from .similarity import filter_deciles, normalize_strengths

RED = (220, 30, 30)
GREEN = (30, 160, 30)
KINDS = ("consensus", "heatmap", "dendrogram", "stability")


@dataclass(frozen=True)
class RenderSpec:
    kind: str = "consensus"
    decile: int = 10
    width: int = 640
    height: int = 480
    font_size: int = 13
    threshold: float = 0.95

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown figure kind {self.kind!r}")
        if int(self.decile) != self.decile or not 1 <= self.decile <= 10:
            raise DomainError("decile must be an integer in 1..10")
        if not 0 < self.threshold <= 1:
            raise DomainError("threshold must lie in (0, 1]")


def ramp_rgb(t: float) -> tuple:
    """Linear RGB interpolation from red (t=0) to green (t=1)."""
    t = min(max(float(t), 0.0), 1.0)
    return tuple(int(round(a + t * (b - a))) for a, b in zip(RED, GREEN))


def ramp_color(t: float) -> str:
    return "#{:02x}{:02x}{:02x}".format(*ramp_rgb(t))


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Svg:
    def __init__(self, width, height, font_size):
        self.width = width
        self.height = height
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="{font_size}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]

    def add(self, element: str):
        self.parts.append(element)

    def text(self, x, y, label, anchor="middle", cls="label", extra=""):
        self.add(f'<text class="{cls}" x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>'
                 f'{escape(str(label))}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, cls="", extra=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                 f'stroke="{stroke}" stroke-width="{_f(width)}"{extra}/>')

    def close(self) -> str:
        return "\n".join(self.parts + ["</svg>", ""])


def _fit(points: np.ndarray, width, height, margin):
    """Map points (math orientation) to canvas coordinates, y flipped, aspect kept."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = min((width - 2 * margin) / span[0], (height - 2 * margin) / span[1])
    cx = (width - scale * (hi[0] - lo[0])) / 2
    cy = (height - scale * (hi[1] - lo[1])) / 2
    x = cx + scale * (points[:, 0] - lo[0])
    y = height - (cy + scale * (points[:, 1] - lo[1]))
    return np.column_stack([x, y])


def render_consensus(config, g=None, spec: RenderSpec | None = None) -> str:
    """Consensus map: labelled nodes and, when ``g`` is given, coloured edges.

    Edges are those kept by ``filter_deciles(g, spec.decile)``; the colour and
    width follow the normalised strength. Weaker edges are drawn first.
    """
    spec = spec or RenderSpec()
    coords = np.asarray(config, dtype=float)
    if coords.ndim != 2 or coords.shape[1] < 2:
        raise DomainError("consensus map needs at least two coordinates per sample")
    coords = coords[:, :2]
    codes = getattr(config, "codes", None) or tuple(str(k + 1) for k in range(len(coords)))
    if g is not None and np.asarray(g).shape != (len(coords), len(coords)):
        raise DomainError("similarity matrix does not match the configuration")
    fs = spec.font_size
    pos = _fit(coords, spec.width, spec.height, margin=3 * fs)
    svg = _Svg(spec.width, spec.height, fs)

    if g is not None:
        edges = filter_deciles(g, spec.decile)
        svg.add(f'<g class="edges" data-decile="{spec.decile}" data-count="{len(edges)}">')
        for e in reversed(edges):
            svg.line(pos[e.i, 0], pos[e.i, 1], pos[e.j, 0], pos[e.j, 1],
                     stroke=ramp_color(e.normalized), width=1.0 + 3.0 * e.normalized,
                     cls="edge", extra=f' data-i="{e.i}" data-j="{e.j}" '
                                       f'data-strength="{e.strength:.6g}"')
        svg.add("</g>")

    svg.add('<g class="nodes">')
    used: dict = {}
    for k, (x, y) in enumerate(pos):
        svg.add(f'<circle class="node" cx="{_f(x)}" cy="{_f(y)}" r="{_f(fs * 0.45)}" '
                f'fill="#333333"/>')
        key = (_f(x), _f(y))
        shift = used.get(key, 0)
        used[key] = shift + 1
        svg.text(x, y - 0.8 * fs + shift * 1.2 * fs, codes[k])
    svg.add("</g>")
    return svg.close()


def render_heatmap(g, dendrogram=None, spec: RenderSpec | None = None, groups=None) -> str:
    """Similarity matrix heatmap, optionally reordered by a dendrogram.

    ``groups`` are leaf-index tuples (as from ``Dendrogram.cut``) framed as
    diagonal blocks; contiguous in leaf order.
    """
    spec = spec or RenderSpec(kind="heatmap")
    values = np.asarray(g, dtype=float)
    q = values.shape[0]
    labels = getattr(g, "labels", None) or tuple(str(k + 1) for k in range(q))
    order = list(dendrogram.leaf_order) if dendrogram is not None else list(range(q))
    if dendrogram is not None and dendrogram.q != q:
        raise DomainError("dendrogram does not match the matrix")
    norm = normalize_strengths(values)
    fs = spec.font_size
    margin = 3 * fs
    cell = min((spec.width - 2 * margin) / q, (spec.height - 2 * margin) / q)
    x0 = (spec.width - q * cell) / 2 + margin / 2
    y0 = (spec.height - q * cell) / 2 + margin / 2
    svg = _Svg(spec.width, spec.height, fs)
    svg.add('<g class="cells">')
    for r, i in enumerate(order):
        for c, j in enumerate(order):
            color = "#e6e6e6" if i == j else ramp_color(norm[i, j])
            svg.add(f'<rect class="cell" data-i="{i}" data-j="{j}" x="{_f(x0 + c * cell)}" '
                    f'y="{_f(y0 + r * cell)}" width="{_f(cell)}" height="{_f(cell)}" '
                    f'fill="{color}"/>')
            if i != j:
                svg.text(x0 + (c + 0.5) * cell, y0 + (r + 0.5) * cell + 0.35 * fs,
                         f"{values[i, j]:.4g}", cls="value", extra=' font-size="'
                         f'{max(6, int(min(fs, cell / 3.5)))}"')
    svg.add("</g>")
    for r, i in enumerate(order):
        svg.text(x0 - 0.4 * fs, y0 + (r + 0.5) * cell + 0.35 * fs, labels[i], anchor="end")
        svg.text(x0 + (r + 0.5) * cell, y0 - 0.5 * fs, labels[i])
    if groups:
        position = {leaf: k for k, leaf in enumerate(order)}
        for grp in groups:
            idx = sorted(position[m] for m in grp)
            if idx != list(range(idx[0], idx[0] + len(idx))):
                raise DomainError(f"group {grp} is not contiguous in the leaf order")
            a, size = idx[0], len(idx)
            svg.add(f'<rect class="frame" x="{_f(x0 + a * cell)}" y="{_f(y0 + a * cell)}" '
                    f'width="{_f(size * cell)}" height="{_f(size * cell)}" fill="none" '
                    f'stroke="#000000" stroke-width="3.00"/>')
    return svg.close()


def render_dendrogram(dendrogram, labels=None, spec: RenderSpec | None = None) -> str:
    """Dendrogram with leaves along the bottom and merge height upward."""
    spec = spec or RenderSpec(kind="dendrogram")
    q = dendrogram.q
    labels = labels or tuple(str(k + 1) for k in range(q))
    fs = spec.font_size
    margin = 3 * fs
    plot_w = spec.width - 2 * margin
    plot_h = spec.height - 2 * margin
    top = max(float(dendrogram.heights.max()) if dendrogram.merges else 0.0, 1e-12)
    x_of = {leaf: margin + (k + 0.5) * plot_w / q for k, leaf in enumerate(dendrogram.leaf_order)}
    y_base = spec.height - margin

    def y(h):
        return y_base - plot_h * h / top

    svg = _Svg(spec.width, spec.height, fs)
    height_of = {leaf: 0.0 for leaf in range(q)}
    for k, (a, b, h, _) in enumerate(dendrogram.merges):
        node = q + k
        x_of[node] = (x_of[a] + x_of[b]) / 2
        height_of[node] = h
        svg.add(f'<path class="link" d="M{_f(x_of[a])},{_f(y(height_of[a]))} '
                f'V{_f(y(h))} H{_f(x_of[b])} V{_f(y(height_of[b]))}" fill="none" '
                f'stroke="#000000" stroke-width="1.50" data-height="{h:.6g}"/>')
    for leaf in dendrogram.leaf_order:
        svg.text(x_of[leaf], y_base + 1.3 * fs, labels[leaf])
    svg.line(margin * 0.6, y_base, margin * 0.6, y(top), cls="axis")
    svg.text(margin * 0.5, y(top) + 0.35 * fs, f"{top:.4g}", anchor="end", cls="tick")
    svg.text(margin * 0.5, y_base + 0.35 * fs, "0", anchor="end", cls="tick")
    return svg.close()


def render_stability(curves, spec: RenderSpec | None = None) -> str:
    """Mean coefficient against panel size, with sd bars and a dashed threshold line."""
    spec = spec or RenderSpec(kind="stability")
    if not isinstance(curves, (list, tuple)):
        curves = [curves]
    if not curves:
        raise DomainError("no curve to draw")
    fs = spec.font_size
    left, right, top_m, bottom = 4 * fs, 2 * fs, 2 * fs, 3 * fs
    pw = spec.width - left - right
    ph = spec.height - top_m - bottom
    m_max = max(max(c.grid) for c in curves)
    lows = [float(np.nanmin(c.mean - c.sd)) for c in curves]
    y_lo = min(min(lows), spec.threshold - 0.05)
    y_lo = max(-1.0, np.floor(y_lo * 10) / 10)
    y_hi = 1.0

    def px(m):
        return left + pw * m / m_max

    def py(v):
        return top_m + ph * (y_hi - v) / (y_hi - y_lo)

    svg = _Svg(spec.width, spec.height, fs)
    svg.line(left, top_m + ph, left + pw, top_m + ph, cls="axis")
    svg.line(left, top_m, left, top_m + ph, cls="axis")
    for tick in np.arange(np.ceil(y_lo * 10), 11) / 10:
        svg.text(left - 0.4 * fs, py(tick) + 0.35 * fs, f"{tick:.1f}", anchor="end", cls="tick")
    step = max(1, int(round(m_max / 10 / 10)) * 10) if m_max >= 20 else max(1, m_max // 5)
    for m in range(0, m_max + 1, step):
        svg.text(px(m), top_m + ph + 1.3 * fs, str(m), cls="tick")
    palette = ("#1f3d7a", "#7a1f5c", "#1f7a6b", "#7a5a1f")
    for k, c in enumerate(curves):
        color = palette[k % len(palette)]
        svg.add(f'<g class="curve" data-method="{escape(c.method)}">')
        for m, mu, sd in zip(c.grid, c.mean, c.sd):
            if np.isnan(mu):
                continue
            svg.line(px(m), py(max(mu - sd, y_lo)), px(m), py(min(mu + sd, y_hi)),
                     stroke=color, cls="sd-bar")
        pts = " ".join(f"{_f(px(m))},{_f(py(mu))}" for m, mu in zip(c.grid, c.mean)
                       if not np.isnan(mu))
        svg.add(f'<polyline class="mean" points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="2.00"/>')
        svg.text(left + pw - 0.5 * fs, top_m + ph - (len(curves) - k) * 1.3 * fs,
                 c.method, anchor="end", cls="legend", extra=f' fill="{color}"')
        svg.add("</g>")
    svg.line(left, py(spec.threshold), left + pw, py(spec.threshold), stroke="#dc1e1e",
             width=1.5, cls="threshold", extra=' stroke-dasharray="6,4"')
    return svg.close()
