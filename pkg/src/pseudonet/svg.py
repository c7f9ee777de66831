"""Deterministic SVG drawings of partitions and unfoldings.

Coordinates are fitted to a fixed square viewport (y up) and printed with a
fixed number of decimals, so equal inputs give byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .partition import Partition
from .unfold import OverlapWitness, Unfolding


@dataclass(frozen=True)
class SvgStyle:
    size: int = 800
    margin: int = 20
    face_fill: str = "#e8eef7"
    face_stroke: str = "#4a5a70"
    cut_stroke: str = "#d62728"
    witness_fill: str = "#ff7f0e"
    stroke_width: float = 0.8
    cut_width: float = 2.0
    label_size: int = 9


class _Frame:
    def __init__(self, pts: np.ndarray, style: SvgStyle):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1])) or 1.0
        self.lo, self.hi = lo, hi
        self.k = (style.size - 2 * style.margin) / span
        self.m = style.margin
        self.size = style.size

    def xy(self, p) -> str:
        x = self.m + (float(p[0]) - self.lo[0]) * self.k
        y = self.size - self.m - (float(p[1]) - self.lo[1]) * self.k
        return f"{x:.3f},{y:.3f}"

    def scale(self, r: float) -> float:
        return r * self.k


def _path(frame: _Frame, poly: Sequence) -> str:
    pts = [frame.xy(p) for p in poly]
    return "M" + " L".join(pts) + " Z"


def _doc(body: list[str], style: SvgStyle, title: str) -> str:
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.size}" height="{style.size}" '
            f'viewBox="0 0 {style.size} {style.size}">',
            f"<title>{title}</title>",
            f'<rect width="{style.size}" height="{style.size}" fill="white"/>']
    return "\n".join(head + body + ["</svg>"]) + "\n"


def render_partition_svg(p: Partition, cut_edges: Iterable[tuple[int, int]] = (), labels: bool = True,
                         style: SvgStyle = SvgStyle(), title: str = "partition") -> str:
    frame = _Frame(p.xy, style)
    body = []
    for cyc in p.faces():
        body.append(f'<path class="face" d="{_path(frame, [p.xy[v] for v in cyc])}" fill="{style.face_fill}" '
                    f'stroke="{style.face_stroke}" stroke-width="{style.stroke_width}"/>')
    cut = sorted({(min(u, v), max(u, v)) for u, v in cut_edges})
    for u, v in cut:
        body.append(f'<path class="cut" d="M{frame.xy(p.xy[u])} L{frame.xy(p.xy[v])}" '
                    f'stroke="{style.cut_stroke}" stroke-width="{style.cut_width}"/>')
    for v in p.weighted_vertices():
        x, y = frame.xy(p.xy[v]).split(",")
        body.append(f'<circle class="weighted" cx="{x}" cy="{y}" r="3" fill="black"/>')
    if labels:
        for name, v in sorted(p.labels.items()):
            if "_" in name:
                continue  # spiral indices would clutter the drawing
            x, y = frame.xy(p.xy[v]).split(",")
            body.append(f'<text class="label" x="{x}" y="{y}" font-size="{style.label_size}">{name}</text>')
    return _doc(body, style, title)


def render_unfolding_svg(unf: Unfolding, witness: OverlapWitness | None = None, style: SvgStyle = SvgStyle(),
                         title: str = "unfolding") -> str:
    polys = unf.polygons()
    frame = _Frame(np.vstack(polys), style)
    body = []
    comp = unf.component_of()
    for f, P in enumerate(polys):
        body.append(f'<path class="face" data-face="{f}" data-component="{comp[f]}" d="{_path(frame, P)}" '
                    f'fill="{style.face_fill}" fill-opacity="0.6" stroke="{style.face_stroke}" '
                    f'stroke-width="{style.stroke_width}"/>')
    cut = unf.cut
    for f, cyc in enumerate(unf.complex.faces):
        P = polys[f]
        for i in range(len(cyc)):
            u, v = cyc[i], cyc[(i + 1) % len(cyc)]
            if (min(u, v), max(u, v)) in cut:
                body.append(f'<path class="cut" d="M{frame.xy(P[i])} L{frame.xy(P[(i + 1) % len(cyc)])}" '
                            f'stroke="{style.cut_stroke}" stroke-width="{style.cut_width}"/>')
    if witness is not None:
        x, y = frame.xy(witness.point).split(",")
        if witness.disk_center is not None:
            cx, cy = frame.xy(witness.disk_center).split(",")
            body.append(f'<circle class="disk" cx="{cx}" cy="{cy}" r="{frame.scale(witness.disk_radius):.3f}" '
                        f'fill="none" stroke="{style.witness_fill}" stroke-dasharray="4 2"/>')
        body.append(f'<circle class="witness" cx="{x}" cy="{y}" r="4" fill="{style.witness_fill}"/>')
    return _doc(body, style, title)
