"""Infinitesimally curved polyhedra and convex partitions of the plane polygon.

A ``Partition`` is a connected straight-line planar graph with a half-edge
structure derived from the angular order of edges around each vertex.  Edge
``e = (u, v)`` with ``u < v`` owns half-edges ``2e`` (u -> v) and ``2e + 1``
(v -> u), so the twin of ``h`` is ``h ^ 1``.  Faces are traversed
counterclockwise; the single clockwise cycle is the outer face, whose vertices
form the boundary of P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geom import (
    ETA,
    GeometryError,
    Vec2,
    ccw_angle,
    convex_hull,
    dist,
    orient2d,
    point_in_convex_polygon,
    signed_area,
    vec,
)


class PartitionError(ValueError):
    pass


class ParseError(PartitionError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class WeightedPoint:
    position: Vec2
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise PartitionError(f"negative weight {self.weight}")


@dataclass(frozen=True)
class InfinitesimalPolyhedron:
    boundary: tuple[Vec2, ...]
    interior: tuple[WeightedPoint, ...]

    def diameter(self) -> float:
        b = self.boundary
        return max(dist(p, q) for i, p in enumerate(b) for q in b[i + 1:])

    def total_weight(self) -> float:
        return math.fsum(p.weight for p in self.interior)

    def problems(self, eta: float = ETA) -> list[str]:
        out = []
        hull = convex_hull(self.boundary)
        if len(hull) != len(self.boundary):
            out.append("boundary is not strictly convex")
        if abs(self.total_weight() - 1.0) > eta:
            out.append(f"weight sum != 1 (got {self.total_weight():.17g})")
        ccw = list(self.boundary) if signed_area(self.boundary) > 0 else list(reversed(self.boundary))
        for p in self.interior:
            if not point_in_convex_polygon(p.position, ccw, eta):
                out.append(f"point {p.position.as_tuple()} not strictly inside")
        return out


def diameter_normalize(ip: InfinitesimalPolyhedron) -> InfinitesimalPolyhedron:
    """Uniformly scaled copy (about the origin) whose diameter is exactly 1."""
    d = ip.diameter()
    if not d > 0:
        raise PartitionError("zero-diameter polygon")
    s = 1.0 / d
    return InfinitesimalPolyhedron(
        tuple(p * s for p in ip.boundary),
        tuple(WeightedPoint(p.position * s, p.weight) for p in ip.interior),
    )


@dataclass
class ValidationReport:
    ok: bool
    problems: list[str]
    max_face_angle: float
    min_angle_margin: float
    flat_vertices: list[int] = field(default_factory=list)

    def __str__(self) -> str:
        head = "valid" if self.ok else "invalid"
        lines = [f"{head}: max face angle {self.max_face_angle:.12g}, margin {self.min_angle_margin:.6g}"]
        lines += [f"  - {p}" for p in self.problems]
        return "\n".join(lines)


class Partition:
    """Convex partition L of a convex polygon P, with per-vertex weights."""

    def __init__(
        self,
        vertices: Sequence,
        edges: Iterable[tuple[int, int]],
        weights: Sequence[float] | None = None,
        labels: dict[str, int] | None = None,
        stray_points: Sequence[WeightedPoint] = (),
    ):
        self.vertices: tuple[Vec2, ...] = tuple(vec(v) for v in vertices)
        n = len(self.vertices)
        es = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise PartitionError(f"loop edge at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise PartitionError(f"edge ({u}, {v}) references a missing vertex")
            es.add((min(u, v), max(u, v)))
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(es))
        self.weights: tuple[float, ...] = tuple(float(w) for w in weights) if weights is not None else (0.0,) * n
        if len(self.weights) != n:
            raise PartitionError("one weight per vertex required")
        self.labels: dict[str, int] = dict(labels or {})
        self.stray_points = tuple(stray_points)
        self.xy = np.array([[p.x, p.y] for p in self.vertices], dtype=float).reshape(-1, 2)
        self._edge_index = {e: i for i, e in enumerate(self.edges)}
        self._build_halfedges()

    # --- half-edge structure ------------------------------------------------

    def _build_halfedges(self):
        n = len(self.vertices)
        m = len(self.edges)
        origin = np.empty(2 * m, dtype=np.int64)
        for i, (u, v) in enumerate(self.edges):
            origin[2 * i] = u
            origin[2 * i + 1] = v
        self.he_origin = origin
        out: list[list[int]] = [[] for _ in range(n)]
        for h in range(2 * m):
            out[origin[h]].append(h)
        for v in range(n):
            hs = out[v]
            hs.sort(key=lambda h: math.atan2(self.xy[self.head(h), 1] - self.xy[v, 1],
                                             self.xy[self.head(h), 0] - self.xy[v, 0]))
            for a, b in zip(hs, hs[1:]):
                d1 = self.vertices[self.head(a)] - self.vertices[v]
                d2 = self.vertices[self.head(b)] - self.vertices[v]
                if d1.cross(d2) == 0 and d1.dot(d2) > 0:
                    raise PartitionError(f"overlapping edges at vertex {v}")
        self.out_halfedges = [tuple(hs) for hs in out]
        pos_in_ring = {}
        for v in range(n):
            for k, h in enumerate(out[v]):
                pos_in_ring[h] = (v, k)
        nxt = np.empty(2 * m, dtype=np.int64)
        for h in range(2 * m):
            t = h ^ 1
            v, k = pos_in_ring[t]
            ring = out[v]
            nxt[h] = ring[(k - 1) % len(ring)]
        self.he_next = nxt
        face_of = np.full(2 * m, -1, dtype=np.int64)
        faces: list[tuple[int, ...]] = []
        for h0 in range(2 * m):
            if face_of[h0] >= 0:
                continue
            cyc = []
            h = h0
            while face_of[h] < 0:
                face_of[h] = len(faces)
                cyc.append(h)
                h = int(nxt[h])
            if h != h0:
                raise PartitionError(f"half-edge {h} closes a cycle it did not start")
            faces.append(tuple(cyc))
        self.he_face = face_of
        self.face_halfedges = faces
        areas = [signed_area([self.vertices[origin[h]] for h in cyc]) for cyc in faces]
        negative = [i for i, a in enumerate(areas) if a <= 0]
        if n > 0 and len(negative) != 1:
            raise PartitionError(f"expected one outer face, found {len(negative)} (graph disconnected or degenerate)")
        self.outer_face = negative[0] if negative else -1
        self.face_areas = areas

    def head(self, h: int) -> int:
        return int(self.he_origin[h ^ 1])

    def face_vertices(self, f: int) -> tuple[int, ...]:
        return tuple(int(self.he_origin[h]) for h in self.face_halfedges[f])

    @property
    def inner_faces(self) -> list[int]:
        return [f for f in range(len(self.face_halfedges)) if f != self.outer_face]

    def faces(self) -> list[tuple[int, ...]]:
        """Inner faces as counterclockwise vertex cycles."""
        return [self.face_vertices(f) for f in self.inner_faces]

    def boundary_cycle(self) -> tuple[int, ...]:
        """Vertices of the outer face in counterclockwise order."""
        return tuple(reversed(self.face_vertices(self.outer_face)))

    def boundary_vertices(self) -> frozenset[int]:
        return frozenset(self.face_vertices(self.outer_face))

    def boundary_edges(self) -> frozenset[tuple[int, int]]:
        out = set()
        for h in self.face_halfedges[self.outer_face]:
            out.add(self.edges[h >> 1])
        return frozenset(out)

    def edge_id(self, u: int, v: int) -> int:
        return self._edge_index[(min(u, v), max(u, v))]

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_index

    def neighbors(self, v: int) -> list[int]:
        return [self.head(h) for h in self.out_halfedges[v]]

    def faces_of_edge(self, u: int, v: int) -> tuple[int, int]:
        """(left face, right face) of the directed edge u -> v."""
        e = self.edge_id(u, v)
        h = 2 * e if self.edges[e][0] == u else 2 * e + 1
        return int(self.he_face[h]), int(self.he_face[h ^ 1])

    def face_corner_angles(self, f: int) -> list[tuple[int, float]]:
        hs = self.face_halfedges[f]
        out = []
        for i, h in enumerate(hs):
            hp = hs[i - 1]
            v = int(self.he_origin[h])
            u = int(self.he_origin[hp])
            w = self.head(h)
            ang = ccw_angle(self.vertices[w] - self.vertices[v], self.vertices[u] - self.vertices[v])
            out.append((v, ang))
        return out

    def weighted_vertices(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w > 0]

    def label_of(self) -> dict[int, str]:
        return {v: k for k, v in self.labels.items()}

    def name(self, v: int) -> str:
        inv = self.__dict__.setdefault("_inv_labels", self.label_of())
        return inv.get(v, f"v{v}")

    def to_ip(self, eta: float = ETA) -> InfinitesimalPolyhedron:
        cyc = self.boundary_cycle()
        pts = [self.vertices[v] for v in cyc]
        corners = []
        for i, v in enumerate(pts):
            a, b = pts[i - 1], pts[(i + 1) % len(pts)]
            if abs((v - a).cross(b - v)) > eta * dist(a, b):
                corners.append(v)
        interior = tuple(WeightedPoint(self.vertices[v], self.weights[v]) for v in self.weighted_vertices())
        return InfinitesimalPolyhedron(tuple(corners), interior + self.stray_points)

    def structurally_equal(self, other: "Partition") -> bool:
        return (self.vertices == other.vertices and self.edges == other.edges
                and self.weights == other.weights and self.labels == other.labels
                and self.stray_points == other.stray_points)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.structurally_equal(other)

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def __repr__(self):
        return f"Partition(V={len(self.vertices)}, E={len(self.edges)}, F={len(self.inner_faces)})"


# --- validation ----------------------------------------------------------------

def _crossing_pairs(p: Partition, limit: int = 5) -> list[tuple[int, int]]:
    """Pairs of edges that meet anywhere except at a shared endpoint."""
    E = np.array(p.edges, dtype=np.int64).reshape(-1, 2)
    if len(E) < 2:
        return []
    A = p.xy[E[:, 0]]
    B = p.xy[E[:, 1]]
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    order = np.argsort(lo[:, 0], kind="stable")
    found = []
    for ii, i in enumerate(order):
        cand = order[ii + 1:]
        cand = cand[lo[cand, 0] <= hi[i, 0]]
        if len(cand) == 0:
            continue
        cand = cand[(lo[cand, 1] <= hi[i, 1]) & (hi[cand, 1] >= lo[i, 1])]
        for j in cand:
            ei, ej = p.edges[i], p.edges[j]
            shared = set(ei) & set(ej)
            a, b = p.vertices[ei[0]], p.vertices[ei[1]]
            c, d = p.vertices[ej[0]], p.vertices[ej[1]]
            if shared:
                s = shared.pop()
                o = ei[0] if ei[1] == s else ei[1]
                o2 = ej[0] if ej[1] == s else ej[1]
                S, X, Y = p.vertices[s], p.vertices[o], p.vertices[o2]
                if orient2d(S, X, Y) == 0 and (X - S).dot(Y - S) > 0:
                    found.append((int(i), int(j)))
                continue
            o1, o2 = orient2d(a, b, c), orient2d(a, b, d)
            o3, o4 = orient2d(c, d, a), orient2d(c, d, b)
            if o1 * o2 <= 0 and o3 * o4 <= 0:
                if o1 == o2 == 0:
                    ax = 0 if abs(b.x - a.x) >= abs(b.y - a.y) else 1
                    k = (lambda v: v.x) if ax == 0 else (lambda v: v.y)
                    if max(min(k(a), k(b)), min(k(c), k(d))) > min(max(k(a), k(b)), max(k(c), k(d))):
                        continue
                found.append((int(i), int(j)))
            if len(found) >= limit:
                return found
    return found


def check_topology(p: Partition) -> None:
    m2 = 2 * len(p.edges)
    for h in range(m2):
        if (h ^ 1) ^ 1 != h or (h ^ 1) == h:
            raise PartitionError(f"twin of half-edge {h} is not an involution")
        if p.he_origin[int(p.he_next[h])] != p.head(h):
            raise PartitionError(f"half-edge {h}: next does not start at its head")
    seen = np.zeros(m2, dtype=np.int64)
    for cyc in p.face_halfedges:
        for h in cyc:
            seen[h] += 1
    bad = np.nonzero(seen != 1)[0]
    if len(bad):
        raise PartitionError(f"half-edge {int(bad[0])} lies on {int(seen[bad[0]])} face cycles")


def validate(p: Partition, eta: float = ETA) -> ValidationReport:
    """Check the conditions of a convex partition of a convex polygon."""
    check_topology(p)
    problems: list[str] = []
    crossings = _crossing_pairs(p)
    for i, j in crossings:
        problems.append(f"edges {p.edges[i]} and {p.edges[j]} cross")
    V = len(p.vertices)
    F = len(p.face_halfedges)
    if V - len(p.edges) + F != 2:
        problems.append(f"Euler characteristic {V - len(p.edges) + F} != 2")
    max_angle = 0.0
    flat: list[int] = []
    for f in p.inner_faces:
        for v, ang in p.face_corner_angles(f):
            max_angle = max(max_angle, ang)
            if ang >= math.pi - eta:
                if abs(ang - math.pi) <= eta:
                    flat.append(v)
                    problems.append(f"flat angle at vertex {p.name(v)} in face {f}")
                else:
                    problems.append(f"non-convex face {f}: angle {ang:.12g} at vertex {p.name(v)}")
    for v, ang in p.face_corner_angles(p.outer_face):
        # outer-face corner angle is the exterior angle 2π - interior
        if 2 * math.pi - ang > math.pi + eta:
            problems.append(f"reflex boundary at vertex {p.name(v)}")
    wsum = math.fsum(p.weights) + math.fsum(s.weight for s in p.stray_points)
    if abs(wsum - 1.0) > eta:
        problems.append(f"weight sum != 1 (got {wsum:.17g})")
    if any(w < 0 for w in p.weights):
        problems.append("negative weight")
    bverts = p.boundary_vertices()
    for v in p.weighted_vertices():
        if v in bverts:
            problems.append(f"weighted vertex {p.name(v)} lies on the boundary")
    for s in p.stray_points:
        if s.weight > 0:
            problems.append(f"positive-weight point {s.position.as_tuple()} is not a vertex")
    return ValidationReport(not problems, problems, max_angle, math.pi - max_angle, flat)


def smallest_skeleton_angle(p: Partition) -> float:
    """Smallest angle between consecutive skeleton edges inside P."""
    return min(ang for f in p.inner_faces for _, ang in p.face_corner_angles(f))


# --- serialization ---------------------------------------------------------------

def _fmt(x: float) -> str:
    s = "%.17g" % x
    return "0" if s == "-0" else s


def dumps(p: Partition) -> str:
    ip = p.to_ip()
    lines = ["PARTITION v1"]
    lines.append(f"BOUNDARY {len(ip.boundary)}")
    lines += [f"{_fmt(q.x)} {_fmt(q.y)}" for q in ip.boundary]
    pts = [(p.vertices[v], p.weights[v]) for v in p.weighted_vertices()]
    pts += [(s.position, s.weight) for s in p.stray_points]
    lines.append(f"POINTS {len(pts)}")
    lines += [f"{_fmt(q.x)} {_fmt(q.y)} {_fmt(w)}" for q, w in pts]
    lines.append(f"VERTICES {len(p.vertices)}")
    lines += [f"{_fmt(q.x)} {_fmt(q.y)}" for q in p.vertices]
    lines.append(f"EDGES {len(p.edges)}")
    lines += [f"{u} {v}" for u, v in p.edges]
    faces = p.faces()
    lines.append(f"FACES {len(faces)}")
    lines += [" ".join(str(v) for v in f) for f in faces]
    lines.append(f"LABELS {len(p.labels)}")
    lines += [f"{k} {v}" for k, v in sorted(p.labels.items(), key=lambda kv: (kv[1], kv[0]))]
    lines.append("END")
    return "\n".join(lines) + "\n"


def _canon_cycle(c: Sequence[int]) -> tuple[int, ...]:
    k = min(range(len(c)), key=lambda i: c[i])
    return tuple(c[k:]) + tuple(c[:k])


def loads(text: str) -> Partition:
    raw = text.splitlines()
    rows: list[tuple[int, list[str]]] = []
    for i, line in enumerate(raw, start=1):
        s = line.split("#", 1)[0].strip()
        if s:
            rows.append((i, s.split()))
    if not rows or rows[0][1] != ["PARTITION", "v1"]:
        raise ParseError(rows[0][0] if rows else 1, "missing header 'PARTITION v1'")
    pos = 1
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    order = ["BOUNDARY", "POINTS", "VERTICES", "EDGES", "FACES", "LABELS"]
    for name in order:
        if pos >= len(rows):
            raise ParseError(raw and len(raw) or 1, f"unexpected end of file, expected section {name}")
        lineno, toks = rows[pos]
        if len(toks) != 2 or toks[0] != name:
            raise ParseError(lineno, f"expected section header '{name} <count>'")
        try:
            cnt = int(toks[1])
        except ValueError:
            raise ParseError(lineno, f"bad count {toks[1]!r}") from None
        body = rows[pos + 1: pos + 1 + cnt]
        if len(body) < cnt:
            raise ParseError(len(raw), f"section {name} truncated: expected {cnt} records, found {len(body)}")
        sections[name] = body
        pos += 1 + cnt
    if pos >= len(rows) or rows[pos][1] != ["END"]:
        raise ParseError(rows[pos][0] if pos < len(rows) else len(raw), "missing END marker")

    def floats(rec, k):
        lineno, toks = rec
        if len(toks) != k:
            raise ParseError(lineno, f"expected {k} fields, got {len(toks)}")
        try:
            return [float(t) for t in toks]
        except ValueError:
            raise ParseError(lineno, "non-numeric field") from None

    def ints(rec, k=None):
        lineno, toks = rec
        if k is not None and len(toks) != k:
            raise ParseError(lineno, f"expected {k} fields, got {len(toks)}")
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise ParseError(lineno, "non-integer field") from None

    verts = [Vec2(*floats(r, 2)) for r in sections["VERTICES"]]
    index = {v.as_tuple(): i for i, v in enumerate(verts)}
    weights = [0.0] * len(verts)
    stray = []
    for r in sections["POINTS"]:
        x, y, w = floats(r, 3)
        i = index.get((x, y))
        if i is None:
            stray.append(WeightedPoint(Vec2(x, y), w))
        else:
            weights[i] = w
    edges = [tuple(ints(r, 2)) for r in sections["EDGES"]]
    for r, (u, v) in zip(sections["EDGES"], edges):
        if not (0 <= u < len(verts) and 0 <= v < len(verts)):
            raise ParseError(r[0], f"edge ({u}, {v}) references a missing vertex")
    labels = {}
    for lineno, toks in sections["LABELS"]:
        if len(toks) != 2:
            raise ParseError(lineno, "label record must be 'name index'")
        labels[toks[0]] = int(toks[1])
    try:
        p = Partition(verts, edges, weights, labels, stray)
    except (PartitionError, GeometryError) as exc:
        raise ParseError(sections["EDGES"][0][0] if edges else 1, str(exc)) from None
    listed = sorted(_canon_cycle(ints(r)) for r in sections["FACES"])
    actual = sorted(_canon_cycle(f) for f in p.faces())
    if listed != actual:
        raise ParseError(sections["FACES"][0][0] if sections["FACES"] else 1,
                         "FACES section disagrees with the embedding of VERTICES/EDGES")
    return p


def save(p: Partition, path) -> None:
    from .io_util import atomic_write
    atomic_write(path, dumps(p))


def load(path) -> Partition:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


# --- construction helpers -------------------------------------------------------

def from_ip_star(ip: InfinitesimalPolyhedron) -> Partition:
    """Fan partition: every weighted point joined to every boundary corner.
    Only meaningful for a single interior point; used for small examples."""
    if len(ip.interior) != 1:
        raise PartitionError("star partition needs exactly one interior point")
    b = list(ip.boundary)
    if signed_area(b) < 0:
        b.reverse()
    n = len(b)
    verts = b + [ip.interior[0].position]
    edges = [(i, (i + 1) % n) for i in range(n)] + [(i, n) for i in range(n)]
    weights = [0.0] * n + [ip.interior[0].weight]
    return Partition(verts, edges, weights)
