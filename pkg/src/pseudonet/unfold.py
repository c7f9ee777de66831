"""Unfoldings of caps, flat partitions and polyhedra along cut trees.

A surface is held as a face complex: every face is a convex polygon with its
own planar development, faces share edges by vertex id.  Cutting along a set
of edges and gluing the remaining shared edges breadth first lays the faces
out in the plane.  Alignment, overlap detection and the rotation-center
estimate all act on that layout.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .cap import SurfaceMap, develop_polygon
from .cuts import Cut, CutDecomposition, AdmissibilityReport, barycenter
from .geom import ETA, Vec2
from .partition import Partition

Edge = tuple[int, int]


class UnfoldError(ValueError):
    pass


def _e(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def rot_cw(v: np.ndarray) -> np.ndarray:
    """Quarter turn clockwise."""
    return np.array([v[1], -v[0]])


def rot_ccw(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


# --- face complexes -------------------------------------------------------------------------

@dataclass
class FaceComplex:
    faces: list[tuple[int, ...]]  # counterclockwise vertex cycles
    local: list[np.ndarray]  # per face: (k, 2) developed coordinates
    source: list[np.ndarray] | None = None  # per face: (k, 2) coordinates in P, when the surface maps onto P
    area3d: float | None = None
    edge_faces: dict[Edge, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        self.edge_faces = {}
        for f, cyc in enumerate(self.faces):
            for u, v in zip(cyc, cyc[1:] + cyc[:1]):
                self.edge_faces.setdefault(_e(u, v), []).append(f)
        for e, fs in self.edge_faces.items():
            if len(fs) > 2:
                raise UnfoldError(f"edge {e} is shared by {len(fs)} faces")

    def edges(self) -> list[Edge]:
        return sorted(self.edge_faces)

    def rim_edges(self) -> set[Edge]:
        return {e for e, fs in self.edge_faces.items() if len(fs) == 1}

    def vertices(self) -> set[int]:
        return {v for cyc in self.faces for v in cyc}


def complex_from_partition(p: Partition) -> FaceComplex:
    faces = p.faces()
    loc = [np.array([p.vertices[v].as_tuple() for v in cyc]) for cyc in faces]
    return FaceComplex(list(faces), loc, [a.copy() for a in loc], float(sum(_area(a) for a in loc)))


def complex_from_surface_map(sm: SurfaceMap) -> FaceComplex:
    p = sm.partition
    faces = p.faces()
    loc, src = [], []
    for cyc in faces:
        loc.append(develop_polygon(len(cyc), lambda a, b: sm.length(cyc[a], cyc[b])))
        src.append(np.array([p.vertices[v].as_tuple() for v in cyc]))
    X = sm.cap.xyz
    area = 0.0
    for a, b, c in sm.cap.triangles:
        area += 0.5 * float(np.linalg.norm(np.cross(X[b] - X[a], X[c] - X[a])))
    return FaceComplex(list(faces), loc, src, area)


def complex_from_polyhedron(vertices: np.ndarray, faces: Sequence[Sequence[int]]) -> FaceComplex:
    """Faces are listed counterclockwise as seen from outside."""
    V = np.asarray(vertices, dtype=float)
    loc = []
    area = 0.0
    for cyc in faces:
        P = V[list(cyc)]
        e1 = P[1] - P[0]
        e1 /= np.linalg.norm(e1)
        n = np.zeros(3)
        for i in range(len(P)):
            n += np.cross(P[i] - P[0], P[(i + 1) % len(P)] - P[0])
        n /= np.linalg.norm(n)
        e2 = np.cross(n, e1)
        A = np.column_stack([(P - P[0]) @ e1, (P - P[0]) @ e2])
        loc.append(A)
        area += _area(A)
    return FaceComplex([tuple(int(v) for v in c) for c in faces], loc, None, area)


def _area(P: np.ndarray) -> float:
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# --- unfolding ------------------------------------------------------------------------------

@dataclass
class Unfolding:
    complex: FaceComplex
    cut: frozenset[Edge]
    components: list[list[int]]
    rot: np.ndarray  # (F,) rotation angle per face
    shift: np.ndarray  # (F, 2) translation per face

    def matrix(self, f: int) -> np.ndarray:
        c, s = math.cos(self.rot[f]), math.sin(self.rot[f])
        return np.array([[c, -s], [s, c]])

    def place(self, f: int, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts) @ self.matrix(f).T + self.shift[f]

    def face_polygon(self, f: int) -> np.ndarray:
        return self.place(f, self.complex.local[f])

    def polygons(self) -> list[np.ndarray]:
        return [self.face_polygon(f) for f in range(len(self.complex.faces))]

    def component_of(self) -> dict[int, int]:
        return {f: k for k, comp in enumerate(self.components) for f in comp}

    def vertex_image(self, f: int, v: int) -> np.ndarray:
        k = self.complex.faces[f].index(v)
        return self.face_polygon(f)[k]

    def vertex_images(self, v: int) -> list[tuple[int, np.ndarray]]:
        return [(f, self.vertex_image(f, v)) for f, cyc in enumerate(self.complex.faces) if v in cyc]

    def image(self, f: int, x) -> np.ndarray:
        """Image of a point of P (given in P coordinates) lying in face f."""
        src = self.complex.source
        if src is None:
            raise UnfoldError("surface has no planar source coordinates")
        S, Lc = src[f], self.complex.local[f]
        x = np.asarray(x, dtype=float)
        best, best_j, best_bary = -math.inf, 1, None
        for j in range(1, len(S) - 1):
            a, b, c = S[0], S[j], S[j + 1]
            M = np.column_stack([b - a, c - a])
            l1, l2 = np.linalg.solve(M, x - a)
            bary = (1 - l1 - l2, l1, l2)
            m = min(bary)
            if m > best:
                best, best_j, best_bary = m, j, bary
        j = best_j
        y = best_bary[0] * Lc[0] + best_bary[1] * Lc[j] + best_bary[2] * Lc[j + 1]
        return self.place(f, y)

    def edge_point_images(self, u: int, v: int, t: float) -> tuple[tuple[int, np.ndarray], ...]:
        """Images of the point at parameter t on edge u -> v, one per incident face."""
        out = []
        for f in self.complex.edge_faces[_e(u, v)]:
            a, b = self.vertex_image(f, u), self.vertex_image(f, v)
            out.append((f, a + (b - a) * t))
        return tuple(out)

    def left_right(self, u: int, v: int, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(x'_L, x'_R) for the point at parameter t on the cut edge u -> v (u upstream)."""
        fl = fr = None
        for f in self.complex.edge_faces[_e(u, v)]:
            cyc = self.complex.faces[f]
            k = cyc.index(u)
            if cyc[(k + 1) % len(cyc)] == v:
                fl = f  # the face containing the directed edge u -> v lies to its left
            else:
                fr = f
        if fl is None or fr is None:
            raise UnfoldError(f"edge ({u}, {v}) does not separate two faces")
        imgs = dict(self.edge_point_images(u, v, t))
        return imgs[fl], imgs[fr]

    def side_faces(self, u: int, v: int) -> tuple[int, int]:
        fl = fr = -1
        for f in self.complex.edge_faces[_e(u, v)]:
            cyc = self.complex.faces[f]
            k = cyc.index(u)
            if cyc[(k + 1) % len(cyc)] == v:
                fl = f
            else:
                fr = f
        return fl, fr

    def moved(self, motions: Sequence[tuple[float, np.ndarray]]) -> "Unfolding":
        """Apply a rigid motion (angle, translation) to each component."""
        rot = self.rot.copy()
        shift = self.shift.copy()
        for k, comp in enumerate(self.components):
            th, t = motions[k]
            c, s = math.cos(th), math.sin(th)
            R = np.array([[c, -s], [s, c]])
            for f in comp:
                rot[f] = self.rot[f] + th
                shift[f] = R @ self.shift[f] + t
        return Unfolding(self.complex, self.cut, self.components, rot, shift)

    def total_area(self) -> float:
        return float(sum(_area(P) for P in self.polygons()))


def _procrustes(A: np.ndarray, B: np.ndarray) -> tuple[float, np.ndarray]:
    """Rotation angle and translation moving points A closest to B (least squares)."""
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    X, Y = A - ca, B - cb
    s = float(np.sum(X[:, 0] * Y[:, 1] - X[:, 1] * Y[:, 0]))
    c = float(np.sum(X[:, 0] * Y[:, 0] + X[:, 1] * Y[:, 1]))
    th = math.atan2(s, c)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return th, cb - R @ ca


def _cut_edges(surface, cut) -> frozenset[Edge]:
    if isinstance(cut, Cut):
        return frozenset(cut.edges)
    return frozenset(_e(int(u), int(v)) for u, v in cut)


def unfold(surface, cut) -> Unfolding:
    """Lay the faces out in the plane, gluing across every edge not in the cut."""
    if isinstance(surface, Partition):
        cx = complex_from_partition(surface)
    elif isinstance(surface, SurfaceMap):
        cx = complex_from_surface_map(surface)
    elif isinstance(surface, FaceComplex):
        cx = surface
    else:
        raise UnfoldError(f"cannot unfold {type(surface).__name__}")
    cut_edges = _cut_edges(surface, cut)
    missing = [e for e in sorted(cut_edges) if e not in cx.edge_faces]
    if missing:
        raise UnfoldError(f"cut edge {missing[0]} is not an edge of the surface")
    F = len(cx.faces)
    rot = np.zeros(F)
    shift = np.zeros((F, 2))
    seen = [False] * F
    comps: list[list[int]] = []
    for root in range(F):
        if seen[root]:
            continue
        seen[root] = True
        if cx.source is not None:
            th, t = _procrustes(cx.local[root], cx.source[root])
            if np.array_equal(cx.local[root], cx.source[root]):
                th, t = 0.0, np.zeros(2)
            rot[root], shift[root] = th, t
        comp = [root]
        q = deque([root])
        while q:
            f = q.popleft()
            cyc = cx.faces[f]
            c, s = math.cos(rot[f]), math.sin(rot[f])
            Rf = np.array([[c, -s], [s, c]])
            for i in range(len(cyc)):
                u, v = cyc[i], cyc[(i + 1) % len(cyc)]
                e = _e(u, v)
                if e in cut_edges:
                    continue
                for g in cx.edge_faces[e]:
                    if g == f or seen[g]:
                        continue
                    A = Rf @ cx.local[f][i] + shift[f]
                    B = Rf @ cx.local[f][(i + 1) % len(cyc)] + shift[f]
                    gc = cx.faces[g]
                    au, av = cx.local[g][gc.index(u)], cx.local[g][gc.index(v)]
                    th = math.atan2(B[1] - A[1], B[0] - A[0]) - math.atan2(av[1] - au[1], av[0] - au[0])
                    if th == 0.0:
                        R = np.eye(2)
                    else:
                        R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
                    rot[g] = th
                    shift[g] = A - R @ au
                    seen[g] = True
                    comp.append(g)
                    q.append(g)
        comps.append(sorted(comp))
    return Unfolding(cx, cut_edges, comps, rot, shift)


def independent_cycles(edges: Iterable[Edge]) -> int:
    """E − V + C of an undirected graph."""
    es = set(_e(*e) for e in edges)
    vs = {v for e in es for v in e}
    parent = {v: v for v in vs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(vs)
    for u, v in es:
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            comps -= 1
    return len(es) - len(vs) + comps


# --- alignment ------------------------------------------------------------------------------

@dataclass
class Alignment:
    unfolding: Unfolding  # the aligned layout
    motions: list[tuple[float, np.ndarray]]
    displacement: float  # max |x x'| over vertex images
    distortion: float  # max relative edge length change
    epsilon: float

    def render(self) -> str:
        return (f"alignment: epsilon {self.epsilon:.6e} (displacement {self.displacement:.6e}, "
                f"distortion {self.distortion:.6e})")


def _disp(unf: Unfolding, comp: list[int]) -> tuple[np.ndarray, np.ndarray]:
    A = np.vstack([unf.face_polygon(f) for f in comp])
    B = np.vstack([unf.complex.source[f] for f in comp])
    return A, B


def edge_distortion(unf: Unfolding) -> float:
    cx = unf.complex
    worst = 0.0
    for f, cyc in enumerate(cx.faces):
        S, Lc = cx.source[f], cx.local[f]
        for i in range(len(cyc)):
            j = (i + 1) % len(cyc)
            a = float(np.linalg.norm(S[j] - S[i]))
            b = float(np.linalg.norm(Lc[j] - Lc[i]))
            worst = max(worst, abs(a - b) / a)
    return worst


def align(unf: Unfolding, base=None, max_epsilon: float | None = None) -> Alignment:
    """Rigid motion per component minimizing the largest displacement of a
    vertex image from its preimage in P."""
    if unf.complex.source is None:
        raise UnfoldError("alignment needs planar source coordinates")
    motions = []
    for comp in unf.components:
        A, B = _disp(unf, comp)
        if np.array_equal(A, B):
            motions.append((0.0, np.zeros(2)))
            continue
        th0, t0 = _procrustes(A, B)
        ca = A.mean(axis=0)
        scale = float(np.ptp(B, axis=0).max())

        def obj(x):
            c, s = math.cos(x[0]), math.sin(x[0])
            R = np.array([[c, -s], [s, c]])
            M = (A - ca) @ R.T + ca + x[1:] * scale
            return float(np.max(np.hypot(*(M - B).T)))

        # parametrize about the centroid so the angle and shift decouple
        R0 = np.array([[math.cos(th0), -math.sin(th0)], [math.sin(th0), math.cos(th0)]])
        x0 = np.array([th0, *((R0 @ ca + t0 - ca) / scale)])
        best = minimize(obj, x0, method="Nelder-Mead",
                        options={"xatol": 1e-13, "fatol": 1e-15 * scale, "maxiter": 4000})
        x = best.x if best.fun <= obj(x0) else x0
        th = float(x[0])
        R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        t = ca + x[1:] * scale - R @ ca
        motions.append((th, t))
    moved = unf.moved(motions)
    disp = 0.0
    for comp in moved.components:
        A, B = _disp(moved, comp)
        disp = max(disp, float(np.max(np.hypot(*(A - B).T))))
    dist = edge_distortion(moved)
    eps = max(disp, dist)
    if max_epsilon is not None and eps > max_epsilon:
        raise UnfoldError(f"no placement reaches epsilon {max_epsilon:g}; best found {eps:.6e}")
    return Alignment(moved, motions, disp, dist, eps)


# --- overlap detection ---------------------------------------------------------------------------

@dataclass
class OverlapWitness:
    point: np.ndarray
    faces: tuple[int, int]
    depth: float  # distance of the point from the boundaries of both faces
    disk_center: np.ndarray | None = None
    disk_radius: float | None = None

    def render(self) -> str:
        s = (f"witness ({self.point[0]:.12g}, {self.point[1]:.12g}) in faces {self.faces[0]} and {self.faces[1]}, "
             f"depth {self.depth:.6e}")
        if self.disk_center is not None:
            s += (f"; disk center ({self.disk_center[0]:.12g}, {self.disk_center[1]:.12g}) "
                  f"radius {self.disk_radius:.6e}")
        return s


def _clip(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland–Hodgman clip of a convex polygon by a counterclockwise convex polygon."""
    out = [tuple(p) for p in subject]
    n = len(clipper)
    for i in range(n):
        a, b = clipper[i], clipper[(i + 1) % n]
        inp, out = out, []
        if not inp:
            break

        def side(p):
            return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])

        for j in range(len(inp)):
            p, q = np.array(inp[j - 1]), np.array(inp[j])
            sp, sq = side(p), side(q)
            if sq >= 0:
                if sp < 0:
                    out.append(tuple(p + (q - p) * (sp / (sp - sq))))
                out.append(tuple(q))
            elif sp >= 0:
                out.append(tuple(p + (q - p) * (sp / (sp - sq))))
    return np.array(out).reshape(-1, 2)


def depth_in(poly: np.ndarray, x: np.ndarray) -> float:
    """Signed distance from x to the boundary of a ccw convex polygon (positive inside)."""
    d = math.inf
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        ev = b - a
        L = float(np.hypot(*ev))
        if L > 0:
            d = min(d, float((ev[0] * (x[1] - a[1]) - ev[1] * (x[0] - a[0])) / L))
    return d


def _max_inscribed_point(P: np.ndarray) -> tuple[np.ndarray, float]:
    """Chebyshev center of a counterclockwise convex polygon, by linear programming."""
    ev = np.roll(P, -1, axis=0) - P
    L = np.hypot(ev[:, 0], ev[:, 1])
    keep = L > 0
    P, ev, L = P[keep], ev[keep], L[keep]
    # inside: (ev x (x - a)) / |ev| >= r  <=>  -(-ev_y, ev_x)·x/|ev| + r <= -(-ev_y, ev_x)·a/|ev|
    n = np.column_stack([-ev[:, 1], ev[:, 0]]) / L[:, None]
    A = np.column_stack([-n, np.ones(len(n))])
    b = -np.sum(n * P, axis=1)
    res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=b, bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    x = res.x[:2] if res.status == 0 else P.mean(axis=0)
    return x, depth_in(P, x)


def face_overlap(P: np.ndarray, Q: np.ndarray, eta: float = ETA) -> OverlapWitness | None:
    I = _clip(P, Q)
    if len(I) < 3 or abs(_area(I)) <= eta * eta:
        return None
    x, d = _max_inscribed_point(I)
    d = min(depth_in(P, x), depth_in(Q, x))
    if d <= eta:
        return None
    return OverlapWitness(x, (-1, -1), d)


def detect_overlap(unf: Unfolding, eta: float = ETA) -> OverlapWitness | None:
    """First pair of face images (in index order) whose interiors intersect."""
    polys = unf.polygons()
    lo = np.array([P.min(axis=0) for P in polys])
    hi = np.array([P.max(axis=0) for P in polys])
    F = len(polys)
    for i in range(F):
        cand = np.flatnonzero(np.all(lo[i + 1:] < hi[i] - eta, axis=1) & np.all(hi[i + 1:] > lo[i] + eta, axis=1))
        for j in cand + i + 1:
            w = face_overlap(polys[i], polys[j], eta)
            if w is not None:
                w.faces = (i, int(j))
                return w
    return None


def raster_overlap(polys: Sequence[np.ndarray], step: float) -> bool:
    """Grid oracle: does some grid point lie strictly inside two polygons?"""
    lo = np.min([P.min(axis=0) for P in polys], axis=0)
    hi = np.max([P.max(axis=0) for P in polys], axis=0)
    xs = np.arange(lo[0], hi[0] + step, step)
    ys = np.arange(lo[1], hi[1] + step, step)
    X, Y = np.meshgrid(xs, ys)
    count = np.zeros_like(X, dtype=int)
    for P in polys:
        inside = np.ones_like(X, dtype=bool)
        n = len(P)
        for i in range(n):
            a, b = P[i], P[(i + 1) % n]
            inside &= (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0]) > 0
        count += inside
    return bool((count >= 2).any())


# --- rotation centers and the overlap predictor -----------------------------------------------

@dataclass
class RotationCenterEstimate:
    point: np.ndarray
    edge: tuple[int, int]
    t: float
    estimate: np.ndarray | None  # c~_x
    exact: np.ndarray
    alpha: float
    beta: float
    reconstruction_error: float  # |x'_R − x'_L − βα M(x − c~)|

    @property
    def error(self) -> float:
        if self.estimate is None:
            return math.nan
        return float(np.linalg.norm(self.estimate - self.exact))


def estimate_rotation_center(unf: Unfolding, decomp: CutDecomposition, edge: tuple[int, int],
                             t: float, beta: float) -> RotationCenterEstimate:
    """Solve x'_R − x'_L = β α_x M_rot (x − c~_x) for c~_x at the point x at
    parameter t on the A-edge (oriented upstream to downstream)."""
    p = decomp.cut.partition
    upper, lower = decomp.orientation(_e(*edge))
    if (upper, lower) != tuple(edge):
        t = 1.0 - t
    alpha, c = barycenter(p, decomp.upstream_weighted[upper])
    if alpha == 0:
        raise UnfoldError("no weight upstream of this point (alpha_x = 0)")
    X = np.array((p.vertices[upper] + (p.vertices[lower] - p.vertices[upper]) * t).as_tuple())
    xl, xr = unf.left_right(upper, lower, t)
    gap = xr - xl
    cvec = np.array(c.as_tuple())
    if beta == 0:
        return RotationCenterEstimate(X, (upper, lower), t, None, cvec, alpha, 0.0, float(np.linalg.norm(gap)))
    est = X - rot_ccw(gap) / (beta * alpha)
    err = float(np.linalg.norm(gap - beta * alpha * rot_cw(X - est)))
    return RotationCenterEstimate(X, (upper, lower), t, est, cvec, alpha, beta, err)


@dataclass
class OverlapPrediction:
    edge: tuple[int, int]  # (p_i, p_j) oriented downstream
    a: np.ndarray
    b: np.ndarray
    r_D: float
    r1: float
    A: float
    l: float
    alpha: float
    center: np.ndarray  # c_a
    a_margin: float  # <a − c_a, p_j − p_i>/|p_j − p_i| + l/2 (must be ≤ 0)
    beta: float

    def render(self) -> str:
        return (f"edge {self.edge}: a=({self.a[0]:.12g}, {self.a[1]:.12g}) b=({self.b[0]:.12g}, {self.b[1]:.12g}) "
                f"r_D={self.r_D:.6e} r1={self.r1:.6e} A={self.A:.6e} l={self.l:.6e}")


def clearance_radius(p: Partition, v: int) -> float:
    """Largest radius A such that the disk around v meets only the edges at v."""
    x = np.array(p.vertices[v].as_tuple())
    best = math.inf
    for a, b in p.edges:
        if v in (a, b):
            continue
        A, B = p.xy[a], p.xy[b]
        d = B - A
        s = min(max(float(np.dot(x - A, d) / np.dot(d, d)), 0.0), 1.0)
        best = min(best, float(np.linalg.norm(A + d * s - x)))
    return best


def predict_overlap_site(decomp: CutDecomposition, report: AdmissibilityReport, beta: float,
                         edge: tuple[int, int] | None = None) -> OverlapPrediction:
    """Point a on a violating edge, the disk center b and radius r_D."""
    if not report.violating_edges:
        raise UnfoldError("the cut has no violating edge")
    p = decomp.cut.partition
    e = edge if edge is not None else report.worst_edge()
    if e not in report.margin_per_edge or report.margin_per_edge[e] >= 0:
        raise UnfoldError(f"edge {e} does not violate the admissibility condition")
    pi, pj = e
    alpha, c = barycenter(p, decomp.upstream_weighted[pi])
    Pi, Pj = np.array(p.vertices[pi].as_tuple()), np.array(p.vertices[pj].as_tuple())
    cvec = np.array(c.as_tuple())
    u = (Pj - Pi) / np.linalg.norm(Pj - Pi)
    l = -float(np.dot(Pi - cvec, u))
    A = clearance_radius(p, pi)
    r1 = min(A / 2, l / 2)
    a = Pi + u * r1
    f_a = alpha * (a - cvec)
    b = a + beta * rot_cw(f_a)
    r_D = beta * alpha * l / 2
    m5 = float(np.dot(a - cvec, u)) + l / 2
    if m5 > 1e-12 * max(1.0, l):
        raise UnfoldError(f"condition on a fails: margin {m5:.3e}")
    return OverlapPrediction(e, a, b, r_D, r1, A, l, alpha, cvec, m5, beta)


def check_predicted_overlap(unf: Unfolding, pred: OverlapPrediction, eta: float = ETA) -> OverlapWitness | None:
    """The right image of a must fall strictly inside the image of the left face
    and within r_D of the image of b."""
    pi, pj = pred.edge
    t = pred.r1 / float(np.linalg.norm(_vert(unf, pj) - _vert(unf, pi)))
    xl, xr = unf.left_right(pi, pj, t)
    fl, fr = unf.side_faces(pi, pj)
    b_img = unf.image(fl, pred.b)
    d = float(np.linalg.norm(xr - b_img))
    depth = depth_in(unf.face_polygon(fl), xr)
    if d < pred.r_D and depth > eta:
        return OverlapWitness(xr, (fr, fl), depth, b_img, pred.r_D)
    return None


def _vert(unf: Unfolding, v: int) -> np.ndarray:
    for f, cyc in enumerate(unf.complex.faces):
        if v in cyc:
            return unf.complex.source[f][cyc.index(v)]
    raise UnfoldError(f"vertex {v} is not on the surface")


# --- polyhedra -------------------------------------------------------------------------------------

@dataclass(frozen=True)
class PyramidConfig:
    n: int = 4  # sides of the base
    s: float = 0.9  # top scale
    t: float = 20.0  # thinness: base circumradius over height


def truncated_pyramid(cfg: PyramidConfig = PyramidConfig()) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Regular n-gon base of circumradius 1 at z=0, top scaled by s at height 1/t.

    A thin pyramid has almost flat top vertices: their curvature is small."""
    n = cfg.n
    base = [(math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n), 0.0) for k in range(n)]
    top = [(cfg.s * x, cfg.s * y, 1.0 / cfg.t) for x, y, _ in base]
    V = np.array(base + top)
    faces = [tuple(range(n - 1, -1, -1)), tuple(range(n, 2 * n))]
    for k in range(n):
        k2 = (k + 1) % n
        faces.append((k, k2, n + k2, n + k))
    return V, faces


def cube() -> tuple[np.ndarray, list[tuple[int, ...]]]:
    V = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
    # index = x + 2y + 4z
    faces = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (1, 3, 7, 5), (3, 2, 6, 7), (2, 0, 4, 6)]
    return V, faces


def cube_cross_cut() -> list[Edge]:
    """Cut tree of the Latin-cross net: bottom, front, top and back in a strip,
    left and right hinged on the front face."""
    return [_e(0, 2), _e(1, 3), _e(2, 3), _e(4, 6), _e(5, 7), _e(2, 6), _e(3, 7)]


def spanning_trees(n_vertices: int, edges: Sequence[Edge]) -> Iterable[tuple[Edge, ...]]:
    """All spanning trees, in lexicographic order of edge subsets."""
    es = sorted(_e(*e) for e in edges)
    for combo in itertools.combinations(es, n_vertices - 1):
        if independent_cycles(combo) == 0 and len({v for e in combo for v in e}) == n_vertices:
            yield combo


@dataclass
class EdgeUnfoldingSearch:
    trees: int
    overlapping: int
    first_overlap: tuple[Edge, ...] | None
    witness: OverlapWitness | None


def search_edge_unfoldings(V: np.ndarray, faces: Sequence[Sequence[int]], eta: float = ETA) -> EdgeUnfoldingSearch:
    cx = complex_from_polyhedron(V, faces)
    n = len(V)
    count = over = 0
    first, wit = None, None
    for tree in spanning_trees(n, cx.edges()):
        count += 1
        w = detect_overlap(unfold(cx, tree), eta)
        if w is not None:
            over += 1
            if first is None:
                first, wit = tree, w
    return EdgeUnfoldingSearch(count, over, first, wit)
