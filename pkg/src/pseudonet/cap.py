"""Caps over an infinitesimally curved polygon and the surface map onto them.

The cap is the convex height field over P whose boundary stays flat at height
0 and whose only curved interior vertices sit above the weighted points, with
curvature α_i·β.  It is the upper convex envelope of the lifted points; the
free heights are found by Newton's method on the curvature residuals.
Geodesics are traced with a straightest walk across the cap triangles and
aimed by shooting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, Delaunay

from .geom import ETA, Vec2, signed_area, vec
from .io_util import atomic_write
from .partition import InfinitesimalPolyhedron, ParseError, Partition, WeightedPoint

TWO_PI = 2.0 * math.pi


class CapError(RuntimeError):
    pass


class GeodesicError(RuntimeError):
    pass


@dataclass(frozen=True)
class CapConfig:
    tol: float = 1e-8
    max_iter: int = 200
    fd_step: float = 1e-7  # relative to the polygon diameter
    seed: int = 0


# --- triangle mesh with straightest walks ----------------------------------------------

def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


@dataclass
class Walk:
    end: np.ndarray
    tri: int
    points: list[np.ndarray]
    tris: list[int]
    crossings: list[tuple[int, int]]
    extrapolated: bool = False


class TriMesh:
    """A triangulated height field: projections of the triangles tile P."""

    def __init__(self, xyz: np.ndarray, tris: np.ndarray):
        self.xyz = np.asarray(xyz, dtype=float)
        self.tris = np.asarray(tris, dtype=int)
        self.edge_tris: dict[tuple[int, int], list[int]] = {}
        for t, (a, b, c) in enumerate(self.tris):
            for u, v in ((a, b), (b, c), (c, a)):
                self.edge_tris.setdefault((min(u, v), max(u, v)), []).append(t)
        self.vert_tris: dict[int, list[int]] = {}
        for t, tri in enumerate(self.tris):
            for v in tri:
                self.vert_tris.setdefault(int(v), []).append(t)
        self._delaunay_like = None
        P = self.xyz[:, :2]
        A = P[self.tris[:, 0]]
        B = P[self.tris[:, 1]]
        C = P[self.tris[:, 2]]
        self._A, self._B, self._C = A, B, C
        self._det = (B[:, 0] - A[:, 0]) * (C[:, 1] - A[:, 1]) - (B[:, 1] - A[:, 1]) * (C[:, 0] - A[:, 0])
        self.scale = float(np.ptp(P, axis=0).max()) if len(P) else 1.0

    # point location in the projection
    def locate(self, p) -> tuple[int, np.ndarray]:
        x, y = float(p[0]), float(p[1])
        A, B, C = self._A, self._B, self._C
        l1 = ((C[:, 0] - A[:, 0]) * (y - A[:, 1]) - (C[:, 1] - A[:, 1]) * (x - A[:, 0])) / self._det
        l2 = ((x - A[:, 0]) * (B[:, 1] - A[:, 1]) - (y - A[:, 1]) * (B[:, 0] - A[:, 0])) / self._det
        # l1 weights B, l2 weights C
        l1 = -l1
        l2 = -l2
        l0 = 1.0 - l1 - l2
        m = np.minimum(np.minimum(l0, l1), l2)
        t = int(np.argmax(m))
        if m[t] < -1e-9:
            raise GeodesicError(f"point ({x}, {y}) lies outside the cap")
        return t, np.array([l0[t], l1[t], l2[t]])

    def lift(self, p) -> np.ndarray:
        t, bary = self.locate(p)
        return bary @ self.xyz[self.tris[t]]

    def height_at(self, p) -> float:
        return float(self.lift(p)[2])

    def frame(self, t: int):
        a, b, c = self.xyz[self.tris[t]]
        e1 = b - a
        e1 = e1 / np.linalg.norm(e1)
        n = np.cross(b - a, c - a)
        n = n / np.linalg.norm(n)
        e2 = np.cross(n, e1)
        return a, e1, e2, n

    def vertex_of(self, p, tol: float = 0.0) -> int | None:
        d = np.hypot(self.xyz[:, 0] - p[0], self.xyz[:, 1] - p[1])
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def fan(self, v: int) -> tuple[list[tuple[int, int, int, float]], bool]:
        """Triangles around vertex v in counterclockwise (projected) order:
        (tri, first_neighbor, second_neighbor, angle at v); flag for boundary vertices."""
        items = []
        for t in self.vert_tris[v]:
            tri = list(self.tris[t])
            k = tri.index(v)
            a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
            items.append((t, a, b, _angle(self.xyz[a] - self.xyz[v], self.xyz[b] - self.xyz[v])))
        nxt = {a: (t, a, b, ang) for t, a, b, ang in items}
        seconds = {b for _, _, b, _ in items}
        starts = [a for _, a, _, _ in items if a not in seconds]
        boundary = bool(starts)
        cur = starts[0] if starts else items[0][1]
        order = []
        while cur in nxt and len(order) < len(items):
            it = nxt[cur]
            order.append(it)
            cur = it[2]
        if len(order) != len(items):
            raise GeodesicError(f"vertex {v}: fan is not a disk or half-disk")
        return order, boundary

    def walk(self, t: int, p: np.ndarray, d: np.ndarray, length: float, extrapolate: bool = False) -> Walk:
        """Straightest path of the given length from p (in triangle t) along d.

        With ``extrapolate`` a path reaching the rim continues in the plane of
        its last triangle, which keeps shooting residuals smooth near the rim."""
        p = np.array(p, dtype=float)
        d = np.array(d, dtype=float)
        d = d / np.linalg.norm(d)
        remaining = float(length)
        pts, tris, cross = [p.copy()], [t], []
        came_from: tuple[int, int] | None = None
        for _ in range(100000):
            o, e1, e2, n = self.frame(t)
            tri = self.tris[t]
            P2 = [np.array([np.dot(self.xyz[v] - o, e1), np.dot(self.xyz[v] - o, e2)]) for v in tri]
            q = np.array([np.dot(p - o, e1), np.dot(p - o, e2)])
            dd = np.array([np.dot(d, e1), np.dot(d, e2)])
            best, best_edge = math.inf, None
            for k in range(3):
                a, b = P2[k], P2[(k + 1) % 3]
                edge = (min(tri[k], tri[(k + 1) % 3]), max(tri[k], tri[(k + 1) % 3]))
                if edge == came_from:
                    continue
                ev = b - a
                den = ev[1] * dd[0] - ev[0] * dd[1]  # > 0 when d leaves across ab (ccw triangle)
                if den <= 1e-15:
                    continue
                s = (ev[0] * (q[1] - a[1]) - ev[1] * (q[0] - a[0])) / den
                if s < best:
                    best, best_edge = s, (k, edge)
            if best_edge is None:
                raise GeodesicError("walk direction is degenerate")
            s = max(best, 0.0)
            if s >= remaining - 1e-13 * self.scale:
                p = p + d * remaining
                pts.append(p)
                return Walk(p, t, pts, tris, cross)
            p = p + d * s
            remaining -= s
            k, edge = best_edge
            nb = [x for x in self.edge_tris[edge] if x != t]
            if not nb:
                if extrapolate:
                    p = p + d * remaining
                    pts.append(p)
                    return Walk(p, t, pts, tris, cross, remaining > 1e-12 * self.scale)
                raise GeodesicError("walk leaves the cap")
            t2 = nb[0]
            a3, b3 = self.xyz[edge[0]], self.xyz[edge[1]]
            ex = (b3 - a3) / np.linalg.norm(b3 - a3)
            w = p - a3
            along = float(np.dot(w, ex))
            L = float(np.linalg.norm(b3 - a3))
            if along <= 1e-12 * self.scale or along >= L - 1e-12 * self.scale:
                raise GeodesicError("walk passes through a vertex")
            c2 = [v for v in self.tris[t2] if v not in edge][0]
            m2 = self.xyz[c2] - a3
            m2 = m2 - np.dot(m2, ex) * ex
            m2 /= np.linalg.norm(m2)
            dpar = float(np.dot(d, ex))
            dperp = math.sqrt(max(0.0, 1.0 - dpar * dpar))
            d = dpar * ex + dperp * m2
            pts.append(p.copy())
            cross.append(edge)
            tris.append(t2)
            came_from = edge
            t = t2
        raise GeodesicError("walk did not terminate")

    def start_frame(self, src) -> dict:
        """How to emit directions from a point given by its projection."""
        v = self.vertex_of(src, 1e-12 * self.scale)
        if v is not None:
            fan, boundary = self.fan(v)
            total = sum(f[3] for f in fan)
            return {"kind": "vertex", "v": v, "fan": fan, "total": total, "boundary": boundary,
                    "p": self.xyz[v].copy()}
        t, bary = self.locate(src)
        return {"kind": "face", "t": t, "p": bary @ self.xyz[self.tris[t]]}

    def direction(self, sf: dict, psi: float) -> tuple[int, np.ndarray]:
        if sf["kind"] == "face":
            _, e1, e2, _ = self.frame(sf["t"])
            return sf["t"], math.cos(psi) * e1 + math.sin(psi) * e2
        v = sf["v"]
        total = sf["total"]
        if not sf["boundary"]:
            psi = psi % total
        acc = 0.0
        for t, a, b, ang in sf["fan"]:
            if psi <= acc + ang or (t, a, b, ang) == sf["fan"][-1]:
                u = self.xyz[a] - self.xyz[v]
                w = self.xyz[b] - self.xyz[v]
                u = u / np.linalg.norm(u)
                nrm = np.cross(u, w)
                nrm /= np.linalg.norm(nrm)
                perp = np.cross(nrm, u)
                x = min(max(psi - acc, 0.0), ang)
                return t, math.cos(x) * u + math.sin(x) * perp
            acc += ang
        raise GeodesicError("direction outside the vertex fan")

    def initial_psi(self, sf: dict, src, dst) -> float:
        """Direction parameter whose projection points from src toward dst."""
        dx = np.array([dst[0] - src[0], dst[1] - src[1]], dtype=float)
        if sf["kind"] == "face":
            t = sf["t"]
            step = np.array(src, dtype=float) + dx * 1e-9
            try:
                t2, _ = self.locate(step)
                if t2 != t:
                    t = t2
                    sf["t"] = t
                    sf["p"] = self.lift(src)
            except GeodesicError:
                pass
            g = self._gradient(t)
            d3 = np.array([dx[0], dx[1], g @ dx])
            _, e1, e2, _ = self.frame(t)
            return math.atan2(float(np.dot(d3, e2)), float(np.dot(d3, e1)))
        v = sf["v"]
        acc = 0.0
        target = math.atan2(dx[1], dx[0])
        for t, a, b, ang in sf["fan"]:
            pa = self.xyz[a, :2] - self.xyz[v, :2]
            pb = self.xyz[b, :2] - self.xyz[v, :2]
            aa = math.atan2(pa[1], pa[0])
            span = (math.atan2(pb[1], pb[0]) - aa) % TWO_PI
            off = (target - aa) % TWO_PI
            if off <= span + 1e-12:
                g = self._gradient(t)
                d3 = np.array([dx[0], dx[1], g @ dx])
                u = self.xyz[a] - self.xyz[v]
                return acc + _angle(u, d3)
            acc += ang
        return 0.0

    def _gradient(self, t: int) -> np.ndarray:
        a, b, c = self.xyz[self.tris[t]]
        M = np.array([b[:2] - a[:2], c[:2] - a[:2]])
        return np.linalg.solve(M, np.array([b[2] - a[2], c[2] - a[2]]))

    def geodesic(self, src, dst, tol: float | None = None) -> "Geodesic":
        """Locally shortest path between two points given by their projections."""
        src = np.array([float(src[0]), float(src[1])])
        dst = np.array([float(dst[0]), float(dst[1])])
        tol = 1e-12 * self.scale if tol is None else tol
        a3, b3 = self.lift(src), self.lift(dst)
        va = self.vertex_of(src, 1e-12 * self.scale)
        vb = self.vertex_of(dst, 1e-12 * self.scale)
        if va is not None and vb is not None and (min(va, vb), max(va, vb)) in self.edge_tris:
            return Geodesic(float(np.linalg.norm(b3 - a3)), [a3, b3], [])
        if abs(a3[2]) <= tol and abs(b3[2]) <= tol and self._on_common_boundary_side(src, dst):
            return Geodesic(float(np.linalg.norm(b3 - a3)), [a3, b3], [])
        if va is None and vb is not None:
            g = self.geodesic(dst, src, tol)
            return Geodesic(g.length, g.points[::-1], g.crossings[::-1])
        shared = self._shared_triangle(src, dst)
        if shared is not None:
            return Geodesic(float(np.linalg.norm(b3 - a3)), [a3, b3], [])
        sf = self.start_frame(src)
        psi0 = self.initial_psi(sf, src, dst)
        s0 = float(np.linalg.norm(b3 - a3))

        def run(x):
            t, d = self.direction(sf, x[0])
            return self.walk(t, sf["p"], d, x[1], extrapolate=True)

        def res(x):
            try:
                w = run(x)
            except GeodesicError:
                return np.array([1e3, 1e3]) * self.scale
            _, e1, e2, _ = self.frame(w.tri)
            r = b3 - w.end
            return np.array([np.dot(r, e1), np.dot(r, e2)])

        def newton(x, r):
            for _ in range(60):
                if np.linalg.norm(r) <= 0.1 * tol:
                    break
                J = np.empty((2, 2))
                for j, hstep in enumerate((1e-7, 1e-7 * max(s0, 1e-12))):
                    dx = np.zeros(2)
                    dx[j] = hstep
                    J[:, j] = (res(x + dx) - res(x - dx)) / (2 * hstep)
                try:
                    step = np.linalg.solve(J, -r)
                except np.linalg.LinAlgError:
                    break
                lam = 1.0
                while lam > 1e-6:
                    xn = x + lam * step
                    rn = res(xn)
                    if np.linalg.norm(rn) < np.linalg.norm(r):
                        break
                    lam *= 0.5
                else:
                    break
                x, r = xn, rn
            return x, r

        limit = max(tol, 1e-9 * self.scale)

        def valid(x, r):
            if np.linalg.norm(r) > limit or x[1] <= 0:
                return None
            try:
                w = run(x)
            except GeodesicError:
                return None
            return None if w.extrapolated else w

        x = np.array([psi0, s0])
        x, r = newton(x, res(x))
        w = valid(x, r)
        if w is None:
            # a shot that grazes a cone point stalls Newton; restart from
            # nearby angles and keep the shortest straight path that arrives
            found = []
            for off in (1e-6, -1e-6, 1e-3, -1e-3, 1e-2, -1e-2, 3e-2, -3e-2):
                xo = np.array([psi0 + off, s0])
                ro = res(xo)
                if np.linalg.norm(ro) >= 1e2 * self.scale:
                    continue
                xo, ro = newton(xo, ro)
                wo = valid(xo, ro)
                if wo is not None:
                    found.append((float(xo[1]), tuple(xo), wo))
            if not found:
                raise GeodesicError(f"shooting did not converge (miss {float(np.linalg.norm(r)):.3e})")
            _, xs, w = min(found, key=lambda c: c[0])
            x = np.array(xs)
        err = float(np.linalg.norm(w.end - b3))
        if err > limit:
            raise GeodesicError(f"shooting did not converge (miss {err:.3e})")
        w.points[-1] = b3.copy()
        # endpoints on an edge can leave zero-length first or last pieces; drop them
        while w.crossings and np.linalg.norm(w.points[-2] - b3) <= limit:
            del w.points[-2]
            w.crossings.pop()
        while w.crossings and np.linalg.norm(w.points[1] - w.points[0]) <= limit:
            del w.points[1]
            w.crossings.pop(0)
        return Geodesic(float(x[1]), w.points, w.crossings)

    def _shared_triangle(self, a, b) -> int | None:
        eps = 1e-12
        for t, tri in enumerate(self.tris):
            A, B, C = self.xyz[tri, :2]
            d = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
            ok = True
            for x in (a, b):
                for U, W in ((B, C), (C, A), (A, B)):
                    if ((W[0] - U[0]) * (x[1] - U[1]) - (W[1] - U[1]) * (x[0] - U[0])) / d < -eps:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return t
        return None

    def _on_common_boundary_side(self, a, b) -> bool:
        for e, ts in self.edge_tris.items():
            if len(ts) != 1:
                continue
            p, q = self.xyz[e[0], :2], self.xyz[e[1], :2]
            ev = q - p
            L = np.linalg.norm(ev)
            for x in (a, b):
                if abs(ev[0] * (x[1] - p[1]) - ev[1] * (x[0] - p[0])) > 1e-12 * self.scale * L:
                    break
            else:
                return True
        return False


@dataclass
class Geodesic:
    length: float
    points: list[np.ndarray]
    crossings: list[tuple[int, int]]

    def point_at(self, frac: float) -> np.ndarray:
        """Point at the given fraction of the length (evenly stretched)."""
        target = frac * self.length
        acc = 0.0
        for a, b in zip(self.points, self.points[1:]):
            L = float(np.linalg.norm(b - a))
            if acc + L >= target or b is self.points[-1]:
                t = 0.0 if L == 0 else min(max((target - acc) / L, 0.0), 1.0)
                return a + (b - a) * t
            acc += L
        return self.points[-1]


# --- the cap -----------------------------------------------------------------------------

@dataclass
class Cap:
    base: InfinitesimalPolyhedron
    beta: float
    points: np.ndarray  # (n, 2): boundary corners (ccw) first, then interior points in base order
    heights: np.ndarray  # (n,)
    triangles: np.ndarray  # (m, 3), counterclockwise in projection
    n_boundary: int
    weights: np.ndarray  # (n,), zero on the boundary
    residuals: np.ndarray  # curvature residual per interior point
    iterations: int = 0
    _mesh: TriMesh | None = field(default=None, repr=False, compare=False)

    @property
    def xyz(self) -> np.ndarray:
        return np.column_stack([self.points, self.heights])

    @property
    def mesh(self) -> TriMesh:
        if self._mesh is None:
            self._mesh = TriMesh(self.xyz, self.triangles)
        return self._mesh

    def interior_indices(self) -> range:
        return range(self.n_boundary, len(self.points))

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0

    def gauss_bonnet_defect(self) -> float:
        """Σ interior curvatures + Σ boundary turning angles − 2π."""
        s = math.fsum(vertex_curvature(self, v).curvature for v in self.interior_indices())
        s += math.fsum(boundary_turning(self, v) for v in range(self.n_boundary))
        return s - TWO_PI

    def dihedral_violations(self, tol: float = 1e-12) -> list[tuple[int, int]]:
        """Interior edges where the surface is reflex (fails the convexity test)."""
        out = []
        X = self.xyz
        scale = float(np.ptp(self.points, axis=0).max())
        for e, ts in self.mesh.edge_tris.items():
            if len(ts) != 2:
                continue
            t1, t2 = ts
            a, b, c = X[self.triangles[t1]]
            n = np.cross(b - a, c - a)
            n = n / np.linalg.norm(n)
            if n[2] < 0:
                n = -n
            opp = [v for v in self.triangles[t2] if v not in e][0]
            if np.dot(X[opp] - a, n) > tol * scale:
                out.append(e)
        return out

    def geodesic(self, a, b) -> Geodesic:
        return self.mesh.geodesic(a, b)


@dataclass(frozen=True)
class VertexCurvature:
    vertex: int
    curvature: float
    angle_sum: float


def _angle_sums(xyz: np.ndarray, tris: np.ndarray, n: int) -> np.ndarray:
    s = np.zeros(n)
    for tri in tris:
        P = xyz[tri]
        for k in range(3):
            s[tri[k]] += _angle(P[(k + 1) % 3] - P[k], P[(k + 2) % 3] - P[k])
    return s


def vertex_curvature(cap: Cap, v: int) -> VertexCurvature:
    if v < cap.n_boundary:
        raise CapError("boundary vertex: use boundary_turning")
    X = cap.xyz
    s = 0.0
    for tri in cap.triangles:
        if v in tri:
            k = list(tri).index(v)
            s += _angle(X[tri[(k + 1) % 3]] - X[v], X[tri[(k + 2) % 3]] - X[v])
    return VertexCurvature(v, TWO_PI - s, s)


def boundary_turning(cap: Cap, v: int) -> float:
    """Geodesic turning of the cap boundary at corner v: π minus the face angles."""
    if v >= cap.n_boundary:
        raise CapError("not a boundary vertex")
    X = cap.xyz
    s = 0.0
    for tri in cap.triangles:
        if v in tri:
            k = list(tri).index(v)
            s += _angle(X[tri[(k + 1) % 3]] - X[v], X[tri[(k + 2) % 3]] - X[v])
    return math.pi - s


def cone_apex_height(half_side: float, beta: float) -> float:
    """Height of the apex over the center of a square of the given half side
    whose apex curvature is beta."""
    t = math.tan((TWO_PI - beta) / 8.0)
    return half_side * math.sqrt(1.0 / (t * t) - 1.0)


def _upper_hull(pts3: np.ndarray) -> np.ndarray:
    hull = ConvexHull(pts3)
    up = hull.equations[:, 2] > 1e-12
    tris = hull.simplices[up]
    out = []
    for tri in tris:
        a, b, c = pts3[tri, :2]
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
            tri = tri[[0, 2, 1]]
        out.append(tri)
    return np.array(out, dtype=int)


def _curvatures(B: np.ndarray, U: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nb = len(B)
    pts3 = np.vstack([np.column_stack([B, np.zeros(nb)]), np.column_stack([U, z])])
    tris = _upper_hull(pts3)
    sums = _angle_sums(pts3, tris, len(pts3))
    used = np.zeros(len(pts3), bool)
    used[tris.ravel()] = True
    curv = np.where(used[nb:], TWO_PI - sums[nb:], 0.0)
    return curv, tris


def _project_onto_envelope(B: np.ndarray, U: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Lift every weighted point that sits on or below the envelope of the
    others to just above it, so each one is a vertex of the upper hull."""
    z = z.copy()
    nb = len(B)
    for _ in range(len(z) + 1):
        pts3 = np.vstack([np.column_stack([B, np.zeros(nb)]), np.column_stack([U, z])])
        tris = _upper_hull(pts3)
        used = np.zeros(len(pts3), bool)
        used[tris.ravel()] = True
        low = np.flatnonzero(~used[nb:])
        if not len(low):
            return z
        k = int(low[0])
        mesh = TriMesh(pts3, tris)
        z[k] = mesh.height_at(U[k]) * (1 + 1e-6) + 1e-9 * float(np.ptp(B, axis=0).max())
    return z


def _single_height(B: np.ndarray, p: np.ndarray, kappa: float) -> float:
    def f(h):
        pts3 = np.vstack([np.column_stack([B, np.zeros(len(B))]), [[p[0], p[1], h]]])
        tris = _upper_hull(pts3)
        s = _angle_sums(pts3, tris, len(pts3))[-1]
        return (TWO_PI - s) - kappa

    D = float(np.ptp(B, axis=0).max())
    hi = D
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 1e-12 * D, hi, xtol=1e-15 * D, rtol=1e-15)


def solve_cap(ip: InfinitesimalPolyhedron, beta: float, tol: float = 1e-8,
              config: CapConfig | None = None, initial: Sequence[float] | None = None) -> Cap:
    cfg = config or CapConfig(tol=tol)
    tol = cfg.tol if config is not None else tol
    probs = ip.problems()
    if probs:
        raise CapError("invalid base: " + "; ".join(probs))
    if not (0.0 <= beta < TWO_PI):
        raise CapError("beta must lie in [0, 2π)")
    bnd = list(ip.boundary)
    if signed_area(bnd) < 0:
        bnd.reverse()
    B = np.array([[p.x, p.y] for p in bnd])
    I = np.array([[w.position.x, w.position.y] for w in ip.interior]).reshape(-1, 2)
    alpha = np.array([w.weight for w in ip.interior])
    nb = len(B)
    pts = np.vstack([B, I])
    weights = np.concatenate([np.zeros(nb), alpha])
    wi = np.flatnonzero(alpha > 0)
    zi = np.flatnonzero(alpha == 0)
    if beta == 0.0:
        tris = Delaunay(pts).simplices
        tris = np.array([t if _ccw(pts, t) else t[[0, 2, 1]] for t in tris])
        return Cap(ip, 0.0, pts, np.zeros(len(pts)), tris, nb, weights, np.zeros(len(I)), 0)
    U = I[wi]
    target = alpha[wi] * beta
    D = float(np.ptp(B, axis=0).max())
    if initial is not None:
        z = np.array(initial, dtype=float)[wi] if len(initial) == len(I) else np.array(initial, float)
    else:
        z = np.array([_single_height(B, U[k], target[k]) for k in range(len(U))])
    h = cfg.fd_step * D
    it = 0
    z = _project_onto_envelope(B, U, z)
    curv, _ = _curvatures(B, U, z)
    r = curv - target
    while np.max(np.abs(r)) > tol:
        if it >= cfg.max_iter:
            raise CapError(f"no convergence after {it} iterations (residual {np.max(np.abs(r)):.3e})")
        it += 1
        J = np.empty((len(z), len(z)))
        for j in range(len(z)):
            zp = z.copy()
            zp[j] += h
            J[:, j] = (_curvatures(B, U, zp)[0] - curv) / h
        dz = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        base = np.max(np.abs(r))
        while True:
            zn = z + lam * dz
            if np.all(zn > 0):
                zn = _project_onto_envelope(B, U, zn)
                cn, _ = _curvatures(B, U, zn)
                rn = cn - target
                if np.max(np.abs(rn)) < base or lam < 1e-6:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise CapError("line search failed")
        z, curv, r = zn, cn, rn
    heights = np.zeros(len(pts))
    heights[nb + wi] = z
    pts3 = np.column_stack([np.vstack([B, U]), np.concatenate([np.zeros(nb), z])])
    tris = _upper_hull(pts3)
    if len(np.unique(tris.ravel())) != nb + len(U):
        raise CapError("a weighted point is not a vertex of the solved cap")
    # renumber hull indices into the full point list
    remap = np.concatenate([np.arange(nb), nb + wi])
    tris = remap[tris]
    mesh = TriMesh(np.column_stack([pts, heights]), tris)
    for k in zi:
        v = nb + k
        heights[v] = mesh.height_at(pts[v])
        tris = _insert_point(pts, tris, v)
        mesh = TriMesh(np.column_stack([pts, heights]), tris)
    residuals = np.zeros(len(I))
    cap = Cap(ip, float(beta), pts, heights, tris, nb, weights, residuals, it)
    residuals[:] = [vertex_curvature(cap, nb + k).curvature - alpha[k] * beta for k in range(len(I))]
    viol = cap.dihedral_violations()
    if viol:
        raise CapError(f"convexity violated at {len(viol)} edges")
    return cap


def _ccw(pts, t) -> bool:
    a, b, c = pts[t]
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0


def _insert_point(pts: np.ndarray, tris: np.ndarray, v: int) -> np.ndarray:
    """Split the triangle (or the two triangles sharing an edge) containing pts[v]."""
    p = pts[v]
    out = []
    hit_edge = None
    for tri in tris:
        a, b, c = pts[tri]
        d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        l = []
        for k in range(3):
            u, w = pts[tri[(k + 1) % 3]], pts[tri[(k + 2) % 3]]
            l.append(((w[0] - u[0]) * (p[1] - u[1]) - (w[1] - u[1]) * (p[0] - u[0])) / d)
        scale = 1e-12
        if min(l) < -scale:
            out.append(tri)
            continue
        zero = [k for k in range(3) if abs(l[k]) <= scale]
        if not zero:
            out += [[tri[0], tri[1], v], [tri[1], tri[2], v], [tri[2], tri[0], v]]
        elif len(zero) == 1:
            k = zero[0]
            u, w, o = tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]
            out += [[o, u, v], [w, o, v]]
            hit_edge = (u, w)
        else:
            raise CapError("inserted point coincides with a cap vertex")
    return np.array(out, dtype=int)


# --- continuity probe ------------------------------------------------------------------------

@dataclass
class ProbeRow:
    beta: float
    max_height: float
    max_height_delta: float
    max_length_excess: float  # max over probe segments of geodesic length / planar length − 1


def continuity_probe(ip: InfinitesimalPolyhedron, betas: Sequence[float],
                     segments: Sequence[tuple[Vec2, Vec2]] = (), tol: float = 1e-8) -> list[ProbeRow]:
    rows: list[ProbeRow] = []
    prev = None
    for b in list(betas) + [0.0]:
        cap = solve_cap(ip, b, tol)
        mh = float(cap.heights.max())
        delta = 0.0 if prev is None else float(np.max(np.abs(cap.heights - prev.heights)))
        excess = 0.0
        for a, c in segments:
            L = cap.geodesic(a.as_tuple(), c.as_tuple()).length
            excess = max(excess, L / math.dist(a.as_tuple(), c.as_tuple()) - 1.0)
        rows.append(ProbeRow(float(b), mh, delta, excess))
        prev = cap
    return rows


# --- the surface map ---------------------------------------------------------------------------

@dataclass
class SurfaceMap:
    cap: Cap
    partition: Partition
    edge_geodesics: dict[tuple[int, int], Geodesic]
    triangles: list[tuple[int, int, int]]  # L' as vertex triples of the partition
    developed: list[np.ndarray]  # per triangle: (3, 2) planar development of its geodesic triangle

    def length(self, u: int, v: int) -> float:
        return self.edge_geodesics[(min(u, v), max(u, v))].length

    def affine(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Affine map x -> A x + b from triangle k of L' to its development."""
        tri = self.triangles[k]
        P = np.array([self.partition.vertices[v].as_tuple() for v in tri])
        Q = self.developed[k]
        M = np.column_stack([P[1] - P[0], P[2] - P[0]])
        N = np.column_stack([Q[1] - Q[0], Q[2] - Q[0]])
        A = N @ np.linalg.inv(M)
        return A, Q[0] - A @ P[0]


def develop_polygon(n: int, dist_fn) -> np.ndarray:
    """Planar convex polygon from side lengths and fan diagonals from vertex 0."""
    out = np.zeros((n, 2))
    out[1] = [dist_fn(0, 1), 0.0]
    for j in range(2, n):
        r0 = dist_fn(0, j)
        r1 = dist_fn(j - 1, j)
        a = out[j - 1]
        d = float(np.linalg.norm(a))
        x = (r0 * r0 - r1 * r1 + d * d) / (2 * d)
        y2 = r0 * r0 - x * x
        if y2 < -1e-9 * r0 * r0:
            raise CapError("face development failed (triangle inequality)")
        y = math.sqrt(max(y2, 0.0))
        ux = a / d
        uy = np.array([-ux[1], ux[0]])
        out[j] = ux * x + uy * y
    return out


def build_surface_map(cap: Cap, partition: Partition, check_unique: bool = True) -> SurfaceMap:
    geo: dict[tuple[int, int], Geodesic] = {}

    def g(u, v):
        key = (min(u, v), max(u, v))
        if key not in geo:
            a = partition.vertices[key[0]].as_tuple()
            b = partition.vertices[key[1]].as_tuple()
            fw = cap.geodesic(a, b)
            if check_unique:
                bw = cap.geodesic(b, a)
                if abs(fw.length - bw.length) > 1e-9 * max(1.0, fw.length):
                    raise CapError(f"geodesic {key} is not unique (lengths {fw.length} vs {bw.length}); "
                                   "try a smaller beta")
            geo[key] = fw
        return geo[key]

    tris, dev = [], []
    for f in partition.inner_faces:
        cyc = partition.face_vertices(f)
        for e in zip(cyc, cyc[1:] + cyc[:1]):
            g(*e)
        for j in range(1, len(cyc) - 1):
            t = (cyc[0], cyc[j], cyc[j + 1])
            tris.append(t)
            D = develop_polygon(3, lambda a, b: g(t[a], t[b]).length)
            if (D[1][0] * D[2][1] - D[1][1] * D[2][0]) <= 0:
                raise CapError("degenerate developed triangle; map not injective")
            dev.append(D)
    return SurfaceMap(cap, partition, geo, tris, dev)


# --- CAP v1 ------------------------------------------------------------------------------------

def _f(x: float) -> str:
    return format(float(x), ".17g")


def dumps_cap(cap: Cap) -> str:
    L = ["CAP v1", f"BETA {_f(cap.beta)}", f"ITERATIONS {cap.iterations}", f"BOUNDARY {cap.n_boundary}"]
    L += [f"{_f(x)} {_f(y)}" for x, y in cap.points[: cap.n_boundary]]
    ni = len(cap.points) - cap.n_boundary
    L.append(f"POINTS {ni}")
    L += [f"{_f(x)} {_f(y)} {_f(w)}" for (x, y), w in zip(cap.points[cap.n_boundary:], cap.weights[cap.n_boundary:])]
    L.append(f"HEIGHTS {len(cap.heights)}")
    L += [_f(z) for z in cap.heights]
    L.append(f"TRIANGLES {len(cap.triangles)}")
    L += [" ".join(str(int(v)) for v in t) for t in cap.triangles]
    L.append(f"RESIDUALS {len(cap.residuals)}")
    L += [_f(r) for r in cap.residuals]
    L.append("END")
    return "\n".join(L) + "\n"


def loads_cap(text: str) -> Cap:
    lines = []
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            lines.append((no, s))
    if not lines or lines[0][1] != "CAP v1":
        raise ParseError(lines[0][0] if lines else 1, "missing header 'CAP v1'")
    pos = 1

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(lines[-1][0], f"unexpected end of file, expected {key}")
        no, s = lines[pos]
        parts = s.split()
        if parts[0] != key or len(parts) != 2:
            raise ParseError(no, f"expected '{key} <value>'")
        pos += 1
        return no, parts[1]

    def block(key, width, conv):
        nonlocal pos
        _, n = take(key)
        rows = []
        for _ in range(int(n)):
            if pos >= len(lines):
                raise ParseError(lines[-1][0], f"truncated section {key}")
            no, s = lines[pos]
            parts = s.split()
            if len(parts) != width:
                raise ParseError(no, f"expected {width} fields in {key}")
            try:
                rows.append([conv(x) for x in parts])
            except ValueError as exc:
                raise ParseError(no, str(exc)) from None
            pos += 1
        return rows

    try:
        beta = float(take("BETA")[1])
        iters = int(take("ITERATIONS")[1])
    except ValueError as exc:
        raise ParseError(lines[pos][0], str(exc)) from None
    bnd = block("BOUNDARY", 2, float)
    pts = block("POINTS", 3, float)
    hts = block("HEIGHTS", 1, float)
    tri = block("TRIANGLES", 3, int)
    res = block("RESIDUALS", 1, float)
    if pos >= len(lines) or lines[pos][1] != "END":
        raise ParseError(lines[min(pos, len(lines) - 1)][0], "missing END")
    ip = InfinitesimalPolyhedron(tuple(Vec2(x, y) for x, y in bnd),
                                 tuple(WeightedPoint(Vec2(x, y), w) for x, y, w in pts))
    P = np.array(bnd + [[x, y] for x, y, _ in pts], dtype=float)
    W = np.array([0.0] * len(bnd) + [w for _, _, w in pts])
    return Cap(ip, beta, P, np.array([h[0] for h in hts]), np.array(tri, dtype=int), len(bnd), W,
               np.array([r[0] for r in res]), iters)


def save_cap(cap: Cap, path) -> None:
    atomic_write(path, dumps_cap(cap))


def load_cap(path) -> Cap:
    with open(path, encoding="utf-8") as fh:
        return loads_cap(fh.read())
