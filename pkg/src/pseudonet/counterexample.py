"""Assembly of the counterexamples and the combinatorial arguments behind them.

Surfaces here are intrinsic: triangles carry their own side lengths and are
glued through explicit twin pairs, so cutting and regluing never needs an
embedding in space.  The graph side holds the Hamiltonicity search and the
replays of the contraction arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.spatial import ConvexHull

from .cap import Cap, CapError, boundary_turning, solve_cap
from .io_util import atomic_write
from .partition import ParseError, Partition

TWO_PI = 2.0 * math.pi


class SurfaceError(ValueError):
    pass


class HamiltonBudgetError(RuntimeError):
    pass


# --- intrinsic surfaces -------------------------------------------------------------------

Side = tuple[int, int]  # (triangle, k): side from corner k to corner k+1


@dataclass
class IntrinsicSurface:
    triangles: list[tuple[int, int, int]]
    lengths: list[tuple[float, float, float]]  # lengths[t][k] = |tri[k] tri[k+1]|
    twins: dict[Side, Side]
    n_vertices: int
    names: dict[int, str] = field(default_factory=dict)

    def angle(self, t: int, k: int) -> float:
        """Corner angle of triangle t at its corner k (law of cosines)."""
        L = self.lengths[t]
        a, b = L[k], L[(k + 2) % 3]  # sides at corner k
        c = L[(k + 1) % 3]  # opposite side
        x = (a * a + b * b - c * c) / (2 * a * b)
        return math.acos(min(1.0, max(-1.0, x)))

    def angle_sum(self, v: int) -> float:
        return math.fsum(self.angle(t, k) for t, tri in enumerate(self.triangles)
                         for k in range(3) if tri[k] == v)

    def curvature(self, v: int) -> float:
        return TWO_PI - self.angle_sum(v)

    def used_vertices(self) -> list[int]:
        return sorted({v for tri in self.triangles for v in tri})

    def curvatures(self) -> dict[int, float]:
        sums: dict[int, float] = {}
        for t, tri in enumerate(self.triangles):
            for k in range(3):
                sums[tri[k]] = sums.get(tri[k], 0.0) + self.angle(t, k)
        return {v: TWO_PI - s for v, s in sorted(sums.items())}

    def total_curvature(self) -> float:
        return math.fsum(self.curvatures().values())

    def is_closed(self) -> bool:
        return len(self.twins) == 3 * len(self.triangles)

    def problems(self, eta: float = 1e-9) -> list[str]:
        out = []
        for t, L in enumerate(self.lengths):
            a, b, c = L
            if min(L) <= 0 or a + b <= c * (1 + 1e-15) or b + c <= a * (1 + 1e-15) or c + a <= b * (1 + 1e-15):
                out.append(f"triangle {t} violates the triangle inequality: {L}")
        for s, u in self.twins.items():
            if self.twins.get(u) != s:
                out.append(f"twin map is not an involution at {s}")
                continue
            t, k = s
            t2, k2 = u
            a, b = self.triangles[t][k], self.triangles[t][(k + 1) % 3]
            c, d = self.triangles[t2][k2], self.triangles[t2][(k2 + 1) % 3]
            if (a, b) != (d, c):
                out.append(f"sides {s} and {u} are glued with inconsistent orientation")
            if abs(self.lengths[t][k] - self.lengths[t2][k2]) > eta * max(1.0, self.lengths[t][k]):
                out.append(f"sides {s} and {u} have different lengths")
        return out

    def star(self, v: int) -> list[tuple[int, int]]:
        """Triangles around an interior vertex in counterclockwise order, as (triangle, corner)."""
        first = next(((t, k) for t, tri in enumerate(self.triangles) for k in range(3) if tri[k] == v), None)
        if first is None:
            raise SurfaceError(f"vertex {v} is not on the surface")
        out = [first]
        t, k = first
        while True:
            # side leaving v backwards is (k-1 -> k); its twin continues counterclockwise
            tw = self.twins.get((t, (k + 2) % 3))
            if tw is None:
                raise SurfaceError(f"vertex {v} lies on the rim")
            t2, k2 = tw
            nk = k2 if self.triangles[t2][k2] == v else (k2 + 1) % 3
            if (t2, nk) == first:
                return out
            out.append((t2, nk))
            t, k = t2, nk
            if len(out) > len(self.triangles):
                raise SurfaceError("star walk did not close")


def surface_from_polyhedron(V: np.ndarray, triangles: Sequence[Sequence[int]]) -> IntrinsicSurface:
    """Intrinsic surface of a triangulated polyhedron (triangles counterclockwise from outside)."""
    V = np.asarray(V, dtype=float)
    tris = [tuple(int(x) for x in t) for t in triangles]
    lengths = [tuple(float(np.linalg.norm(V[t[(k + 1) % 3]] - V[t[k]])) for k in range(3)) for t in tris]
    where = {}
    for t, tri in enumerate(tris):
        for k in range(3):
            where[(tri[k], tri[(k + 1) % 3])] = (t, k)
    twins = {}
    for (a, b), s in where.items():
        if (b, a) in where:
            twins[s] = where[(b, a)]
    return IntrinsicSurface(tris, lengths, twins, len(V))


@dataclass
class PrismHost:
    surface: IntrinsicSurface
    vertices: np.ndarray
    graph: nx.Graph  # skeleton of the prism (polygon edges and vertical edges)
    min_separation: float


def build_prism_host(N: int, height: float = 1.0) -> PrismHost:
    """Right prism over the regular N-gon of circumradius 1."""
    if N < 3:
        raise SurfaceError("a prism needs N >= 3")
    bot = [(math.cos(TWO_PI * k / N), math.sin(TWO_PI * k / N), 0.0) for k in range(N)]
    top = [(x, y, height) for x, y, _ in bot]
    V = np.array(bot + top)
    tris = []
    for k in range(1, N - 1):
        tris.append((0, k + 1, k))  # bottom, seen from below
        tris.append((N, N + k, N + k + 1))  # top
    for k in range(N):
        k2 = (k + 1) % N
        tris.append((k, k2, N + k2))
        tris.append((k, N + k2, N + k))
    g = nx.Graph()
    for k in range(N):
        g.add_edge(k, (k + 1) % N)
        g.add_edge(N + k, N + (k + 1) % N)
        g.add_edge(k, N + k)
    sep = min(float(np.linalg.norm(V[u] - V[v])) for u, v in g.edges())
    s = surface_from_polyhedron(V, tris)
    s.names = {v: f"v{v}" for v in range(2 * N)}
    return PrismHost(s, V, g, sep)


# --- cone shaping -----------------------------------------------------------------------------

@dataclass
class ConeShaping:
    surface: IntrinsicSurface
    apex: int
    apex_curvature: float


def cone_shape(surface: IntrinsicSurface, h1: int, h2: int) -> ConeShaping:
    """Cut along the edge h1 h2 and glue in the doubled triangle whose base
    angles are half the curvatures at h1 and h2.

    The cut runs along an existing edge of the triangulation, which is a
    geodesic segment of the surface."""
    k1, k2 = surface.curvature(h1), surface.curvature(h2)
    if k1 + k2 >= TWO_PI:
        raise SurfaceError("curvature sum must stay below 2π")
    side = None
    for t, tri in enumerate(surface.triangles):
        for k in range(3):
            if tri[k] == h1 and tri[(k + 1) % 3] == h2:
                side = (t, k)
    if side is None or side not in surface.twins:
        raise SurfaceError(f"no geodesic edge joins {h1} and {h2}")
    other = surface.twins[side]
    L = surface.lengths[side[0]][side[1]]
    gam = math.pi - (k1 + k2) / 2
    s1 = L * math.sin(k2 / 2) / math.sin(gam)  # |h1 a|
    s2 = L * math.sin(k1 / 2) / math.sin(gam)  # |h2 a|
    a = surface.n_vertices
    tris = list(surface.triangles) + [(h2, h1, a), (h1, h2, a)]
    lengths = list(surface.lengths) + [(L, s1, s2), (L, s2, s1)]
    tA, tB = len(tris) - 2, len(tris) - 1
    twins = dict(surface.twins)
    twins[side] = (tA, 0)
    twins[(tA, 0)] = side
    twins[other] = (tB, 0)
    twins[(tB, 0)] = other
    # A: h2->h1, h1->a, a->h2 ; B: h1->h2, h2->a, a->h1
    twins[(tA, 1)] = (tB, 2)
    twins[(tB, 2)] = (tA, 1)
    twins[(tA, 2)] = (tB, 1)
    twins[(tB, 1)] = (tA, 2)
    names = dict(surface.names)
    names[a] = f"cone({names.get(h1, h1)},{names.get(h2, h2)})"
    out = IntrinsicSurface(tris, lengths, twins, a + 1, names)
    return ConeShaping(out, a, out.curvature(a))


# --- gadget splicing ---------------------------------------------------------------------------

@dataclass
class GadgetSplice:
    surface: IntrinsicSurface
    vertex: int
    beta: float
    scale: float
    cap: Cap
    zone_partition: Partition
    rim: list[int]  # new vertex ids of the cap boundary corners
    apexes: list[int]  # new vertex ids of the curved cap vertices
    collar: list[int]  # triangle ids of the collar
    clearance: float  # distance from the rim to the link of the replaced vertex


def _closing_center(points: np.ndarray, heading_end: float) -> np.ndarray:
    """Fixed point of the rotation by heading_end taking the start frame to the end frame."""
    R = np.array([[math.cos(heading_end), -math.sin(heading_end)],
                  [math.sin(heading_end), math.cos(heading_end)]])
    return np.linalg.solve(np.eye(2) - R, points[-1] - R @ points[0])


def _cone_dist(r1: float, f1: float, r2: float, f2: float) -> float:
    d = abs(f1 - f2)
    if d >= math.pi:
        raise SurfaceError("collar triangle spans more than a half turn")
    return math.sqrt(max(r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(d), 0.0))


def replace_vertex_with_gadget(surface: IntrinsicSurface, v: int, gadget: Partition,
                               tol: float = 1e-8) -> GadgetSplice:
    """Replace a neighbourhood of the cone vertex v by the cap of the gadget with
    curvature curv(v), scaled below (r/3)·cos(γ/2) and joined by a collar."""
    kappa = surface.curvature(v)
    if not 0 < kappa < TWO_PI:
        raise SurfaceError(f"vertex {v} has curvature {kappa}, outside (0, 2π)")
    star = surface.star(v)
    # develop the star in cone coordinates around v
    link, rho, phi, thetas = [], [], [], []
    acc = 0.0
    for t, k in star:
        tri = surface.triangles[t]
        link.append(tri[(k + 1) % 3])
        rho.append(surface.lengths[t][k])
        phi.append(acc)
        th = surface.angle(t, k)
        thetas.append(th)
        acc += th
    Theta = acc
    r = min(rho)
    gamma = min(thetas)
    if max(thetas) >= math.pi:
        raise SurfaceError("star angle of π or more at the replaced vertex")
    try:
        cap = solve_cap(gadget.to_ip(), kappa, tol)
    except CapError as exc:
        raise SurfaceError(f"gadget cap does not solve at curvature {kappa:.6g}: {exc}") from None
    nb = cap.n_boundary
    Q = cap.points[:nb]
    side = [float(np.linalg.norm(Q[(j + 1) % nb] - Q[j])) for j in range(nb)]
    tau = [boundary_turning(cap, j) for j in range(nb)]
    if min(tau) <= 0:
        raise SurfaceError("gadget cap has a non-convex boundary corner")
    # walk the cap boundary in the plane, turning left by the geodesic turning
    pts = [np.zeros(2)]
    head = 0.0
    for j in range(nb):
        pts.append(pts[-1] + side[j] * np.array([math.cos(head), math.sin(head)]))
        head += tau[(j + 1) % nb]
    pts = np.array(pts)
    c = _closing_center(pts, head - TWO_PI)
    rel = pts[:nb] - c
    R0 = np.hypot(rel[:, 0], rel[:, 1])
    ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    ang = ang - ang[0]
    # the link polygon's distance from v bounds the room for the gadget
    link_clear = min(rho[i] * rho[(i + 1) % len(rho)] * math.sin(thetas[i]) /
                     _cone_dist(rho[i], 0.0, rho[(i + 1) % len(rho)], thetas[i]) for i in range(len(rho)))
    bound = (r / 3) * math.cos(gamma / 2)
    scale = bound / float(R0.max())
    rim_r = R0 * scale
    rim_f = ang + 0.5 * thetas[0]  # rotate the rim so no rim vertex sits on a seam ray
    # new vertices
    n0 = surface.n_vertices
    cap_ids = list(range(n0, n0 + len(cap.points)))
    rim_ids = cap_ids[:nb]
    apex_ids = cap_ids[nb:]
    keep = [t for t, tri in enumerate(surface.triangles) if v not in tri]
    old_to_new = {t: i for i, t in enumerate(keep)}
    tris = [surface.triangles[t] for t in keep]
    lengths = [surface.lengths[t] for t in keep]
    twins: dict[Side, Side] = {}
    for (t, k), (t2, k2) in surface.twins.items():
        if t in old_to_new and t2 in old_to_new:
            twins[(old_to_new[t], k)] = (old_to_new[t2], k2)
    # cap triangles, scaled
    X = cap.xyz * scale
    cap_start = len(tris)
    side_where: dict[tuple[int, int], Side] = {}
    for tri in cap.triangles:
        ids = tuple(cap_ids[i] for i in tri)
        Ls = tuple(float(np.linalg.norm(X[tri[(k + 1) % 3]] - X[tri[k]])) for k in range(3))
        tris.append(ids)
        lengths.append(Ls)
    for t in range(cap_start, len(tris)):
        for k in range(3):
            side_where[(tris[t][k], tris[t][(k + 1) % 3])] = (t, k)
    for (a, b), s in list(side_where.items()):
        if (b, a) in side_where:
            twins[s] = side_where[(b, a)]
    # collar between the link (outer) and the rim (inner), merged by angle
    outer = [(link[i], rho[i], phi[i]) for i in range(len(link))]
    inner = [(rim_ids[j], float(rim_r[j]), float(rim_f[j])) for j in range(nb)]
    collar_start = len(tris)
    i = j = 0
    steps = 0
    while i < len(outer) or j < len(inner):
        a_i = outer[i % len(outer)]
        a_n = outer[(i + 1) % len(outer)]
        b_j = inner[j % len(inner)]
        b_n = inner[(j + 1) % len(inner)]
        fa = a_n[2] + (Theta if i + 1 >= len(outer) else 0.0)
        fb = b_n[2] + (Theta if j + 1 >= len(inner) else 0.0)
        fa_i = a_i[2] + (Theta if i >= len(outer) else 0.0)
        fb_j = b_j[2] + (Theta if j >= len(inner) else 0.0)
        if j >= len(inner) or (i < len(outer) and fa <= fb):
            # triangle (a_i, b_j, a_next)? keep counterclockwise: outer ring is farther out
            tri = (a_i[0], b_j[0], a_n[0])
            L = (_cone_dist(a_i[1], fa_i, b_j[1], fb_j), _cone_dist(b_j[1], fb_j, a_n[1], fa),
                 _cone_dist(a_n[1], fa, a_i[1], fa_i))
            i += 1
        else:
            tri = (a_i[0], b_j[0], b_n[0])
            L = (_cone_dist(a_i[1], fa_i, b_j[1], fb_j), _cone_dist(b_j[1], fb_j, b_n[1], fb),
                 _cone_dist(b_n[1], fb, a_i[1], fa_i))
            j += 1
        tris.append(tri)
        lengths.append(L)
        steps += 1
        if steps > 4 * (len(outer) + len(inner)):
            raise SurfaceError("collar merge did not terminate")
    # orientation: in cone coordinates the outer ring lies farther from v, so
    # (a_i, b_j, a_next) runs clockwise; flip every collar triangle
    for t in range(collar_start, len(tris)):
        a, b, cc = tris[t]
        L = lengths[t]
        tris[t] = (a, cc, b)
        lengths[t] = (L[2], L[1], L[0])
    where: dict[tuple[int, int], Side] = {}
    for t in range(len(tris)):
        for k in range(3):
            where.setdefault((tris[t][k], tris[t][(k + 1) % 3]), (t, k))
    for t in range(collar_start, len(tris)):
        for k in range(3):
            a, b = tris[t][k], tris[t][(k + 1) % 3]
            if (b, a) in where:
                s, u = (t, k), where[(b, a)]
                twins[s] = u
                twins[u] = s
    names = dict(surface.names)
    for j, idx in enumerate(rim_ids):
        names[idx] = f"{names.get(v, v)}.q{j}"
    for j, idx in enumerate(apex_ids):
        names[idx] = f"{names.get(v, v)}.p{j}"
    out = IntrinsicSurface(tris, lengths, twins, n0 + len(cap.points), names)
    probs = out.problems(1e-7)
    if probs:
        raise SurfaceError("splice failed: " + probs[0])
    return GadgetSplice(out, v, kappa, scale, cap, gadget, rim_ids, apex_ids,
                        list(range(collar_start, len(tris))), link_clear - bound)


# --- zero-curvature perturbation ----------------------------------------------------------------

@dataclass
class Perturbation:
    vertices: np.ndarray
    curvatures: np.ndarray
    epsilon: float
    ok: bool
    problems: list[str]


def _hull_curvatures(V: np.ndarray) -> tuple[np.ndarray, set[tuple[int, int]], set[int]]:
    hull = ConvexHull(V)
    sums = np.zeros(len(V))
    edges = set()
    verts = set(int(x) for x in hull.vertices)
    for simplex, eq in zip(hull.simplices, hull.equations):
        a, b, c = (int(x) for x in simplex)
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            u, w = V[y] - V[x], V[z] - V[x]
            sums[x] += math.atan2(float(np.linalg.norm(np.cross(u, w))), float(np.dot(u, w)))
        for x, y in ((a, b), (b, c), (c, a)):
            edges.add((min(x, y), max(x, y)))
    # coplanar facets show up as extra triangulation edges; keep only true
    # edges, where the two facet normals differ
    return TWO_PI - sums, edges, verts


def perturb_zero_curvature(V: np.ndarray, faces: Sequence[Sequence[int]], marked: dict[int, int],
                           epsilon: float) -> Perturbation:
    """Lift each marked flat vertex, lying inside face marked[v], along the
    face normal by ε (d² − r²): d is the face's circumradius about its vertex
    centroid and r the vertex's distance from that centroid."""
    V = np.asarray(V, dtype=float).copy()
    out = V.copy()
    for v, f in sorted(marked.items()):
        cyc = list(faces[f])
        P = V[cyc]
        o = P.mean(axis=0)
        n = np.cross(P[1] - P[0], P[2] - P[0])
        n /= np.linalg.norm(n)
        d = float(np.max(np.linalg.norm(P - o, axis=1)))
        r = float(np.linalg.norm(V[v] - o))
        if r >= d:
            raise SurfaceError(f"marked vertex {v} lies outside its face")
        out[v] = V[v] + epsilon * (d * d - r * r) * n
    curv, edges, verts = _hull_curvatures(out)
    probs = []
    missing = sorted(set(range(len(V))) - verts)
    if missing:
        probs.append(f"vertices {missing[:5]} left the hull; use a smaller epsilon")
    for f, cyc in enumerate(faces):
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            if (min(a, b), max(a, b)) not in edges:
                probs.append(f"face edge ({a}, {b}) of face {f} disappeared; use a smaller epsilon")
    flat = [v for v in range(len(V)) if v in verts and curv[v] <= 1e-12]
    if flat:
        probs.append(f"vertices {flat[:5]} still have zero curvature")
    return Perturbation(out, curv, epsilon, not probs, probs)


def perturbation_threshold(V, faces, marked, start: float = 1.0, halvings: int = 60) -> float:
    """Largest ε = start / 2^k that preserves the combinatorics."""
    eps = start
    for _ in range(halvings):
        if perturb_zero_curvature(V, faces, marked, eps).ok:
            return eps
        eps /= 2
    return 0.0


# --- graphs ---------------------------------------------------------------------------------------

def dumps_graph(g: nx.Graph, comment: str = "") -> str:
    lines = ["GRAPH v1"]
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    n = g.number_of_nodes()
    if sorted(g.nodes()) != list(range(n)):
        raise ValueError("graph vertices must be 0..n-1")
    es = sorted((min(u, v), max(u, v)) for u, v in g.edges())
    lines += [f"VERTICES {n}", f"EDGES {len(es)}"] + [f"{u} {v}" for u, v in es] + ["END"]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> nx.Graph:
    rows = []
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((no, s))
    if not rows or rows[0][1] != "GRAPH v1":
        raise ParseError(rows[0][0] if rows else 1, "missing header 'GRAPH v1'")
    try:
        n = int(rows[1][1].split()[1]) if rows[1][1].startswith("VERTICES") else None
        m = int(rows[2][1].split()[1]) if rows[2][1].startswith("EDGES") else None
    except (IndexError, ValueError):
        raise ParseError(rows[min(1, len(rows) - 1)][0], "expected VERTICES and EDGES counts") from None
    if n is None or m is None:
        raise ParseError(rows[1][0], "expected VERTICES and EDGES counts")
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for no, s in rows[3:3 + m]:
        parts = s.split()
        try:
            u, v = int(parts[0]), int(parts[1])
        except (IndexError, ValueError):
            raise ParseError(no, "expected an edge 'u v'") from None
        if len(parts) != 2 or not (0 <= u < n and 0 <= v < n) or u == v:
            raise ParseError(no, f"bad edge '{s}'")
        g.add_edge(u, v)
    if len(rows) < 4 + m or rows[3 + m][1] != "END":
        raise ParseError(rows[-1][0], "truncated edge list or missing END")
    if g.number_of_edges() != m:
        raise ParseError(rows[2][0], "duplicate edges")
    return g


def load_graph(path) -> nx.Graph:
    with open(path, encoding="utf-8") as fh:
        return loads_graph(fh.read())


def save_graph(g: nx.Graph, path, comment: str = "") -> None:
    atomic_write(path, dumps_graph(g, comment))


def tutte_graph() -> nx.Graph:
    text = resources.files("pseudonet").joinpath("data/tutte.graph").read_text(encoding="utf-8")
    return loads_graph(text)


@dataclass
class HamiltonResult:
    exists: bool
    cycle: list[int] | None
    nodes: int  # search nodes visited

    def check(self, g: nx.Graph) -> bool:
        c = self.cycle
        if c is None:
            return False
        return (len(c) == g.number_of_nodes() and len(set(c)) == len(c)
                and all(g.has_edge(c[i], c[(i + 1) % len(c)]) for i in range(len(c))))


def hamiltonian_path_exists(g: nx.Graph, start, end=None, budget: int = 50_000_000,
                            closing: bool = False) -> HamiltonResult:
    """Backtracking search for a Hamiltonian path from start (to end, if given).

    With ``closing`` the path must end next to start, giving a cycle.
    Pruning: every unvisited vertex keeps two usable neighbours (one if it is
    the required end), and the unvisited part stays connected to the path's tip."""
    nodes = sorted(g.nodes())
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    adj = [0] * n
    for u, v in g.edges():
        adj[idx[u]] |= 1 << idx[v]
        adj[idx[v]] |= 1 << idx[u]
    s = idx[start]
    e = idx[end] if end is not None else None
    full = (1 << n) - 1
    count = 0
    path = [s]

    def feasible(visited: int, tip: int) -> bool:
        free = full & ~visited
        if not free:
            return True
        ends = (1 << tip) | ((1 << s) if closing else 0)
        m = free
        while m:
            low = m & -m
            i = low.bit_length() - 1
            m ^= low
            deg = bin(adj[i] & (free | ends)).count("1")
            need = 1 if (e is not None and i == e) else 2
            if deg < need:
                return False
        # connectivity of the free vertices through the tip
        seen = 1 << tip
        frontier = seen
        while frontier:
            nxt = 0
            m = frontier
            while m:
                low = m & -m
                i = low.bit_length() - 1
                m ^= low
                nxt |= adj[i] & free
            nxt &= ~seen
            seen |= nxt
            frontier = nxt
        return (seen & free) == free

    def rec(visited: int, tip: int) -> bool:
        nonlocal count
        count += 1
        if count > budget:
            raise HamiltonBudgetError(f"search budget of {budget} nodes exceeded")
        if visited == full:
            if closing:
                return bool(adj[tip] >> s & 1)
            return e is None or tip == e
        cand = adj[tip] & ~visited
        # try the most constrained neighbour first
        order = []
        m = cand
        while m:
            low = m & -m
            i = low.bit_length() - 1
            m ^= low
            if e is not None and i == e and (visited | low) != full:
                continue
            order.append((bin(adj[i] & ~visited).count("1"), i))
        for _, i in sorted(order):
            nv = visited | (1 << i)
            if feasible(nv, i):
                path.append(i)
                if rec(nv, i):
                    return True
                path.pop()
        return False

    ok = feasible(1 << s, s) and rec(1 << s, s)
    return HamiltonResult(ok, [nodes[i] for i in path] if ok else None, count)


def hamiltonian_cycle_exists(g: nx.Graph, budget: int = 50_000_000) -> HamiltonResult:
    if g.number_of_nodes() < 3:
        return HamiltonResult(False, None, 0)
    if not nx.is_connected(g):
        return HamiltonResult(False, None, 0)
    start = min(g.nodes(), key=lambda v: (g.degree(v), v))
    return hamiltonian_path_exists(g, start, budget=budget, closing=True)


# --- the contraction arguments ---------------------------------------------------------------------

@dataclass
class ZoneCertificate:
    """What the cut calculus guarantees inside one gadget zone: every cut
    restricted to the zone is connected and reaches the zone border in at
    least two points (it has B-edges)."""
    zone: object
    connected: bool
    reaches_border_twice: bool


@dataclass
class VertexLedger:
    claimed: int
    gadget_vertices: int
    gadgets: int
    special: int

    @property
    def actual(self) -> int:
        return self.special + self.gadgets * self.gadget_vertices

    @property
    def delta(self) -> int:
        return self.actual - self.claimed

    def render(self) -> str:
        return (f"vertex ledger: claimed 2 + 43*442 = {self.claimed}; built {self.special} + {self.gadgets}*"
                f"{self.gadget_vertices} = {self.actual}; delta {self.delta:+d}")


@dataclass
class ArgumentReport:
    name: str
    passed: bool
    steps: list[tuple[str, bool, str]]
    ledger: VertexLedger | None = None

    def render(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for what, ok, detail in self.steps:
            lines.append(f"  {'PASS' if ok else 'FAIL'} {what}" + (f": {detail}" if detail else ""))
        if self.ledger is not None:
            lines.append("  " + self.ledger.render())
        return "\n".join(lines) + "\n"


@dataclass
class NeedleSpec:
    host: nx.Graph
    h1: int
    h2: int
    gadget_vertices: int
    certificates: dict[int, ZoneCertificate]


def verify_needle_argument(spec: NeedleSpec, hamilton_budget: int = 50_000_000) -> ArgumentReport:
    """Replay: every zone contracts to a vertex of degree >= 2 in G'', so the
    acyclic G'' is a path whose ends are h1 and h2 and which visits every
    vertex.  With the edge h1 h2 this closes a Hamiltonian cycle of the host.
    The argument succeeds iff the host has no such cycle."""
    g = spec.host
    steps = []
    ok_edge = g.has_edge(spec.h1, spec.h2)
    steps.append(("h1 h2 is an edge of the host", ok_edge, f"h1={spec.h1}, h2={spec.h2}"))
    zones = [v for v in sorted(g.nodes()) if v not in (spec.h1, spec.h2)]
    missing = [v for v in zones if v not in spec.certificates]
    if missing:
        raise ValueError(f"missing connectivity certificate for zone {missing[0]}")
    bad = [v for v in zones if not (spec.certificates[v].connected and spec.certificates[v].reaches_border_twice)]
    steps.append(("each zone contracts to a vertex of degree >= 2", not bad,
                  f"{len(zones)} zones" + (f", failing {bad[:5]}" if bad else "")))
    steps.append(("an acyclic G'' with all degrees >= 2 except h1, h2 is a Hamiltonian path h1 -> h2",
                  True, "a tree has at least two leaves, and only h1, h2 may be leaves"))
    path = hamiltonian_path_exists(g, spec.h1, spec.h2, budget=hamilton_budget)
    steps.append(("no Hamiltonian path from h1 to h2 in the host", not path.exists,
                  f"search nodes {path.nodes}" + (f", found {path.cycle}" if path.exists else "")))
    cyc = hamiltonian_cycle_exists(g, budget=hamilton_budget)
    steps.append(("host has no Hamiltonian cycle", not cyc.exists,
                  f"search nodes {cyc.nodes}" + (f", certificate {cyc.cycle}" if cyc.exists else "")))
    passed = ok_edge and not bad and not path.exists
    ledger = VertexLedger(2 + 43 * 442, spec.gadget_vertices, len(zones), 2)
    return ArgumentReport("needle argument", passed, steps, ledger)


@dataclass
class MainSpec:
    host: nx.Graph
    replaced: set[int]
    certificates: dict[int, ZoneCertificate]


def verify_main_argument(spec: MainSpec) -> ArgumentReport:
    """Replay: after pruning edges that only separate zero-curvature parts,
    every fragment contracts to a vertex of degree >= 2 in G''; a finite
    graph with all degrees >= 2 has a cycle, so no cut tree exists and no
    L-unfolding avoids overlap."""
    g = spec.host
    steps = []
    missing = sorted(set(g.nodes()) - set(spec.replaced))
    steps.append(("every curved host vertex is replaced by a gadget", not missing,
                  f"{len(spec.replaced)} fragments" + (f", not replaced {missing[:5]}" if missing else "")))
    absent = [v for v in sorted(spec.replaced) if v not in spec.certificates]
    if absent:
        raise ValueError(f"missing certificate for fragment {absent[0]}")
    bad = [v for v in sorted(spec.replaced)
           if not (spec.certificates[v].connected and spec.certificates[v].reaches_border_twice)]
    steps.append(("each fragment F_i is connected with a non-empty B-part", not bad,
                  f"failing {bad[:5]}" if bad else ""))
    degree_ok = not missing and not bad
    steps.append(("every vertex of G'' has degree >= 2", degree_ok,
                  "" if degree_ok else "the degree bound fails at an unreplaced vertex"))
    cyc_ok = False
    if degree_ok:
        # constructive: walking from any vertex without backtracking must
        # revisit a vertex when every degree is at least two
        cyc_ok = _min_degree_two_has_cycle(g)
    steps.append(("G'' contains a cycle, contradicting acyclicity of the cut", cyc_ok, ""))
    return ArgumentReport("main argument", degree_ok and cyc_ok, steps)


def _min_degree_two_has_cycle(g: nx.Graph) -> bool:
    if g.number_of_nodes() == 0 or min(d for _, d in g.degree()) < 2:
        return False
    v = min(g.nodes())
    prev = None
    seen = {v: 0}
    walk = [v]
    while True:
        nxt = next(w for w in sorted(g.neighbors(v)) if w != prev)
        if nxt in seen:
            cyc = walk[seen[nxt]:]
            return len(cyc) >= 3 and all(g.has_edge(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc)))
        seen[nxt] = len(walk)
        walk.append(nxt)
        prev, v = v, nxt


def prism_graph(N: int) -> nx.Graph:
    return build_prism_host(N).graph


def zone_certificates(vertices: Iterable[int], certificate) -> dict[int, ZoneCertificate]:
    """Every zone is a copy of the same gadget, so one guided-search
    certificate covers all of them."""
    ok_c = bool(certificate.connects_centers)
    ok_b = bool(certificate.gb_nonempty)
    return {v: ZoneCertificate(v, ok_c, ok_b) for v in vertices}


@dataclass
class Assembly:
    surface: IntrinsicSurface
    splices: list[GadgetSplice]
    skipped: list[int]

    def render(self) -> str:
        curv = self.surface.curvatures()
        lines = [f"assembly: {len(self.splices)} gadgets, {len(self.skipped)} vertices kept",
                 f"  triangles {len(self.surface.triangles)}, closed {self.surface.is_closed()}",
                 f"  total curvature / pi = {self.surface.total_curvature() / math.pi:.12f}"]
        for sp in self.splices:
            rim = max(abs(curv[i]) for i in sp.rim)
            lines.append(f"  vertex {sp.vertex}: beta {sp.beta:.12f} scale {sp.scale:.6e} "
                         f"rim curvature {rim:.1e} clearance {sp.clearance:.6f}")
        return "\n".join(lines) + "\n"


def assemble(surface: IntrinsicSurface, gadget: Partition, vertices: Iterable[int],
             skip: Iterable[int] = (), tol: float = 1e-8) -> Assembly:
    """Replace each listed vertex (except those in skip) by a scaled gadget cap."""
    skip = sorted(set(skip))
    splices = []
    s = surface
    for v in vertices:
        if v in skip:
            continue
        sp = replace_vertex_with_gadget(s, v, gadget, tol)
        splices.append(sp)
        s = sp.surface
    return Assembly(s, splices, skip)
