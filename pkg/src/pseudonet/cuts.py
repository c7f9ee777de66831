"""Cuts of a convex partition: A/B edges, streams, admissibility, search.

A cut is a set of skeleton edges off the boundary that is acyclic, contains
every weighted vertex and is connected to the boundary together with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import networkx as nx

from .geom import ETA, Vec2
from .partition import Partition


class CutError(ValueError):
    pass


class CutBudgetError(RuntimeError):
    def __init__(self, msg: str, partial: int):
        super().__init__(f"{msg} (partial count {partial})")
        self.partial = partial


Edge = tuple[int, int]


def _e(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Cut:
    partition: Partition
    edges: frozenset[Edge]

    @classmethod
    def of(cls, partition: Partition, edges, check: bool = True) -> "Cut":
        cut = cls(partition, frozenset(_e(int(u), int(v)) for u, v in edges))
        if check:
            probs = cut_problems(cut)
            if probs:
                raise CutError("; ".join(probs))
        return cut

    def vertices(self) -> set[int]:
        return {x for e in self.edges for x in e}

    def key(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))


def cut_problems(cut: Cut) -> list[str]:
    p = cut.partition
    out = []
    bedges = p.boundary_edges()
    for e in sorted(cut.edges):
        if not p.has_edge(*e):
            out.append(f"edge {e} is not a skeleton edge")
        elif e in bedges:
            out.append(f"edge {e} lies on the boundary")
    if out:
        return out
    verts = cut.vertices()
    for v in p.weighted_vertices():
        if v not in verts:
            out.append(f"weighted vertex {p.name(v)} not in the cut")
    g = nx.Graph()
    g.add_edges_from(cut.edges)
    if g.number_of_edges() and not nx.is_forest(g):
        out.append("cut contains a cycle")
    h = nx.Graph(g)
    h.add_edges_from(bedges)
    if h.number_of_nodes() and not nx.is_connected(h):
        out.append("cut together with the boundary is disconnected")
    return out


@dataclass
class CutDecomposition:
    cut: Cut
    a_edges: frozenset[Edge]
    b_edges: frozenset[Edge]
    downstream: dict[int, int]  # vertex of G_A (not an outfall) -> next vertex downstream
    outfalls: dict[int, int]  # vertex -> outfall of its A-tree
    upstream_weighted: dict[int, frozenset[int]]  # vertex -> weighted vertices upstream (inclusive)

    def orientation(self, e: Edge) -> tuple[int, int]:
        """(upper, lower) of an A-edge."""
        u, v = e
        if self.downstream.get(u) == v:
            return u, v
        if self.downstream.get(v) == u:
            return v, u
        raise CutError(f"edge {e} is not an A-edge")

    def oriented_a_edges(self) -> list[tuple[int, int]]:
        return sorted(self.orientation(e) for e in self.a_edges)


def decompose(cut: Cut) -> CutDecomposition:
    probs = cut_problems(cut)
    if probs:
        raise CutError("; ".join(probs))
    p = cut.partition
    bverts = p.boundary_vertices()
    adj: dict[int, set[int]] = {}
    for u, v in cut.edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    # B-edges: the subtree of each G-component spanned by its boundary vertices
    deg = {v: len(n) for v, n in adj.items()}
    alive = {v: set(n) for v, n in adj.items()}
    stack = [v for v in adj if deg[v] == 1 and v not in bverts]
    removed: set[int] = set()
    while stack:
        v = stack.pop()
        if v in removed:
            continue
        removed.add(v)
        for w in alive[v]:
            alive[w].discard(v)
            if len(alive[w]) == 1 and w not in bverts and w not in removed:
                stack.append(w)
        alive[v] = set()
    core_edges = {_e(u, v) for u in alive for v in alive[u]}
    # a component with a single boundary vertex keeps no B-edge
    b_edges = frozenset(core_edges)
    a_edges = frozenset(cut.edges - b_edges)
    roots = ({x for e in b_edges for x in e} | (set(adj) & bverts))
    downstream: dict[int, int] = {}
    outfalls: dict[int, int] = {}
    order: list[int] = []
    for r in sorted(roots):
        outfalls[r] = r
        frontier = [r]
        while frontier:
            v = frontier.pop()
            order.append(v)
            for w in sorted(adj.get(v, ())):
                if _e(v, w) in a_edges and w not in outfalls:
                    downstream[w] = v
                    outfalls[w] = r
                    frontier.append(w)
    up: dict[int, set[int]] = {v: ({v} if p.weights[v] > 0 else set()) for v in order}
    for v in reversed(order):
        d = downstream.get(v)
        if d is not None:
            up[d] |= up[v]
    return CutDecomposition(cut, a_edges, b_edges, downstream, outfalls,
                            {v: frozenset(s) for v, s in up.items()})


def upstream_set(decomp: CutDecomposition, x) -> frozenset[int]:
    """Weighted vertices upstream of a vertex id or of an edge point ``(u, v, t)``."""
    if isinstance(x, tuple):
        u, v = x[0], x[1]
        e = _e(u, v)
        if e in decomp.b_edges:
            raise CutError("the upstream order is undefined on B-edges")
        upper, _ = decomp.orientation(e)
        return decomp.upstream_weighted[upper]
    if x not in decomp.upstream_weighted:
        raise CutError(f"vertex {x} is not on the cut")
    if x in decomp.outfalls and decomp.outfalls[x] == x and any(
            e in decomp.b_edges for e in decomp.cut.edges if x in e):
        # an outfall on G_B: only the hanging A-trees are upstream
        return decomp.upstream_weighted[x]
    return decomp.upstream_weighted[x]


@dataclass(frozen=True)
class StreamData:
    point: Vec2
    alpha: float
    center: Vec2 | None
    stream: Vec2

    @property
    def has_stream(self) -> bool:
        return self.alpha > 0


def barycenter(p: Partition, verts) -> tuple[float, Vec2 | None]:
    vs = sorted(verts)
    alpha = math.fsum(p.weights[v] for v in vs)
    if alpha == 0:
        return 0.0, None
    if len(vs) == 1:
        return alpha, p.vertices[vs[0]]
    cx = math.fsum(p.weights[v] * p.vertices[v].x for v in vs) / alpha
    cy = math.fsum(p.weights[v] * p.vertices[v].y for v in vs) / alpha
    return alpha, Vec2(cx, cy)


def stream_at(decomp: CutDecomposition, x) -> StreamData:
    p = decomp.cut.partition
    ups = upstream_set(decomp, x)
    if isinstance(x, tuple):
        u, v, t = x
        pt = p.vertices[u] + (p.vertices[v] - p.vertices[u]) * t
    else:
        pt = p.vertices[x]
    alpha, c = barycenter(p, ups)
    if c is None:
        return StreamData(pt, 0.0, None, Vec2(0.0, 0.0))
    return StreamData(pt, alpha, c, (pt - c) * alpha)


@dataclass
class AdmissibilityReport:
    margin_per_edge: dict[tuple[int, int], float]  # oriented (upper, lower) -> margin
    l_G: float
    violating_edges: list[tuple[int, int]]
    marginal_edges: list[tuple[int, int]]
    sourced_edges: list[tuple[int, int]]  # edges leaving their own rotation center

    @property
    def admissible(self) -> bool:
        return not self.violating_edges

    @property
    def robustly_admissible(self) -> bool:
        return not self.violating_edges and not self.marginal_edges

    def worst_edge(self) -> tuple[int, int] | None:
        if not self.margin_per_edge:
            return None
        return min(sorted(self.margin_per_edge), key=lambda e: self.margin_per_edge[e])


def admissibility(decomp: CutDecomposition, eta: float = ETA) -> AdmissibilityReport:
    """Admissibility (the outward rotation margin) on every stream-bearing A-edge.

    Along an edge the rotation center is fixed and the margin
    <x - c, e>/|e| grows affinely toward the lower end, so the upper endpoint
    governs; both ends are evaluated and the smaller value is kept."""
    p = decomp.cut.partition
    margins: dict[tuple[int, int], float] = {}
    violating, marginal, sourced = [], [], []
    for upper, lower in decomp.oriented_a_edges():
        alpha, c = barycenter(p, decomp.upstream_weighted[upper])
        if c is None:
            continue
        U, W = p.vertices[upper], p.vertices[lower]
        d = W - U
        L = d.norm()
        m_up = (U - c).dot(d) / L
        m_lo = (W - c).dot(d) / L
        m = min(m_up, m_lo)
        key = (upper, lower)
        if (U - c).norm() <= eta:
            m = 0.0
            sourced.append(key)
        margins[key] = m
        if m < 0:
            violating.append(key)
        if abs(m) < eta and key not in sourced:
            marginal.append(key)
    worst = max((-m for m in margins.values()), default=0.0)
    return AdmissibilityReport(margins, max(0.0, worst), violating, marginal, sourced)


# --- enumeration -------------------------------------------------------------------

def _interior_edges(p: Partition) -> list[Edge]:
    b = p.boundary_edges()
    return [e for e in p.edges if e not in b]


def enumerate_cuts(partition: Partition, budget: int = 1_000_000, gb_empty: bool = False,
                   pruned: bool = True) -> Iterator[Cut]:
    """All cuts of the partition, each exactly once, in a deterministic order.

    With ``pruned`` (default) only cuts without idle parts are produced: every
    leaf of the cut off the boundary is weighted and every component of the
    cut contains a weighted vertex.  Dropping idle parts keeps a cut valid and
    never changes its admissibility.  ``gb_empty`` keeps
    only cuts without B-edges.  ``budget`` bounds the number of search nodes.
    """
    p = partition
    bverts = p.boundary_vertices()
    R = -1  # the contracted boundary
    edges = _interior_edges(p)

    def node(v):
        return R if v in bverts else v

    inc: dict[int, list[int]] = {}
    for i, (u, v) in enumerate(edges):
        inc.setdefault(node(u), []).append(i)
        if node(v) != node(u):
            inc.setdefault(node(v), []).append(i)
    weighted = set(p.weighted_vertices())
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    state = {"nodes": 0, "count": 0}
    chosen: list[int] = []
    decided: set[int] = set()
    reached: set[int] = {R}

    def accept():
        vs = {x for i in chosen for x in edges[i]}
        if not weighted <= vs:
            return False
        if pruned:
            deg: dict[int, int] = {}
            for i in chosen:
                for x in edges[i]:
                    deg[x] = deg.get(x, 0) + 1
            for x, d in deg.items():
                if d == 1 and x not in bverts and x not in weighted:
                    return False
            # every component of the cut serves some weighted vertex
            comp = {x: x for x in deg}

            def root(x):
                while comp[x] != x:
                    comp[x] = comp[comp[x]]
                    x = comp[x]
                return x

            for i in chosen:
                a, b = edges[i]
                comp[root(a)] = root(b)
            served = {root(x) for x in weighted}
            if any(root(x) not in served for x in deg):
                return False
        return True

    def rec(frontier: list[int]):
        state["nodes"] += 1
        if state["nodes"] > budget:
            raise CutBudgetError("search budget exceeded", state["count"])
        while frontier and frontier[0] in decided:
            frontier = frontier[1:]
        if not frontier:
            if accept():
                state["count"] += 1
                yield Cut(p, frozenset(edges[i] for i in chosen))
            return
        i, rest = frontier[0], frontier[1:]
        decided.add(i)
        # branch 1: exclude
        yield from rec(rest)
        # branch 2: include
        u, v = edges[i]
        nu, nv = node(u), node(v)
        ok = True
        if gb_empty and ((nu in reached and nv in reached) or nu == nv):
            ok = False
        ru, rv = find(u), find(v)
        if ru == rv:
            ok = False
        if ok:
            saved = dict(parent)
            parent[ru] = rv
            chosen.append(i)
            new = [x for x in (nu, nv) if x not in reached]
            for x in new:
                reached.add(x)
            extra = [j for x in new for j in inc.get(x, []) if j not in decided]
            yield from rec(rest + sorted(set(extra)))
            for x in new:
                reached.discard(x)
            chosen.pop()
            parent.clear()
            parent.update(saved)
        decided.discard(i)

    yield from rec(sorted(inc.get(R, [])))


@dataclass(frozen=True)
class LValue:
    value: float
    vacuous: bool
    cuts: int
    argmin: tuple[Edge, ...] | None

    def __float__(self) -> float:
        return self.value


def compute_l_of_L(partition: Partition, budget: int = 1_000_000) -> LValue:
    """min over cuts without B-edges of l(G); ``vacuous`` when no such cut exists."""
    best, arg, n = math.inf, None, 0
    for cut in enumerate_cuts(partition, budget, gb_empty=True):
        n += 1
        rep = admissibility(decompose(cut))
        if rep.l_G < best:
            best, arg = rep.l_G, cut.key()
    if n == 0:
        return LValue(math.inf, True, 0, None)
    return LValue(best, False, n, arg)


# --- guided search on the gadget -------------------------------------------------------

@dataclass
class ForcedPath:
    center: str
    vertices: list[int]
    names: list[str]
    end: str  # "boundary" | "collision" | "ambiguous" | "dead-end"
    margins: list[float]

    def render(self) -> str:
        return " ".join(self.names)


@dataclass
class CaseResult:
    name: str
    passed: bool
    detail: str


@dataclass
class NonAdmissibilityCertificate:
    paths: dict[str, ForcedPath]
    cases: list[CaseResult]
    table_ok: bool
    notes: list[str] = field(default_factory=list)

    @property
    def gb_nonempty(self) -> bool:
        return all(c.passed for c in self.cases if c.name.startswith(("case-1", "case-3")))

    @property
    def connects_centers(self) -> bool:
        return all(c.passed for c in self.cases if c.name.startswith(("case-2", "case-3")))

    @property
    def ok(self) -> bool:
        return self.table_ok and all(c.passed for c in self.cases)

    def render(self) -> str:
        out = ["# non-admissibility certificate for the gadget T"]
        for key in sorted(self.paths):
            fp = self.paths[key]
            out.append(f"PATH {key} center={fp.center} end={fp.end} length={len(fp.vertices)}")
            out.append("  " + fp.render())
        for c in self.cases:
            out.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        out.append(f"{'PASS' if self.gb_nonempty else 'FAIL'} conclusion: every admissible cut has a B-edge")
        out.append(f"{'PASS' if self.connects_centers else 'FAIL'} conclusion: every admissible cut connects c1 and c2")
        out += [f"# {n}" for n in self.notes]
        return "\n".join(out) + "\n"


def _display_names(g) -> dict[int, str]:
    pref: dict[int, str] = {}
    for name, v in sorted(g.landmarks.items(), key=lambda kv: ("_" in kv[0], kv[0])):
        pref.setdefault(v, name)
    return pref


def follow_forced(p: Partition, start: int, center: Vec2, stop: set[int] | frozenset[int] = frozenset(),
                  eta: float = 1e-6, names: dict[int, str] | None = None, center_name: str = "") -> ForcedPath:
    """Follow the unique exit with a nonnegative rotation margin from ``start``."""
    bverts = p.boundary_vertices()
    path, margins = [start], []
    seen = {start}
    end = "boundary"
    while path[-1] not in bverts:
        x = path[-1]
        X = p.vertices[x]
        r = X - center
        ms = {}
        for y in p.neighbors(x):
            d = p.vertices[y] - X
            ms[y] = r.dot(d) / d.norm()
        good = [y for y, m in ms.items() if m > eta]
        unclear = [y for y, m in ms.items() if -eta <= m <= eta]
        if len(good) != 1 or unclear:
            end = "ambiguous" if good else "dead-end"
            break
        y = good[0]
        margins.append(min([ms[y]] + [-m for yy, m in ms.items() if yy != y]))
        path.append(y)
        if y in seen:
            end = "loop"
            break
        seen.add(y)
        if y in stop:
            end = "collision"
            break
    nm = names or {}
    return ForcedPath(center_name, path, [nm.get(v, p.name(v)) for v in path], end, margins)


def guided_search(g, eta: float = 1e-6) -> NonAdmissibilityCertificate:
    """Replay the case analysis showing every admissible cut of the gadget
    has B-edges and joins the two weighted centers."""
    from .gadget import C_SPIRAL, verify_metric_table

    table = verify_metric_table(g, eta)
    if not table.ok:
        bad = table.failures()[0]
        raise CutError(f"metric table row fails: {bad.vertex} center {bad.center} "
                       f"(exits {','.join(bad.exits) or 'none'})")
    p = g.partition
    names = _display_names(g)
    C = g.centers()
    k = C_SPIRAL["k"]
    paths: dict[str, ForcedPath] = {}
    cases: list[CaseResult] = []
    spokes = {i: sorted(j for j in range(C_SPIRAL["n_max"] + 1)
                        if f"c{i}_{j}" in g.landmarks and p.has_edge(g.v(f"c{i}"), g.v(f"c{i}_{j}")))
              for i in (1, 2)}
    # forced continuation from every spoke
    full: dict[int, ForcedPath] = {}
    core: dict[int, list[int]] = {}
    for i in (1, 2):
        ci = g.v(f"c{i}")
        runs = []
        for j in spokes[i]:
            fp = follow_forced(p, g.v(f"c{i}_{j}"), C[f"c{i}"], eta=eta, names=names, center_name=f"c{i}")
            runs.append((j, fp))
        longest = max(runs, key=lambda jr: len(jr[1].vertices))[1]
        ok = all(fp.end == "boundary" and fp.vertices == longest.vertices[len(longest.vertices) - len(fp.vertices):]
                 for _, fp in runs)
        fp = ForcedPath(f"c{i}", [ci] + longest.vertices, [names.get(ci, f"c{i}")] + longest.names,
                        longest.end, longest.margins)
        paths[f"G{i}"] = fp
        full[i] = fp
        # vertices every G_i must contain: the center and the path from the last spoke
        last = max(spokes[i])
        sv = g.v(f"c{i}_{last}")
        core[i] = [ci] + fp.vertices[fp.vertices.index(sv):]
        cases.append(CaseResult(
            f"forced-{i}", ok and fp.end == "boundary",
            f"all {len(runs)} spokes of c{i} continue uniquely into one path ending at "
            f"{fp.names[-1]}; min margin {min(fp.margins):.4e}"))
    h1, h2 = g.v("h1"), g.v("h2")

    def has_edge(path, a, b):
        vs = path.vertices
        return any({vs[t], vs[t + 1]} == {a, b} for t in range(len(vs) - 1))

    bridge = has_edge(full[1], h1, h2) and has_edge(full[2], h1, h2)
    cases.append(CaseResult(
        "case-1 (no G12, no B-edges)", bridge,
        "both forced paths cross the bridge h1 h2, so G1 and G2 would share an edge, "
        "which then lies downstream of both centers"))
    # separation: a B-path t1..t3 avoiding G_i cannot touch G_{3-i}
    sep_ok = True
    details = []
    bverts = p.boundary_vertices()
    t = {s: g.v(s) for s in ("t1", "t2", "t3")}
    end_vertex = full[1].vertices[-1]
    others = [t[s] for s in ("t1", "t2", "t3") if t[s] != end_vertex]
    for i in (1, 2):
        o = 3 - i
        removed = set(core[i]) | {end_vertex}
        K = nx.Graph()
        bedges = p.boundary_edges()
        for e in p.edges:
            if e in bedges or e[0] in removed or e[1] in removed:
                continue
            K.add_edge(*e)
        K.add_edge(others[0], others[1])
        block = set()
        for comp in nx.biconnected_component_edges(K):
            comp = list(comp)
            if any(set(e) == set(others) for e in comp):
                block = {x for e in comp for x in e}
        # every vertex G_{3-i} could contain before meeting G_i
        reach = set()
        for v in full[o].vertices:
            if v in set(full[i].vertices):
                break
            reach.add(v)
        reach |= {g.v(f"c{o}_{j}") for j in spokes[o]}
        hit = sorted(reach & block)
        okk = not hit
        sep_ok &= okk
        details.append(f"G{i} reaching {names.get(end_vertex)}: B-paths between "
                       f"{names.get(others[0])} and {names.get(others[1])} reach {len(block)} vertices, "
                       f"none of the {len(reach)} possible vertices of G{o}" if okk else
                       f"G{i}: B-path reaches {[names.get(v, v) for v in hit[:5]]}")
    cases.append(CaseResult("case-2 (no G12, separate components)", sep_ok, "; ".join(details)))
    # G12: where can G1 and G2 merge?
    merge = []
    mins = {i: full[i].vertices[full[i].vertices.index(g.v(f"c{i}_{max(spokes[i])}")):] for i in (1, 2)}
    common = set(mins[1]) & set(mins[2])
    for v in sorted(common):
        pre1 = set(mins[1][: mins[1].index(v) + 1])
        pre2 = set(mins[2][: mins[2].index(v) + 1])
        if pre1 & pre2 == {v}:
            merge.append(v)
    merge_ok = sorted(merge) == sorted([h1, h2])
    cases.append(CaseResult("case-3a (G12 origin)", merge_ok,
                            "G1 and G2 can merge only at " + ", ".join(names.get(v, str(v)) for v in merge)))
    coll_ok = True
    det = []
    for v in merge:
        # G1 and G2 contain at least their forced prefixes up to the merge vertex
        stop = {g.v("c1"), g.v("c2")}
        for i in (1, 2):
            stop |= set(mins[i][: mins[i].index(v)])
        fp = follow_forced(p, v, C["o"], stop=stop, eta=eta, names=names, center_name="o")
        paths[f"G12 from {names.get(v, v)}"] = fp
        ok = fp.end == "collision"
        coll_ok &= ok
        det.append(f"from {names.get(v, v)}: {fp.render()} ({fp.end})")
    cases.append(CaseResult("case-3b (G12 collides)", coll_ok,
                            "; ".join(det) + "; so G12 ends on a B-edge before the collision"))
    notes = [f"spokes of c{i}: indices {spokes[i][0]}..{spokes[i][-1]}" for i in (1, 2)]
    return NonAdmissibilityCertificate(paths, cases, table.ok, notes)


# --- file format -------------------------------------------------------------------------

def dumps_cut(edges, partition_ref: str | None = None) -> str:
    """CUT v1: optional PARTITION path (relative to the cut file), then the edge list."""
    es = sorted(_e(int(u), int(v)) for u, v in edges)
    lines = ["CUT v1"]
    if partition_ref is not None:
        lines.append(f"PARTITION {partition_ref}")
    lines.append(f"EDGES {len(es)}")
    lines += [f"{u} {v}" for u, v in es]
    lines.append("END")
    return "\n".join(lines) + "\n"


def loads_cut(text: str) -> tuple[list[Edge], str | None]:
    from .partition import ParseError

    rows = [(no, raw.split("#", 1)[0].strip()) for no, raw in enumerate(text.splitlines(), start=1)]
    rows = [(no, s) for no, s in rows if s]
    if not rows or rows[0][1] != "CUT v1":
        raise ParseError(rows[0][0] if rows else 1, "missing header 'CUT v1'")
    k = 1
    ref = None
    if k < len(rows) and rows[k][1].startswith("PARTITION "):
        ref = rows[k][1][len("PARTITION "):].strip()
        k += 1
    if k >= len(rows) or not rows[k][1].startswith("EDGES "):
        raise ParseError(rows[min(k, len(rows) - 1)][0], "expected 'EDGES m'")
    try:
        m = int(rows[k][1].split()[1])
    except ValueError:
        raise ParseError(rows[k][0], "bad edge count") from None
    edges = []
    for no, s in rows[k + 1:k + 1 + m]:
        parts = s.split()
        if len(parts) != 2 or not all(x.isdigit() for x in parts):
            raise ParseError(no, f"expected an edge 'u v', got '{s}'")
        edges.append(_e(int(parts[0]), int(parts[1])))
    if len(rows) != k + 2 + m or rows[-1][1] != "END":
        raise ParseError(rows[-1][0], "edge count mismatch or missing END")
    return edges, ref
