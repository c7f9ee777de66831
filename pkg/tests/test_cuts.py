import math
import time

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_cuts, brute_force_l
from pseudonet.cuts import (
    Cut, CutBudgetError, CutError, admissibility, compute_l_of_L, decompose, enumerate_cuts,
    guided_search, stream_at, upstream_set,
)
from pseudonet.geom import Vec2
from pseudonet.instances import random_triangulated, square_with_center, triangulated
from pseudonet.partition import Partition


def small_instances():
    rng = np.random.default_rng(7)
    out = [square_with_center()]
    while len(out) < 5:
        p = random_triangulated(rng, int(rng.integers(3, 6)), int(rng.integers(1, 4)))
        if len(p.edges) <= 14:
            out.append(p)
    return out


def strip():
    """Rectangle with a path crossing it and a weighted vertex hanging off."""
    pts = [(0, 0), (2, 0), (4, 0), (4, 2), (2, 2), (0, 2), (2, 1), (3, 1)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 6), (6, 4), (6, 7), (7, 2), (7, 3)]
    return Partition(pts, edges, [0, 0, 0, 0, 0, 0, 0, 1])


def test_decompose_single_edge():
    p = square_with_center()
    d = decompose(Cut.of(p, [(4, 0)]))
    assert d.a_edges == {(0, 4)} and not d.b_edges
    assert d.orientation((0, 4)) == (4, 0)
    assert d.outfalls[4] == 0


def test_decompose_crossing_path():
    p = strip()
    d = decompose(Cut.of(p, [(1, 6), (6, 4), (6, 7)]))
    assert d.b_edges == {(1, 6), (4, 6)}
    assert d.a_edges == {(6, 7)}
    assert d.orientation((6, 7)) == (7, 6)
    assert d.outfalls[7] == 6
    with pytest.raises(CutError):
        upstream_set(d, (1, 6, 0.5))


def test_invalid_cuts_rejected():
    p = square_with_center()
    with pytest.raises(CutError):
        Cut.of(p, [])  # weighted vertex missing
    with pytest.raises(CutError):
        Cut.of(p, [(0, 1), (4, 0)])  # boundary edge
    q = strip()
    with pytest.raises(CutError):
        Cut.of(q, [(6, 7), (7, 3), (3, 4), (4, 6)])  # boundary edge and cycle
    with pytest.raises(CutError):
        Cut.of(q, [(6, 7), (7, 2), (2, 3), (3, 7)])


def test_upstream_examples():
    p = strip()
    d = decompose(Cut.of(p, [(7, 3)]))
    assert upstream_set(d, 7) == {7}
    assert upstream_set(d, (7, 3, 0.5)) == {7}
    pts = [(-2, -2), (2, -2), (2, 2), (-2, 2), (-1, 0), (1, 0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (4, 0), (4, 3), (5, 1), (5, 2)]
    q = Partition(pts, edges, [0, 0, 0, 0, 0.5, 0.5])
    d = decompose(Cut.of(q, [(4, 5), (5, 2)]))
    assert upstream_set(d, (5, 2, 0.5)) == {4, 5}
    s = stream_at(d, 5)
    assert s.alpha == 1.0 and s.center == Vec2(0, 0)
    assert s.stream == Vec2(1, 0)


def test_stream_single_upstream():
    p = square_with_center()
    d = decompose(Cut.of(p, [(4, 2)]))
    s = stream_at(d, (4, 2, 0.5))
    assert s.center == Vec2(0, 0) and s.alpha == 1.0
    assert s.stream == Vec2(0.5, 0.5)


def test_gadget_weights_give_origin_center():
    pts = [(-200, -100), (200, -100), (200, 100), (-200, 100), (-70, 0), (70, 0), (0, -50)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 6), (5, 6), (6, 0), (6, 1), (4, 0), (4, 3), (5, 1),
             (5, 2), (4, 5), (3, 5)]
    p = Partition(pts, edges, [0, 0, 0, 0, 0.5, 0.5, 0])
    d = decompose(Cut.of(p, [(4, 6), (5, 6), (1, 6)]))
    s = stream_at(d, 6)
    assert s.center == Vec2(0, 0)
    assert s.stream == Vec2(0, -50)


def test_admissibility_signs():
    p = square_with_center()
    rep = admissibility(decompose(Cut.of(p, [(4, 0)])))
    assert rep.admissible and rep.l_G == 0.0
    assert rep.sourced_edges == [(4, 0)]


def test_margin_examples_exact():
    # c = (0, 0) weighted; path c -> u -> a -> b with a -> b aimed straight at c
    pts = [(-4, -4), (4, -4), (4, 4), (-4, 4), (0, 0), (1, 1), (2, 0), (1, 0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 1), (4, 0), (5, 2), (6, 1), (4, 7)]
    q = Partition(pts, edges, [0, 0, 0, 0, 1, 0, 0, 0])
    rep = admissibility(decompose(Cut.of(q, [(4, 5), (5, 6), (6, 7), (7, 1)])))
    assert rep.margin_per_edge[(6, 7)] == pytest.approx(-2.0)  # pointing at c: -|x - c|
    assert (6, 7) in rep.violating_edges and rep.l_G == pytest.approx(2.0)
    away = admissibility(decompose(Cut.of(q, [(4, 7), (7, 6), (6, 1)])))
    assert away.margin_per_edge[(7, 6)] == pytest.approx(1.0)  # pointing away: |x - c|
    assert away.admissible


def test_enumerate_square():
    p = square_with_center()
    cuts = list(enumerate_cuts(p, gb_empty=True))
    assert sorted(c.key() for c in cuts) == [((0, 4),), ((1, 4),), ((2, 4),), ((3, 4),)]


def test_enumerate_no_weights():
    p = square_with_center()
    q = Partition(p.vertices, p.edges, [0] * 5)
    assert [c.key() for c in enumerate_cuts(q)] == [()]


def test_enumerate_budget():
    p = random_triangulated(np.random.default_rng(0), 6, 5)
    with pytest.raises(CutBudgetError) as ei:
        for _ in enumerate_cuts(p, budget=50):
            pass
    assert ei.value.partial >= 0


@pytest.mark.parametrize("idx", range(5))
@pytest.mark.parametrize("gb_empty", [False, True])
def test_enumeration_matches_oracle(idx, gb_empty):
    p = small_instances()[idx]
    assert len(p.edges) <= 14
    got = [c.key() for c in enumerate_cuts(p, gb_empty=gb_empty)]
    assert len(got) == len(set(got))
    assert sorted(got) == brute_force_cuts(p, gb_empty=gb_empty)


def test_enumeration_unpruned_matches_oracle():
    p = square_with_center()
    got = sorted(c.key() for c in enumerate_cuts(p, pruned=False))
    assert got == brute_force_cuts(p, pruned=False)


@pytest.mark.parametrize("idx", range(5))
def test_l_of_L_matches_oracle(idx):
    p = small_instances()[idx]
    want = min(brute_force_l(p, k) for k in brute_force_cuts(p, gb_empty=True))
    got = compute_l_of_L(p)
    assert not got.vacuous
    assert abs(got.value - want) <= 1e-12


def test_l_of_L_square_zero():
    assert compute_l_of_L(square_with_center()).value == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_margins_match_oracle_random(seed):
    rng = np.random.default_rng(seed)
    p = random_triangulated(rng, int(rng.integers(3, 5)), int(rng.integers(1, 3)))
    for c in list(enumerate_cuts(p))[:40]:
        assert abs(admissibility(decompose(c)).l_G - brute_force_l(p, c.key())) <= 1e-12


def moved(p, theta, t, lam):
    c, s = math.cos(theta), math.sin(theta)
    pts = [(lam * (c * v.x - s * v.y) + t[0], lam * (s * v.x + c * v.y) + t[1]) for v in p.vertices]
    return Partition(pts, p.edges, p.weights, p.labels)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.floats(0, 2 * math.pi), st.floats(-10, 10), st.floats(0.1, 10))
def test_margin_rigid_and_scale(seed, theta, tx, lam):
    rng = np.random.default_rng(seed)
    p = random_triangulated(rng, 4, 2)
    q = moved(p, theta, (tx, -tx), lam)
    for c in list(enumerate_cuts(p))[:20]:
        a = admissibility(decompose(c)).margin_per_edge
        b = admissibility(decompose(Cut.of(q, c.edges))).margin_per_edge
        assert a.keys() == b.keys()
        for e in a:
            assert b[e] == pytest.approx(lam * a[e], abs=1e-9 * lam)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_decompose_idempotent_and_additive(seed):
    rng = np.random.default_rng(seed)
    p = random_triangulated(rng, int(rng.integers(3, 6)), int(rng.integers(1, 4)))
    for c in list(enumerate_cuts(p))[:30]:
        d = decompose(c)
        assert d.a_edges | d.b_edges == c.edges and not d.a_edges & d.b_edges
        d2 = decompose(Cut.of(p, d.a_edges | d.b_edges))
        assert (d2.a_edges, d2.b_edges, d2.downstream) == (d.a_edges, d.b_edges, d.downstream)
        for v, ups in d.upstream_weighted.items():
            if not ups or v in d.b_edges:
                continue
            s = stream_at(d, v)
            children = [u for u, w in d.downstream.items() if w == v]
            tot = Vec2(0.0, 0.0)
            for u in children:
                if d.upstream_weighted[u]:
                    su = stream_at(d, u)
                    tot = tot + (p.vertices[v] - su.center) * su.alpha
            if not children or not any(d.upstream_weighted[u] for u in children):
                continue
            own = p.weights[v]
            assert (s.stream - tot).norm() <= 1e-9 * max(1.0, s.stream.norm()) or own > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_pruning_preserves_admissibility(seed):
    rng = np.random.default_rng(seed)
    p = random_triangulated(rng, 4, 3, n_weighted=1)
    pruned = {c.key() for c in enumerate_cuts(p)}
    for c in enumerate_cuts(p, pruned=False):
        d = decompose(c)
        keep = {(u, w) for (u, w) in c.edges}
        # drop zero-weight A-branches
        changed = True
        while changed:
            changed = False
            deg = {}
            for e in keep:
                for x in e:
                    deg[x] = deg.get(x, 0) + 1
            for e in sorted(keep):
                for x in e:
                    if deg[x] == 1 and x not in p.boundary_vertices() and p.weights[x] == 0:
                        keep.discard(e)
                        changed = True
                        break
                if changed:
                    break
        # drop components that serve no weighted vertex
        comp = nx.Graph()
        comp.add_edges_from(keep)
        for cc in list(nx.connected_components(comp)):
            if not any(p.weights[x] > 0 for x in cc):
                keep -= {e for e in keep if e[0] in cc}
        k = tuple(sorted(keep))
        assert k in pruned
        a = admissibility(d).admissible
        b = admissibility(decompose(Cut.of(p, keep))).admissible
        assert a == b


def test_certificate(gadget):
    t0 = time.perf_counter()
    cert = guided_search(gadget)
    assert time.perf_counter() - t0 < 60
    assert cert.ok and cert.gb_nonempty and cert.connects_centers
    g1 = cert.paths["G1"].names
    i = g1.index("e1")
    assert g1[i:i + 4] == ["e1", "h1", "h2", "f2"]
    assert g1[-1] == "t2" and g1[0] == "c1"
    g2 = cert.paths["G2"].names
    assert g2[g2.index("e2"):g2.index("e2") + 4] == ["e2", "h2", "h1", "f1"]
    merges = [c for c in cert.cases if c.name.startswith("case-3a")][0]
    assert "h1, h2" in merges.detail
    assert cert.paths["G12 from h1"].names[:4] == ["h1", "f1", "m'1", "c2_69"]
    text = cert.render()
    assert text.count("PASS") >= 8 and "FAIL" not in text


def test_certificate_rejects_corrupted_gadget(gadget):
    from dataclasses import replace
    p = gadget.partition
    pts = list(p.vertices)
    v = gadget.v("h2")
    pts[v] = pts[v] + Vec2(0.0, -9.0)
    bad = replace(gadget, partition=Partition(pts, p.edges, p.weights, p.labels))
    with pytest.raises(CutError, match="row fails"):
        guided_search(bad)
