import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudonet.counterexample import (
    HamiltonBudgetError, MainSpec, NeedleSpec, SurfaceError, ZoneCertificate, assemble, build_prism_host,
    cone_shape, dumps_graph, hamiltonian_cycle_exists, hamiltonian_path_exists, loads_graph,
    perturb_zero_curvature, perturbation_threshold, replace_vertex_with_gadget, surface_from_polyhedron,
    tutte_graph, verify_main_argument, verify_needle_argument,
)
from pseudonet.instances import two_centers_square
from pseudonet.partition import ParseError
from pseudonet.unfold import cube

from oracles import cone_side_lengths, held_karp_hamiltonian

GOOD = ZoneCertificate("zone", True, True)


# --- graphs -------------------------------------------------------------------------------------

def test_bundled_tutte_graph_matches_networkx():
    g = tutte_graph()
    assert g.number_of_nodes() == 46 and g.number_of_edges() == 69
    assert nx.is_isomorphic(g, nx.tutte_graph())
    assert all(d == 3 for _, d in g.degree())
    assert nx.check_planarity(g)[0] and nx.node_connectivity(g) == 3


def test_tutte_graph_is_not_hamiltonian():
    r = hamiltonian_cycle_exists(tutte_graph())
    assert not r.exists and r.cycle is None


def test_dodecahedron_is_hamiltonian_with_certificate():
    g = nx.dodecahedral_graph()
    r = hamiltonian_cycle_exists(g)
    assert r.exists and r.check(g)


def test_search_budget():
    with pytest.raises(HamiltonBudgetError):
        hamiltonian_cycle_exists(tutte_graph(), budget=10)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 11), st.floats(0.2, 0.7), st.integers(0, 10_000))
def test_hamiltonicity_agrees_with_held_karp(n, p, seed):
    g = nx.gnp_random_graph(n, p, seed=seed)
    r = hamiltonian_cycle_exists(g)
    assert r.exists == held_karp_hamiltonian(g)
    if r.exists:
        assert r.check(g)


def test_hamiltonian_path_between_ends():
    g = nx.path_graph(6)
    assert hamiltonian_path_exists(g, 0, 5).exists
    assert not hamiltonian_path_exists(g, 0, 4).exists


def test_graph_round_trip_and_errors():
    g = nx.petersen_graph()
    text = dumps_graph(g, "Petersen")
    assert dumps_graph(loads_graph(text), "Petersen") == text
    with pytest.raises(ParseError):
        loads_graph(text.replace("GRAPH v1", "GRAPH v2"))
    with pytest.raises(ParseError):
        loads_graph(text.replace("END\n", ""))
    with pytest.raises(ParseError):
        loads_graph(text.replace("0 1\n", "0 99\n", 1))


# --- intrinsic surfaces --------------------------------------------------------------------------

@pytest.mark.parametrize("N", (3, 5, 8))
def test_prism_host(N):
    h = build_prism_host(N)
    s = h.surface
    assert s.is_closed() and s.problems() == []
    assert s.total_curvature() == pytest.approx(4 * math.pi, abs=1e-12)
    for v, k in s.curvatures().items():
        assert k == pytest.approx(2 * math.pi / N, abs=1e-12)
    assert h.min_separation > 0
    assert nx.is_isomorphic(h.graph, nx.circular_ladder_graph(N))


def test_cube_curvatures():
    V, F = cube()
    tris = [t for f in F for t in ((f[0], f[1], f[2]), (f[0], f[2], f[3]))]
    s = surface_from_polyhedron(V, tris)
    assert all(k == pytest.approx(math.pi / 2) for k in s.curvatures().values())


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 9), st.integers(0, 10))
def test_cone_shape_preserves_curvature(N, k):
    s = build_prism_host(N).surface
    h1, h2 = k % N, (k + 1) % N
    k1, k2 = s.curvature(h1), s.curvature(h2)
    c = cone_shape(s, h1, h2)
    t = c.surface
    assert t.problems() == []
    assert t.total_curvature() == pytest.approx(4 * math.pi, abs=1e-11)
    assert abs(t.curvature(h1)) < 1e-12 and abs(t.curvature(h2)) < 1e-12
    assert c.apex_curvature == pytest.approx(k1 + k2, abs=1e-12)
    L = math.dist(build_prism_host(N).vertices[h1], build_prism_host(N).vertices[h2])
    s1, s2 = cone_side_lengths(L, k1, k2)
    A = t.lengths[-1]
    assert A[1] == pytest.approx(s2, rel=1e-12) and A[2] == pytest.approx(s1, rel=1e-12)


def test_cone_shape_requires_edge_and_small_curvature():
    s = build_prism_host(3).surface
    with pytest.raises(SurfaceError):
        cone_shape(s, 0, 5)  # not joined by an edge
    V, F = cube()
    tris = [t for f in F for t in ((f[0], f[1], f[2]), (f[0], f[2], f[3]))]
    c = surface_from_polyhedron(V, tris)
    once = cone_shape(c, 0, 1).surface
    twice = cone_shape(once, 3, 2).surface
    with pytest.raises(SurfaceError):
        cone_shape(twice, 8, 9)  # not an edge either
    assert twice.total_curvature() == pytest.approx(4 * math.pi)


# --- gadget splices ------------------------------------------------------------------------------

def test_splice_reduced_configuration():
    p, _ = two_centers_square()
    s = build_prism_host(6).surface
    sp = replace_vertex_with_gadget(s, 0, p)
    t = sp.surface
    assert t.is_closed() and t.problems() == []
    curv = t.curvatures()
    assert max(abs(curv[i]) for i in sp.rim) < 1e-9
    assert sum(curv[i] for i in sp.apexes) == pytest.approx(2 * math.pi / 6, abs=1e-8)
    assert t.total_curvature() == pytest.approx(4 * math.pi, abs=1e-9)
    assert sp.clearance > 0
    # untouched vertices keep their curvature
    assert curv[3] == pytest.approx(2 * math.pi / 6, abs=1e-12)


def test_assembly_of_prism_with_gadget(gadget):
    h = build_prism_host(5)
    a = assemble(h.surface, gadget.partition, range(10))
    t = a.surface
    assert t.is_closed() and t.problems() == []
    assert t.total_curvature() == pytest.approx(4 * math.pi, abs=1e-9)
    assert all(sp.clearance > 0 for sp in a.splices)
    assert all(sp.scale > 0 for sp in a.splices)
    curv = t.curvatures()
    for v in range(10):
        assert v not in curv


def test_splice_rejects_flat_vertex():
    p, _ = two_centers_square()
    s = build_prism_host(4).surface
    c = cone_shape(s, 0, 1).surface
    with pytest.raises(SurfaceError):
        replace_vertex_with_gadget(c, 0, p)


# --- zero-curvature perturbation -----------------------------------------------------------------

def _cube_with_face_center():
    V, F = cube()
    V = np.vstack([V, [0.5, 0.5, 1.0]])  # centre of the top face (4, 5, 7, 6)
    return V, F, {8: 1}


def test_perturbation_makes_marked_vertex_curved():
    V, F, marked = _cube_with_face_center()
    r = perturb_zero_curvature(V, F, marked, 0.1)
    assert r.ok, r.problems
    assert r.curvatures[8] > 0
    assert r.vertices[8][2] > 1.0
    assert sum(r.curvatures) == pytest.approx(4 * math.pi, abs=1e-12)


def _frustum_with_face_center():
    # lateral planes meet at height 2 above the base
    V = np.array([[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0],
                  [-.5, -.5, 1], [.5, -.5, 1], [.5, .5, 1], [-.5, .5, 1], [0, 0, 1]], dtype=float)
    F = [(3, 2, 1, 0), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    return V, F, {8: 1}


def test_perturbation_too_large_is_reported():
    V, F, marked = _frustum_with_face_center()
    assert perturb_zero_curvature(V, F, marked, 0.5).ok
    r = perturb_zero_curvature(V, F, marked, 100.0)
    assert not r.ok and "left the hull" in r.problems[0]
    eps = perturbation_threshold(V, F, marked, start=100.0)
    assert 0 < eps < 2 and perturb_zero_curvature(V, F, marked, eps).ok


# --- the arguments -------------------------------------------------------------------------------

def _needle(host, h1, h2, cert=GOOD):
    zones = {v: cert for v in host.nodes if v not in (h1, h2)}
    return NeedleSpec(host, h1, h2, 572, zones)


def test_needle_argument_passes_on_tutte():
    g = tutte_graph()
    h1, h2 = next(iter(sorted(g.edges)))
    rep = verify_needle_argument(_needle(g, h1, h2))
    assert rep.passed
    assert rep.ledger.claimed == 19008
    assert rep.ledger.actual == 2 + 44 * 572
    assert "delta" in rep.render()


def test_needle_argument_fails_on_dodecahedron():
    g = nx.dodecahedral_graph()
    h1, h2 = next(iter(sorted(g.edges)))
    assert not verify_needle_argument(_needle(g, h1, h2)).passed


def test_needle_argument_fails_without_certificates():
    g = tutte_graph()
    h1, h2 = next(iter(sorted(g.edges)))
    assert not verify_needle_argument(_needle(g, h1, h2, ZoneCertificate("z", True, False))).passed


def test_main_argument_and_control():
    g = build_prism_host(6).graph
    full = MainSpec(g, set(g.nodes), {v: GOOD for v in g.nodes})
    assert verify_main_argument(full).passed
    part = MainSpec(g, set(g.nodes) - {0}, {v: GOOD for v in g.nodes if v != 0})
    assert not verify_main_argument(part).passed
