import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudonet.cap import (
    CapConfig, CapError, GeodesicError, TriMesh, boundary_turning, build_surface_map, cone_apex_height,
    continuity_probe, dumps_cap, loads_cap, solve_cap, vertex_curvature,
)
from pseudonet.geom import Vec2
from pseudonet.instances import random_triangulated, square_with_center, two_centers_square
from pseudonet.partition import InfinitesimalPolyhedron, ParseError, WeightedPoint

BETAS = (0.05, 0.1, 0.2)


@pytest.fixture(scope="module")
def square_ip():
    return square_with_center().to_ip()


def test_cone_oracle_formula_against_direct_angles():
    # independent check of the closed form: lateral faces of the square pyramid
    for beta in (0.05, 0.3, 1.0):
        h = cone_apex_height(1.0, beta)
        apex = np.array([0, 0, h])
        corners = [np.array(c + (0.0,)) for c in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
        s = 0.0
        for a, b in zip(corners, corners[1:] + corners[:1]):
            u, w = a - apex, b - apex
            s += math.acos(np.dot(u, w) / np.linalg.norm(u) / np.linalg.norm(w))
        assert 2 * math.pi - s == pytest.approx(beta, abs=1e-12)


@pytest.mark.parametrize("beta", BETAS)
def test_square_cap_matches_cone_oracle(square_ip, beta):
    cap = solve_cap(square_ip, beta)
    assert abs(cap.heights[4] - cone_apex_height(1.0, beta)) < 1e-10
    assert np.all(cap.heights[:4] == 0)
    assert cap.max_residual() <= 1e-8
    assert abs(cap.gauss_bonnet_defect()) <= 1e-8
    assert cap.dihedral_violations() == []


def test_pyramid_apex_curvature_equilateral():
    # square base of side 2, lateral edges of length 2: apex height sqrt(2)
    xyz = np.array([[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0], [0, 0, math.sqrt(2)]], dtype=float)
    tris = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    m = TriMesh(xyz, tris)
    fan, boundary = m.fan(4)
    assert not boundary
    assert 2 * math.pi - sum(f[3] for f in fan) == pytest.approx(2 * math.pi / 3, abs=1e-12)


def test_beta_zero_is_flat(square_ip):
    cap = solve_cap(square_ip, 0.0)
    assert np.all(cap.heights == 0)
    assert vertex_curvature(cap, 4).curvature == pytest.approx(0.0, abs=1e-15)


def test_vertex_curvature_rejects_boundary(square_ip):
    cap = solve_cap(square_ip, 0.1)
    with pytest.raises(CapError):
        vertex_curvature(cap, 0)
    assert boundary_turning(cap, 0) > 0
    with pytest.raises(CapError):
        boundary_turning(cap, 4)


@pytest.mark.parametrize("beta", BETAS)
def test_gadget_cap(gadget, beta):
    ip = gadget.partition.to_ip()
    cap = solve_cap(ip, beta)
    assert cap.max_residual() <= 1e-8
    assert abs(cap.gauss_bonnet_defect()) <= 1e-8
    assert cap.dihedral_violations() == []
    # central symmetry of the weights: the two apexes rise equally
    h = cap.heights[cap.n_boundary:]
    assert h[0] == pytest.approx(h[1], rel=1e-9)


def test_interior_curvatures_sum_to_beta():
    rng = np.random.default_rng(3)
    p = random_triangulated(rng, 6, 5)
    cap = solve_cap(p.to_ip(), 0.3)
    total = sum(vertex_curvature(cap, v).curvature for v in cap.interior_indices())
    assert total == pytest.approx(0.3, abs=1e-8)


def test_zero_weight_points_are_flat_vertices():
    ip = InfinitesimalPolyhedron(
        (Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)),
        (WeightedPoint(Vec2(0.1, 0.2), 1.0), WeightedPoint(Vec2(-0.5, -0.3), 0.0)))
    cap = solve_cap(ip, 0.2)
    assert abs(vertex_curvature(cap, 5).curvature) < 1e-12
    assert vertex_curvature(cap, 4).curvature == pytest.approx(0.2, abs=1e-8)
    assert cap.heights[5] > 0


def test_uniqueness_from_perturbed_start(square_ip):
    rng = np.random.default_rng(0)
    p = random_triangulated(rng, 5, 4)
    ip = p.to_ip()
    a = solve_cap(ip, 0.2)
    start = a.heights[a.n_boundary:] * (1 + 0.2 * rng.uniform(-1, 1, len(ip.interior)))
    b = solve_cap(ip, 0.2, initial=start)
    assert np.max(np.abs(a.heights - b.heights)) <= 10 * 1e-8 * max(1.0, a.heights.max())


def test_nonconvergence_reports_residual(square_ip):
    with pytest.raises(CapError, match="no convergence"):
        solve_cap(random_triangulated(np.random.default_rng(1), 5, 4).to_ip(), 0.2,
                  config=CapConfig(max_iter=0))


def test_bad_beta(square_ip):
    with pytest.raises(CapError):
        solve_cap(square_ip, 7.0)


def test_continuity_probe(square_ip):
    seg = [(Vec2(-1, -1), Vec2(1, 1)), (Vec2(-1, 0.5), Vec2(1, -0.2))]
    rows = continuity_probe(square_ip, (0.2, 0.1, 0.05), seg)
    heights = [r.max_height for r in rows]
    assert heights[0] > heights[1] > heights[2] > 0
    assert rows[-1].beta == 0.0 and rows[-1].max_height == 0.0 and rows[-1].max_length_excess == 0.0
    ex = [r.max_length_excess for r in rows[:3]]
    assert ex[0] > ex[1] > ex[2] > 0
    # length excess shrinks at least linearly in beta
    assert ex[2] / ex[0] <= 0.25 + 1e-3


# --- geodesics -------------------------------------------------------------------------------

@pytest.mark.parametrize("beta", BETAS)
def test_geodesic_around_cone_apex(square_ip, beta):
    # unrolled cone: the two corners at slant distance r subtend an angle
    # pi - beta/2 at the apex, so the geodesic has length 2 r cos(beta/4)
    cap = solve_cap(square_ip, beta)
    r = math.hypot(math.sqrt(2), cap.heights[4])
    g = cap.geodesic((-1, -1), (1, 1))
    assert g.length == pytest.approx(2 * r * math.cos(beta / 4), abs=1e-10)


def test_geodesic_between_points_on_edges(square_ip):
    # both ends sit on diagonal edges at half the slant distance from the apex
    beta = 0.2
    cap = solve_cap(square_ip, beta)
    r = math.hypot(math.sqrt(2), cap.heights[4])
    g = cap.geodesic((0.5, 0.5), (-0.5, -0.5))
    assert g.length == pytest.approx(r * math.cos(beta / 4), abs=1e-10)
    assert all(np.linalg.norm(q - p) > 1e-9 for p, q in zip(g.points, g.points[1:]))


def test_radial_geodesic_is_generator(square_ip):
    cap = solve_cap(square_ip, 0.1)
    g = cap.geodesic((0, 0), (1, -1))
    assert len(g.points) == 2
    assert g.length == pytest.approx(math.hypot(math.sqrt(2), cap.heights[4]), abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_geodesic_has_no_angle_defect(x1, y1, x2, y2):
    cap = solve_cap(square_with_center().to_ip(), 0.2)
    if math.hypot(x2 - x1, y2 - y1) < 0.05:
        return
    try:
        g = cap.geodesic((x1, y1), (x2, y2))
    except GeodesicError:
        return  # shot grazed the apex; not a defect of a found path
    X = cap.xyz
    for k, (u, v) in enumerate(g.crossings):
        p, prev, nxt = g.points[k + 1], g.points[k], g.points[k + 2]
        e = X[v] - X[u]
        e /= np.linalg.norm(e)
        a_in = math.acos(np.clip(np.dot(e, (prev - p) / np.linalg.norm(prev - p)), -1, 1))
        a_out = math.acos(np.clip(np.dot(e, (nxt - p) / np.linalg.norm(nxt - p)), -1, 1))
        assert a_in + a_out == pytest.approx(math.pi, abs=1e-9)
    # never longer than the lifted straight segment, measured exactly by
    # breaking it wherever it crosses the projection of a mesh edge
    assert g.length <= 1e-12 + _lifted_segment_length(cap, np.array([x1, y1]), np.array([x2, y2]))


def _lifted_segment_length(cap, a, b):
    m = cap.mesh
    ts = {0.0, 1.0}
    d = b - a
    for tri in m.tris:
        for k in range(3):
            u, v = m.xyz[tri[k], :2], m.xyz[tri[(k + 1) % 3], :2]
            e = v - u
            den = d[0] * e[1] - d[1] * e[0]
            if abs(den) < 1e-15:
                continue
            w = u - a
            t = (w[0] * e[1] - w[1] * e[0]) / den
            s = (w[0] * d[1] - w[1] * d[0]) / den
            if 0 < t < 1 and -1e-12 <= s <= 1 + 1e-12:
                ts.add(float(t))
    ts = sorted(ts)
    P = [m.lift(a + t * d) for t in ts]
    return sum(float(np.linalg.norm(q - p)) for p, q in zip(P, P[1:]))


def test_surface_map_flat_is_identity():
    p = square_with_center()
    sm = build_surface_map(solve_cap(p.to_ip(), 0.0), p)
    for (u, v), g in sm.edge_geodesics.items():
        assert g.length == pytest.approx((p.vertices[u] - p.vertices[v]).norm(), abs=1e-15)
    for k in range(len(sm.triangles)):
        A, b = sm.affine(k)
        # developed triangles are congruent to the originals: A is orthogonal
        assert np.allclose(A.T @ A, np.eye(2), atol=1e-12)


def test_surface_map_edge_lengths_close_to_planar():
    p, _ = two_centers_square()
    for beta in (0.02, 0.01):
        sm = build_surface_map(solve_cap(p.to_ip(), beta), p)
        worst = max(abs(g.length / (p.vertices[u] - p.vertices[v]).norm() - 1)
                    for (u, v), g in sm.edge_geodesics.items())
        assert 0 < worst < 2 * beta


def test_gadget_h1h2_geodesic(gadget):
    p = gadget.partition
    cap = solve_cap(p.to_ip(), 1e-4)
    h1, h2 = p.labels["h1"], p.labels["h2"]
    g = cap.geodesic(p.vertices[h1].as_tuple(), p.vertices[h2].as_tuple())
    planar = (p.vertices[h1] - p.vertices[h2]).norm()
    assert planar <= g.length <= planar * (1 + 1e-3)


# --- file format -----------------------------------------------------------------------------

def test_cap_round_trip(square_ip):
    cap = solve_cap(square_ip, 0.1)
    text = dumps_cap(cap)
    back = loads_cap(text)
    assert dumps_cap(back) == text
    assert np.array_equal(back.heights, cap.heights)
    assert np.array_equal(back.triangles, cap.triangles)


def test_cap_parse_errors(square_ip):
    text = dumps_cap(solve_cap(square_ip, 0.1))
    with pytest.raises(ParseError):
        loads_cap("\n".join(text.splitlines()[:-3]))
    with pytest.raises(ParseError):
        loads_cap(text.replace("CAP v1", "CAP v9"))
