import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudonet.cap import build_surface_map, solve_cap
from pseudonet.cuts import Cut, admissibility, decompose, enumerate_cuts
from pseudonet.instances import random_triangulated, square_with_center, two_centers_square
from pseudonet.unfold import (
    FaceComplex, PyramidConfig, UnfoldError, align, check_predicted_overlap, complex_from_polyhedron, cube,
    cube_cross_cut, detect_overlap, estimate_rotation_center, face_overlap, independent_cycles,
    predict_overlap_site, raster_overlap, search_edge_unfoldings, truncated_pyramid, unfold,
)


@pytest.fixture(scope="module")
def reduced():
    p, edges = two_centers_square()
    cut = Cut.of(p, edges)
    d = decompose(cut)
    return p, cut, d, admissibility(d)


def _unfolded(p, cut, beta):
    sm = build_surface_map(solve_cap(p.to_ip(), beta), p)
    return unfold(sm, cut)


# --- flat surfaces --------------------------------------------------------------------------

def test_flat_unfolding_is_the_polygon(reduced):
    p, cut, _, _ = reduced
    u = unfold(p, cut)
    assert len(u.components) == 1
    for f, cyc in enumerate(u.complex.faces):
        assert np.array_equal(u.face_polygon(f), u.complex.source[f])
    al = align(u)
    assert al.epsilon == 0.0
    assert detect_overlap(u) is None


def test_flat_cut_images_coincide(reduced):
    p, cut, d, _ = reduced
    u = unfold(p, cut)
    for e in d.oriented_a_edges():
        xl, xr = u.left_right(*e, 0.3)
        assert np.array_equal(xl, xr)
    r = estimate_rotation_center(u, d, d.oriented_a_edges()[0], 0.5, 0.0)
    assert r.estimate is None and math.isnan(r.error)


def test_component_count_matches_cycles():
    rng = np.random.default_rng(5)
    p = random_triangulated(rng, 4, 3)
    cuts = list(enumerate_cuts(p, pruned=False))
    assert cuts
    bnd = p.boundary_edges()
    for cut in cuts[:40]:
        u = unfold(p, cut)
        assert len(u.components) == independent_cycles(set(cut.edges) | set(bnd))


def test_unknown_cut_edge_rejected(reduced):
    p, _, _, _ = reduced
    with pytest.raises(UnfoldError):
        unfold(p, [(0, 2)])


# --- caps ----------------------------------------------------------------------------------

@pytest.mark.parametrize("beta", (0.04, 0.01))
def test_cap_unfolding_invariants(reduced, beta):
    p, cut, d, _ = reduced
    u = _unfolded(p, cut, beta)
    assert len(u.components) == 1
    # isometry: every face image keeps its developed side lengths
    for f in range(len(u.complex.faces)):
        P, L = u.face_polygon(f), u.complex.local[f]
        assert np.allclose(np.linalg.norm(np.roll(P, -1, 0) - P, axis=1),
                           np.linalg.norm(np.roll(L, -1, 0) - L, axis=1), atol=1e-12)
    assert u.total_area() == pytest.approx(u.complex.area3d, abs=1e-12)
    for e in d.oriented_a_edges():
        fl, fr = u.side_faces(*e)
        a = [u.vertex_image(f, v) for f in (fl, fr) for v in e]
        assert np.linalg.norm(a[1] - a[0]) == pytest.approx(np.linalg.norm(a[3] - a[2]), abs=1e-12)


def test_cone_rotation_center_is_apex():
    p = square_with_center()
    cut = Cut.of(p, [(0, 4)])
    d = decompose(cut)
    beta = 0.02
    al = align(_unfolded(p, cut, beta))
    for t in (0.2, 0.5, 0.8):
        r = estimate_rotation_center(al.unfolding, d, (4, 0), t, beta)
        assert r.error < 3 * al.epsilon
        assert r.reconstruction_error < 1e-12


def test_rotation_center_bound_on_reduced_configuration(reduced):
    p, cut, d, _ = reduced
    prev = None
    for beta in (0.04, 0.02, 0.01):
        al = align(_unfolded(p, cut, beta))
        worst = 0.0
        n = 0
        for e in d.oriented_a_edges():
            for t in np.linspace(0.05, 0.95, 7):
                r = estimate_rotation_center(al.unfolding, d, e, float(t), beta)
                worst = max(worst, r.error)
                n += 1
        assert n >= 20
        assert worst < 3 * al.epsilon
        if prev is not None:
            assert al.epsilon < prev
        prev = al.epsilon


def test_alignment_reports_distortion(reduced):
    p, cut, _, _ = reduced
    al = align(_unfolded(p, cut, 0.02))
    assert 0 < al.distortion <= al.epsilon
    with pytest.raises(UnfoldError):
        align(_unfolded(p, cut, 0.02), max_epsilon=1e-9)


# --- overlap prediction ------------------------------------------------------------------------

def test_prediction_requires_violation():
    p = square_with_center()
    d = decompose(Cut.of(p, [(0, 4)]))
    with pytest.raises(UnfoldError):
        predict_overlap_site(d, admissibility(d), 0.01)


def test_prediction_condition_and_scaling(reduced):
    p, cut, d, rep = reduced
    pred = predict_overlap_site(d, rep, 0.01)
    assert pred.edge == (5, 6)
    assert pred.a_margin <= 1e-15
    # scale covariance: a, b and r_D scale with the configuration
    lam = 3.0
    q = type(p)([(v.x * lam, v.y * lam) for v in p.vertices], p.edges, p.weights, p.labels)
    dq = decompose(Cut.of(q, cut.edges))
    pq = predict_overlap_site(dq, admissibility(dq), 0.01)
    assert np.allclose(pq.a, lam * pred.a) and np.allclose(pq.b, lam * pred.b)
    assert pq.r_D == pytest.approx(lam * pred.r_D)


@pytest.mark.parametrize("beta", (0.02, 0.01, 0.005))
def test_overlap_inside_predicted_disk(reduced, beta):
    p, cut, d, rep = reduced
    al = align(_unfolded(p, cut, beta))
    pred = predict_overlap_site(d, rep, beta)
    w = check_predicted_overlap(al.unfolding, pred)
    assert w is not None
    assert np.linalg.norm(w.point - w.disk_center) < pred.r_D
    found = detect_overlap(al.unfolding)
    assert found is not None
    assert set(found.faces) == set(w.faces)


# --- overlap detection ------------------------------------------------------------------------

def _square(x, y, s=1.0):
    return np.array([[x, y], [x + s, y], [x + s, y + s], [x, y + s]], dtype=float)


def test_touching_faces_do_not_overlap():
    assert face_overlap(_square(0, 0), _square(1, 0)) is None
    assert face_overlap(_square(0, 0), _square(1, 1)) is None
    w = face_overlap(_square(0, 0), _square(0.5, 0.5))
    assert w is not None and w.depth == pytest.approx(0.25)


def test_synthetic_overlapping_layout():
    faces = [(0, 1, 2, 3), (4, 5, 6, 7)]
    cx = FaceComplex(faces, [_square(0, 0), _square(0.5, 0.25)], None)
    assert detect_overlap(unfold(cx, [])) is not None


def _random_convex(rng, k):
    ang = np.sort(rng.uniform(0, 2 * math.pi, k))
    r = rng.uniform(0.5, 1.5)
    c = rng.uniform(-1.5, 1.5, 2)
    return np.column_stack([c[0] + r * np.cos(ang), c[1] + r * np.sin(ang)])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_detection_agrees_with_raster_oracle(seed):
    rng = np.random.default_rng(seed)
    P, Q = _random_convex(rng, int(rng.integers(3, 7))), _random_convex(rng, int(rng.integers(3, 7)))
    w = face_overlap(P, Q)
    raster = raster_overlap([P, Q], 0.01)
    if w is not None and w.depth > 0.02:
        assert raster
    if w is None:
        assert not raster or _near_touch(P, Q)


def _near_touch(P, Q):
    # the raster may count a grid point that straddles a shared boundary line
    from pseudonet.unfold import _clip, _area
    I = _clip(P, Q)
    return len(I) < 3 or abs(_area(I)) < 1e-3


# --- polyhedra ---------------------------------------------------------------------------------

def test_cube_cross_net_does_not_overlap():
    V, F = cube()
    u = unfold(complex_from_polyhedron(V, F), cube_cross_cut())
    assert len(u.components) == 1
    assert detect_overlap(u) is None
    assert u.total_area() == pytest.approx(6.0)


def test_no_cube_net_overlaps():
    V, F = cube()
    r = search_edge_unfoldings(V, F)
    assert r.trees == 384 and r.overlapping == 0


def test_thin_truncated_pyramid_has_overlapping_unfolding():
    V, F = truncated_pyramid(PyramidConfig())
    r = search_edge_unfoldings(V, F)
    assert r.trees == 384
    assert r.overlapping > 0
    assert r.witness.depth > 1e-6
    # the top face vertices are almost flat
    tall = truncated_pyramid(PyramidConfig(t=0.05))
    assert search_edge_unfoldings(*tall).overlapping == 0
