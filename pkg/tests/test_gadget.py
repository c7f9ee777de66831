import math
import re
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudonet.gadget import (
    C_SPIRAL, O_SPIRAL, GadgetError, GraphBuilder, SpiralSpec, build_basic_spiral_partition,
    build_gadget_T, check_spiral_conditions, cut_tails, exit_margins, fit_spiral, spiral_points,
    verify_metric_table,
)
from pseudonet.geom import Vec2, angle_at, dist
from pseudonet.partition import Partition, validate


def spec_c(count=None):
    return SpiralSpec(Vec2(0, 0), 83, 2.0, 1.0, 0.0, count or 224, 70)


def test_spiral_points_basics():
    s = SpiralSpec(Vec2(3, -2), 10, 2.0, 1.5, 0.3, 20, 3)
    p = spiral_points(s)
    assert len(p) == 21
    assert p[0].x == pytest.approx(3 + 1.5 * math.cos(0.3))
    assert p[0].y == pytest.approx(-2 + 1.5 * math.sin(0.3))
    d0, d1 = p[0] - s.center, p[10] - s.center
    assert d1.x == pytest.approx(2 * d0.x) and d1.y == pytest.approx(2 * d0.y)
    for i in range(21):
        assert dist(p[i], s.center) == pytest.approx(1.5 * 2.0 ** (i / 10))


@settings(max_examples=50)
@given(st.integers(3, 100), st.floats(1.01, 5), st.floats(0.1, 10), st.floats(-3, 3), st.booleans(),
       st.integers(0, 300))
def test_spiral_self_similarity(n, q, r0, phi0, cw, i):
    s = SpiralSpec(Vec2(1, 2), n, q, r0, phi0, i + 1, 1, cw)
    a, b = s.point(i) - s.center, s.point(i + 1) - s.center
    t = (-1 if cw else 1) * 2 * math.pi / n
    rot = Vec2(a.x * math.cos(t) - a.y * math.sin(t), a.x * math.sin(t) + a.y * math.cos(t)) * q ** (1 / n)
    assert dist(rot, b) <= 1e-9 * max(1.0, b.norm())


def test_fit_spiral():
    s = fit_spiral((0, 0), 5, 2.0, (1, 0), 0)
    assert s.r0 == pytest.approx(1.0) and s.phi0 == pytest.approx(0.0)
    with pytest.raises(GadgetError):
        fit_spiral((1, 1), 5, 2.0, (1, 1), 0)
    e1 = Vec2(-5, 10)
    s = fit_spiral((-70, 0), 83, 2.0, e1, 129, k=70, count=199, clockwise=True)
    assert dist(s.point(129), e1) < 1e-9


@given(st.floats(-50, 50), st.floats(-50, 50), st.integers(0, 200), st.booleans())
def test_fit_spiral_reproduces_anchor(x, y, idx, cw):
    if math.hypot(x - 1, y - 1) < 1e-3:
        return
    s = fit_spiral((1, 1), 83, 2.0, (x, y), idx, clockwise=cw)
    assert dist(s.point(idx), Vec2(x, y)) < 1e-9 * max(1, math.hypot(x, y))


@pytest.mark.parametrize("q,n,k", [(2.0, 83, 70), (2.4, 83, 68)])
def test_spiral_conditions_reference(q, n, k):
    t0 = time.perf_counter()
    for cw in (False, True):
        c = check_spiral_conditions(SpiralSpec(Vec2(0, 0), n, q, 1.0, 0.0, 200, k, cw))
        assert c.ok and c.angle_margin > 0 and c.inside_margin > 0
    assert time.perf_counter() - t0 < 1.0


def test_spiral_condition_small_k_fails():
    c = check_spiral_conditions(SpiralSpec(Vec2(0, 0), 83, 2.0, 1.0, 0.0, 200, 1))
    assert not c.inside_ok
    with pytest.raises(GadgetError, match="inside"):
        build_basic_spiral_partition(SpiralSpec(Vec2(0, 0), 83, 2.0, 1.0, 0.0, 300, 1))


def test_basic_spiral_count_precondition():
    with pytest.raises(GadgetError):
        build_basic_spiral_partition(spec_c(count=200))


@pytest.fixture(scope="module")
def basic():
    s = spec_c()
    return s, build_basic_spiral_partition(s)


def test_basic_spiral_valid_and_largest_angle(basic):
    s, p = basic
    r = validate(p)
    assert r.ok, r.problems
    assert r.max_face_angle == pytest.approx(angle_at(s.point(1), s.point(0), s.point(s.step)), abs=1e-9)
    assert r.max_face_angle < math.pi


def test_basic_spiral_three_or_four_faces(basic):
    _, p = basic
    B = p.boundary_vertices()
    for name, v in p.labels.items():
        if name.startswith("a_") and v not in B:
            assert len(p.neighbors(v)) in (3, 4)


def test_basic_spiral_unique_exit(basic):
    _, p = basic
    O = p.vertices[p.labels["O"]]
    B = p.boundary_vertices()
    checked = 0
    for name, v in p.labels.items():
        if not name.startswith("a_") or v in B:
            continue
        i = int(name[2:])
        ms = exit_margins(p, v, O)
        good = [y for y, m in ms.items() if m > 1e-9]
        assert good == [p.labels[f"a_{i + 1}"]]
        assert all(m < -1e-9 for y, m in ms.items() if y not in good)
        checked += 1
    assert checked > 80


def test_cut_tails_single_crossing():
    # square split by the diagonal q1 q3; the tail from q0 overshoots the diagonal
    pts = [(0, 0), (4, 0), (4, 4), (0, 4), (3, 3)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (1, 3), (0, 4)]
    p = Partition(pts, edges, [0, 0, 0, 0, 0])
    q = cut_tails(p, [(0, 4)])
    end = [v for v in range(len(q.vertices)) if q.vertices[v] == Vec2(2, 2)]
    assert len(end) == 1
    assert q.has_edge(0, end[0])
    # the end lies on the host: the diagonal is split there
    assert q.has_edge(1, end[0]) and q.has_edge(end[0], 3) and not q.has_edge(1, 3)
    assert validate(Partition(q.vertices, q.edges, [0, 0, 0, 0, 1])).ok is False  # flat at the tail end


def test_cut_tails_no_crossing():
    pts = [(0, 0), (4, 0), (4, 4), (0, 4), (1, 1)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)]
    with pytest.raises(GadgetError):
        cut_tails(Partition(pts, edges), [(0, 4)])


def test_gadget_build_valid(gadget):
    t0 = time.perf_counter()
    g = build_gadget_T()
    assert time.perf_counter() - t0 < 10
    r = validate(g.partition, eta=1e-6)
    assert r.ok, r.problems
    assert r.max_face_angle < math.pi - 1e-6
    assert g.partition.weights[g.v("c1")] == 0.5 and g.partition.weights[g.v("c2")] == 0.5
    assert sum(1 for w in g.partition.weights if w > 0) == 2


def test_gadget_reference_coordinates(gadget):
    assert gadget.point("c1") == Vec2(-70, 0) and gadget.point("c2") == Vec2(70, 0)
    assert gadget.point("h1") == Vec2(-5, 15) and gadget.point("e1") == Vec2(-5, 10)
    assert dist(gadget.point("f1"), gadget.point("f'1")) < 0.5
    assert dist(gadget.point("f1"), gadget.point("f'1")) == pytest.approx(0.2552, abs=1e-3)
    assert dist(gadget.point("o_0"), Vec2(0, -1198.4)) < 1e-9
    for i in (1, 2, 3):
        assert gadget.point(f"t{i}").norm() == pytest.approx(7500)


def test_gadget_central_symmetry(gadget):
    pairs = 0
    for name in gadget.landmarks:
        m = re.fullmatch(r"([a-z']+)([12])(_\d+)?", name)
        if not m or m.group(1) == "t":
            continue
        other = m.group(1) + str(3 - int(m.group(2))) + (m.group(3) or "")
        if other in gadget.landmarks:
            p, q = gadget.point(name), gadget.point(other)
            assert abs(p.x + q.x) < 1e-9 and abs(p.y + q.y) < 1e-9, name
            pairs += 1
    assert pairs > 400


def test_gadget_o_tails_on_triangle_sides(gadget):
    def side(j):
        return set(gadget.tails[gadget.v(f"o_{j}")][1])

    assert all(side(j) == {"t1", "t2"} for j in range(88, 101))
    assert all(side(j) == {"t2", "t3"} for j in range(101, 128))
    assert all(side(j) == {"t3", "t1"} for j in range(128, 154))


def test_gadget_unbent_has_flat_vertices():
    g = build_gadget_T(delta_factor=0.0)
    r = validate(g.partition)
    assert not r.ok and r.flat_vertices
    assert all("flat" in s for s in r.problems)


def test_gadget_bend_too_large():
    with pytest.raises((GadgetError, Exception)):
        g = build_gadget_T(delta_factor=0.3)
        assert validate(g.partition).ok and verify_metric_table(g).ok


def test_metric_table(gadget):
    t0 = time.perf_counter()
    r = verify_metric_table(gadget)
    assert time.perf_counter() - t0 < 10
    assert r.ok, [str(x) for x in r.failures()[:3]]
    assert r.min_margin > 1e-6
    rows = {(x.vertex, x.center): x for x in r.rows}
    assert rows[("e1", "c1")].exits == ["h1"]
    assert rows[("h1", "c2")].exits == ["f1"]
    for j in (0, 50, 99):
        for c in ("c1", "c2", "o"):
            assert rows[(f"o_{j}", c)].exits == [f"o_{j + 1}"]
    assert "# index reconciliation" in r.render()


def test_metric_table_detects_corruption(gadget):
    p = gadget.partition
    v = gadget.v("h2")
    pts = list(p.vertices)
    pts[v] = pts[v] + Vec2(0.0, -9.0)
    from dataclasses import replace
    bad = replace(gadget, partition=Partition(pts, p.edges, p.weights, p.labels))
    r = verify_metric_table(bad)
    assert not r.ok
    assert any(x.vertex in ("h1", "h2", "e2") for x in r.failures())


def test_vertex_count_reported(gadget):
    assert gadget.vertex_count == len(gadget.partition.vertices)
    assert gadget.vertex_count > 442
