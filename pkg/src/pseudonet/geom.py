"""Planar primitives: points, orientation, angles, segment intersection, convexity.

All predicates share one tolerance ``ETA``.  ``orient2d`` is exact: a float
filter answers the easy cases and an exact rational evaluation takes over when
the floating value lands within the filter bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

ETA = 1e-9
TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Raised on degenerate input to a geometric primitive."""


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinate ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "Vec2":
        return Vec2(self.x / s, self.y / s)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise GeometryError("cannot normalize the zero vector")
        return self / n

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


Point2 = Vec2


def vec(p) -> Vec2:
    """Coerce a pair-like object to ``Vec2``."""
    if isinstance(p, Vec2):
        return p
    x, y = p
    return Vec2(float(x), float(y))


def dist(a: Vec2, b: Vec2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def cross2(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def normalize_angle(theta: float) -> float:
    """Map an angle in radians to [0, 2π)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True, slots=True)
class Angle:
    radians: float

    def __post_init__(self):
        object.__setattr__(self, "radians", normalize_angle(self.radians))

    def __float__(self) -> float:
        return self.radians


# --- orientation -----------------------------------------------------------

_ORIENT_ERRBOUND = 3.3306690738754716e-16  # (3 + 16 eps) eps, Shewchuk's ccwerrboundA


def orient_det(a: Vec2, b: Vec2, c: Vec2) -> float:
    """Twice the signed area of triangle abc (floating point)."""
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def orient2d(a: Vec2, b: Vec2, c: Vec2) -> int:
    """Exact sign of the orientation determinant of ``abc``."""
    detleft = (a.x - c.x) * (b.y - c.y)
    detright = (a.y - c.y) * (b.x - c.x)
    det = detleft - detright
    bound = _ORIENT_ERRBOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    fa = [Fraction(v) for v in (a.x, a.y, b.x, b.y, c.x, c.y)]
    ex = (fa[0] - fa[4]) * (fa[3] - fa[5]) - (fa[1] - fa[5]) * (fa[2] - fa[4])
    return (ex > 0) - (ex < 0)


def orient2d_tol(a: Vec2, b: Vec2, c: Vec2, eta: float = ETA) -> int:
    """Orientation with a tolerance: 0 when the signed distance of ``c`` from
    line ``ab`` is within ``eta``."""
    ab = dist(a, b)
    if ab == 0.0:
        return 0
    d = orient_det(a, b, c) / ab
    if abs(d) <= eta:
        return 0
    return 1 if d > 0 else -1


def rotate90cw(v: Vec2) -> Vec2:
    """Clockwise quarter turn M_rot: (x, y) -> (y, -x)."""
    return Vec2(v.y, -v.x)


def rotate90ccw(v: Vec2) -> Vec2:
    return Vec2(-v.y, v.x)


def angle_at(a: Vec2, apex: Vec2, b: Vec2) -> float:
    """Unsigned angle a-apex-b in [0, π]."""
    u = a - apex
    w = b - apex
    if u.norm() == 0.0 or w.norm() == 0.0:
        raise GeometryError("angle_at: coincident points")
    return math.atan2(abs(u.cross(w)), u.dot(w))


def ccw_angle(u: Vec2, w: Vec2) -> float:
    """Counterclockwise angle from direction u to direction w in [0, 2π)."""
    return normalize_angle(math.atan2(u.cross(w), u.dot(w)))


# --- segments --------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Segment:
    a: Vec2
    b: Vec2

    def length(self) -> float:
        return dist(self.a, self.b)


@dataclass(frozen=True, slots=True)
class IntersectionResult:
    kind: str  # "none" | "point" | "overlap"
    points: tuple[Vec2, ...] = ()


def _on_closed_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    return min(a.x, b.x) <= p.x <= max(a.x, b.x) and min(a.y, b.y) <= p.y <= max(a.y, b.y)


def segments_intersect(s1: Segment, s2: Segment) -> IntersectionResult:
    """Classify the intersection of two closed segments.

    Orientation tests are exact; the reported witness point of a proper
    crossing is computed in floating point.  The result does not depend on the
    argument order.
    """
    for s in (s1, s2):
        if s.a == s.b:
            raise GeometryError("zero-length segment")
    # canonical order makes the float witness symmetric in the arguments
    k1 = (s1.a.as_tuple(), s1.b.as_tuple())
    k2 = (s2.a.as_tuple(), s2.b.as_tuple())
    if min(k2) < min(k1):
        s1, s2 = s2, s1
    p, q = s1.a, s1.b
    r, s = s2.a, s2.b
    o1 = orient2d(p, q, r)
    o2 = orient2d(p, q, s)
    o3 = orient2d(r, s, p)
    o4 = orient2d(r, s, q)
    if o1 == 0 and o2 == 0:
        # collinear: project on the dominant axis
        axis = 0 if abs(q.x - p.x) >= abs(q.y - p.y) else 1
        key = (lambda v: v.x) if axis == 0 else (lambda v: v.y)
        lo1, hi1 = sorted((p, q), key=key)
        lo2, hi2 = sorted((r, s), key=key)
        lo = lo1 if key(lo1) >= key(lo2) else lo2
        hi = hi1 if key(hi1) <= key(hi2) else hi2
        if key(lo) > key(hi):
            return IntersectionResult("none")
        if key(lo) == key(hi):
            return IntersectionResult("point", (lo,))
        return IntersectionResult("overlap", (lo, hi))
    if o1 * o2 > 0 or o3 * o4 > 0:
        return IntersectionResult("none")
    if o1 == 0 and _on_closed_segment(r, p, q):
        return IntersectionResult("point", (r,))
    if o2 == 0 and _on_closed_segment(s, p, q):
        return IntersectionResult("point", (s,))
    if o3 == 0 and _on_closed_segment(p, r, s):
        return IntersectionResult("point", (p,))
    if o4 == 0 and _on_closed_segment(q, r, s):
        return IntersectionResult("point", (q,))
    if 0 in (o1, o2, o3, o4):
        return IntersectionResult("none")
    d1 = q - p
    d2 = s - r
    t = (r - p).cross(d2) / d1.cross(d2)
    return IntersectionResult("point", (p + d1 * t,))


def line_intersection_params(p: Vec2, d: Vec2, a: Vec2, b: Vec2):
    """Parameters (t, u) with p + t d = a + u (b - a), or None if parallel."""
    e = b - a
    den = d.cross(e)
    if den == 0.0:
        return None
    w = a - p
    return w.cross(e) / den, w.cross(d) / den


# --- polygons --------------------------------------------------------------

def signed_area(vertices: Sequence[Vec2]) -> float:
    s = 0.0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        s += a.x * b.y - a.y * b.x
    return 0.5 * s


def interior_angles(vertices: Sequence[Vec2]) -> list[float]:
    """Interior angles of a simple polygon (either orientation), in [0, 2π)."""
    n = len(vertices)
    ccw = signed_area(vertices) > 0
    out = []
    for i in range(n):
        prev = vertices[i - 1]
        cur = vertices[i]
        nxt = vertices[(i + 1) % n]
        # angle swept from (nxt - cur) to (prev - cur) counterclockwise is the interior angle for ccw
        a = ccw_angle(nxt - cur, prev - cur)
        out.append(a if ccw else TWO_PI - a if a > 0 else 0.0)
    return out


def _is_simple(vertices: Sequence[Vec2]) -> bool:
    n = len(vertices)
    segs = [Segment(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                res = segments_intersect(segs[i], segs[j])
                if res.kind == "overlap":
                    return False
                continue
            if segments_intersect(segs[i], segs[j]).kind != "none":
                return False
    return True


def polygon_is_convex(vertices: Sequence[Vec2], eta: float = ETA) -> bool:
    """True iff every interior angle is strictly below π - eta."""
    pts = [vec(v) for v in vertices]
    if len(pts) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if not _is_simple(pts):
        raise GeometryError("self-intersecting polygon")
    return all(a < math.pi - eta for a in interior_angles(pts))


def point_in_convex_polygon(p: Vec2, poly: Sequence[Vec2], eta: float = 0.0) -> bool:
    """Strict containment: p is inside and farther than eta from every edge.
    ``poly`` must be counterclockwise."""
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        L = dist(a, b)
        if orient_det(a, b, p) / L <= eta:
            return False
    return True


def convex_hull(points: Iterable[Vec2]) -> list[Vec2]:
    """Andrew's monotone chain; counterclockwise, collinear points dropped."""
    pts = sorted(set(vec(p).as_tuple() for p in points))
    if len(pts) <= 2:
        return [Vec2(*p) for p in pts]
    P = [Vec2(*p) for p in pts]

    def half(seq):
        h: list[Vec2] = []
        for p in seq:
            while len(h) >= 2 and orient2d(h[-2], h[-1], p) <= 0:
                h.pop()
            h.append(p)
        return h

    lower = half(P)
    upper = half(reversed(P))
    return lower[:-1] + upper[:-1]
