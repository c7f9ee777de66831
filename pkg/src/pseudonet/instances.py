"""Small reference partitions used by tests, scripts and the CLI."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.spatial import Delaunay

from .geom import Vec2, convex_hull, vec
from .partition import Partition, PartitionError


def square_with_center(half: float = 1.0) -> Partition:
    """Square with a weight-1 center joined to its four corners."""
    a = half
    pts = [(-a, -a), (a, -a), (a, a), (-a, a), (0.0, 0.0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)] + [(4, i) for i in range(4)]
    return Partition(pts, edges, [0, 0, 0, 0, 1.0], {"O": 4, "q1": 0, "q2": 1, "q3": 2, "q4": 3})


def triangulated(boundary: Sequence, interior: Sequence, weights: Sequence[float]) -> Partition:
    """Delaunay triangulation of a convex polygon with interior points.

    ``weights`` belong to the interior points and must sum to 1."""
    B = [vec(p) for p in boundary]
    hull = convex_hull(B)
    if len(hull) != len(B):
        raise PartitionError("boundary points must be in strictly convex position")
    pts = B + [vec(p) for p in interior]
    tri = Delaunay(np.array([[p.x, p.y] for p in pts]))
    edges = set()
    for s in tri.simplices:
        a, b, c = (int(x) for x in s)
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    w = [0.0] * len(B) + [float(x) for x in weights]
    labels = {f"b{i}": i for i in range(len(B))}
    labels.update({f"p{j}": len(B) + j for j in range(len(interior))})
    return Partition(pts, sorted(edges), w, labels)


def random_triangulated(rng: np.random.Generator, n_boundary: int, n_interior: int,
                        n_weighted: int | None = None) -> Partition:
    """Regular polygon with jittered interior points; weights are random and sum to 1."""
    nb = n_boundary
    B = [(math.cos(2 * math.pi * i / nb + 0.1), math.sin(2 * math.pi * i / nb + 0.1)) for i in range(nb)]
    I = []
    while len(I) < n_interior:
        r = 0.8 * math.cos(math.pi / nb) * math.sqrt(rng.uniform())
        t = rng.uniform(0, 2 * math.pi)
        p = (r * math.cos(t), r * math.sin(t))
        if all(math.dist(p, q) > 0.15 for q in I):
            I.append(p)
    nw = n_interior if n_weighted is None else n_weighted
    w = rng.uniform(0.2, 1.0, size=nw)
    w = list(w / w.sum()) + [0.0] * (n_interior - nw)
    return triangulated(B, I, w)


def two_centers_square() -> tuple[Partition, list[tuple[int, int]]]:
    """Square with two weight-1/2 points and a zero-weight point z, plus a cut
    p1 -> p2 -> z -> q4 whose edge p2 -> z turns back toward the rotation
    center (0, 0) of p1 and p2: the cut has no B-edge and violates the
    admissibility condition on exactly that edge."""
    pts = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-0.25, 0.0), (0.25, 0.0), (-0.1, 0.6)]
    q1, q2, q3, q4, p1, p2, z = range(7)
    edges = [(q1, q2), (q2, q3), (q3, q4), (q4, q1),
             (p1, p2), (p2, z), (z, q4), (p1, z), (p1, q4), (p1, q1), (p2, q1), (p2, q2), (p2, q3), (z, q3)]
    labels = {"q1": q1, "q2": q2, "q3": q3, "q4": q4, "p1": p1, "p2": p2, "z": z}
    part = Partition(pts, edges, [0, 0, 0, 0, 0.5, 0.5, 0], labels)
    return part, [(p1, p2), (p2, z), (z, q4)]


def gadget_forced_cut(g) -> list[tuple[int, int]]:
    """A cut of the gadget without B-edges: the forced path from c1 to the
    boundary plus the forced path from c2 up to where it meets the first."""
    from .cuts import guided_search

    cert = guided_search(g)
    v1 = cert.paths["G1"].vertices
    v2 = cert.paths["G2"].vertices
    edges = {(min(a, b), max(a, b)) for a, b in zip(v1, v1[1:])}
    on1 = set(v1)
    k = next(i for i, v in enumerate(v2) if v in on1)
    edges |= {(min(a, b), max(a, b)) for a, b in zip(v2[:k + 1], v2[1:k + 1])}
    return sorted(edges)
