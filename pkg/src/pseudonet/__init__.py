"""Pseudo-edge unfoldings of convex polyhedra: spiral gadgets, cut calculus,
convex caps and overlap demonstrations."""

__version__ = "0.1.0"
