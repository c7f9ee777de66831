"""Rotation-center error versus the alignment bound as beta halves.

    python3 scripts/rotation_center_sweep.py --betas 0.04 0.02 0.01 0.005
"""

import argparse

import numpy as np

from pseudonet.cap import build_surface_map, solve_cap
from pseudonet.cuts import Cut, decompose
from pseudonet.instances import two_centers_square
from pseudonet.unfold import align, estimate_rotation_center, unfold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--samples", type=int, default=7, help="points per A-edge")
    args = ap.parse_args()
    p, edges = two_centers_square()
    cut = Cut.of(p, edges)
    d = decompose(cut)
    print("beta      epsilon     worst |c~ - c|  ratio to 3 eps  samples")
    for beta in args.betas:
        al = align(unfold(build_surface_map(solve_cap(p.to_ip(), beta), p), cut))
        errs = [estimate_rotation_center(al.unfolding, d, e, float(t), beta).error
                for e in d.oriented_a_edges() for t in np.linspace(0.05, 0.95, args.samples)]
        print(f"{beta:<9g} {al.epsilon:.4e}  {max(errs):.4e}      {max(errs) / (3 * al.epsilon):.4f}          {len(errs)}")


if __name__ == "__main__":
    main()
