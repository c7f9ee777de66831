"""Unfold a cap along a non-admissible cut and locate the predicted overlap.

    python3 scripts/overlap_demo.py --instance reduced --beta 0.01 --svg out.svg
    python3 scripts/overlap_demo.py --instance gadget --beta 1e-3
"""

import argparse
import time

import numpy as np

from pseudonet.cap import build_surface_map, solve_cap
from pseudonet.cuts import Cut, admissibility, decompose
from pseudonet.gadget import build_gadget_T
from pseudonet.instances import gadget_forced_cut, two_centers_square
from pseudonet.io_util import atomic_write
from pseudonet.svg import render_unfolding_svg
from pseudonet.unfold import align, check_predicted_overlap, detect_overlap, predict_overlap_site, unfold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", choices=("reduced", "gadget"), default="reduced")
    ap.add_argument("--beta", type=float, default=0.01)
    ap.add_argument("--svg")
    args = ap.parse_args()
    t0 = time.perf_counter()
    if args.instance == "reduced":
        p, edges = two_centers_square()
    else:
        g = build_gadget_T()
        p, edges = g.partition, gadget_forced_cut(g)
    cut = Cut.of(p, edges)
    d = decompose(cut)
    rep = admissibility(d)
    print(f"cut: {len(cut.edges)} edges, admissible {rep.admissible}, l(G) {rep.l_G:.6g}")
    unf = unfold(build_surface_map(solve_cap(p.to_ip(), args.beta), p, check_unique=args.instance == "reduced"), cut)
    if args.instance == "reduced":
        al = align(unf)
        unf = al.unfolding
        print(al.render())
    pred = predict_overlap_site(d, rep, args.beta)
    print("prediction:", pred.render())
    w = check_predicted_overlap(unf, pred)
    print("predicted overlap:", w.render() if w else "not found")
    if w is not None:
        print(f"distance to disk center / r_D = {np.linalg.norm(w.point - w.disk_center) / pred.r_D:.4f}")
    found = detect_overlap(unf)
    print("detector:", found.render() if found else "no overlap")
    if args.svg:
        atomic_write(args.svg, render_unfolding_svg(unf, w or found))
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
