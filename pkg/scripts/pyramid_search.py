"""Search every edge unfolding of a truncated pyramid for overlaps.

    python3 scripts/pyramid_search.py --n 4 --s 0.9 --t 20
"""

import argparse
import time

from pseudonet.unfold import PyramidConfig, search_edge_unfoldings, truncated_pyramid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--s", type=float, default=0.9, help="top/base size ratio")
    ap.add_argument("--t", type=float, nargs="+", default=[0.05, 1.0, 5.0, 20.0],
                    help="base circumradius / height")
    args = ap.parse_args()
    print("t        trees  overlapping  first overlapping tree")
    for t in args.t:
        t0 = time.perf_counter()
        r = search_edge_unfoldings(*truncated_pyramid(PyramidConfig(args.n, args.s, t)))
        first = r.first_overlap if r.first_overlap is not None else "-"
        print(f"{t:<8g} {r.trees:<6d} {r.overlapping:<12d} {first}  ({time.perf_counter() - t0:.2f} s)")


if __name__ == "__main__":
    main()
