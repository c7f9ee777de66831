"""Cap height and geodesic length excess as beta goes to zero.

    python3 scripts/cap_continuity.py --betas 0.2 0.1 0.05 0.025
"""

import argparse

from pseudonet.cap import continuity_probe
from pseudonet.geom import Vec2
from pseudonet.instances import two_centers_square


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    args = ap.parse_args()
    p, _ = two_centers_square()
    seg = [(Vec2(-1, -1), Vec2(1, 1)), (Vec2(-1, 0.5), Vec2(1, -0.3))]
    print("beta      max height    length excess")
    for r in continuity_probe(p.to_ip(), args.betas, seg):
        print(f"{r.beta:<9g} {r.max_height:.6e}  {r.max_length_excess:.6e}")


if __name__ == "__main__":
    main()
