"""Assemble gadgets on a prism host and replay the contraction arguments.

    python3 scripts/counterexample_demo.py --prism 6
"""

import argparse
import math

import networkx as nx

from pseudonet.counterexample import (
    MainSpec, NeedleSpec, assemble, build_prism_host, cone_shape, tutte_graph, verify_main_argument,
    verify_needle_argument, zone_certificates,
)
from pseudonet.cuts import guided_search
from pseudonet.gadget import build_gadget_T


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--prism", type=int, default=6)
    args = ap.parse_args()
    g = build_gadget_T()
    cert = guided_search(g)
    host = build_prism_host(args.prism)
    print(f"prism host: {2 * args.prism} vertices of curvature 2pi/{args.prism}, "
          f"min separation {host.min_separation:.4f}")
    asm = assemble(host.surface, g.partition, sorted(host.graph.nodes))
    print(asm.render(), end="")
    nodes = set(host.graph.nodes)
    print(verify_main_argument(MainSpec(host.graph, nodes, zone_certificates(nodes, cert))).render(), end="")
    shaped = cone_shape(host.surface, 0, 1)
    print(f"cone shaping 0-1: new apex curvature {shaped.apex_curvature:.12f} "
          f"(2 x 2pi/{args.prism} = {4 * math.pi / args.prism:.12f})")
    t = tutte_graph()
    h1, h2 = min(tuple(sorted(e)) for e in t.edges)
    zones = zone_certificates([v for v in t.nodes if v not in (h1, h2)], cert)
    print(verify_needle_argument(NeedleSpec(t, h1, h2, g.vertex_count, zones)).render(), end="")
    d = nx.dodecahedral_graph()
    zd = zone_certificates([v for v in d.nodes if v not in (0, 1)], cert)
    print("control " + verify_needle_argument(NeedleSpec(d, 0, 1, g.vertex_count, zd)).render(), end="")


if __name__ == "__main__":
    main()
