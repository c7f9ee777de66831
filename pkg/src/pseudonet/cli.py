"""Command-line entry point.

Exit codes: 0 success, 1 a verification failed, 2 usage or input/output error.
Reports and drawings are written atomically and contain no timestamps.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import networkx as nx

from . import partition as part_io
from .cap import CapError, build_surface_map, load_cap, save_cap, solve_cap
from .counterexample import (
    HamiltonBudgetError, MainSpec, NeedleSpec, SurfaceError, assemble, build_prism_host, hamiltonian_cycle_exists,
    load_graph, tutte_graph, verify_main_argument, verify_needle_argument, zone_certificates,
)
from .cuts import (
    Cut, CutBudgetError, CutError, admissibility, decompose, dumps_cut, enumerate_cuts, guided_search, loads_cut,
)
from .gadget import GadgetError, build_gadget_T, gadget_from_partition, verify_metric_table
from .io_util import atomic_write
from .partition import PartitionError, validate
from .svg import render_partition_svg, render_unfolding_svg
from .unfold import UnfoldError, align, check_predicted_overlap, detect_overlap, predict_overlap_site, unfold

OK, FAIL, USAGE = 0, 1, 2


@dataclass(frozen=True)
class GlobalConfig:
    eta: float = 1e-9
    tol: float = 1e-8
    beta: float | None = None
    seed: int = 0
    budget: int = 1_000_000


class UsageError(Exception):
    pass


def _cfg(ns) -> GlobalConfig:
    d = GlobalConfig()
    return GlobalConfig(
        eta=getattr(ns, "eta", d.eta), tol=getattr(ns, "tol", d.tol), beta=getattr(ns, "beta", d.beta),
        seed=getattr(ns, "seed", d.seed), budget=getattr(ns, "budget", d.budget))


def _emit(text: str, path: str | None) -> None:
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# --- gadget ------------------------------------------------------------------------------------

def cmd_gadget_build(ns, cfg):
    g = build_gadget_T(delta_factor=ns.delta_factor)
    part_io.save(g.partition, ns.out)
    rep = validate(g.partition, cfg.eta)
    print(f"gadget: {g.vertex_count} vertices, {len(g.partition.edges)} edges, {rep}")
    return OK if rep.ok else FAIL


def cmd_gadget_validate(ns, cfg):
    p = part_io.load(ns.partition)
    rep = validate(p, cfg.eta)
    _emit(str(rep) + "\n", ns.report)
    ok = rep.ok and rep.max_face_angle < math.pi - 1e-6
    return OK if ok else FAIL


def cmd_gadget_verify_table(ns, cfg):
    g = gadget_from_partition(part_io.load(ns.partition))
    rep = verify_metric_table(g, ns.margin)
    _emit(rep.render(), ns.report)
    print(f"metric table: {_verdict(rep.ok)}, {len(rep.rows)} rows, min margin {rep.min_margin:.6e}")
    return OK if rep.ok else FAIL


# --- cuts --------------------------------------------------------------------------------------

def cmd_cuts_enumerate(ns, cfg):
    p = part_io.load(ns.partition)
    lines = []
    chosen = None
    for k, cut in enumerate(enumerate_cuts(p, cfg.budget, gb_empty=ns.gb_empty)):
        if ns.limit is not None and k >= ns.limit:
            break
        rep = admissibility(decompose(cut))
        es = " ".join(f"{u}-{v}" for u, v in cut.key())
        lines.append(f"cut {k}: l(G)={rep.l_G:.12g} admissible={rep.admissible} edges {es}")
        if k == ns.index:
            chosen = cut
    lines.append(f"# {len(lines)} cuts")
    _emit("\n".join(lines) + "\n", ns.report)
    if ns.write_cut:
        if chosen is None:
            raise UsageError(f"no cut with index {ns.index}")
        ref = os.path.relpath(os.path.abspath(ns.partition), os.path.dirname(os.path.abspath(ns.write_cut)))
        atomic_write(ns.write_cut, dumps_cut(chosen.edges, ref))
    return OK


def cmd_cuts_certify(ns, cfg):
    g = gadget_from_partition(part_io.load(ns.partition))
    cert = guided_search(g, ns.margin)
    _emit(cert.render(), ns.report)
    print(f"certificate: {_verdict(cert.ok)}")
    return OK if cert.ok else FAIL


# --- cap ---------------------------------------------------------------------------------------

def cmd_cap_solve(ns, cfg):
    if cfg.beta is None:
        raise UsageError("cap solve needs --beta")
    p = part_io.load(ns.partition)
    cap = solve_cap(p.to_ip(), cfg.beta, cfg.tol)
    save_cap(cap, ns.out)
    gb = cap.gauss_bonnet_defect()
    conv = cap.dihedral_violations()
    print(f"cap: beta {cfg.beta:g}, {cap.iterations} iterations, residual {cap.max_residual():.3e}, "
          f"Gauss-Bonnet defect {gb:.3e}, convex {not conv}")
    ok = cap.max_residual() <= cfg.tol and abs(gb) <= cfg.tol and not conv
    return OK if ok else FAIL


# --- unfold ------------------------------------------------------------------------------------

def _load_cut(path: str, override: str | None):
    with open(path, encoding="utf-8") as fh:
        edges, ref = loads_cut(fh.read())
    ppath = override or (os.path.join(os.path.dirname(os.path.abspath(path)), ref) if ref else None)
    if ppath is None:
        raise UsageError("the cut file names no partition; pass --partition")
    return part_io.load(ppath), edges


def cmd_unfold_run(ns, cfg):
    cap = load_cap(ns.cap)
    p, edges = _load_cut(ns.cut, ns.partition)
    ip = p.to_ip()
    if len(ip.boundary) != cap.n_boundary:
        raise UsageError("cap and partition do not match")
    cut = Cut.of(p, edges)
    sm = build_surface_map(cap, p)
    unf = unfold(sm, cut)
    lines = [f"components {len(unf.components)}", f"beta {cap.beta:.12g}"]
    al = None
    if ns.align:
        al = align(unf)
        unf = al.unfolding
        lines.append(al.render())
    w = detect_overlap(unf, cfg.eta)
    lines.append("overlap " + (w.render() if w else "none"))
    ok = True
    d = decompose(cut)
    rep = admissibility(d)
    lines.append(f"admissible {rep.admissible} l(G) {rep.l_G:.12g}")
    if not rep.admissible and cap.beta > 0 and ns.align:
        pred = predict_overlap_site(d, rep, cap.beta)
        lines.append("predicted " + pred.render())
        pw = check_predicted_overlap(unf, pred, cfg.eta)
        lines.append("predicted overlap " + (pw.render() if pw else "not found"))
        ok = pw is not None
        w = pw or w
    lines.append(_verdict(ok))
    _emit("\n".join(lines) + "\n", ns.report)
    if ns.svg:
        atomic_write(ns.svg, render_unfolding_svg(unf, w))
    return OK if ok else FAIL


# --- counterexamples ----------------------------------------------------------------------------

def _gadget(path: str | None):
    if path:
        return gadget_from_partition(part_io.load(path))
    return build_gadget_T()


def cmd_needle_verify(ns, cfg):
    g = load_graph(ns.graph) if ns.graph else tutte_graph()
    h1, h2 = (ns.h1, ns.h2) if ns.h1 is not None else min(tuple(sorted(e)) for e in g.edges)
    if not g.has_edge(h1, h2):
        raise UsageError(f"{h1} {h2} is not an edge of the graph")
    gad = _gadget(ns.gadget)
    cert = guided_search(gad)
    zones = zone_certificates([v for v in g.nodes if v not in (h1, h2)], cert)
    rep = verify_needle_argument(NeedleSpec(g, h1, h2, gad.vertex_count, zones), cfg.budget * 50)
    text = rep.render()
    text += f"  tutte-isomorphic {nx.is_isomorphic(g, nx.tutte_graph())}\n"
    _emit(text, ns.report)
    print(f"needle argument: {_verdict(rep.passed)}")
    return OK if rep.passed else FAIL


def _host(spec: str):
    kind, _, n = spec.partition(":")
    if kind != "prism" or not n.isdigit():
        raise UsageError(f"unknown host '{spec}' (expected prism:N)")
    return build_prism_host(int(n))


def cmd_main_verify(ns, cfg):
    host = _host(ns.host)
    gad = _gadget(ns.gadget)
    cert = guided_search(gad)
    skip = set(ns.skip or [])
    asm = assemble(host.surface, gad.partition, sorted(host.graph.nodes), skip, cfg.tol)
    replaced = {sp.vertex for sp in asm.splices}
    rep = verify_main_argument(MainSpec(host.graph, replaced, zone_certificates(replaced, cert)))
    s = asm.surface
    geo_ok = s.is_closed() and not s.problems(1e-7) and abs(s.total_curvature() - 4 * math.pi) < 1e-8
    text = rep.render() + asm.render() + f"  surface checks {_verdict(geo_ok)}\n"
    _emit(text, ns.report)
    print(f"main argument: {_verdict(rep.passed and geo_ok)}")
    return OK if rep.passed and geo_ok else FAIL


def cmd_hamilton(ns, cfg):
    g = load_graph(ns.graph)
    r = hamiltonian_cycle_exists(g, cfg.budget * 50)
    _emit(f"hamiltonian {r.exists}\nsearch nodes {r.nodes}\n"
          + (f"cycle {' '.join(map(str, r.cycle))}\n" if r.cycle else ""), ns.report)
    return OK


def cmd_render(ns, cfg):
    p = part_io.load(ns.partition)
    edges = []
    if ns.cut:
        q, edges = _load_cut(ns.cut, ns.partition)
    atomic_write(ns.svg, render_partition_svg(p, edges, labels=not ns.no_labels))
    return OK


# --- parser ------------------------------------------------------------------------------------

def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = GlobalConfig()
    kw = (lambda v: {"default": argparse.SUPPRESS}) if suppress else (lambda v: {"default": v})
    parser.add_argument("--eta", type=float, help="geometric tolerance", **kw(d.eta))
    parser.add_argument("--tol", type=float, help="cap residual tolerance", **kw(d.tol))
    parser.add_argument("--beta", type=float, help="total curvature of the cap", **kw(d.beta))
    parser.add_argument("--seed", type=int, help="random seed", **kw(d.seed))
    parser.add_argument("--budget", type=int, help="search budget", **kw(d.budget))


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="pseudonet", description=__doc__.splitlines()[0])
    _globals(top, False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, True)
    sub = top.add_subparsers(dest="group", required=True)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True)

    gad = group("gadget", "build and check the spiral gadget")
    a = gad.add_parser("build", parents=[common])
    a.add_argument("--out", required=True)
    a.add_argument("--delta-factor", type=float, default=1e-3)
    a.set_defaults(fn=cmd_gadget_build)
    a = gad.add_parser("validate", parents=[common])
    a.add_argument("partition")
    a.add_argument("--report")
    a.set_defaults(fn=cmd_gadget_validate)
    a = gad.add_parser("verify-table", parents=[common])
    a.add_argument("partition")
    a.add_argument("--report")
    a.add_argument("--margin", type=float, default=1e-6)
    a.set_defaults(fn=cmd_gadget_verify_table)

    cuts = group("cuts", "enumerate and certify cuts")
    a = cuts.add_parser("enumerate", parents=[common])
    a.add_argument("partition")
    a.add_argument("--gb-empty", action="store_true")
    a.add_argument("--limit", type=int)
    a.add_argument("--report")
    a.add_argument("--write-cut")
    a.add_argument("--index", type=int, default=0)
    a.set_defaults(fn=cmd_cuts_enumerate)
    a = cuts.add_parser("certify", parents=[common])
    a.add_argument("partition")
    a.add_argument("--report")
    a.add_argument("--margin", type=float, default=1e-6)
    a.set_defaults(fn=cmd_cuts_certify)

    cap = group("cap", "solve the convex cap")
    a = cap.add_parser("solve", parents=[common])
    a.add_argument("partition")
    a.add_argument("--out", required=True)
    a.set_defaults(fn=cmd_cap_solve)

    unf = group("unfold", "unfold a cap along a cut")
    a = unf.add_parser("run", parents=[common])
    a.add_argument("cap")
    a.add_argument("cut")
    a.add_argument("--partition")
    a.add_argument("--align", action="store_true")
    a.add_argument("--svg")
    a.add_argument("--report")
    a.set_defaults(fn=cmd_unfold_run)

    nd = group("needle", "replay the needle argument")
    a = nd.add_parser("verify", parents=[common])
    a.add_argument("--graph")
    a.add_argument("--gadget")
    a.add_argument("--h1", type=int)
    a.add_argument("--h2", type=int)
    a.add_argument("--report")
    a.set_defaults(fn=cmd_needle_verify)

    mn = group("main", "assemble a counterexample and replay the main argument")
    a = mn.add_parser("verify", parents=[common])
    a.add_argument("--host", required=True)
    a.add_argument("--gadget")
    a.add_argument("--skip", type=int, action="append", help="host vertex left without a gadget")
    a.add_argument("--report")
    a.set_defaults(fn=cmd_main_verify)

    hm = group("graph", "graph utilities")
    a = hm.add_parser("hamiltonian", parents=[common])
    a.add_argument("graph")
    a.add_argument("--report")
    a.set_defaults(fn=cmd_hamilton)

    r = sub.add_parser("render", parents=[common], help="draw a partition")
    r.add_argument("partition")
    r.add_argument("--cut")
    r.add_argument("--svg", required=True)
    r.add_argument("--no-labels", action="store_true")
    r.set_defaults(fn=cmd_render)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else OK
    cfg = _cfg(ns)
    if ns.h1 is not None if hasattr(ns, "h1") else False:
        if ns.h2 is None:
            print("error: --h1 needs --h2", file=sys.stderr)
            return USAGE
    try:
        return ns.fn(ns, cfg)
    except (UsageError, OSError, PartitionError, CutError, ValueError) as exc:
        if isinstance(exc, (CapError, UnfoldError, SurfaceError)):
            print(f"FAIL: {exc}", file=sys.stderr)
            return FAIL
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (CapError, UnfoldError, SurfaceError, GadgetError, HamiltonBudgetError, CutBudgetError) as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
