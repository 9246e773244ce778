"""Command-line interface.

Every verb reads JSON files and writes JSON (or DOT) to stdout.  Exit codes: 0 on
success, 1 when an input fails validation (with diagnostics on stdout), 2 on usage
errors such as unknown verbs or missing files.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Optional, Sequence

from .assembly import (
    ComplementMode,
    GluingDatum,
    coequalize,
    complement,
    elements,
    elements_colimit,
    is_convex_by_complement,
    is_convex_by_poset,
    open_hull,
)
from .digraph import (
    Diagram,
    Graph,
    GraphValidationError,
    HomKind,
    MorphismError,
    NotConnected,
    core,
    graph_from_json,
    graph_to_json,
    hom_set,
    is_acyclic,
    is_connected,
    is_loopfree,
    morphism_to_json,
    parse_diagram,
    residue,
)
from .hypergraph import Hypergraph, hyper_core, hyper_glue, hypergraph_from_json, validate_hypergraph
from .kleisli import KleisliError, compose, factorize, kleisli_from_json, kleisli_to_json, substitute_node
from .species import SpeciesError, free_properad, species_from_json
from .stacky import bar, ghypergraph_to_json, verify_bar_theorem
from .symmetry import automorphism_group, certificate, enumerate_graphs, SHAPES

VERBS = ("validate", "check", "hom", "aut", "core", "residue", "glue", "elements", "complement",
         "convex", "enumerate", "free-properad", "substitute", "factorize", "compose", "bar",
         "verify-bar", "dot")


class InputError(Exception):
    """Bad input file: reported as a validation failure (exit 1)."""

    def __init__(self, payload: dict):
        self.payload = payload
        super().__init__(json.dumps(payload))


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- reading inputs


def read_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError({"error": "parse", "file": path, "line": exc.lineno,
                          "column": exc.colno, "message": exc.msg}) from None


def read_graph(path: str) -> Graph:
    obj = read_json(path)
    try:
        return graph_from_json(obj)
    except GraphValidationError as exc:
        raise InputError({"error": "invalid graph", "file": path,
                          "violations": [v.to_dict() for v in exc.violations]}) from None


def read_hypergraph(path: str) -> Hypergraph:
    obj = read_json(path)
    try:
        return hypergraph_from_json(obj)
    except GraphValidationError as exc:
        raise InputError({"error": "invalid hypergraph", "file": path,
                          "violations": [v.to_dict() for v in exc.violations]}) from None


def read_graph_or_hypergraph(path: str) -> Diagram:
    obj = read_json(path)
    try:
        return graph_from_json(obj)
    except GraphValidationError:
        pass
    try:
        return hypergraph_from_json(obj)
    except GraphValidationError as exc:
        raise InputError({"error": "invalid hypergraph", "file": path,
                          "violations": [v.to_dict() for v in exc.violations]}) from None


def _edge_index(g: Diagram, name: str) -> int:
    for e in range(g.n_edges):
        if g.edge_name(e) == name:
            return e
    raise UsageError(f"unknown edge {name!r}")


def _node_index(g: Diagram, name: str) -> int:
    for x in range(g.n_nodes):
        if g.node_name(x) == name:
            return x
    raise UsageError(f"unknown node {name!r}")


def _arities(text: str) -> set[tuple[int, int]]:
    """Parse "i:o,i:o" into a set of biarities."""
    try:
        return {(int(a), int(b)) for a, b in (item.split(":") for item in text.split(",") if item)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i:o,i:o but got {text!r}") from None


# ---------------------------------------------------------------- DOT


def emit_dot(g: Diagram) -> str:
    """Nodes as boxes, edges as arcs between them; ports dangle from point-shaped stubs.

    An edge with several tails or heads (only possible in a hypergraph) gets a point of
    its own with an arc from each tail and to each head.
    """
    q = json.dumps
    lines = ["digraph G {", "  node [shape=box];"]
    for x in range(g.n_nodes):
        lines.append(f"  {q(g.node_name(x))};")
    for e in range(g.n_edges):
        name = g.edge_name(e)
        tails = [g.q[o] for o in range(g.n_out) if g.t[o] == e]
        heads = [g.p[i] for i in range(g.n_in) if g.s[i] == e]
        label = f"[label={q(name)}]"
        if len(tails) == 1 and len(heads) == 1:
            lines.append(f"  {q(g.node_name(tails[0]))} -> {q(g.node_name(heads[0]))} {label};")
            continue
        if not tails and not heads:
            a, b = q(f"{name}.in"), q(f"{name}.out")
            lines.append(f"  {a} [shape=point]; {b} [shape=point];")
            lines.append(f"  {a} -> {b} {label};")
            continue
        if len(tails) <= 1 and len(heads) <= 1:
            stub = q(f"{name}.port")
            lines.append(f"  {stub} [shape=point];")
            if tails:
                lines.append(f"  {q(g.node_name(tails[0]))} -> {stub} {label};")
            else:
                lines.append(f"  {stub} -> {q(g.node_name(heads[0]))} {label};")
            continue
        hub = q(f"{name}.hub")
        lines.append(f"  {hub} [shape=point];")
        for x in tails:
            lines.append(f"  {q(g.node_name(x))} -> {hub} {label};")
        for x in heads:
            lines.append(f"  {hub} -> {q(g.node_name(x))} {label};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- verbs


def cmd_validate(args) -> tuple[int, object]:
    obj = read_json(args.file)
    try:
        d, problems = parse_diagram(obj)
    except GraphValidationError as exc:
        return 1, {"valid": False, "violations": [v.to_dict() for v in exc.violations]}
    if problems:
        return 1, {"valid": False, "violations": [v.to_dict() for v in problems]}
    try:
        if args.hypergraph:
            h = validate_hypergraph(d)
            return 0, {"valid": True, "kind": "hypergraph", "loopfree": h.is_loopfree, "is_graph": h.is_graph()}
        g = graph_from_json(obj)
    except GraphValidationError as exc:
        return 1, {"valid": False, "violations": [v.to_dict() for v in exc.violations]}
    return 0, {"valid": True, "kind": "graph", "nodes": g.n_nodes, "edges": g.n_edges}


def cmd_check(args) -> tuple[int, object]:
    g = read_graph(args.file)
    props = {"connected": is_connected, "acyclic": is_acyclic, "loopfree": is_loopfree,
             "closed": Graph.is_closed}
    chosen = [p for p in props if getattr(args, p)] or list(props)
    return 0, {p: props[p](g) for p in chosen}


def cmd_hom(args) -> tuple[int, object]:
    src, tgt = read_graph(args.source), read_graph(args.target)
    kind = HomKind.ETALE if args.etale else HomKind.INCLUSION if args.inclusion else HomKind.ALL
    homs = hom_set(src, tgt, kind)
    return 0, {"kind": kind.name.lower(), "count": len(homs), "morphisms": [morphism_to_json(f) for f in homs]}


def cmd_aut(args) -> tuple[int, object]:
    g = read_graph(args.file)
    grp = automorphism_group(g, fix_ports=args.fix_ports)
    return 0, {"order": grp.order, "fix_ports": args.fix_ports,
               "automorphisms": [morphism_to_json(f) for f in grp.elements]}


def cmd_core(args) -> tuple[int, object]:
    if args.hypergraph:
        x = read_hypergraph(args.file)
        c, counit = hyper_core(x)
    else:
        x = read_graph(args.file)
        c, counit = core(x)
    return 0, {"core": graph_to_json(c), "counit_edges": [x.edge_name(a) for a in counit.alpha]}


def cmd_residue(args) -> tuple[int, object]:
    g = read_graph(args.file)
    try:
        r = residue(g)
    except NotConnected as exc:
        return 1, {"error": "not connected", "message": str(exc)}
    return 0, {"biarity": [len(g.imports), len(g.exports)],
               "imports": [g.edge_name(e) for e in r.import_bij.table],
               "exports": [g.edge_name(e) for e in r.export_bij.table]}


def cmd_glue(args) -> tuple[int, object]:
    if args.other:
        x, y = read_graph_or_hypergraph(args.file), read_graph_or_hypergraph(args.other)
        pairs = [(_edge_index(x, a), _edge_index(y, b)) for a, b in args.pair]
        h = hyper_glue(x, y, pairs)
        return 0, {"hypergraph": graph_to_json(h), "is_graph": h.is_graph()}
    g = read_graph(args.file)
    pairs = [(_edge_index(g, a), _edge_index(g, b)) for a, b in args.pair]
    try:
        q, _quot = coequalize(GluingDatum.from_pairs(g, pairs))
    except (ValueError, GraphValidationError) as exc:
        return 1, {"error": "bad gluing datum", "message": str(exc)}
    return 0, {"graph": graph_to_json(q)}


def cmd_elements(args) -> tuple[int, object]:
    g = read_graph(args.file)
    el = elements(g)
    objects = [f"edge:{g.edge_name(e)}" for e in range(g.n_edges)] + \
              [f"node:{g.node_name(x)}" for x in range(g.n_nodes)]
    arrows = [{"kind": a.kind, "from": objects[a.dom], "to": objects[a.cod]} for a in el.arrows]
    rebuilt = elements_colimit(el)
    return 0, {"objects": objects, "arrows": arrows,
               "colimit_certificate_matches": certificate(rebuilt, ported=False) == certificate(g, ported=False)}


def _hull(args, g: Graph):
    nodes = [_node_index(g, name) for name in args.nodes.split(",") if name]
    return open_hull(g, nodes)


def cmd_complement(args) -> tuple[int, object]:
    g = read_graph(args.file)
    _h, inc = _hull(args, g)
    c, _ = complement(inc, ComplementMode.NAIVE if args.naive else ComplementMode.ETALE)
    return 0, {"complement": graph_to_json(c)}


def cmd_convex(args) -> tuple[int, object]:
    g = read_graph(args.file)
    h, inc = _hull(args, g)
    if not is_acyclic(g) or not is_connected(h):
        return 1, {"error": "convexity needs an acyclic graph and a connected subgraph"}
    by_poset, by_paths = is_convex_by_poset(inc), is_convex_by_complement(inc)
    return 0, {"convex": by_poset, "by_poset": by_poset, "by_complement": by_paths}


def cmd_enumerate(args) -> tuple[int, object]:
    graphs = enumerate_graphs(args.inputs, args.outputs, args.max_nodes, args.arities, shape=args.shape)
    rows = []
    for pg in graphs:
        rows.append({"certificate": certificate(pg), "aut_order": automorphism_group(pg).order,
                     "graph": graph_to_json(pg.graph),
                     "imports": [pg.graph.edge_name(e) for e in pg.import_order],
                     "exports": [pg.graph.edge_name(e) for e in pg.export_order]})
    return 0, {"count": len(rows), "graphs": rows}


def cmd_free_properad(args) -> tuple[int, object]:
    try:
        f = species_from_json(read_json(args.species))
    except (SpeciesError, KeyError, TypeError) as exc:
        return 1, {"error": "invalid species", "message": str(exc)}
    value = free_properad(f, args.inputs, args.outputs, args.max_nodes)
    grades = {}
    for grade, classes in value.by_grade().items():
        grades[str(grade)] = [{"nodes": c.ported.n_nodes, "orbit_size": c.orbit_size, "aut_order": c.aut_order,
                               "ops": list(c.decoration.node_op), "colours": list(c.decoration.edge_colour)}
                              for c in classes]
    return 0, {"biarity": [args.inputs, args.outputs], "count": len(value.classes), "by_grade": grades}


def cmd_substitute(args) -> tuple[int, object]:
    g, qg = read_graph(args.file), read_graph(args.graph)
    x = _node_index(g, args.node)
    ins = [_edge_index(qg, a) for a in args.imports.split(",") if a] if args.imports else list(qg.imports)
    outs = [_edge_index(qg, a) for a in args.exports.split(",") if a] if args.exports else list(qg.exports)
    try:
        po = substitute_node(g, x, qg, ins, outs)
    except (KleisliError, MorphismError) as exc:
        return 1, {"error": "substitution failed", "message": str(exc)}
    return 0, {"graph": graph_to_json(po.p)}


def _read_kleisli(path: str):
    try:
        return kleisli_from_json(read_json(path))
    except (KleisliError, GraphValidationError, MorphismError) as exc:
        raise InputError({"error": "invalid Kleisli map", "file": path, "message": str(exc)}) from None


def cmd_factorize(args) -> tuple[int, object]:
    f = _read_kleisli(args.file)
    fac = factorize(f)
    return 0, {"refinement": kleisli_to_json(fac.refinement), "middle": graph_to_json(fac.middle),
               "free": morphism_to_json(fac.free)}


def cmd_compose(args) -> tuple[int, object]:
    f, g = _read_kleisli(args.first), _read_kleisli(args.second)
    try:
        h = compose(f, g)
    except KleisliError as exc:
        return 1, {"error": "not composable", "message": str(exc)}
    return 0, kleisli_to_json(h)


def cmd_bar(args) -> tuple[int, object]:
    x = read_graph_or_hypergraph(args.file)
    b = bar(x, args.max_nodes)
    if args.emit_ghyp:
        with open(args.emit_ghyp, "w") as fh:
            json.dump(ghypergraph_to_json(b.hypergraph), fh, indent=1, sort_keys=True)
    nodes = []
    for c in b.etale.classes:
        nodes.append({"nodes": c.graph.n_nodes, "imports": len(c.graph.imports), "exports": len(c.graph.exports),
                      "deck_order": len(c.deck),
                      "node_images": [x.node_name(v) for v in c.to_x.nu],
                      "edge_images": [x.edge_name(a) for a in c.to_x.alpha]})
    return 0, {"max_nodes": args.max_nodes, "hyperedges": x.n_edges, "nodes": nodes,
               "marked_imports": b.etale.et_in.n_objects, "marked_exports": b.etale.et_out.n_objects}


def cmd_verify_bar(args) -> tuple[int, object]:
    x = read_graph_or_hypergraph(args.file)
    report = verify_bar_theorem(x, args.inputs, args.outputs, args.max_nodes)
    rows = [{"component": k, "mapping_order": a, "formula_order": b} for k, a, b in report.table()]
    return (0 if report.passed else 1), {"result": "PASS" if report.passed else "FAIL",
                                         "biarity": [args.inputs, args.outputs], "max_nodes": args.max_nodes,
                                         "components": rows, "problems": report.problems}


def cmd_dot(args) -> tuple[int, object]:
    return 0, emit_dot(read_graph_or_hypergraph(args.file))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="digraphical", description="Directed graphs, properads and hypergraphs.")
    parser.add_argument("--seed", type=int, default=0, help="seed for any randomised step")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = sub.add_parser("validate", help="validate a graph (or hypergraph) file")
    p.add_argument("file")
    p.add_argument("--hypergraph", action="store_true")
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("check", help="report connectivity, acyclicity, loops and closedness")
    p.add_argument("file")
    for flag in ("connected", "acyclic", "loopfree", "closed"):
        p.add_argument(f"--{flag}", action="store_true")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("hom", help="list graph morphisms")
    p.add_argument("source")
    p.add_argument("target")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--etale", action="store_true")
    kind.add_argument("--inclusion", action="store_true")
    p.set_defaults(run=cmd_hom)

    p = sub.add_parser("aut", help="automorphism group")
    p.add_argument("file")
    p.add_argument("--fix-ports", action="store_true")
    p.set_defaults(run=cmd_aut)

    p = sub.add_parser("core", help="closed graph of inner edges")
    p.add_argument("file")
    p.add_argument("--hypergraph", action="store_true")
    p.set_defaults(run=cmd_core)

    p = sub.add_parser("residue", help="ports of a connected graph")
    p.add_argument("file")
    p.set_defaults(run=cmd_residue)

    p = sub.add_parser("glue", help="connect exports to imports, or glue two hypergraphs")
    p.add_argument("file")
    p.add_argument("other", nargs="?")
    p.add_argument("--pair", nargs=2, action="append", default=[], metavar=("A", "B"))
    p.set_defaults(run=cmd_glue)

    p = sub.add_parser("elements", help="category of elements and its colimit")
    p.add_argument("file")
    p.set_defaults(run=cmd_elements)

    p = sub.add_parser("complement", help="complement of the open hull of some nodes")
    p.add_argument("file")
    p.add_argument("--nodes", required=True, help="comma-separated node names")
    p.add_argument("--naive", action="store_true")
    p.set_defaults(run=cmd_complement)

    p = sub.add_parser("convex", help="is the open hull of some nodes convex?")
    p.add_argument("file")
    p.add_argument("--nodes", required=True)
    p.set_defaults(run=cmd_convex)

    for verb, run, text in (("enumerate", cmd_enumerate, "connected acyclic graphs up to iso"),
                            ("free-properad", cmd_free_properad, "free properad on a species, by grade")):
        p = sub.add_parser(verb, help=text)
        if verb == "free-properad":
            p.add_argument("species")
        else:
            p.add_argument("--arities", type=_arities, default={(1, 1)}, help='allowed node biarities as "i:o,i:o"')
            p.add_argument("--shape", choices=SHAPES, default="any")
        p.add_argument("--in", dest="inputs", type=int, required=True)
        p.add_argument("--out", dest="outputs", type=int, required=True)
        p.add_argument("--max-nodes", type=int, required=True)
        p.set_defaults(run=run)

    p = sub.add_parser("substitute", help="substitute a graph into a node")
    p.add_argument("file")
    p.add_argument("--node", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--imports", help="comma-separated edges of the inserted graph, in input order")
    p.add_argument("--exports")
    p.set_defaults(run=cmd_substitute)

    p = sub.add_parser("factorize", help="refinement followed by free part")
    p.add_argument("file")
    p.set_defaults(run=cmd_factorize)

    p = sub.add_parser("compose", help="compose two Kleisli maps, first then second")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(run=cmd_compose)

    p = sub.add_parser("bar", help="etale maps into X up to a node bound")
    p.add_argument("file")
    p.add_argument("--max-nodes", type=int, required=True)
    p.add_argument("--emit-ghyp", metavar="OUT")
    p.set_defaults(run=cmd_bar)

    p = sub.add_parser("verify-bar", help="compare both sides of the bar theorem")
    p.add_argument("file")
    p.add_argument("--in", dest="inputs", type=int, required=True)
    p.add_argument("--out", dest="outputs", type=int, required=True)
    p.add_argument("--max-nodes", type=int, required=True)
    p.set_defaults(run=cmd_verify_bar)

    p = sub.add_parser("dot", help="Graphviz rendering")
    p.add_argument("file")
    p.set_defaults(run=cmd_dot)
    return parser


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    random.seed(args.seed)
    try:
        code, payload = args.run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        code, payload = 1, exc.payload
    if isinstance(payload, str):
        out.write(payload)
    else:
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
