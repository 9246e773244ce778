"""Maps that send nodes to graphs: refinements, free maps and their interplay.

A Kleisli map R -> Y sends each edge of R to an edge of Y and each node x of
R to a connected graph G_x with an etale map G_x -> Y, together with a
numbering of the ports of G_x matching the flags of x. Gluing the G_x along R
gives a graph Q with an induced etale map Q -> Y. The map is a refinement when
that comparison is invertible and free when every G_x is a single corolla.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .assembly import (
    AssemblyError,
    ComplementMode,
    GluedGraph,
    GluingDatum,
    GraphOfGraphs,
    canonical_neighbourhood,
    coequalize,
    colimit_of_graph_of_graphs,
    complement,
    is_convex,
    open_hull,
    shared_boundary,
)
from .digraph import (
    Graph,
    GraphMorphism,
    HomKind,
    disjoint_union,
    graph_from_json,
    graph_to_json,
    identity,
    is_acyclic,
    is_connected,
    is_etale,
    is_inclusion,
    iter_homs,
    morphism_from_json,
    morphism_to_json,
    residue,
    unit,
)
from .symmetry import PortedGraph, enumerate_graphs, isomorphisms


class KleisliError(ValueError):
    pass


class NotFound(LookupError):
    pass


class NotConvex(ValueError):
    pass


@dataclass(frozen=True)
class NodeAssignment:
    graph: Graph
    to_codomain: GraphMorphism
    import_order: tuple[int, ...]
    export_order: tuple[int, ...]

    @property
    def ported(self) -> PortedGraph:
        return PortedGraph(self.graph, self.import_order, self.export_order)


@dataclass(frozen=True)
class KleisliMap:
    domain: Graph
    codomain: Graph
    edge_map: tuple[int, ...]
    nodes: tuple[NodeAssignment, ...]

    def __post_init__(self):
        object.__setattr__(self, "edge_map", tuple(self.edge_map))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        problem = kleisli_problem(self)
        if problem:
            raise KleisliError(problem)

    def graph_of_graphs(self) -> GraphOfGraphs:
        r = self.domain
        in_maps = [0] * r.n_in
        out_maps = [0] * r.n_out
        for x, a in enumerate(self.nodes):
            for k, fl in enumerate(r.in_flags_of(x)):
                in_maps[fl] = a.import_order[k]
            for k, fl in enumerate(r.out_flags_of(x)):
                out_maps[fl] = a.export_order[k]
        return GraphOfGraphs(r, tuple(a.graph for a in self.nodes), tuple(in_maps), tuple(out_maps))

    def glue(self) -> tuple[GluedGraph, GraphMorphism]:
        """The glued graph Q and the induced etale comparison Q -> codomain."""
        glued = colimit_of_graph_of_graphs(self.graph_of_graphs())
        q = glued.graph
        alpha: list[Optional[int]] = [None] * q.n_edges
        nu: dict[int, int] = {}

        def put(e: int, a: int):
            if alpha[e] is None:
                alpha[e] = a
            elif alpha[e] != a:
                raise KleisliError(f"glued edge {e} would go to both {alpha[e]} and {a}")

        for e in range(self.domain.n_edges):
            put(glued.edge_image[e], self.edge_map[e])
        for x, a in enumerate(self.nodes):
            leg = glued.legs[x]
            for e in range(a.graph.n_edges):
                put(leg.alpha[e], a.to_codomain.alpha[e])
            for y in range(a.graph.n_nodes):
                nu[leg.nu[y]] = a.to_codomain.nu[y]
        phi = GraphMorphism.from_edge_map(q, self.codomain, tuple(alpha), nu)
        return glued, phi


def kleisli_problem(f: KleisliMap) -> Optional[str]:
    r, y = f.domain, f.codomain
    if len(f.edge_map) != r.n_edges or any(not 0 <= a < y.n_edges for a in f.edge_map):
        return "edge map has the wrong shape"
    if len(f.nodes) != r.n_nodes:
        return "one assignment per node is required"
    for x, a in enumerate(f.nodes):
        if a.to_codomain.source != a.graph or a.to_codomain.target != y:
            return f"node {x}: assigned map does not go from its graph to the codomain"
        if not is_etale(a.to_codomain):
            return f"node {x}: assigned map is not etale"
        if not is_connected(a.graph):
            return f"node {x}: assigned graph is not connected"
        if not is_acyclic(a.graph):
            return f"node {x}: assigned graph has a directed cycle"
        try:
            PortedGraph(a.graph, a.import_order, a.export_order)
        except ValueError as exc:
            return f"node {x}: {exc}"
        if (len(a.import_order), len(a.export_order)) != r.biarity(x):
            return f"node {x}: residue {r.biarity(x)} does not match its graph"
        for k, fl in enumerate(r.in_flags_of(x)):
            if f.edge_map[r.s[fl]] != a.to_codomain.alpha[a.import_order[k]]:
                return f"node {x}: input {k} disagrees with the edge map"
        for k, fl in enumerate(r.out_flags_of(x)):
            if f.edge_map[r.t[fl]] != a.to_codomain.alpha[a.export_order[k]]:
                return f"node {x}: output {k} disagrees with the edge map"
    return None


# ---------------------------------------------------------------- constructions


def free(e: GraphMorphism) -> KleisliMap:
    """An etale map seen as a Kleisli map: each node goes to its own corolla."""
    if not is_etale(e):
        raise KleisliError("only etale maps are free Kleisli maps")
    r = e.source
    nodes = []
    for x in range(r.n_nodes):
        cov = canonical_neighbourhood(r, x)
        a, b = r.biarity(x)
        nodes.append(NodeAssignment(cov.cover, cov.map.then(e), tuple(range(a)), tuple(range(a, a + b))))
    return KleisliMap(r, e.target, e.alpha, tuple(nodes))


def kleisli_identity(r: Graph) -> KleisliMap:
    return free(identity(r))


@dataclass(frozen=True)
class KleisliClass:
    refinement: bool
    free: bool


def classify_kleisli(f: KleisliMap) -> KleisliClass:
    _, phi = f.glue()
    return KleisliClass(refinement=phi.is_iso(), free=all(a.graph.n_nodes == 1 for a in f.nodes))


def is_refinement(f: KleisliMap) -> bool:
    return classify_kleisli(f).refinement


def kleisli_equal(f: KleisliMap, g: KleisliMap) -> bool:
    """Equal edge maps, and node by node an isomorphism of assigned graphs over the codomain."""
    if f.domain != g.domain or f.codomain != g.codomain or f.edge_map != g.edge_map:
        return False
    for a, b in zip(f.nodes, g.nodes):
        if not _assignment_iso(a, b):
            return False
    return True


def _assignment_iso(a: NodeAssignment, b: NodeAssignment) -> Optional[GraphMorphism]:
    found = isomorphisms(
        a.ported, b.ported, fix_ports=True, limit=1,
        node_labels=(list(a.to_codomain.nu), list(b.to_codomain.nu)),
        edge_labels=(list(a.to_codomain.alpha), list(b.to_codomain.alpha)),
    )
    return found[0] if found else None


# ---------------------------------------------------------------- factorization


@dataclass(frozen=True)
class Factorization:
    refinement: KleisliMap
    middle: Graph
    free: GraphMorphism


def factorize(f: KleisliMap) -> Factorization:
    """Refinement onto the glued graph followed by the etale comparison."""
    glued, phi = f.glue()
    nodes = tuple(NodeAssignment(a.graph, glued.legs[x], a.import_order, a.export_order)
                  for x, a in enumerate(f.nodes))
    r = KleisliMap(f.domain, glued.graph, glued.edge_image, nodes)
    return Factorization(r, glued.graph, phi)


def factorization_iso(first: Factorization, second: Factorization) -> Optional[GraphMorphism]:
    """An isomorphism between middle graphs over the codomain, compatible with both refinements."""
    def labels(fac: Factorization):
        owner = [None] * fac.middle.n_nodes
        for x, a in enumerate(fac.refinement.nodes):
            for v in a.to_codomain.nu:
                owner[v] = x
        from_r: list[list[int]] = [[] for _ in range(fac.middle.n_edges)]
        for e, a in enumerate(fac.refinement.edge_map):
            from_r[a].append(e)
        nodes = [(owner[v], fac.free.nu[v]) for v in range(fac.middle.n_nodes)]
        edges = [(fac.free.alpha[e], tuple(from_r[e])) for e in range(fac.middle.n_edges)]
        return nodes, edges

    n1, e1 = labels(first)
    n2, e2 = labels(second)
    for sigma in isomorphisms(first.middle, second.middle, node_labels=(n1, n2), edge_labels=(e1, e2)):
        shifted = compose(first.refinement, free(sigma))
        if kleisli_equal(shifted, second.refinement):
            return sigma
    return None


# ---------------------------------------------------------------- composition


def compose(f: KleisliMap, g: KleisliMap) -> KleisliMap:
    """First f: R -> Q, then g: Q -> Q'."""
    if f.codomain != g.domain:
        raise KleisliError("codomain of the first map is not the domain of the second")
    q = f.codomain
    nodes = []
    for x, a in enumerate(f.nodes):
        gx, p = a.graph, a.to_codomain
        in_maps = []
        for fl in range(gx.n_in):
            target_flag = p.iota[fl]
            y = q.p[target_flag]
            in_maps.append(g.nodes[y].import_order[q.in_flags_of(y).index(target_flag)])
        out_maps = []
        for fl in range(gx.n_out):
            target_flag = p.omega[fl]
            y = q.q[target_flag]
            out_maps.append(g.nodes[y].export_order[q.out_flags_of(y).index(target_flag)])
        inner = KleisliMap(
            gx, g.codomain, tuple(g.edge_map[p.alpha[e]] for e in range(gx.n_edges)),
            tuple(NodeAssignment(g.nodes[p.nu[v]].graph, g.nodes[p.nu[v]].to_codomain,
                                 tuple(in_maps[fl] for fl in gx.in_flags_of(v)),
                                 tuple(out_maps[fl] for fl in gx.out_flags_of(v)))
                  for v in range(gx.n_nodes)),
        )
        glued, phi = inner.glue()
        nodes.append(NodeAssignment(glued.graph, phi,
                                    tuple(glued.edge_image[e] for e in a.import_order),
                                    tuple(glued.edge_image[e] for e in a.export_order)))
    return KleisliMap(f.domain, g.codomain, tuple(g.edge_map[a] for a in f.edge_map), tuple(nodes))


def refactor(e: GraphMorphism, r: KleisliMap) -> tuple[KleisliMap, GraphMorphism]:
    """Turn etale-then-refinement into refinement-then-etale."""
    if not is_etale(e) or e.target != r.domain:
        raise KleisliError("refactor needs an etale map into the domain of the refinement")
    if not is_refinement(r):
        raise KleisliError("refactor needs a refinement")
    rp, base = e.source, r.domain
    pulled = []
    for x in range(rp.n_nodes):
        a = r.nodes[e.nu[x]]
        ins = tuple(a.import_order[base.in_flags_of(e.nu[x]).index(e.iota[fl])] for fl in rp.in_flags_of(x))
        outs = tuple(a.export_order[base.out_flags_of(e.nu[x]).index(e.omega[fl])] for fl in rp.out_flags_of(x))
        pulled.append(NodeAssignment(a.graph, a.to_codomain, ins, outs))
    over_q = KleisliMap(rp, r.codomain, tuple(r.edge_map[a] for a in e.alpha), tuple(pulled))
    fac = factorize(over_q)
    return fac.refinement, fac.free


# ---------------------------------------------------------------- pushouts and substitution


@dataclass(frozen=True)
class PushoutResult:
    p: Graph
    r_star: KleisliMap
    q_star: GraphMorphism
    complement_iso: GraphMorphism  # from the complement of Q in P to the complement of H in G


def pushout_refinement(h: GraphMorphism, r: KleisliMap) -> PushoutResult:
    """Extend r to G by sending nodes outside H to their canonical neighbourhoods."""
    if not (is_etale(h) and is_inclusion(h)):
        raise KleisliError("the first leg must be an open inclusion")
    if r.domain != h.source or not is_refinement(r):
        raise KleisliError("the second leg must be a refinement out of H")
    g = h.target
    if not is_connected(g):
        raise KleisliError("G must be connected")
    h_node = {v: x for x, v in enumerate(h.nu)}
    in_pre = {fl: k for k, fl in enumerate(h.iota)}
    out_pre = {fl: k for k, fl in enumerate(h.omega)}
    graphs, in_maps, out_maps = [], [0] * g.n_in, [0] * g.n_out
    for v in range(g.n_nodes):
        if v in h_node:
            a = r.nodes[h_node[v]]
            graphs.append(a.graph)
            xh = h_node[v]
            for fl in g.in_flags_of(v):
                in_maps[fl] = a.import_order[h.source.in_flags_of(xh).index(in_pre[fl])]
            for fl in g.out_flags_of(v):
                out_maps[fl] = a.export_order[h.source.out_flags_of(xh).index(out_pre[fl])]
        else:
            cov = canonical_neighbourhood(g, v)
            graphs.append(cov.cover)
            k = len(g.in_flags_of(v))
            for i, fl in enumerate(g.in_flags_of(v)):
                in_maps[fl] = i
            for i, fl in enumerate(g.out_flags_of(v)):
                out_maps[fl] = k + i
    gg = GraphOfGraphs(g, tuple(graphs), tuple(in_maps), tuple(out_maps))
    glued = colimit_of_graph_of_graphs(gg)
    p = glued.graph
    r_star = KleisliMap(g, p, glued.edge_image, tuple(
        NodeAssignment(graphs[v], glued.legs[v],
                       tuple(in_maps[fl] for fl in g.in_flags_of(v)),
                       tuple(out_maps[fl] for fl in g.out_flags_of(v)))
        for v in range(g.n_nodes)))

    q = r.codomain
    alpha: list[Optional[int]] = [None] * q.n_edges
    nu: dict[int, int] = {}
    for e_h, a in enumerate(r.edge_map):
        alpha[a] = glued.edge_image[h.alpha[e_h]]
    for xh, a in enumerate(r.nodes):
        leg = glued.legs[h.nu[xh]]
        for e in range(a.graph.n_edges):
            target = leg.alpha[e]
            if alpha[a.to_codomain.alpha[e]] not in (None, target):
                raise AssemblyError("inconsistent image of Q in P")
            alpha[a.to_codomain.alpha[e]] = target
        for y in range(a.graph.n_nodes):
            nu[a.to_codomain.nu[y]] = leg.nu[y]
    q_star = GraphMorphism.from_edge_map(q, p, tuple(alpha), nu)
    assert is_etale(q_star) and is_inclusion(q_star)
    return PushoutResult(p, r_star, q_star, _complement_iso(h, glued, q_star))


def _complement_iso(h: GraphMorphism, glued: GluedGraph, q_star: GraphMorphism) -> GraphMorphism:
    g = h.target
    cg, cg_inc = complement(h, ComplementMode.ETALE)
    cp, cp_inc = complement(q_star, ComplementMode.ETALE)
    # label everything by where it comes from in G
    g_edge_of_p = {a: e for e, a in enumerate(glued.edge_image)}
    g_node_of_p = {glued.legs[v].nu[0]: v for v in range(g.n_nodes) if v not in set(h.nu)}
    p_nodes = [g_node_of_p.get(cp_inc.nu[v], -1) for v in range(cp.n_nodes)]
    p_edges = [g_edge_of_p.get(cp_inc.alpha[e], -1) for e in range(cp.n_edges)]
    g_nodes = list(cg_inc.nu)
    g_edges = list(cg_inc.alpha)
    found = isomorphisms(cp, cg, node_labels=(p_nodes, g_nodes), edge_labels=(p_edges, g_edges), limit=1)
    if not found:
        raise AssemblyError("the complements of Q in P and of H in G are not isomorphic")
    return found[0]


def substitute_node(g: Graph, x: int, q: Graph, import_order: Sequence[int],
                    export_order: Sequence[int]) -> PushoutResult:
    """Substitute q into node x of g; the k-th input of x goes to import_order[k]."""
    cov = canonical_neighbourhood(g, x)
    h = cov.map
    ref = KleisliMap(cov.cover, q, tuple(list(import_order) + list(export_order)),
                     (NodeAssignment(q, identity(q), tuple(import_order), tuple(export_order)),))
    return pushout_refinement(h, ref)


@dataclass(frozen=True)
class Substitution:
    g: Graph
    node: int
    refinement: KleisliMap  # from the corolla of the node onto Q
    inclusion: GraphMorphism  # the corolla as an open subgraph of g


def convex_to_substitution(q: GraphMorphism) -> Substitution:
    """Collapse a convex connected open subgraph Q of P to a single node."""
    if not (is_etale(q) and is_inclusion(q)):
        raise KleisliError("expected an open inclusion")
    qg, p = q.source, q.target
    if not is_connected(qg) or qg.n_nodes == 0:
        raise KleisliError("Q must be connected with at least one node")
    if not is_acyclic(p):
        raise KleisliError("P must be acyclic")
    res = residue(qg)
    cor = res.corolla
    m = res.import_bij.dom_size
    c, c_inc = complement(q, ComplementMode.ETALE)
    total, (inj_cor, inj_c) = disjoint_union([cor, c])
    q_pre = {a: e for e, a in enumerate(q.alpha)}
    c_pre = {a: e for e, a in enumerate(c_inc.alpha)}
    pairs = []
    for a in shared_boundary(q, c_inc):
        e_q = q_pre[a]
        e_c = inj_c.alpha[c_pre[a]]
        if e_q in res.import_bij.table:
            pairs.append((e_c, inj_cor.alpha[res.import_bij.table.index(e_q)]))
        else:
            pairs.append((inj_cor.alpha[m + res.export_bij.table.index(e_q)], e_c))
    g, quot = coequalize(GluingDatum.from_pairs(total, pairs))
    if not is_acyclic(g):
        raise NotConvex("collapsing Q creates a cycle, so Q is not convex")
    inclusion = inj_cor.then(quot)
    ref = KleisliMap(cor, qg, tuple(res.import_bij.table) + tuple(res.export_bij.table),
                     (NodeAssignment(qg, identity(qg), tuple(res.import_bij.table),
                                     tuple(res.export_bij.table)),))
    return Substitution(g, inclusion.nu[0], ref, inclusion)


# ---------------------------------------------------------------- hom-sets


def refinement_homset(r: Graph, y: Graph, allow_units: bool = True) -> list[KleisliMap]:
    """Every refinement r -> y: node blocks covering y once, port matchings, colimit y.

    A (1,1) node of r may be sent to a bare unit graph sitting on any edge of y.
    Pass allow_units=False to count only refinements whose pieces all have nodes.
    """
    if not (is_connected(r) and is_connected(y)):
        raise KleisliError("refinements are between connected graphs")
    if not is_acyclic(y):
        # every node would need a cyclic piece, and assigned graphs are acyclic
        return []
    out = []
    n_r, n_y = r.n_nodes, y.n_nodes
    if n_r == 0:
        # r is a unit graph; a refinement sends it onto a unit y
        if n_y == 0:
            nodes: tuple = ()
            out.append(KleisliMap(r, y, (0,), nodes))
        return out
    hulls: dict[frozenset, tuple[Graph, GraphMorphism]] = {}
    for owner in itertools.product(range(n_r), repeat=n_y):
        blocks = [frozenset(v for v in range(n_y) if owner[v] == x) for x in range(n_r)]
        pieces = []
        for x, block in enumerate(blocks):
            if block:
                if block not in hulls:
                    hulls[block] = open_hull(y, block)
                hg, inc = hulls[block]
                if not is_connected(hg) or (len(hg.imports), len(hg.exports)) != r.biarity(x):
                    break
                pieces.append([(hg, inc)])
            else:
                if not allow_units or r.biarity(x) != (1, 1):
                    break
                u = unit()
                pieces.append([(u, GraphMorphism(u, y, (a,), (), (), ())) for a in range(y.n_edges)])
        else:
            for choice in itertools.product(*pieces):
                out.extend(_refinements_with(r, y, choice))
    return out


def _refinements_with(r: Graph, y: Graph, choice) -> Iterable[KleisliMap]:
    per_node = []
    for x, (hg, inc) in enumerate(choice):
        per_node.append([(ins, outs) for ins in itertools.permutations(hg.imports)
                         for outs in itertools.permutations(hg.exports)])
    for orders in itertools.product(*per_node):
        edge_map: list[Optional[int]] = [None] * r.n_edges
        ok = True
        for x, ((hg, inc), (ins, outs)) in enumerate(zip(choice, orders)):
            for k, fl in enumerate(r.in_flags_of(x)):
                ok &= _settle(edge_map, r.s[fl], inc.alpha[ins[k]])
            for k, fl in enumerate(r.out_flags_of(x)):
                ok &= _settle(edge_map, r.t[fl], inc.alpha[outs[k]])
        if not ok or any(a is None for a in edge_map):
            continue
        f = KleisliMap(r, y, tuple(edge_map), tuple(
            NodeAssignment(hg, inc, ins, outs) for (hg, inc), (ins, outs) in zip(choice, orders)))
        if is_refinement(f):
            yield f


def _settle(table: list, i: int, v: int) -> bool:
    if table[i] is None:
        table[i] = v
        return True
    return table[i] == v


def ybar_elements(y: Graph, m: int, n: int, max_nodes: int) -> list[NodeAssignment]:
    """Iso classes of (m,n)-graphs with an etale map to y, up to max_nodes nodes."""
    menu = {y.biarity(v) for v in range(y.n_nodes)}
    out = []
    for pg in enumerate_graphs(m, n, max_nodes, menu):
        auts = isomorphisms(pg, pg, fix_ports=True)
        seen: set = set()
        for p in iter_homs(pg.graph, y, HomKind.ETALE):
            if p.key() in seen:
                continue
            for s in auts:
                seen.add(s.then(p).key())
            out.append(NodeAssignment(pg.graph, p, pg.import_order, pg.export_order))
    return out


def kleisli_homset(r: Graph, y: Graph, max_nodes: int) -> list[KleisliMap]:
    """All Kleisli maps r -> y whose assigned graphs have at most max_nodes nodes."""
    per_node = [ybar_elements(y, *r.biarity(x), max_nodes) for x in range(r.n_nodes)]
    out = []
    for choice in itertools.product(*per_node):
        edge_map: list[Optional[int]] = [None] * r.n_edges
        ok = True
        for x, a in enumerate(choice):
            for k, fl in enumerate(r.in_flags_of(x)):
                ok &= _settle(edge_map, r.s[fl], a.to_codomain.alpha[a.import_order[k]])
            for k, fl in enumerate(r.out_flags_of(x)):
                ok &= _settle(edge_map, r.t[fl], a.to_codomain.alpha[a.export_order[k]])
            if not ok:
                break
        if not ok:
            continue
        free_edges = [e for e in range(r.n_edges) if edge_map[e] is None]
        for extra in itertools.product(range(y.n_edges), repeat=len(free_edges)):
            em = list(edge_map)
            for e, a in zip(free_edges, extra):
                em[e] = a
            out.append(KleisliMap(r, y, tuple(em), tuple(choice)))
    return out


def pushout_universal_check(h: GraphMorphism, r: KleisliMap, po: PushoutResult,
                            targets: Sequence[Graph], max_nodes: int) -> dict:
    """Brute force: every cocone into each target factors through P exactly once."""
    hf = free(h)
    qf = free(po.q_star)
    cocones = 0
    failures = []
    for z in targets:
        from_g = kleisli_homset(h.target, z, max_nodes)
        from_q = kleisli_homset(r.codomain, z, max_nodes)
        from_p = kleisli_homset(po.p, z, max_nodes)
        for u in from_g:
            hu = compose(hf, u)
            for v in from_q:
                if not kleisli_equal(hu, compose(r, v)):
                    continue
                cocones += 1
                ws = [w for w in from_p
                      if kleisli_equal(compose(po.r_star, w), u) and kleisli_equal(compose(qf, w), v)]
                if len(ws) != 1:
                    failures.append({"target": z, "factorizations": len(ws)})
    return {"cocones": cocones, "failures": failures}


# ---------------------------------------------------------------- generic fillers


def find_generic_filler(g: KleisliMap, e: KleisliMap, f: GraphMorphism, h: GraphMorphism) -> GraphMorphism:
    """A diagonal d: G -> X with f d = h and d after g equal to e.

    The square has refinement g: A -> G on the left, e: A -> X on top, free
    f: X -> Y on the right and free h: G -> Y at the bottom. Following the
    existence proof, e is factored as a refinement A -> Q' and an etale map
    Q' -> X, and a free isomorphism G -> Q' over Y is searched for.
    """
    if not is_refinement(g):
        raise KleisliError("the left leg must be a refinement")
    if not kleisli_equal(compose(e, free(f)), compose(g, free(h))):
        raise KleisliError("the square does not commute")
    fac = factorize(e)
    target = fac.free.then(f)
    g_nodes = [h.nu[v] for v in range(g.codomain.n_nodes)]
    q_nodes = [target.nu[v] for v in range(fac.middle.n_nodes)]
    g_edges = [h.alpha[a] for a in range(g.codomain.n_edges)]
    q_edges = [target.alpha[a] for a in range(fac.middle.n_edges)]
    for sigma in isomorphisms(g.codomain, fac.middle, node_labels=(g_nodes, q_nodes),
                              edge_labels=(g_edges, q_edges)):
        if kleisli_equal(compose(g, free(sigma)), fac.refinement):
            d = sigma.then(fac.free)
            assert d.then(f).key() == h.key()
            return d
    raise NotFound("no filler: the square is malformed")


def all_generic_fillers(g: KleisliMap, e: KleisliMap, f: GraphMorphism, h: GraphMorphism) -> list[GraphMorphism]:
    """Every diagonal, by brute force over etale maps G -> X."""
    out = []
    for d in iter_homs(g.codomain, e.codomain, HomKind.ETALE):
        if d.then(f).key() == h.key() and kleisli_equal(compose(g, free(d)), e):
            out.append(d)
    return out


# ---------------------------------------------------------------- the convex subcategory


def in_hry_subcategory(f: KleisliMap) -> bool:
    """True when the free part is a convex open inclusion."""
    fac = factorize(f)
    phi = fac.free
    if not (is_etale(phi) and is_inclusion(phi)):
        return False
    if not is_acyclic(f.codomain):
        raise KleisliError("convexity is only defined in acyclic graphs")
    if phi.is_iso():
        return True
    return is_convex(phi)


# ---------------------------------------------------------------- shuffling and JSON


def relabel_assignment(a: NodeAssignment, rng: random.Random) -> NodeAssignment:
    """The same assignment on a randomly renumbered copy of its graph."""
    from .symmetry import random_relabel

    g2, iso = random_relabel(a.graph, rng)
    inv = iso.inverse()
    return NodeAssignment(g2, inv.then(a.to_codomain),
                          tuple(iso.alpha[e] for e in a.import_order),
                          tuple(iso.alpha[e] for e in a.export_order))


def shuffle_representatives(f: KleisliMap, rng: random.Random) -> KleisliMap:
    return KleisliMap(f.domain, f.codomain, f.edge_map,
                      tuple(relabel_assignment(a, rng) for a in f.nodes))


def kleisli_to_json(f: KleisliMap) -> dict:
    r, y = f.domain, f.codomain
    nodes = {}
    for x, a in enumerate(f.nodes):
        nodes[r.node_name(x)] = {
            "graph": graph_to_json(a.graph),
            "etale_to_codomain": morphism_to_json(a.to_codomain),
            "import_order": [a.graph.edge_name(e) for e in a.import_order],
            "export_order": [a.graph.edge_name(e) for e in a.export_order],
        }
    return {
        "domain": graph_to_json(r),
        "codomain": graph_to_json(y),
        "edge_map": {r.edge_name(e): y.edge_name(a) for e, a in enumerate(f.edge_map)},
        "nodes": nodes,
    }


def kleisli_from_json(obj: dict) -> KleisliMap:
    try:
        r = graph_from_json(obj["domain"])
        y = graph_from_json(obj["codomain"])
        r_edges = {r.edge_name(e): e for e in range(r.n_edges)}
        y_edges = {y.edge_name(e): e for e in range(y.n_edges)}
        edge_map = [None] * r.n_edges
        for k, v in obj["edge_map"].items():
            edge_map[r_edges[k]] = y_edges[v]
        if any(a is None for a in edge_map):
            raise KleisliError("edge map is not total")
        nodes = []
        for x in range(r.n_nodes):
            entry = obj["nodes"][r.node_name(x)]
            gx = graph_from_json(entry["graph"])
            names = {gx.edge_name(e): e for e in range(gx.n_edges)}
            nodes.append(NodeAssignment(
                gx, morphism_from_json(entry["etale_to_codomain"], gx, y),
                tuple(names[e] for e in entry["import_order"]),
                tuple(names[e] for e in entry["export_order"]),
            ))
        return KleisliMap(r, y, tuple(edge_map), tuple(nodes))
    except (KeyError, TypeError) as exc:
        raise KleisliError(f"malformed Kleisli map: missing {exc}") from exc
