"""Discrete directed hypergraphs.

A hypergraph has the same shape A <- I -> N <- O -> A as a graph, but s and t need
not be injective.  Instead each node sees a hyperedge at most once on each side:
I -> A x N and O -> N x A are relations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from .assembly import ElementsCategory, elements
from .digraph import (
    Diagram,
    GraphMorphism,
    GraphValidationError,
    Violation,
    closed_graph,
    graph_to_json,
    is_etale,
    parse_diagram,
)
from .finsets import UnionFind


class RelationViolation(GraphValidationError):
    """An edge is repeated within one node's in- or out-list."""

    def __init__(self, node: int, edge: int, side: str):
        self.node, self.edge, self.side = node, edge, side
        super().__init__([Violation("RelationViolation", {"node": node, "edge": edge, "side": side})])


def relation_violations(d: Diagram) -> list[tuple[int, int, str]]:
    out = []
    for side, lists in (("in", d.in_edges_of), ("out", d.out_edges_of)):
        for x in range(d.n_nodes):
            seen = set()
            for e in lists(x):
                if e in seen:
                    out.append((x, e, side))
                seen.add(e)
    return out


class Hypergraph(Diagram):
    """A diagram whose I -> A x N and O -> N x A are injective."""

    def _check(self) -> None:
        bad = relation_violations(self)
        if bad:
            raise RelationViolation(*bad[0])

    @property
    def is_loopfree(self) -> bool:
        """True when no node has the same hyperedge as both input and output."""
        return all(not set(self.in_edges_of(x)) & set(self.out_edges_of(x)) for x in range(self.n_nodes))

    def in_flags_at_edge(self, a: int) -> list[int]:
        return [f for f in range(self.n_in) if self.s[f] == a]

    def out_flags_at_edge(self, a: int) -> list[int]:
        return [f for f in range(self.n_out) if self.t[f] == a]

    def is_graph(self) -> bool:
        return len(set(self.s)) == len(self.s) and len(set(self.t)) == len(self.t)


def validate_hypergraph(raw: Diagram) -> Hypergraph:
    return Hypergraph(raw.n_edges, raw.n_nodes, raw.s, raw.p, raw.q, raw.t,
                      edge_names=raw.edge_names, node_names=raw.node_names)


def as_hypergraph(g: Diagram) -> Hypergraph:
    return g if isinstance(g, Hypergraph) else validate_hypergraph(g)


# ---------------------------------------------------------------- core


def hyper_core(x: Diagram) -> tuple:
    """The closed graph with one edge per pair (out-flag, in-flag) over a shared hyperedge.

    Returns (core, counit).  The counit is a morphism of diagrams into x; it need not be
    injective on edges because a hyperedge realises many connections.
    """
    pairs = [(o, i) for o in range(x.n_out) for i in range(x.n_in) if x.t[o] == x.s[i]]
    c = closed_graph(x.n_nodes, [x.q[o] for o, _ in pairs], [x.p[i] for _, i in pairs])
    # closed_graph numbers both the in-flags and the out-flags by edge index
    counit = GraphMorphism(
        c, x,
        tuple(x.t[o] for o, _ in pairs),
        tuple(i for _, i in pairs),
        tuple(range(x.n_nodes)),
        tuple(o for o, _ in pairs),
    )
    return c, counit


# ---------------------------------------------------------------- digraphs and the dual embedding


@dataclass(frozen=True)
class Digraph:
    """A closed directed multigraph E => V."""

    n_vertices: int
    src: tuple[int, ...]
    tgt: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "tgt", tuple(self.tgt))
        if len(self.src) != len(self.tgt):
            raise ValueError("src and tgt must have the same length")
        if any(not 0 <= v < self.n_vertices for v in self.src + self.tgt):
            raise ValueError("arrow endpoint out of range")

    @property
    def n_arrows(self) -> int:
        return len(self.src)


def digraph_homs(d: Digraph, e: Digraph) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All (vertex map, arrow map) pairs commuting with source and target."""
    for vmap in itertools.product(range(e.n_vertices), repeat=d.n_vertices):
        choices = []
        for a in range(d.n_arrows):
            want = (vmap[d.src[a]], vmap[d.tgt[a]])
            choices.append([b for b in range(e.n_arrows) if (e.src[b], e.tgt[b]) == want])
        for amap in itertools.product(*choices):
            yield vmap, amap


def dual_embed(d: Digraph) -> Hypergraph:
    """Vertices become hyperedges and arrows become (1,1) nodes."""
    return Hypergraph(d.n_vertices, d.n_arrows, d.src, tuple(range(d.n_arrows)),
                      tuple(range(d.n_arrows)), d.tgt)


def dual_right_adjoint(x: Diagram) -> tuple[Digraph, list[tuple[int, int]]]:
    """The digraph of pairs (in-flag, out-flag) at a common node, from s(in) to t(out).

    Also returns the list of pairs, indexed like the arrows.
    """
    pairs = [(i, o) for i in range(x.n_in) for o in range(x.n_out) if x.p[i] == x.q[o]]
    return Digraph(x.n_edges, tuple(x.s[i] for i, _ in pairs), tuple(x.t[o] for _, o in pairs)), pairs


def transpose_to_digraph(f: GraphMorphism, d: Digraph) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Send a map dual_embed(d) -> x to the corresponding digraph map d -> dual_right_adjoint(x)."""
    _, pairs = dual_right_adjoint(f.target)
    index = {pr: k for k, pr in enumerate(pairs)}
    return tuple(f.alpha), tuple(index[(f.iota[a], f.omega[a])] for a in range(d.n_arrows))


def transpose_to_hypergraph(vmap, amap, d: Digraph, x: Diagram) -> GraphMorphism:
    _, pairs = dual_right_adjoint(x)
    iota = tuple(pairs[b][0] for b in amap)
    omega = tuple(pairs[b][1] for b in amap)
    nu = tuple(x.p[i] for i in iota)
    return GraphMorphism(dual_embed(d), x, tuple(vmap), iota, nu, omega)


# ---------------------------------------------------------------- morphisms of diagrams


def diagram_homs(src: Diagram, tgt: Diagram, etale: bool = False) -> Iterator[GraphMorphism]:
    """Brute-force every morphism of diagrams src -> tgt (optionally only etale ones).

    Unlike digraph.iter_homs this does not assume s and t injective, so flags are chosen
    explicitly rather than read off from the edge map.
    """
    nodes = list(range(src.n_nodes))

    def node_ok(x, y):
        return not etale or src.biarity(x) == tgt.biarity(y)

    node_choices = [[y for y in range(tgt.n_nodes) if node_ok(x, y)] for x in nodes]
    for nu in itertools.product(*node_choices):
        slots = []
        for f in range(src.n_in):
            slots.append(("i", f, src.s[f], tgt.in_flags_of(nu[src.p[f]])))
        for f in range(src.n_out):
            slots.append(("o", f, src.t[f], tgt.out_flags_of(nu[src.q[f]])))
        yield from _flag_search(src, tgt, nu, slots, 0, {}, [None] * src.n_in, [None] * src.n_out, etale)


def _flag_search(src, tgt, nu, slots, k, alpha, iota, omega, etale):
    if k == len(slots):
        free = [e for e in range(src.n_edges) if e not in alpha]
        for vals in itertools.product(range(tgt.n_edges), repeat=len(free)):
            full = dict(alpha)
            full.update(zip(free, vals))
            yield GraphMorphism(src, tgt, tuple(full[e] for e in range(src.n_edges)),
                                tuple(iota), tuple(nu), tuple(omega))
        return
    side, f, e, cands = slots[k]
    table = iota if side == "i" else omega
    owner = src.p[f] if side == "i" else src.q[f]
    for c in cands:
        a = tgt.s[c] if side == "i" else tgt.t[c]
        if alpha.get(e, a) != a:
            continue
        if etale:
            siblings = src.in_flags_of(owner) if side == "i" else src.out_flags_of(owner)
            if any(table[g] == c for g in siblings if g != f):
                continue
        fresh = e not in alpha
        alpha[e] = a
        table[f] = c
        yield from _flag_search(src, tgt, nu, slots, k + 1, alpha, iota, omega, etale)
        table[f] = None
        if fresh:
            del alpha[e]


def hyper_etale_homs(src: Diagram, tgt: Diagram) -> list[GraphMorphism]:
    return [f for f in diagram_homs(src, tgt, etale=True) if is_etale(f)]


def is_arity_preserving_on_edges(f: GraphMorphism) -> bool:
    """Does every edge keep its number of in- and out-occurrences?"""
    a, b = f.source, f.target
    for e in range(a.n_edges):
        if (a.s.count(e), a.t.count(e)) != (b.s.count(f.alpha[e]), b.t.count(f.alpha[e])):
            return False
    return True


# ---------------------------------------------------------------- isomorphism


def _incidence(x: Diagram) -> nx.DiGraph:
    g = nx.DiGraph()
    for a in range(x.n_edges):
        g.add_node(("A", a), kind="A")
    for v in range(x.n_nodes):
        g.add_node(("N", v), kind="N")
    for f in range(x.n_in):
        g.add_edge(("A", x.s[f]), ("N", x.p[f]))
    for f in range(x.n_out):
        g.add_edge(("N", x.q[f]), ("A", x.t[f]))
    return g


def hyper_isomorphic(x: Hypergraph, y: Hypergraph) -> bool:
    """Isomorphism of hypergraphs, decided on the bipartite incidence digraph.

    The relation conditions make flags determined by (edge, node) pairs, so an
    isomorphism of incidence digraphs that respects the two vertex kinds is the same
    thing as an isomorphism of hypergraphs.
    """
    if (x.n_edges, x.n_nodes, x.n_in, x.n_out) != (y.n_edges, y.n_nodes, y.n_in, y.n_out):
        return False
    gm = DiGraphMatcher(_incidence(x), _incidence(y), node_match=lambda u, v: u["kind"] == v["kind"])
    return gm.is_isomorphic()


# ---------------------------------------------------------------- gluing


def _quotient(n_edges: int, n_nodes: int, s, p, q, t, pairs) -> Hypergraph:
    uf = UnionFind(n_edges)
    for a, b in pairs:
        uf.union(a, b)
    quot = uf.quotient()
    return Hypergraph(quot.cod_size, n_nodes, tuple(quot(e) for e in s), p, q, tuple(quot(e) for e in t))


def hyper_disjoint_union(x: Diagram, y: Diagram) -> Hypergraph:
    na, nn = x.n_edges, x.n_nodes
    return Hypergraph(
        na + y.n_edges, nn + y.n_nodes,
        x.s + tuple(na + e for e in y.s), x.p + tuple(nn + v for v in y.p),
        x.q + tuple(nn + v for v in y.q), x.t + tuple(na + e for e in y.t),
    )


def hyper_glue(x: Diagram, y: Diagram, pairing: Sequence[tuple[int, int]]) -> Hypergraph:
    """Pushout of x <- shrub -> y, the shrub legs given as pairs (edge of x, edge of y).

    Any hyperedge may be glued to any other: there is no import/export condition.
    """
    xs = [a for a, _ in pairing]
    ys = [b for _, b in pairing]
    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
        raise ValueError("shrub legs must be injective on hyperedges")
    u = hyper_disjoint_union(x, y)
    return _quotient(u.n_edges, u.n_nodes, u.s, u.p, u.q, u.t,
                     [(a, x.n_edges + b) for a, b in pairing])


def hyper_coequalize(x: Diagram, pairing: Sequence[tuple[int, int]]) -> Hypergraph:
    """Coequaliser of two shrub injections into x, given as pairs of distinct hyperedges.

    Identifying two hyperedges that meet the same node on the same side would break the
    relation condition; that raises RelationViolation.
    """
    left = [a for a, _ in pairing]
    right = [b for _, b in pairing]
    if len(set(left)) != len(left) or len(set(right)) != len(right):
        raise ValueError("shrub legs must be injective on hyperedges")
    return _quotient(x.n_edges, x.n_nodes, x.s, x.p, x.q, x.t, pairing)


# ---------------------------------------------------------------- elements and density


def hyper_elements(x: Diagram) -> ElementsCategory:
    return elements(x)


def hyper_colimit(el: ElementsCategory) -> Hypergraph:
    """Glue one corolla per node object, plus the edge objects, along the element arrows.

    Every arrow e -> x names a flag of the corolla for x; the colimit identifies that
    flag's edge with the edge object e.  The edge objects are the first union-find
    classes, so hyperedges of the result keep the numbering of the edge objects.
    """
    na = el.n_edge_objects
    n_cover = 0
    s, p, q, t = [], [], [], []
    glue = []
    for x in range(el.n_node_objects):
        for arrow in el.arrows_into(na + x, "I"):
            s.append(na + n_cover)
            p.append(x)
            glue.append((arrow.dom, na + n_cover))
            n_cover += 1
        for arrow in el.arrows_into(na + x, "O"):
            t.append(na + n_cover)
            q.append(x)
            glue.append((arrow.dom, na + n_cover))
            n_cover += 1
    uf = UnionFind(na + n_cover)
    for a, b in glue:
        uf.union(a, b)
    quot = uf.quotient()
    if quot.cod_size != na:
        raise AssertionError("every cover edge must land on an edge object")
    return Hypergraph(na, el.n_node_objects, tuple(quot(e) for e in s), tuple(p), tuple(q),
                      tuple(quot(e) for e in t))


# ---------------------------------------------------------------- JSON


def hypergraph_to_json(x: Diagram) -> dict:
    return graph_to_json(x)


def hypergraph_from_json(obj: dict) -> Hypergraph:
    d, problems = parse_diagram(obj)
    if problems:
        raise GraphValidationError(problems)
    return validate_hypergraph(d)


def structurally_equal(x: Diagram, y: Diagram) -> bool:
    return (x.n_edges, x.n_nodes, x.s, x.p, x.q, x.t) == (y.n_edges, y.n_nodes, y.s, y.p, y.q, y.t)


def random_hypergraph(rng, max_nodes: int = 4, max_edges: int = 5, max_arity: int = 3) -> Hypergraph:
    n_edges = rng.randint(0, max_edges)
    n_nodes = rng.randint(0, max_nodes)
    if n_edges == 0:
        return Hypergraph(0, n_nodes, (), (), (), ())
    ins, outs = [], []
    for _ in range(n_nodes):
        ins.append(rng.sample(range(n_edges), rng.randint(0, min(max_arity, n_edges))))
        outs.append(rng.sample(range(n_edges), rng.randint(0, min(max_arity, n_edges))))
    return Hypergraph.from_lists(n_edges, ins, outs)


def random_digraph(rng, max_vertices: int = 3, max_arrows: int = 3) -> Digraph:
    n = rng.randint(0, max_vertices)
    if n == 0:
        return Digraph(0, (), ())
    k = rng.randint(0, max_arrows)
    return Digraph(n, tuple(rng.randrange(n) for _ in range(k)), tuple(rng.randrange(n) for _ in range(k)))
