"""Isomorphisms, automorphism groups, canonical forms and bounded enumeration of (m,n)-graphs.

Everything here is search based. Nodes are first split into colour classes by
iterated neighbourhood refinement; isomorphisms then backtrack over node
bijections that respect the classes, and canonical forms take the smallest
serialization over an individualization-refinement search tree.

Node and edge labels can be attached so that decorated graphs (species
decorations, maps into a fixed graph) use the same machinery.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .digraph import (
    Graph,
    GraphMorphism,
    corolla,
    identity,
    is_acyclic,
    is_connected,
    unit,
)
from .assembly import GluingDatum, coequalize
from .digraph import disjoint_union


# ---------------------------------------------------------------- ported graphs


@dataclass(frozen=True)
class PortedGraph:
    """A graph with its imports and exports numbered, i.e. an iso res(G) = C^m_n."""

    graph: Graph
    import_order: tuple[int, ...]
    export_order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "import_order", tuple(self.import_order))
        object.__setattr__(self, "export_order", tuple(self.export_order))
        if sorted(self.import_order) != sorted(self.graph.imports):
            raise ValueError(f"import order {self.import_order} is not a numbering of {self.graph.imports}")
        if sorted(self.export_order) != sorted(self.graph.exports):
            raise ValueError(f"export order {self.export_order} is not a numbering of {self.graph.exports}")

    @classmethod
    def standard(cls, g: Graph) -> PortedGraph:
        """Number ports in edge-index order."""
        return cls(g, g.imports, g.exports)

    @property
    def biarity(self) -> tuple[int, int]:
        return len(self.import_order), len(self.export_order)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    def port_labels(self) -> list[Optional[tuple[str, int]]]:
        lab: list[Optional[tuple[str, int]]] = [None] * self.graph.n_edges
        for k, e in enumerate(self.import_order):
            lab[e] = ("i", k)
        for k, e in enumerate(self.export_order):
            # a unit graph's edge is both an import and an export
            lab[e] = ("io", lab[e][1], k) if lab[e] is not None else ("o", k)
        return lab

    def transport(self, iso: GraphMorphism) -> PortedGraph:
        """The same numbering read through an isomorphism out of this graph."""
        return PortedGraph(iso.target, tuple(iso.alpha[e] for e in self.import_order),
                           tuple(iso.alpha[e] for e in self.export_order))


def as_ported(g) -> PortedGraph:
    return g if isinstance(g, PortedGraph) else PortedGraph.standard(g)


# ---------------------------------------------------------------- colour refinement


def _edge_ends(g: Graph) -> list[tuple[int, int]]:
    return [(-1 if g.tail(e) is None else g.tail(e), -1 if g.head(e) is None else g.head(e))
            for e in range(g.n_edges)]


class _Labelled:
    """A graph with string node labels and string edge labels, ready for search."""

    def __init__(self, g: Graph, node_labels=None, edge_labels=None):
        self.g = g
        self.node_labels = [_norm(node_labels[x]) if node_labels else "" for x in range(g.n_nodes)]
        self.edge_labels = [_norm(edge_labels[e]) if edge_labels else "" for e in range(g.n_edges)]
        self.ends = _edge_ends(g)
        self.in_edges = [g.in_edges_of(x) for x in range(g.n_nodes)]
        self.out_edges = [g.out_edges_of(x) for x in range(g.n_nodes)]

    def refine(self, colours: list[int]) -> tuple[list[int], list]:
        """Refine to a stable colouring; returns it with the history of signature lists."""
        history = []
        k = len(set(colours))
        while True:
            sigs = []
            for x in range(self.g.n_nodes):
                ins = sorted((self.edge_labels[e], colours[self.ends[e][0]] if self.ends[e][0] >= 0 else -1)
                             for e in self.in_edges[x])
                outs = sorted((self.edge_labels[e], colours[self.ends[e][1]] if self.ends[e][1] >= 0 else -1)
                              for e in self.out_edges[x])
                sigs.append((colours[x], tuple(ins), tuple(outs)))
            ranking = {s: i for i, s in enumerate(sorted(set(sigs)))}
            history.append(sorted(sigs))
            colours = [ranking[s] for s in sigs]
            if len(ranking) == k:
                return colours, history
            k = len(ranking)

    def initial_colours(self) -> list[int]:
        sigs = [(self.node_labels[x], self.g.biarity(x)) for x in range(self.g.n_nodes)]
        ranking = {s: i for i, s in enumerate(sorted(set(sigs)))}
        return [ranking[s] for s in sigs]

    def edge_key(self, e: int, rank: Sequence[int]) -> tuple:
        t, h = self.ends[e]
        return (rank[t] if t >= 0 else -1, rank[h] if h >= 0 else -1, self.edge_labels[e])


def _norm(label) -> str:
    return label if isinstance(label, str) else repr(label)


# ---------------------------------------------------------------- isomorphisms


def isomorphisms(g, h, fix_ports: bool = False, *, node_labels=None, edge_labels=None,
                 limit: Optional[int] = None) -> list[GraphMorphism]:
    """All isomorphisms g -> h.

    g and h may be graphs or ported graphs. With fix_ports the k-th import of g
    must go to the k-th import of h, and likewise for exports. node_labels and
    edge_labels, when given, are pairs (labels on g, labels on h) that an
    isomorphism has to preserve.
    """
    gp, hp = as_ported(g), as_ported(h)
    nl = node_labels or (None, None)
    el = [list(x) if x is not None else None for x in (edge_labels or (None, None))]
    if fix_ports:
        for i, p in enumerate((gp, hp)):
            ports = p.port_labels()
            base = el[i] or [""] * p.graph.n_edges
            el[i] = [(_norm(b), ports[e]) for e, b in enumerate(base)]
    a = _Labelled(gp.graph, nl[0], el[0])
    b = _Labelled(hp.graph, nl[1], el[1])
    return list(_iter_isos(a, b, limit))


def _iter_isos(a: _Labelled, b: _Labelled, limit: Optional[int]):
    ga, gb = a.g, b.g
    if (ga.n_edges, ga.n_nodes, ga.n_in, ga.n_out) != (gb.n_edges, gb.n_nodes, gb.n_in, gb.n_out):
        return
    if sorted(a.edge_labels) != sorted(b.edge_labels):
        return
    ca, ha = a.refine(a.initial_colours())
    cb, hb = b.refine(b.initial_colours())
    if ha != hb:
        return
    # edges between each ordered pair of nodes (or a node and the outside), by label
    def between(lab: _Labelled) -> dict:
        table: dict = {}
        for e, (t, hd) in enumerate(lab.ends):
            table.setdefault((t, hd), []).append(lab.edge_labels[e])
        return {k: sorted(v) for k, v in table.items()}

    pa, pb = between(a), between(b)
    order = sorted(range(ga.n_nodes), key=lambda x: (sum(1 for y in ca if y == ca[x]), ca[x], x))
    by_colour: dict[int, list[int]] = {}
    for y, c in enumerate(cb):
        by_colour.setdefault(c, []).append(y)

    nu = [-1] * ga.n_nodes
    used = [False] * gb.n_nodes
    count = 0

    def consistent(x: int, y: int) -> bool:
        if pa.get((x, x)) != pb.get((y, y)):
            return False
        for x2 in order:
            y2 = nu[x2]
            if y2 < 0:
                continue
            if pa.get((x, x2)) != pb.get((y, y2)) or pa.get((x2, x)) != pb.get((y2, y)):
                return False
        return True

    def rec(k: int):
        nonlocal count
        if limit is not None and count >= limit:
            return
        if k == len(order):
            for f in _edge_bijections(a, b, nu):
                yield f
                count += 1
                if limit is not None and count >= limit:
                    return
            return
        x = order[k]
        for y in by_colour.get(ca[x], ()):
            if used[y] or not consistent(x, y):
                continue
            nu[x] = y
            used[y] = True
            yield from rec(k + 1)
            used[y] = False
            nu[x] = -1

    yield from rec(0)


def _edge_bijections(a: _Labelled, b: _Labelled, nu: Sequence[int]):
    ga, gb = a.g, b.g
    groups_b: dict = {}
    for e, (t, h) in enumerate(b.ends):
        groups_b.setdefault((t, h, b.edge_labels[e]), []).append(e)
    groups_a: dict = {}
    for e, (t, h) in enumerate(a.ends):
        key = (nu[t] if t >= 0 else -1, nu[h] if h >= 0 else -1, a.edge_labels[e])
        groups_a.setdefault(key, []).append(e)
    if {k: len(v) for k, v in groups_a.items()} != {k: len(v) for k, v in groups_b.items()}:
        return
    keys = sorted(groups_a)
    for choice in itertools.product(*(itertools.permutations(groups_b[k]) for k in keys)):
        alpha = [0] * ga.n_edges
        for k, image in zip(keys, choice):
            for e, e2 in zip(groups_a[k], image):
                alpha[e] = e2
        yield _iso_from(ga, gb, alpha, nu)


def _iso_from(ga: Graph, gb: Graph, alpha, nu) -> GraphMorphism:
    iota = tuple(gb.in_flag_of_edge(alpha[ga.s[f]]) for f in range(ga.n_in))
    omega = tuple(gb.out_flag_of_edge(alpha[ga.t[f]]) for f in range(ga.n_out))
    return GraphMorphism(ga, gb, tuple(alpha), iota, tuple(nu), omega)


def are_isomorphic(g, h, fix_ports: bool = False, **labels) -> bool:
    return bool(isomorphisms(g, h, fix_ports, limit=1, **labels))


# ---------------------------------------------------------------- automorphism groups


@dataclass
class AutGroup:
    elements: list[GraphMorphism]
    fixes_ports: bool

    @property
    def order(self) -> int:
        return len(self.elements)

    def verify(self) -> None:
        """Check the group axioms on the element list."""
        keys = {f.key() for f in self.elements}
        if len(keys) != len(self.elements):
            raise AssertionError("repeated group element")
        g = self.elements[0].source if self.elements else None
        if g is not None and identity(g).key() not in keys:
            raise AssertionError("identity missing")
        for f in self.elements:
            if f.inverse().key() not in keys:
                raise AssertionError("not closed under inverse")
            for f2 in self.elements:
                if f.then(f2).key() not in keys:
                    raise AssertionError("not closed under composition")


def automorphism_group(g, fix_ports: bool = True, node_labels=None, edge_labels=None) -> AutGroup:
    """Aut(G); for a ported graph with fix_ports this is the port-fixing group."""
    grp = AutGroup(isomorphisms(
        g, g, fix_ports,
        node_labels=(node_labels, node_labels) if node_labels is not None else None,
        edge_labels=(edge_labels, edge_labels) if edge_labels is not None else None,
    ), fix_ports)
    grp.verify()
    return grp


# ---------------------------------------------------------------- canonical forms


@dataclass(frozen=True)
class CanonicalForm:
    certificate: str
    node_order: tuple[int, ...]
    edge_order: tuple[int, ...]

    def relabel(self, g: Graph) -> GraphMorphism:
        """The isomorphism from g onto its canonical relabeling."""
        node_rank = [0] * g.n_nodes
        for r, x in enumerate(self.node_order):
            node_rank[x] = r
        edge_rank = [0] * g.n_edges
        for r, e in enumerate(self.edge_order):
            edge_rank[e] = r
        ins = [[] for _ in range(g.n_nodes)]
        outs = [[] for _ in range(g.n_nodes)]
        for x in self.node_order:
            ins[node_rank[x]] = sorted(edge_rank[e] for e in g.in_edges_of(x))
            outs[node_rank[x]] = sorted(edge_rank[e] for e in g.out_edges_of(x))
        h = Graph.from_lists(g.n_edges, ins, outs)
        return _iso_from(g, h, edge_rank, node_rank)


def canonical_form(g, *, ported: bool = True, node_labels=None, edge_labels=None) -> CanonicalForm:
    """Smallest serialization over the individualization-refinement tree.

    Two (labelled, ported) graphs get equal certificates exactly when they are
    isomorphic. With ported=False port numberings are ignored.
    """
    pg = as_ported(g)
    el = list(edge_labels) if edge_labels is not None else None
    if ported:
        ports = pg.port_labels()
        base = el or [""] * pg.graph.n_edges
        el = [(_norm(b), ports[e]) for e, b in enumerate(base)]
    lab = _Labelled(pg.graph, node_labels, el)
    best: list = [None, None]

    def serial(rank):
        keys = sorted(lab.edge_key(e, rank) for e in range(lab.g.n_edges))
        nodes = [""] * lab.g.n_nodes
        for x, r in enumerate(rank):
            nodes[r] = lab.node_labels[x]
        return (lab.g.n_nodes, tuple(nodes), tuple(keys))

    def search(colours):
        colours, _ = lab.refine(colours)
        n = lab.g.n_nodes
        if len(set(colours)) == n:
            s = serial(colours)
            if best[0] is None or s < best[0]:
                best[0], best[1] = s, list(colours)
            return
        # first smallest non-singleton class
        sizes: dict[int, int] = {}
        for c in colours:
            sizes[c] = sizes.get(c, 0) + 1
        target = min(c for c, k in sizes.items() if k > 1)
        for x in range(n):
            if colours[x] != target:
                continue
            split = [2 * c + (0 if (c == target and y == x) else 1) if c == target else 2 * c
                     for y, c in enumerate(colours)]
            search(split)

    search(lab.initial_colours())
    rank = best[1]
    if rank is None:
        rank = []
    node_order = tuple(sorted(range(lab.g.n_nodes), key=lambda x: rank[x]))
    edge_order = tuple(sorted(range(lab.g.n_edges), key=lambda e: (lab.edge_key(e, rank), e)))
    cert = repr(best[0] if best[0] is not None else serial(rank))
    return CanonicalForm(cert, node_order, edge_order)


def certificate(g, **kw) -> str:
    return canonical_form(g, **kw).certificate


# ---------------------------------------------------------------- enumeration


SHAPES = ("any", "linear", "tree", "rooted_tree")


def _glue_node(g: Graph, i: int, o: int, inputs: Sequence[Optional[int]]) -> Graph:
    """Add a corolla (i, o) whose k-th input is glued to export inputs[k] (None = new import)."""
    c = corolla(i, o)
    total, (inc_g, inc_c) = disjoint_union([g, c])
    pairs = [(inc_g.alpha[ex], inc_c.alpha[k]) for k, ex in enumerate(inputs) if ex is not None]
    if not pairs:
        return total
    return coequalize(GluingDatum.from_pairs(total, pairs))[0]


def _shape_ok(g: Graph, shape: str) -> bool:
    if shape == "any":
        return True
    if shape == "linear":
        return all(g.biarity(x) == (1, 1) for x in range(g.n_nodes))
    tree = len(g.inner_edges) == g.n_nodes - 1 if g.n_nodes else True
    if shape == "tree":
        return tree
    if shape == "rooted_tree":
        return tree and all(g.biarity(x)[1] == 1 for x in range(g.n_nodes))
    raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}")


def enumerate_graphs(m: int, n: int, max_nodes: int, arity_menu: Iterable[tuple[int, int]],
                     shape: str = "any") -> list[PortedGraph]:
    """One representative per iso class of connected acyclic (m,n)-graphs.

    Nodes have biarities from arity_menu and there are at most max_nodes of
    them. Graphs are grown one corolla at a time in a topological order: the
    inputs of the new node are glued onto distinct existing exports or left as
    new imports. Since imports are never consumed, states with more than m
    imports are pruned. The output is sorted by certificate.
    """
    if max_nodes < 0:
        raise ValueError("max_nodes must be non-negative")
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}")
    menu = sorted(set(tuple(a) for a in arity_menu))
    unported: dict[str, Graph] = {}
    if (m, n) == (1, 1):
        unported[certificate(unit(), ported=False)] = unit()
    layer: dict[str, Graph] = {certificate(_empty(), ported=False): _empty()}
    for _ in range(max_nodes):
        nxt: dict[str, Graph] = {}
        for g in layer.values():
            exports = g.exports
            for i, o in menu:
                for k in range(i + 1):
                    # k inputs glued to existing exports, the rest new imports
                    if len(g.imports) + (i - k) > m:
                        continue
                    # corolla inputs are interchangeable, so a set of exports suffices
                    for chosen in itertools.combinations(exports, k):
                        h = _glue_node(g, i, o, list(chosen) + [None] * (i - k))
                        cert = certificate(h, ported=False)
                        if cert not in nxt:
                            nxt[cert] = h
        layer = nxt
        for cert, h in layer.items():
            if (len(h.imports), len(h.exports)) == (m, n) and is_connected(h) and _shape_ok(h, shape):
                unported.setdefault(cert, h)
    out: list[PortedGraph] = []
    for g in unported.values():
        assert is_acyclic(g)
        out.extend(port_numberings(g))
    out.sort(key=lambda p: certificate(p))
    return out


def _empty() -> Graph:
    return Graph(0, 0, (), (), (), ())


def port_numberings(g: Graph) -> list[PortedGraph]:
    """Representatives of the port numberings of g modulo the automorphisms of g."""
    auts = isomorphisms(g, g, fix_ports=False)
    seen: set = set()
    reps = []
    for ins in itertools.permutations(g.imports):
        for outs in itertools.permutations(g.exports):
            if (ins, outs) in seen:
                continue
            reps.append(PortedGraph(g, ins, outs))
            for f in auts:
                seen.add((tuple(f.alpha[e] for e in ins), tuple(f.alpha[e] for e in outs)))
    return reps


# ---------------------------------------------------------------- relabeling


def relabel(g: Graph, edge_perm: Sequence[int], node_perm: Sequence[int],
            shuffle_flags=None) -> tuple[Graph, GraphMorphism]:
    """Renumber edges and nodes; returns the new graph and the isomorphism onto it.

    shuffle_flags, if given, is called on each node's flag lists to reorder them.
    """
    ins: list[list[int]] = [[] for _ in range(g.n_nodes)]
    outs: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for x in range(g.n_nodes):
        i = [edge_perm[e] for e in g.in_edges_of(x)]
        o = [edge_perm[e] for e in g.out_edges_of(x)]
        if shuffle_flags is not None:
            shuffle_flags(i)
            shuffle_flags(o)
        ins[node_perm[x]] = i
        outs[node_perm[x]] = o
    h = Graph.from_lists(g.n_edges, ins, outs)
    return h, _iso_from(g, h, list(edge_perm), list(node_perm))


def random_relabel(g: Graph, rng) -> tuple[Graph, GraphMorphism]:
    edges = list(range(g.n_edges))
    nodes = list(range(g.n_nodes))
    rng.shuffle(edges)
    rng.shuffle(nodes)
    return relabel(g, edges, nodes, rng.shuffle)
