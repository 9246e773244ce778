"""Covers, hulls, gluing, colimits over graphs, complements and convexity."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .digraph import (
    Graph, GraphMorphism, classify_morphism, components, corolla, disjoint_union,
    is_acyclic, is_connected, is_etale, is_inclusion, lessdot, residue, subgraph, unit,
)
from .finsets import FinMap, UnionFind, image_factorization, pushout_of_injections


class AssemblyError(ValueError):
    pass


# ---------------------------------------------------------------- covers and hulls


class Cover(NamedTuple):
    cover: Graph
    map: GraphMorphism
    etale: bool


def canonical_cover(x: Graph, nodes: Optional[Iterable[int]] = None) -> Cover:
    """One corolla per chosen node, built from the flags over that node.

    The edges of the cover are the chosen in-flags followed by the chosen out-flags.
    """
    nodes = list(range(x.n_nodes)) if nodes is None else sorted(set(nodes))
    pos = {v: i for i, v in enumerate(nodes)}
    ins = [f for f in range(x.n_in) if x.p[f] in pos]
    outs = [f for f in range(x.n_out) if x.q[f] in pos]
    k = len(ins)
    cover = Graph(
        k + len(outs), len(nodes),
        tuple(range(k)), tuple(pos[x.p[f]] for f in ins),
        tuple(pos[x.q[f]] for f in outs), tuple(range(k, k + len(outs))),
    )
    m = GraphMorphism(
        cover, x,
        tuple([x.s[f] for f in ins] + [x.t[f] for f in outs]),
        tuple(ins), tuple(nodes), tuple(outs),
    )
    return Cover(cover, m, is_etale(m))


def canonical_neighbourhood(x: Graph, node: int) -> Cover:
    return canonical_cover(x, [node])


def open_hull(x: Graph, nodes: Iterable[int]) -> tuple[Graph, GraphMorphism]:
    """Smallest open subgraph with the given nodes: the image of the canonical cover on edges."""
    cov = canonical_cover(x, nodes)
    alpha = FinMap(cov.cover.n_edges, x.n_edges, cov.map.alpha)
    surj, inj = image_factorization(alpha)
    c = cov.cover
    h = Graph(
        inj.dom_size, c.n_nodes,
        tuple(surj(e) for e in c.s), c.p, c.q, tuple(surj(e) for e in c.t),
        node_names=tuple(x.node_name(v) for v in cov.map.nu) if x.node_names else None,
        edge_names=tuple(x.edge_name(e) for e in inj.table) if x.edge_names else None,
    )
    return h, GraphMorphism(h, x, inj.table, cov.map.iota, cov.map.nu, cov.map.omega)


# ---------------------------------------------------------------- gluing


@dataclass(frozen=True)
class GluingDatum:
    """A shrub S with an export-preserving leg and an import-preserving leg into target."""

    shrub: Graph
    target: Graph
    ex_leg: GraphMorphism
    im_leg: GraphMorphism

    @classmethod
    def from_pairs(cls, target: Graph, pairs: Sequence[tuple[int, int]]) -> "GluingDatum":
        """Each pair (export, import) of target edges becomes one unit of the shrub."""
        shrub = Graph(len(pairs), 0, (), (), (), ())
        ex = GraphMorphism(shrub, target, tuple(a for a, _ in pairs), (), (), ())
        im = GraphMorphism(shrub, target, tuple(b for _, b in pairs), (), (), ())
        return cls(shrub, target, ex, im)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.ex_leg.alpha, self.im_leg.alpha))

    def check(self) -> None:
        if self.shrub.n_nodes or self.shrub.n_in or self.shrub.n_out:
            raise AssemblyError("a shrub has edges only")
        ex, im = classify_morphism(self.ex_leg), classify_morphism(self.im_leg)
        if not ex.inclusion:
            raise AssemblyError("export leg is not injective")
        if not im.inclusion:
            raise AssemblyError("import leg is not injective")
        if not ex.export_preserving:
            raise AssemblyError("export leg does not land on exports")
        if not im.import_preserving:
            raise AssemblyError("import leg does not land on imports")


def coequalize(d: GluingDatum) -> tuple[Graph, GraphMorphism]:
    """Identify ex(e) with im(e) for each shrub edge e. Nodes and flags are untouched."""
    d.check()
    g = d.target
    uf = UnionFind(g.n_edges)
    for a, b in d.pairs:
        uf.union(a, b)
    quot = uf.quotient()
    q = Graph(
        quot.cod_size, g.n_nodes,
        tuple(quot(e) for e in g.s), g.p, g.q, tuple(quot(e) for e in g.t),
        node_names=g.node_names,
    )
    m = GraphMorphism(g, q, quot.table, tuple(range(g.n_in)), tuple(range(g.n_nodes)), tuple(range(g.n_out)))
    return q, m


def coequalize_stepwise(d: GluingDatum, order: Sequence[int]) -> tuple[Graph, GraphMorphism]:
    """Realise the connections one shrub edge at a time, in the given order."""
    current = d.target
    total = None
    remaining = [d.pairs[k] for k in order]
    while remaining:
        a, b = remaining.pop(0)
        q, m = coequalize(GluingDatum.from_pairs(current, [(a, b)]))
        remaining = [(m.alpha[x], m.alpha[y]) for x, y in remaining]
        total = m if total is None else total.then(m)
        current = q
    if total is None:
        from .digraph import identity
        total = identity(current)
    return current, total


# ---------------------------------------------------------------- elements


class ElementArrow(NamedTuple):
    kind: str  # "I" or "O"
    flag: int
    dom: int  # object index of an edge
    cod: int  # object index of a node


@dataclass(frozen=True)
class ElementsCategory:
    """Objects are the edges then the nodes of a graph; arrows are its flags."""

    n_edge_objects: int
    n_node_objects: int
    arrows: tuple[ElementArrow, ...]

    @property
    def objects(self) -> list[tuple[str, int]]:
        return [("A", e) for e in range(self.n_edge_objects)] + [("N", x) for x in range(self.n_node_objects)]

    def arrows_into(self, node_object: int, kind: str) -> list[ElementArrow]:
        return [a for a in self.arrows if a.cod == node_object and a.kind == kind]

    def arrows_from(self, edge_object: int) -> list[ElementArrow]:
        return [a for a in self.arrows if a.dom == edge_object]


def elements(x: Graph) -> ElementsCategory:
    na = x.n_edges
    arrows = [ElementArrow("I", f, x.s[f], na + x.p[f]) for f in range(x.n_in)]
    arrows += [ElementArrow("O", f, x.t[f], na + x.q[f]) for f in range(x.n_out)]
    return ElementsCategory(na, x.n_nodes, tuple(arrows))


def elements_colimit(el: ElementsCategory) -> Graph:
    """Colimit of the elementary graphs indexed by el.

    Computed as the coequaliser of the canonical cover over the inner edges, with
    one unit graph for each edge object that no arrow touches.
    """
    na = el.n_edge_objects
    parts = []
    flag_edge: dict[tuple[str, int], tuple[int, int]] = {}
    for x in range(el.n_node_objects):
        ins = el.arrows_into(na + x, "I")
        outs = el.arrows_into(na + x, "O")
        parts.append(corolla(len(ins), len(outs)))
        for k, a in enumerate(ins):
            flag_edge[("I", a.flag)] = (x, k)
        for k, a in enumerate(outs):
            flag_edge[("O", a.flag)] = (x, len(ins) + k)
    lonely = [e for e in range(na) if not el.arrows_from(e)]
    parts += [unit() for _ in lonely]
    total, inj = disjoint_union(parts)
    pairs = []
    for e in range(na):
        touching = el.arrows_from(e)
        outs = [a for a in touching if a.kind == "O"]
        ins = [a for a in touching if a.kind == "I"]
        if len(outs) > 1 or len(ins) > 1:
            raise AssemblyError(f"edge object {e} has several arrows of one kind; not a graph")
        if outs and ins:
            xo, ko = flag_edge[("O", outs[0].flag)]
            xi, ki = flag_edge[("I", ins[0].flag)]
            pairs.append((inj[xo].alpha[ko], inj[xi].alpha[ki]))
    q, _ = coequalize(GluingDatum.from_pairs(total, pairs))
    return q


# ---------------------------------------------------------------- graphs of graphs


@dataclass(frozen=True)
class GraphOfGraphs:
    """A graph R with a graph at each node.

    in_maps[f] is the import of graphs[p(f)] that in-flag f of R is sent to;
    out_maps[f] is the export of graphs[q(f)] for out-flag f.
    """

    indexing: Graph
    graphs: tuple[Graph, ...]
    in_maps: tuple[int, ...]
    out_maps: tuple[int, ...]

    def check(self) -> None:
        r = self.indexing
        if len(self.graphs) != r.n_nodes or len(self.in_maps) != r.n_in or len(self.out_maps) != r.n_out:
            raise AssemblyError("graph of graphs has the wrong shape")
        for f in range(r.n_in):
            if self.in_maps[f] not in self.graphs[r.p[f]].imports:
                raise AssemblyError(f"in-flag {f} is not sent to an import")
        for f in range(r.n_out):
            if self.out_maps[f] not in self.graphs[r.q[f]].exports:
                raise AssemblyError(f"out-flag {f} is not sent to an export")

    @property
    def residue_compatible(self) -> bool:
        r = self.indexing
        for x, g in enumerate(self.graphs):
            ins = [self.in_maps[f] for f in r.in_flags_of(x)]
            outs = [self.out_maps[f] for f in r.out_flags_of(x)]
            if sorted(ins) != sorted(g.imports) or sorted(outs) != sorted(g.exports):
                return False
            if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
                return False
        return True


class GluedGraph(NamedTuple):
    graph: Graph
    legs: list[GraphMorphism]
    edge_image: tuple[int, ...]  # where each edge of the indexing graph ends up


def colimit_of_graph_of_graphs(gg: GraphOfGraphs) -> GluedGraph:
    """Substitute each graph into its node and connect along the inner edges of R.

    Unit graphs at nodes are absorbed by the union-find on edges, which amounts to
    collapsing them over an incident edge first.
    """
    gg.check()
    r = gg.indexing
    units = r.unit_edges
    total, inj = disjoint_union(list(gg.graphs) + [unit() for _ in units])
    pairs = []
    for e in r.inner_edges:
        o, i = r.out_flag_of_edge(e), r.in_flag_of_edge(e)
        pairs.append((inj[r.q[o]].alpha[gg.out_maps[o]], inj[r.p[i]].alpha[gg.in_maps[i]]))
    q, quot = coequalize(GluingDatum.from_pairs(total, pairs))
    legs = [inj[x].then(quot) for x in range(r.n_nodes)]
    unit_pos = {e: r.n_nodes + k for k, e in enumerate(units)}
    image = []
    for e in range(r.n_edges):
        i, o = r.in_flag_of_edge(e), r.out_flag_of_edge(e)
        if i is not None:
            image.append(legs[r.p[i]].alpha[gg.in_maps[i]])
        elif o is not None:
            image.append(legs[r.q[o]].alpha[gg.out_maps[o]])
        else:
            image.append(inj[unit_pos[e]].then(quot).alpha[0])
    return GluedGraph(q, legs, tuple(image))


# ---------------------------------------------------------------- core-equivalence / etale factorization


class Factorization(NamedTuple):
    c: GraphMorphism
    middle: Graph
    e: GraphMorphism


def coreeq_etale_factorization(f: GraphMorphism, normalize_units: bool = True) -> Factorization:
    """Factor a locally injective map as a core equivalence followed by an etale map.

    Flags of the middle graph are pulled back over the source nodes; its edges are the
    pushout of those flags over the inner edges of the source. Edges of the source that
    touch no node become unit edges: one each when normalize_units, otherwise one per
    distinct image.
    """
    if not classify_morphism(f).locally_injective:
        raise AssemblyError("map is not locally injective")
    src, tgt = f.source, f.target
    # I'' = {(x', i) : p(i) = nu(x')}, likewise O''; lexicographic order
    i2 = [(x, i) for x in range(src.n_nodes) for i in tgt.in_flags_of(f.nu[x])]
    o2 = [(x, o) for x in range(src.n_nodes) for o in tgt.out_flags_of(f.nu[x])]
    i2_pos = {v: k for k, v in enumerate(i2)}
    o2_pos = {v: k for k, v in enumerate(o2)}
    inner = [(src.out_flag_of_edge(e), src.in_flag_of_edge(e)) for e in src.inner_edges]
    leg_o = FinMap(len(inner), len(o2), tuple(o2_pos[(src.q[o], f.omega[o])] for o, _ in inner))
    leg_i = FinMap(len(inner), len(i2), tuple(i2_pos[(src.p[i], f.iota[i])] for _, i in inner))
    n_glued, to_o, to_i = pushout_of_injections(leg_o, leg_i)
    # edges: glued flag edges, then unit edges
    if normalize_units:
        unit_src = list(src.unit_edges)
        unit_of = {e: n_glued + k for k, e in enumerate(unit_src)}
        unit_images = [f.alpha[e] for e in unit_src]
    else:
        distinct = sorted({f.alpha[e] for e in src.unit_edges})
        unit_of = {e: n_glued + distinct.index(f.alpha[e]) for e in src.unit_edges}
        unit_images = distinct
    n_edges = n_glued + len(unit_images)
    y = Graph(
        n_edges, src.n_nodes,
        tuple(to_i(k) for k in range(len(i2))), tuple(x for x, _ in i2),
        tuple(x for x, _ in o2), tuple(to_o(k) for k in range(len(o2))),
    )
    e_alpha = [0] * n_edges
    for k, (_, i) in enumerate(i2):
        e_alpha[to_i(k)] = tgt.s[i]
    for k, (_, o) in enumerate(o2):
        e_alpha[to_o(k)] = tgt.t[o]
    for k, a in enumerate(unit_images):
        e_alpha[n_glued + k] = a
    e = GraphMorphism(y, tgt, tuple(e_alpha), tuple(i for _, i in i2), f.nu, tuple(o for _, o in o2))
    c_alpha = []
    for a in range(src.n_edges):
        i, o = src.in_flag_of_edge(a), src.out_flag_of_edge(a)
        if i is not None:
            c_alpha.append(to_i(i2_pos[(src.p[i], f.iota[i])]))
        elif o is not None:
            c_alpha.append(to_o(o2_pos[(src.q[o], f.omega[o])]))
        else:
            c_alpha.append(unit_of[a])
    c = GraphMorphism(
        src, y, tuple(c_alpha),
        tuple(i2_pos[(src.p[i], f.iota[i])] for i in range(src.n_in)),
        tuple(range(src.n_nodes)),
        tuple(o2_pos[(src.q[o], f.omega[o])] for o in range(src.n_out)),
    )
    return Factorization(c, y, e)


def etale_hull(f: GraphMorphism) -> Factorization:
    return coreeq_etale_factorization(f, normalize_units=True)


# ---------------------------------------------------------------- complements


class ComplementMode(enum.Enum):
    NAIVE = "naive"
    ETALE = "etale"


def naive_complement(h: GraphMorphism) -> tuple[Graph, GraphMorphism]:
    """Levelwise complement, dropping flags whose edge or node was removed."""
    if not is_inclusion(h):
        raise AssemblyError("complements need a subgraph inclusion")
    g = h.target
    nodes = set(range(g.n_nodes)) - set(h.nu)
    edges = set(range(g.n_edges)) - set(h.alpha)
    ins = [f for f in range(g.n_in) if f not in set(h.iota) and g.p[f] in nodes and g.s[f] in edges]
    outs = [f for f in range(g.n_out) if f not in set(h.omega) and g.q[f] in nodes and g.t[f] in edges]
    return subgraph(g, nodes, edges, ins, outs)


def complement(h: GraphMorphism, mode: ComplementMode = ComplementMode.ETALE) -> tuple[Graph, GraphMorphism]:
    c, m = naive_complement(h)
    if mode is ComplementMode.NAIVE:
        return c, m
    fac = etale_hull(m)
    return fac.middle, fac.e


def shared_boundary(h: GraphMorphism, comp: GraphMorphism) -> list[int]:
    """Edges of the ambient graph lying in both H and its etale complement."""
    return sorted(set(h.alpha) & set(comp.alpha))


def reconstruction_datum(h: GraphMorphism) -> tuple[GluingDatum, list[GraphMorphism]]:
    """The gluing datum S => H + complement(H) whose coequaliser recovers the ambient graph."""
    c, cm = complement(h, ComplementMode.ETALE)
    total, inj = disjoint_union([h.source, c])
    pairs = []
    h_pre = {a: e for e, a in enumerate(h.alpha)}
    c_pre = {a: e for e, a in enumerate(cm.alpha)}
    for a in shared_boundary(h, cm):
        e_h, e_c = inj[0].alpha[h_pre[a]], inj[1].alpha[c_pre[a]]
        # the copy without an in-flag is the export side
        if total.in_flag_of_edge(e_h) is None:
            pairs.append((e_h, e_c))
        else:
            pairs.append((e_c, e_h))
    return GluingDatum.from_pairs(total, pairs), inj


# ---------------------------------------------------------------- indexing graphs


def indexing_graph(d: GluingDatum) -> Graph:
    """Replace each connected summand of the target by its residue, then glue."""
    d.check()
    comps = components(d.target)
    residues = [residue(c) for c, _ in comps]
    total, inj = disjoint_union([r.corolla for r in residues])
    where: dict[int, tuple[int, int]] = {}
    for k, (c, m) in enumerate(comps):
        for local, e in enumerate(m.alpha):
            where[e] = (k, local)

    def corolla_edge(e: int, side: str) -> int:
        k, local = where[e]
        r = residues[k]
        if side == "import":
            pos = r.import_bij.table.index(local)
        else:
            pos = r.corolla.n_edges - r.export_bij.dom_size + r.export_bij.table.index(local)
        return inj[k].alpha[pos]

    pairs = [(corolla_edge(a, "export"), corolla_edge(b, "import")) for a, b in d.pairs]
    r, _ = coequalize(GluingDatum.from_pairs(total, pairs))
    return r


# ---------------------------------------------------------------- edge poset and convexity


class NotAcyclic(ValueError):
    pass


def _closure(n: int, rel: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    succ: list[set[int]] = [set() for _ in range(n)]
    for a, b in rel:
        succ[a].add(b)
    out = set()
    for a in range(n):
        seen = {a}
        stack = [a]
        while stack:
            v = stack.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out |= {(a, b) for b in seen}
    return out


def edge_poset(x: Graph) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """The relation a < b (some node takes a in and puts b out) and its reflexive-transitive closure."""
    rel = lessdot(x)
    if not is_acyclic(x):
        raise NotAcyclic("the edge relation has a cycle")
    return rel, _closure(x.n_edges, rel)


def _check_convexity_input(h: GraphMorphism) -> None:
    if not (is_inclusion(h) and is_etale(h)):
        raise AssemblyError("convexity is defined for open subgraphs")
    if not is_connected(h.source):
        raise AssemblyError("convexity is defined for connected subgraphs")
    if not is_acyclic(h.target):
        raise NotAcyclic("ambient graph must be acyclic")


def is_convex_by_poset(h: GraphMorphism) -> bool:
    """Every edge or node lying between two edges of H belongs to H."""
    _check_convexity_input(h)
    g = h.target
    na = g.n_edges
    # order on edges and nodes together: e < head(e), x < out-edges of x
    rel = [(g.s[f], na + g.p[f]) for f in range(g.n_in)]
    rel += [(na + g.q[f], g.t[f]) for f in range(g.n_out)]
    leq = _closure(na + g.n_nodes, rel)
    inside = set(h.alpha) | {na + v for v in h.nu}
    edges_h = set(h.alpha)
    below: dict[int, set[int]] = {}
    for a, b in leq:
        below.setdefault(b, set()).add(a)
    for a, m in leq:
        if a in edges_h and m not in inside:
            if any((m, y) in leq for y in edges_h):
                return False
    return True


def is_convex_by_complement(h: GraphMorphism) -> bool:
    """No path inside the etale complement between two distinct shared boundary edges."""
    _check_convexity_input(h)
    if h.source.n_nodes == 0:
        return True
    c, cm = complement(h, ComplementMode.ETALE)
    boundary = set(shared_boundary(h, cm))
    ends = [e for e in range(c.n_edges) if cm.alpha[e] in boundary]
    reach = _closure(c.n_edges, lessdot(c))
    return not any((a, b) in reach for a in ends for b in ends if a != b)


def is_convex(h: GraphMorphism) -> bool:
    by_poset = is_convex_by_poset(h)
    by_complement = is_convex_by_complement(h)
    if by_poset != by_complement:
        raise AssertionError(f"convexity checkers disagree: poset={by_poset}, complement={by_complement}")
    return by_poset


class HRYRelations(NamedTuple):
    closest_neighbours: list[tuple[int, int]]
    almost_isolated: list[int]


def hry_relations(g: Graph) -> HRYRelations:
    if not is_connected(g) or not is_acyclic(g):
        raise AssemblyError("expected a connected acyclic graph")
    pairs = []
    for x in range(g.n_nodes):
        for y in range(x + 1, g.n_nodes):
            hull, inc = open_hull(g, [x, y])
            if is_connected(hull) and is_convex(inc):
                pairs.append((x, y))
    isolated = []
    for x in range(g.n_nodes):
        if g.n_nodes == 1:
            isolated.append(x)
            continue
        _, inc = open_hull(g, [x])
        c, cm = complement(inc, ComplementMode.ETALE)
        if is_connected(c) and is_inclusion(cm) and is_convex(cm):
            isolated.append(x)
    return HRYRelations(pairs, isolated)
