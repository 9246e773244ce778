"""Directed graphs with dangling edges, their morphisms, and basic invariants.

A graph is a diagram of finite sets

    A <-s- I -p-> N <-q- O -t-> A

with s and t injective. Elements of I are in-flags (an edge entering a node),
elements of O are out-flags. Every set is an index range; names only matter at
the JSON boundary. The in-flags of a node, in index order, give its input order.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence

from .finsets import FinMap, UnionFind


# ---------------------------------------------------------------- violations


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.detail}

    def __str__(self):
        parts = ", ".join(f"{k}={v}" for k, v in self.detail.items())
        return f"{self.kind}({parts})"


def SInjectivityViolation(edge) -> Violation:
    return Violation("SInjectivityViolation", {"edge": edge})


def TInjectivityViolation(edge) -> Violation:
    return Violation("TInjectivityViolation", {"edge": edge})


class GraphValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


# ---------------------------------------------------------------- diagrams


@dataclass(frozen=True)
class Diagram:
    """An unchecked diagram A <- I -> N <- O -> A of finite sets."""

    n_edges: int
    n_nodes: int
    s: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    t: tuple[int, ...]
    edge_names: Optional[tuple[str, ...]] = field(default=None, compare=False, repr=False)
    node_names: Optional[tuple[str, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("s", "p", "q", "t"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.s) != len(self.p) or len(self.q) != len(self.t):
            raise GraphValidationError([Violation("ShapeMismatch", {})])
        for name, bound in (("s", self.n_edges), ("p", self.n_nodes), ("q", self.n_nodes), ("t", self.n_edges)):
            for v in getattr(self, name):
                if not 0 <= v < bound:
                    raise GraphValidationError([Violation("OutOfRange", {"map": name, "value": v})])
        self._check()

    def _check(self) -> None:
        pass

    @classmethod
    def from_lists(cls, n_edges: int, ins: Sequence[Sequence[int]], outs: Sequence[Sequence[int]], **names):
        """Build from per-node input and output edge lists; flags are numbered node by node."""
        s, p, q, t = [], [], [], []
        for x, edges in enumerate(ins):
            for e in edges:
                s.append(e)
                p.append(x)
        for x, edges in enumerate(outs):
            for e in edges:
                t.append(e)
                q.append(x)
        return cls(n_edges, len(ins), tuple(s), tuple(p), tuple(q), tuple(t), **names)

    @property
    def n_in(self) -> int:
        return len(self.s)

    @property
    def n_out(self) -> int:
        return len(self.t)

    @cached_property
    def _in_by_node(self) -> tuple[tuple[int, ...], ...]:
        buckets: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for f, x in enumerate(self.p):
            buckets[x].append(f)
        return tuple(tuple(b) for b in buckets)

    @cached_property
    def _out_by_node(self) -> tuple[tuple[int, ...], ...]:
        buckets: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for g, x in enumerate(self.q):
            buckets[x].append(g)
        return tuple(tuple(b) for b in buckets)

    def in_flags_of(self, x: int) -> tuple[int, ...]:
        return self._in_by_node[x]

    def out_flags_of(self, x: int) -> tuple[int, ...]:
        return self._out_by_node[x]

    def in_edges_of(self, x: int) -> list[int]:
        return [self.s[f] for f in self._in_by_node[x]]

    def out_edges_of(self, x: int) -> list[int]:
        return [self.t[g] for g in self._out_by_node[x]]

    def biarity(self, x: int) -> tuple[int, int]:
        return len(self._in_by_node[x]), len(self._out_by_node[x])

    def edge_name(self, e: int) -> str:
        return self.edge_names[e] if self.edge_names else f"e{e}"

    def node_name(self, x: int) -> str:
        return self.node_names[x] if self.node_names else f"x{x}"

    def strip_names(self):
        return type(self)(self.n_edges, self.n_nodes, self.s, self.p, self.q, self.t)

    def with_default_names(self):
        return type(self)(
            self.n_edges, self.n_nodes, self.s, self.p, self.q, self.t,
            edge_names=tuple(self.edge_name(e) for e in range(self.n_edges)),
            node_names=tuple(self.node_name(x) for x in range(self.n_nodes)),
        )


class Graph(Diagram):
    """A diagram with s and t injective."""

    def _check(self) -> None:
        violations = diagram_violations(self)
        if violations:
            raise GraphValidationError(violations)

    @cached_property
    def _in_flag_of_edge(self) -> tuple[Optional[int], ...]:
        table: list[Optional[int]] = [None] * self.n_edges
        for f, e in enumerate(self.s):
            table[e] = f
        return tuple(table)

    @cached_property
    def _out_flag_of_edge(self) -> tuple[Optional[int], ...]:
        table: list[Optional[int]] = [None] * self.n_edges
        for g, e in enumerate(self.t):
            table[e] = g
        return tuple(table)

    def in_flag_of_edge(self, e: int) -> Optional[int]:
        return self._in_flag_of_edge[e]

    def out_flag_of_edge(self, e: int) -> Optional[int]:
        return self._out_flag_of_edge[e]

    def head(self, e: int) -> Optional[int]:
        """The node that e enters, if any."""
        f = self._in_flag_of_edge[e]
        return None if f is None else self.p[f]

    def tail(self, e: int) -> Optional[int]:
        """The node that e leaves, if any."""
        g = self._out_flag_of_edge[e]
        return None if g is None else self.q[g]

    @cached_property
    def imports(self) -> tuple[int, ...]:
        return tuple(e for e in range(self.n_edges) if self._out_flag_of_edge[e] is None)

    @cached_property
    def exports(self) -> tuple[int, ...]:
        return tuple(e for e in range(self.n_edges) if self._in_flag_of_edge[e] is None)

    @cached_property
    def inner_edges(self) -> tuple[int, ...]:
        return tuple(
            e for e in range(self.n_edges)
            if self._in_flag_of_edge[e] is not None and self._out_flag_of_edge[e] is not None
        )

    @cached_property
    def ports(self) -> tuple[int, ...]:
        inner = set(self.inner_edges)
        return tuple(e for e in range(self.n_edges) if e not in inner)

    @cached_property
    def unit_edges(self) -> tuple[int, ...]:
        """Edges touching no node: each one is a unit component."""
        return tuple(
            e for e in range(self.n_edges)
            if self._in_flag_of_edge[e] is None and self._out_flag_of_edge[e] is None
        )

    @cached_property
    def isolated_nodes(self) -> tuple[int, ...]:
        return tuple(x for x in range(self.n_nodes) if not self._in_by_node[x] and not self._out_by_node[x])

    def is_closed(self) -> bool:
        """True when the end maps s and t are bijections, i.e. there are no ports."""
        return self.n_in == self.n_edges and self.n_out == self.n_edges


def diagram_violations(d: Diagram) -> list[Violation]:
    out = []
    seen: set[int] = set()
    for e in d.s:
        if e in seen:
            out.append(SInjectivityViolation(d.edge_name(e)))
        seen.add(e)
    seen = set()
    for e in d.t:
        if e in seen:
            out.append(TInjectivityViolation(d.edge_name(e)))
        seen.add(e)
    return out


def validate_graph(raw: Diagram) -> Graph:
    """Return raw as a Graph, or raise GraphValidationError listing every injectivity failure."""
    return Graph(raw.n_edges, raw.n_nodes, raw.s, raw.p, raw.q, raw.t,
                 edge_names=raw.edge_names, node_names=raw.node_names)


# ---------------------------------------------------------------- standard graphs


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class Corolla:
    m: int
    n: int


@dataclass(frozen=True)
class Wheel:
    n: int


@dataclass(frozen=True)
class Linear:
    k: int


def unit() -> Graph:
    return Graph(1, 0, (), (), (), ())


def corolla(m: int, n: int) -> Graph:
    """One node; imports 0..m-1 and exports m..m+n-1."""
    return Graph.from_lists(m + n, [list(range(m))], [list(range(m, m + n))])


def wheel(n: int) -> Graph:
    """Node i has input edge i and output edge i+1 mod n."""
    if n < 1:
        raise ValueError("a wheel needs at least one node")
    return Graph.from_lists(n, [[i] for i in range(n)], [[(i + 1) % n] for i in range(n)])


def linear(k: int) -> Graph:
    """Node i has input edge i and output edge i+1; edge 0 is the import, edge k the export."""
    return Graph.from_lists(k + 1, [[i] for i in range(k)], [[i + 1] for i in range(k)])


def theta() -> Graph:
    """Two nodes x:(0,2) and y:(2,0) joined by two parallel edges."""
    return Graph.from_lists(2, [[], [0, 1]], [[0, 1], []],
                            node_names=("x", "y"), edge_names=("a", "b"))


def diamond() -> Graph:
    """u:(1,2) feeds v and w, both feed z:(2,1)."""
    # edges: 0 into u, 1 u->v, 2 u->w, 3 v->z, 4 w->z, 5 out of z
    return Graph.from_lists(
        6,
        [[0], [1], [2], [3, 4]],
        [[1, 2], [3], [4], [5]],
        node_names=("u", "v", "w", "z"),
    )


def make_standard(kind) -> Graph:
    if isinstance(kind, Unit):
        return unit()
    if isinstance(kind, Corolla):
        return corolla(kind.m, kind.n)
    if isinstance(kind, Wheel):
        return wheel(kind.n)
    if isinstance(kind, Linear):
        return linear(kind.k)
    raise TypeError(f"unknown standard graph {kind!r}")


def closed_graph(n_vertices: int, src: Sequence[int], tgt: Sequence[int]) -> Graph:
    """The graph E <-= E -tgt-> V <-src- E -=-> E of a classical digraph."""
    n = len(src)
    return Graph(n, n_vertices, tuple(range(n)), tuple(tgt), tuple(src), tuple(range(n)))


def disjoint_union(graphs: Sequence[Graph]) -> tuple[Graph, list["GraphMorphism"]]:
    ea = ni = na = no = 0
    s, p, q, t = [], [], [], []
    offsets = []
    for g in graphs:
        offsets.append((ea, ni, na, no))
        s += [ea + e for e in g.s]
        p += [na + x for x in g.p]
        q += [na + x for x in g.q]
        t += [ea + e for e in g.t]
        ea += g.n_edges
        ni += g.n_in
        na += g.n_nodes
        no += g.n_out
    total = Graph(ea, na, tuple(s), tuple(p), tuple(q), tuple(t))
    injections = []
    for g, (oa, oi, on, oo) in zip(graphs, offsets):
        injections.append(GraphMorphism(
            g, total,
            tuple(oa + e for e in range(g.n_edges)),
            tuple(oi + f for f in range(g.n_in)),
            tuple(on + x for x in range(g.n_nodes)),
            tuple(oo + f for f in range(g.n_out)),
        ))
    return total, injections


def subgraph(g: Graph, nodes: Iterable[int], edges: Iterable[int],
             in_flags: Optional[Iterable[int]] = None,
             out_flags: Optional[Iterable[int]] = None) -> tuple[Graph, "GraphMorphism"]:
    """The subgraph on the given nodes and edges with the given flags.

    Without explicit flags, takes every flag at a chosen node whose edge is chosen.
    Elements keep their relative order.
    """
    nodes = sorted(set(nodes))
    edges = sorted(set(edges))
    node_pos = {x: i for i, x in enumerate(nodes)}
    edge_pos = {e: i for i, e in enumerate(edges)}
    if in_flags is None:
        ins = [f for f in range(g.n_in) if g.p[f] in node_pos and g.s[f] in edge_pos]
    else:
        ins = sorted(set(in_flags))
    if out_flags is None:
        outs = [f for f in range(g.n_out) if g.q[f] in node_pos and g.t[f] in edge_pos]
    else:
        outs = sorted(set(out_flags))
    h = Graph(
        len(edges), len(nodes),
        tuple(edge_pos[g.s[f]] for f in ins), tuple(node_pos[g.p[f]] for f in ins),
        tuple(node_pos[g.q[f]] for f in outs), tuple(edge_pos[g.t[f]] for f in outs),
        edge_names=tuple(g.edge_name(e) for e in edges) if g.edge_names else None,
        node_names=tuple(g.node_name(x) for x in nodes) if g.node_names else None,
    )
    return h, GraphMorphism(h, g, tuple(edges), tuple(ins), tuple(nodes), tuple(outs))


# ---------------------------------------------------------------- morphisms


class MorphismError(ValueError):
    pass


@dataclass(frozen=True)
class GraphMorphism:
    source: Graph
    target: Graph
    alpha: tuple[int, ...]
    iota: tuple[int, ...]
    nu: tuple[int, ...]
    omega: tuple[int, ...]

    def __post_init__(self):
        for name in ("alpha", "iota", "nu", "omega"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        problem = morphism_problem(self)
        if problem:
            raise MorphismError(problem)

    @classmethod
    def from_edge_map(cls, source: Graph, target: Graph, alpha: Sequence[int],
                      nu: Optional[dict[int, int]] = None) -> "GraphMorphism":
        """Reconstruct flag and node maps from an edge map; isolated nodes need nu."""
        nu = dict(nu or {})
        iota = []
        for f in range(source.n_in):
            g = target.in_flag_of_edge(alpha[source.s[f]])
            if g is None:
                raise MorphismError(f"in-flag {f} has no image")
            iota.append(g)
            _set_node(nu, source.p[f], target.p[g])
        omega = []
        for f in range(source.n_out):
            g = target.out_flag_of_edge(alpha[source.t[f]])
            if g is None:
                raise MorphismError(f"out-flag {f} has no image")
            omega.append(g)
            _set_node(nu, source.q[f], target.q[g])
        missing = [x for x in range(source.n_nodes) if x not in nu]
        if missing:
            raise MorphismError(f"node map ambiguous at isolated nodes {missing}")
        return cls(source, target, tuple(alpha), tuple(iota),
                   tuple(nu[x] for x in range(source.n_nodes)), tuple(omega))

    def then(self, other: "GraphMorphism") -> "GraphMorphism":
        """Diagrammatic composite: first self, then other."""
        return GraphMorphism(
            self.source, other.target,
            tuple(other.alpha[v] for v in self.alpha),
            tuple(other.iota[v] for v in self.iota),
            tuple(other.nu[v] for v in self.nu),
            tuple(other.omega[v] for v in self.omega),
        )

    def key(self) -> tuple:
        return (self.alpha, self.nu)

    def levels(self) -> tuple[tuple[int, ...], ...]:
        return (self.alpha, self.iota, self.nu, self.omega)

    def is_iso(self) -> bool:
        return (all(len(set(m)) == len(m) for m in self.levels())
                and len(self.alpha) == self.target.n_edges and len(self.nu) == self.target.n_nodes
                and len(self.iota) == self.target.n_in and len(self.omega) == self.target.n_out)

    def inverse(self) -> "GraphMorphism":
        if not self.is_iso():
            raise MorphismError("not an isomorphism")

        def inv(m):
            out = [0] * len(m)
            for a, b in enumerate(m):
                out[b] = a
            return tuple(out)

        return GraphMorphism(self.target, self.source, inv(self.alpha), inv(self.iota),
                             inv(self.nu), inv(self.omega))


def _set_node(nu: dict, x: int, y: int) -> None:
    if nu.setdefault(x, y) != y:
        raise MorphismError(f"node {x} is sent to both {nu[x]} and {y}")


def morphism_problem(f: GraphMorphism) -> Optional[str]:
    a, b = f.source, f.target
    sizes = ((f.alpha, a.n_edges, b.n_edges), (f.iota, a.n_in, b.n_in),
             (f.nu, a.n_nodes, b.n_nodes), (f.omega, a.n_out, b.n_out))
    for table, dom, cod in sizes:
        if len(table) != dom or any(not 0 <= v < cod for v in table):
            return "level map has the wrong shape"
    for i in range(a.n_in):
        if b.s[f.iota[i]] != f.alpha[a.s[i]]:
            return f"square s fails at in-flag {i}"
        if b.p[f.iota[i]] != f.nu[a.p[i]]:
            return f"square p fails at in-flag {i}"
    for o in range(a.n_out):
        if b.t[f.omega[o]] != f.alpha[a.t[o]]:
            return f"square t fails at out-flag {o}"
        if b.q[f.omega[o]] != f.nu[a.q[o]]:
            return f"square q fails at out-flag {o}"
    return None


def identity(g: Graph) -> GraphMorphism:
    return GraphMorphism(g, g, tuple(range(g.n_edges)), tuple(range(g.n_in)),
                         tuple(range(g.n_nodes)), tuple(range(g.n_out)))


@dataclass(frozen=True)
class MorphismClass:
    etale: bool
    inclusion: bool
    import_preserving: bool
    export_preserving: bool
    locally_injective: bool
    core_equivalence: bool


def _fibre_map_ok(f: GraphMorphism, x: int, need_bijective: bool) -> bool:
    src, tgt = f.source, f.target
    y = f.nu[x]
    for mine, theirs, table in ((src.in_flags_of(x), tgt.in_flags_of(y), f.iota),
                                (src.out_flags_of(x), tgt.out_flags_of(y), f.omega)):
        images = [table[k] for k in mine]
        if len(set(images)) != len(images):
            return False
        if need_bijective and len(images) != len(theirs):
            return False
    return True


def is_etale(f: GraphMorphism) -> bool:
    return all(_fibre_map_ok(f, x, True) for x in range(f.source.n_nodes))


def is_inclusion(f: GraphMorphism) -> bool:
    return all(len(set(m)) == len(m) for m in f.levels())


def is_import_preserving(f: GraphMorphism) -> bool:
    src, tgt = f.source, f.target
    return all(src.out_flag_of_edge(e) is not None or tgt.out_flag_of_edge(f.alpha[e]) is None
               for e in range(src.n_edges))


def is_export_preserving(f: GraphMorphism) -> bool:
    src, tgt = f.source, f.target
    return all(src.in_flag_of_edge(e) is not None or tgt.in_flag_of_edge(f.alpha[e]) is None
               for e in range(src.n_edges))


def is_core_equivalence(f: GraphMorphism) -> bool:
    if len(set(f.nu)) != f.source.n_nodes or f.source.n_nodes != f.target.n_nodes:
        return False
    images = {(f.omega[o], f.iota[i]) for o, i in _inner_pairs(f.source)}
    return len(images) == len(_inner_pairs(f.source)) == len(_inner_pairs(f.target))


def classify_morphism(f: GraphMorphism) -> MorphismClass:
    return MorphismClass(
        etale=is_etale(f),
        inclusion=is_inclusion(f),
        import_preserving=is_import_preserving(f),
        export_preserving=is_export_preserving(f),
        locally_injective=all(_fibre_map_ok(f, x, False) for x in range(f.source.n_nodes)),
        core_equivalence=is_core_equivalence(f),
    )


# ---------------------------------------------------------------- hom-sets


class HomKind(enum.Enum):
    ALL = "all"
    ETALE = "etale"
    INCLUSION = "inclusion"


def iter_homs(src: Graph, tgt: Graph, kind: HomKind = HomKind.ALL) -> Iterator[GraphMorphism]:
    """Backtrack over node images, then edge images constrained by incidence."""
    etale = kind is HomKind.ETALE
    inj = kind is HomKind.INCLUSION
    if inj and (src.n_edges > tgt.n_edges or src.n_nodes > tgt.n_nodes):
        return
    in_edges = [tgt.in_edges_of(y) for y in range(tgt.n_nodes)]
    out_edges = [tgt.out_edges_of(y) for y in range(tgt.n_nodes)]

    def node_ok(x: int, y: int) -> bool:
        if etale:
            return src.biarity(x) == tgt.biarity(y)
        if src.in_flags_of(x) and not in_edges[y]:
            return False
        if src.out_flags_of(x) and not out_edges[y]:
            return False
        return True

    node_choices = [[y for y in range(tgt.n_nodes) if node_ok(x, y)] for x in range(src.n_nodes)]
    all_edges = list(range(tgt.n_edges))
    # edges with the fewest candidates first
    order = sorted(range(src.n_edges), key=lambda e: (src.head(e) is None) + (src.tail(e) is None))

    for nu in _product_maybe_injective(node_choices, inj):
        cands = []
        for e in range(src.n_edges):
            h, tl = src.head(e), src.tail(e)
            if h is None and tl is None:
                c = all_edges
            elif tl is None:
                c = in_edges[nu[h]]
            elif h is None:
                c = out_edges[nu[tl]]
            else:
                c = [a for a in in_edges[nu[h]] if tgt.tail(a) == nu[tl]]
            if not c:
                break
            cands.append(c)
        else:
            alpha = [0] * src.n_edges
            yield from _edge_search(src, tgt, nu, order, cands, alpha, 0, set(), etale, inj)


def _product_maybe_injective(choices, injective):
    if not injective:
        yield from itertools.product(*choices)
        return

    def rec(i, acc, used):
        if i == len(choices):
            yield tuple(acc)
            return
        for y in choices[i]:
            if y not in used:
                acc.append(y)
                used.add(y)
                yield from rec(i + 1, acc, used)
                used.discard(y)
                acc.pop()

    yield from rec(0, [], set())


def _edge_search(src, tgt, nu, order, cands, alpha, k, used, etale, inj):
    if k == len(order):
        yield _morphism_from(src, tgt, tuple(alpha), nu)
        return
    e = order[k]
    for a in cands[e]:
        if inj and a in used:
            continue
        if etale and not _etale_partial_ok(src, alpha, order, k, e, a):
            continue
        alpha[e] = a
        used.add(a)
        yield from _edge_search(src, tgt, nu, order, cands, alpha, k + 1, used, etale, inj)
        used.discard(a)


def _etale_partial_ok(src, alpha, order, k, e, a) -> bool:
    # fibre maps must be injective: two inputs (or outputs) of one node can't share an image
    assigned = order[:k]
    h, tl = src.head(e), src.tail(e)
    for e2 in assigned:
        if alpha[e2] != a:
            continue
        if h is not None and src.head(e2) == h:
            return False
        if tl is not None and src.tail(e2) == tl:
            return False
    return True


def _morphism_from(src: Graph, tgt: Graph, alpha, nu) -> GraphMorphism:
    iota = tuple(tgt.in_flag_of_edge(alpha[src.s[f]]) for f in range(src.n_in))
    omega = tuple(tgt.out_flag_of_edge(alpha[src.t[f]]) for f in range(src.n_out))
    return GraphMorphism(src, tgt, alpha, iota, tuple(nu), omega)


def hom_set(src: Graph, tgt: Graph, kind: HomKind = HomKind.ALL) -> list[GraphMorphism]:
    """All morphisms src -> tgt of the given kind, sorted by (edge map, node map)."""
    return sorted(iter_homs(src, tgt, kind), key=GraphMorphism.key)


# ---------------------------------------------------------------- connectivity and cycles


def _component_labels(g: Graph) -> FinMap:
    # elements 0..A-1 are edges, A..A+N-1 nodes
    uf = UnionFind(g.n_edges + g.n_nodes)
    for f in range(g.n_in):
        uf.union(g.s[f], g.n_edges + g.p[f])
    for f in range(g.n_out):
        uf.union(g.t[f], g.n_edges + g.q[f])
    # number components by least node, then least edge, for a stable order
    order = list(range(g.n_edges, g.n_edges + g.n_nodes)) + list(range(g.n_edges))
    labels: dict[int, int] = {}
    for v in order:
        labels.setdefault(uf.find(v), len(labels))
    return FinMap(g.n_edges + g.n_nodes, len(labels), tuple(labels[uf.find(v)] for v in range(g.n_edges + g.n_nodes)))


def components(g: Graph) -> list[tuple[Graph, GraphMorphism]]:
    lab = _component_labels(g)
    out = []
    for c in range(lab.cod_size):
        edges = [e for e in range(g.n_edges) if lab(e) == c]
        nodes = [x for x in range(g.n_nodes) if lab(g.n_edges + x) == c]
        out.append(subgraph(g, nodes, edges))
    return out


def num_components(g: Graph) -> int:
    return _component_labels(g).cod_size


def is_connected(g: Graph) -> bool:
    return num_components(g) == 1


def lessdot(g: Graph) -> set[tuple[int, int]]:
    """Pairs (a, b) of edges such that some node has a as input and b as output."""
    return {(g.s[i], g.t[o]) for x in range(g.n_nodes)
            for i in g.in_flags_of(x) for o in g.out_flags_of(x)}


def _has_cycle(vertices: int, arrows: Iterable[tuple[int, int]]) -> bool:
    succ: list[list[int]] = [[] for _ in range(vertices)]
    for a, b in arrows:
        succ[a].append(b)
    colour = [0] * vertices
    for root in range(vertices):
        if colour[root]:
            continue
        stack = [(root, iter(succ[root]))]
        colour[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[v] = 2
                stack.pop()
            elif colour[nxt] == 1:
                return True
            elif colour[nxt] == 0:
                colour[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
    return False


def is_acyclic(g: Graph) -> bool:
    return not _has_cycle(g.n_edges, lessdot(g))


def is_loopfree(g: Graph) -> bool:
    return all(not (set(g.in_edges_of(x)) & set(g.out_edges_of(x))) for x in range(g.n_nodes))


# ---------------------------------------------------------------- core and residue


def _inner_pairs(g: Graph) -> list[tuple[int, int]]:
    """O x_A I in lexicographic order: (out-flag, in-flag) sharing an edge."""
    pairs = []
    for o in range(g.n_out):
        i = g.in_flag_of_edge(g.t[o])
        if i is not None:
            pairs.append((o, i))
    return pairs


def core(g: Graph) -> tuple[Graph, GraphMorphism]:
    """The closed graph of inner edges and all nodes, with its counit into g."""
    pairs = _inner_pairs(g)
    c = closed_graph(g.n_nodes, [g.q[o] for o, _ in pairs], [g.p[i] for _, i in pairs])
    counit = GraphMorphism(
        c, g,
        tuple(g.t[o] for o, _ in pairs),
        tuple(i for _, i in pairs),
        tuple(range(g.n_nodes)),
        tuple(o for o, _ in pairs),
    )
    return c, counit


@dataclass(frozen=True)
class Residue:
    corolla: Graph
    import_bij: FinMap
    export_bij: FinMap


class NotConnected(ValueError):
    pass


def residue(g: Graph) -> Residue:
    """The corolla with the imports and exports of g, matched in edge order."""
    if not is_connected(g):
        raise NotConnected("residue is only defined for connected graphs")
    m, n = len(g.imports), len(g.exports)
    return Residue(corolla(m, n), FinMap(m, g.n_edges, g.imports), FinMap(n, g.n_edges, g.exports))


# ---------------------------------------------------------------- Feynman graphs


@dataclass(frozen=True)
class FeynmanGraph:
    """Ends E = A+A with the swap involution, half-edges H = I+O, vertices V = N.

    The first copy of A holds the tail end of each edge, the second copy the head end.
    An out-flag sits at the tail end, an in-flag at the head end.
    """

    n_ends: int
    involution: FinMap
    n_half_edges: int
    ends: FinMap
    vertex: FinMap


def underlying_feynman(g: Graph) -> FeynmanGraph:
    a = g.n_edges
    inv = FinMap(2 * a, 2 * a, tuple([e + a for e in range(a)] + list(range(a))))
    ends = FinMap(g.n_in + g.n_out, 2 * a, tuple([a + e for e in g.s] + list(g.t)))
    vertex = FinMap(g.n_in + g.n_out, g.n_nodes, tuple(list(g.p) + list(g.q)))
    return FeynmanGraph(2 * a, inv, g.n_in + g.n_out, ends, vertex)


# ---------------------------------------------------------------- JSON


def graph_to_json(g: Diagram) -> dict:
    nodes = []
    for x in range(g.n_nodes):
        nodes.append({
            "id": g.node_name(x),
            "in": [g.edge_name(g.s[f]) for f in g.in_flags_of(x)],
            "out": [g.edge_name(g.t[f]) for f in g.out_flags_of(x)],
        })
    return {"edges": [g.edge_name(e) for e in range(g.n_edges)], "nodes": nodes}


def parse_diagram(obj: dict) -> tuple[Diagram, list[Violation]]:
    """Parse the JSON shape into an unchecked diagram plus naming problems."""
    problems: list[Violation] = []
    if not isinstance(obj, dict) or not isinstance(obj.get("edges"), list) or not isinstance(obj.get("nodes"), list):
        raise GraphValidationError([Violation("Malformed", {"reason": "expected {'edges': [...], 'nodes': [...]}"})])
    edge_names = [str(e) for e in obj["edges"]]
    edge_pos: dict[str, int] = {}
    for e in edge_names:
        if e in edge_pos:
            problems.append(Violation("DuplicateEdge", {"edge": e}))
        edge_pos.setdefault(e, len(edge_pos))
    node_names = []
    ins, outs = [], []
    for raw in obj["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw:
            raise GraphValidationError([Violation("Malformed", {"reason": "node without id"})])
        nid = str(raw["id"])
        if nid in node_names:
            problems.append(Violation("DuplicateNode", {"node": nid}))
        node_names.append(nid)
        for key, acc in (("in", ins), ("out", outs)):
            lst = []
            for e in raw.get(key, []):
                if str(e) not in edge_pos:
                    problems.append(Violation("UnknownEdge", {"node": nid, "edge": str(e)}))
                else:
                    lst.append(edge_pos[str(e)])
            acc.append(lst)
    unique_edges = list(edge_pos)
    d = Diagram.from_lists(len(unique_edges), ins, outs,
                           edge_names=tuple(unique_edges), node_names=tuple(node_names))
    return d, problems


def graph_from_json(obj: dict) -> Graph:
    d, problems = parse_diagram(obj)
    problems += diagram_violations(d)
    if problems:
        raise GraphValidationError(problems)
    return validate_graph(d)


def morphism_to_json(f: GraphMorphism) -> dict:
    src, tgt = f.source, f.target
    return {
        "edge_map": {src.edge_name(e): tgt.edge_name(f.alpha[e]) for e in range(src.n_edges)},
        "node_map": {src.node_name(x): tgt.node_name(f.nu[x]) for x in range(src.n_nodes)},
    }


def _flag_ref(g: Graph, side: str, f: int) -> str:
    node = g.p[f] if side == "in" else g.q[f]
    flags = g.in_flags_of(node) if side == "in" else g.out_flags_of(node)
    return f"{g.node_name(node)}/{flags.index(f)}"


def morphism_from_json(obj: dict, source: Graph, target: Graph) -> GraphMorphism:
    """Flags follow from the edge map; node_map is needed only for isolated nodes."""
    te_idx = {target.edge_name(e): e for e in range(target.n_edges)}
    n_idx = {source.node_name(x): x for x in range(source.n_nodes)}
    tn_idx = {target.node_name(x): x for x in range(target.n_nodes)}
    try:
        emap = obj["edge_map"]
        alpha = [te_idx[str(emap[source.edge_name(e)])] for e in range(source.n_edges)]
        nu = {n_idx[str(k)]: tn_idx[str(v)] for k, v in obj.get("node_map", {}).items()}
    except KeyError as exc:
        raise MorphismError(f"unknown or missing element {exc}") from None
    f = GraphMorphism.from_edge_map(source, target, alpha, nu)
    for side, table in (("in", f.iota), ("out", f.omega)):
        given = obj.get(f"{side}_flag_map")
        if given is None:
            continue
        n_flags = source.n_in if side == "in" else source.n_out
        for k in range(n_flags):
            ref = _flag_ref(source, side, k)
            if ref in given and given[ref] != _flag_ref(target, side, table[k]):
                raise MorphismError(f"{side}_flag_map disagrees with the edge map at {ref}")
    return f
