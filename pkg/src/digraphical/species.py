"""Digraphical species, decorated graphs and the free-properad monad.

A species here is a set of colours (its value on the unit graph) and a set of
operations, each with a sequence of input colours and a sequence of output
colours. Its value on the corolla C^m_n is the set of pairs (operation,
rearrangement of its colour sequences); the symmetric groups act by
rearranging. Consequently a decoration of a graph assigns a colour to every
edge and, to every node, an operation whose input and output colours agree
with those of the node's edges as multisets.

The free properad on F is infinite, so it is handled one grade (node count) at
a time, and every function takes an explicit bound.
"""
from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .assembly import GraphOfGraphs, colimit_of_graph_of_graphs, elements
from .digraph import Graph, corolla, disjoint_union, unit
from .assembly import GluingDatum, coequalize
from .symmetry import PortedGraph, automorphism_group, canonical_form, enumerate_graphs


class SpeciesError(ValueError):
    pass


class ResidueMismatch(SpeciesError):
    pass


@dataclass(frozen=True)
class Operation:
    id: str
    in_colours: tuple[str, ...]
    out_colours: tuple[str, ...]

    @property
    def biarity(self) -> tuple[int, int]:
        return len(self.in_colours), len(self.out_colours)


@dataclass(frozen=True)
class Species:
    colours: tuple[str, ...]
    operations: tuple[Operation, ...]

    def __post_init__(self):
        object.__setattr__(self, "colours", tuple(self.colours))
        object.__setattr__(self, "operations", tuple(self.operations))
        known = set(self.colours)
        ids = [op.id for op in self.operations]
        if len(set(ids)) != len(ids):
            raise SpeciesError("operation ids must be distinct")
        for op in self.operations:
            for c in op.in_colours + op.out_colours:
                if c not in known:
                    raise SpeciesError(f"operation {op.id} uses unknown colour {c!r}")

    @classmethod
    def terminal(cls, biarities: Iterable[tuple[int, int]]) -> Species:
        """One colour and one operation of each listed biarity."""
        ops = [Operation(f"op{i}_{o}", ("*",) * i, ("*",) * o) for i, o in sorted(set(biarities))]
        return cls(("*",), tuple(ops))

    @classmethod
    def representable(cls, x: Graph) -> Species:
        """Colours are the edges of x, operations its nodes; decorations are etale maps into x."""
        colours = tuple(x.edge_name(e) for e in range(x.n_edges))
        ops = tuple(
            Operation(x.node_name(v), tuple(colours[e] for e in x.in_edges_of(v)),
                      tuple(colours[e] for e in x.out_edges_of(v)))
            for v in range(x.n_nodes)
        )
        return cls(colours, ops)

    def op(self, op_id: str) -> Operation:
        for op in self.operations:
            if op.id == op_id:
                return op
        raise SpeciesError(f"unknown operation {op_id!r}")

    @property
    def biarities(self) -> set[tuple[int, int]]:
        return {op.biarity for op in self.operations}

    def ops_matching(self, ins: Sequence[str], outs: Sequence[str]) -> list[Operation]:
        ci, co = Counter(ins), Counter(outs)
        return [op for op in self.operations
                if Counter(op.in_colours) == ci and Counter(op.out_colours) == co]


def species_from_json(obj: dict) -> Species:
    try:
        ops = tuple(Operation(str(o["id"]), tuple(o.get("in", ())), tuple(o.get("out", ())))
                    for o in obj.get("ops", ()))
        return Species(tuple(obj["colours"]), ops)
    except (KeyError, TypeError) as exc:
        raise SpeciesError(f"malformed species: {exc}") from exc


def species_to_json(f: Species) -> dict:
    return {"colours": list(f.colours),
            "ops": [{"id": op.id, "in": list(op.in_colours), "out": list(op.out_colours)}
                    for op in f.operations]}


def corolla_values(f: Species, m: int, n: int) -> list[tuple[str, tuple[str, ...], tuple[str, ...]]]:
    """F[C^m_n]: operations of biarity (m,n) with every distinct rearrangement of their colours."""
    out = []
    for op in f.operations:
        if op.biarity != (m, n):
            continue
        for ins in sorted(set(itertools.permutations(op.in_colours))):
            for outs in sorted(set(itertools.permutations(op.out_colours))):
                out.append((op.id, ins, outs))
    return out


# ---------------------------------------------------------------- decorated graphs


@dataclass(frozen=True)
class FGraph:
    """A graph with a colour on each edge, a decoration on each node, and numbered ports.

    Node decorations are operation ids for an F-graph; for graphs of graphs they
    can be nested FGraphs.
    """

    shape: Graph
    edge_colour: tuple
    node_op: tuple
    import_order: tuple[int, ...] = None
    export_order: tuple[int, ...] = None

    def __post_init__(self):
        object.__setattr__(self, "edge_colour", tuple(self.edge_colour))
        object.__setattr__(self, "node_op", tuple(self.node_op))
        if self.import_order is None:
            object.__setattr__(self, "import_order", self.shape.imports)
        if self.export_order is None:
            object.__setattr__(self, "export_order", self.shape.exports)
        object.__setattr__(self, "import_order", tuple(self.import_order))
        object.__setattr__(self, "export_order", tuple(self.export_order))
        if len(self.edge_colour) != self.shape.n_edges or len(self.node_op) != self.shape.n_nodes:
            raise SpeciesError("decoration has the wrong shape")
        PortedGraph(self.shape, self.import_order, self.export_order)

    @property
    def ported(self) -> PortedGraph:
        return PortedGraph(self.shape, self.import_order, self.export_order)

    @property
    def grade(self) -> int:
        return self.shape.n_nodes

    @property
    def residue(self) -> tuple[tuple, tuple]:
        """Port colours in port order."""
        return (tuple(self.edge_colour[e] for e in self.import_order),
                tuple(self.edge_colour[e] for e in self.export_order))

    def node_label(self, x: int) -> str:
        d = self.node_op[x]
        return certificate_of(d) if isinstance(d, FGraph) else str(d)

    def check(self, f: Species) -> None:
        for x in range(self.shape.n_nodes):
            op = f.op(self.node_op[x])
            ins = [self.edge_colour[e] for e in self.shape.in_edges_of(x)]
            outs = [self.edge_colour[e] for e in self.shape.out_edges_of(x)]
            if Counter(ins) != Counter(op.in_colours) or Counter(outs) != Counter(op.out_colours):
                raise SpeciesError(f"node {x}: colours {ins}->{outs} do not fit operation {op.id}")
        for c in self.edge_colour:
            if c not in f.colours:
                raise SpeciesError(f"unknown colour {c!r}")


def certificate_of(fg: FGraph) -> str:
    """Equal exactly for isomorphic decorated ported graphs."""
    labels = [fg.node_label(x) for x in range(fg.shape.n_nodes)]
    return canonical_form(fg.ported, node_labels=labels, edge_labels=list(fg.edge_colour)).certificate


def unit_fgraph(colour: str) -> FGraph:
    return FGraph(unit(), (colour,), ())


def corolla_fgraph(op_id, ins: Sequence[str], outs: Sequence[str]) -> FGraph:
    """The one-node decorated graph; port k carries the k-th colour."""
    return FGraph(corolla(len(ins), len(outs)), tuple(ins) + tuple(outs), (op_id,))


# ---------------------------------------------------------------- evaluation


def evaluate(f: Species, g: Graph) -> list[FGraph]:
    """F[G]: every colouring of the edges of g that some operation fits at each node."""
    in_edges = [g.in_edges_of(x) for x in range(g.n_nodes)]
    out_edges = [g.out_edges_of(x) for x in range(g.n_nodes)]
    ops_by_arity: dict[tuple[int, int], list[Operation]] = {}
    for op in f.operations:
        ops_by_arity.setdefault(op.biarity, []).append(op)
    if any(not ops_by_arity.get(g.biarity(x)) for x in range(g.n_nodes)):
        return []
    touching: list[list[int]] = [[] for _ in range(g.n_edges)]
    for x in range(g.n_nodes):
        for e in set(in_edges[x] + out_edges[x]):
            touching[e].append(x)
    colour = [None] * g.n_edges
    results: list[FGraph] = []

    def fits(op: Operation, x: int) -> bool:
        # partial multiset containment of the colours assigned so far
        ins = Counter(colour[e] for e in in_edges[x] if colour[e] is not None)
        outs = Counter(colour[e] for e in out_edges[x] if colour[e] is not None)
        return not (ins - Counter(op.in_colours)) and not (outs - Counter(op.out_colours))

    def feasible(e: int) -> bool:
        return all(any(fits(op, x) for op in ops_by_arity[g.biarity(x)]) for x in touching[e])

    def rec(e: int):
        if e == g.n_edges:
            choices = []
            for x in range(g.n_nodes):
                ins = [colour[a] for a in in_edges[x]]
                outs = [colour[a] for a in out_edges[x]]
                choices.append([op.id for op in f.ops_matching(ins, outs)])
            for ops in itertools.product(*choices):
                results.append(FGraph(g, tuple(colour), ops))
            return
        for c in f.colours:
            colour[e] = c
            if feasible(e):
                rec(e + 1)
        colour[e] = None

    rec(0)
    return results


def evaluate_by_limit(f: Species, g: Graph) -> list[FGraph]:
    """F[G] as the limit over the elements of G: compatible families of corolla values."""
    el = elements(g)
    values = {x: corolla_values(f, *g.biarity(x)) for x in range(g.n_nodes)}
    # arrows into node objects record which edge sits at which flag position
    slots: dict[int, list[tuple[str, int, int]]] = {x: [] for x in range(g.n_nodes)}
    for arrow in el.arrows:
        x = arrow.cod - el.n_edge_objects
        side = arrow.kind
        flags = g.in_flags_of(x) if side == "I" else g.out_flags_of(x)
        slots[x].append((side, flags.index(arrow.flag), arrow.dom))
    colour: dict[int, str] = {}
    results = []

    def rec(x: int, chosen: list):
        if x == g.n_nodes:
            free = [e for e in range(g.n_edges) if e not in colour]
            for extra in itertools.product(f.colours, repeat=len(free)):
                full = dict(colour)
                full.update(zip(free, extra))
                results.append(FGraph(g, tuple(full[e] for e in range(g.n_edges)), tuple(chosen)))
            return
        for op_id, ins, outs in values[x]:
            added = []
            ok = True
            for side, k, e in slots[x]:
                c = ins[k] if side == "I" else outs[k]
                if e in colour:
                    if colour[e] != c:
                        ok = False
                        break
                else:
                    colour[e] = c
                    added.append(e)
            if ok:
                rec(x + 1, chosen + [op_id])
            for e in added:
                del colour[e]

    rec(0, [])
    # distinct families can give the same decoration when an operation repeats a colour
    unique = {(d.edge_colour, d.node_op): d for d in results}
    return [unique[k] for k in sorted(unique)]


# ---------------------------------------------------------------- the free properad


@dataclass(frozen=True)
class BarClass:
    ported: PortedGraph
    decoration: FGraph
    orbit_size: int
    aut_order: int
    certificate: str


@dataclass
class GradedBarValue:
    biarity: tuple[int, int]
    max_grade: int
    classes: list[BarClass]

    def by_grade(self) -> dict[int, list[BarClass]]:
        out: dict[int, list[BarClass]] = {k: [] for k in range(self.max_grade + 1)}
        for c in self.classes:
            out[c.decoration.grade].append(c)
        return out


def act(sigma, d: FGraph) -> FGraph:
    """Transport a decoration along an automorphism of its shape."""
    colour = [None] * d.shape.n_edges
    ops = [None] * d.shape.n_nodes
    for e, c in enumerate(d.edge_colour):
        colour[sigma.alpha[e]] = c
    for x, o in enumerate(d.node_op):
        ops[sigma.nu[x]] = o
    return FGraph(d.shape, tuple(colour), tuple(ops),
                  tuple(sigma.alpha[e] for e in d.import_order),
                  tuple(sigma.alpha[e] for e in d.export_order))


def free_properad(f: Species, m: int, n: int, max_nodes: int, shape: str = "any") -> GradedBarValue:
    """F-bar[m,n] up to max_nodes nodes: decorations of each (m,n)-class modulo its port-fixing automorphisms."""
    classes = []
    for pg in enumerate_graphs(m, n, max_nodes, f.biarities, shape=shape):
        aut = automorphism_group(pg, fix_ports=True)
        seen: set = set()
        for d in evaluate(f, pg.graph):
            d = FGraph(pg.graph, d.edge_colour, d.node_op, pg.import_order, pg.export_order)
            key = (d.edge_colour, d.node_op)
            if key in seen:
                continue
            orbit = {key}
            for sigma in aut.elements:
                moved = act(sigma, d)
                orbit.add((moved.edge_colour, moved.node_op))
            seen |= orbit
            rep = min(orbit)
            rep_d = FGraph(pg.graph, rep[0], rep[1], pg.import_order, pg.export_order)
            classes.append(BarClass(pg, rep_d, len(orbit), aut.order, certificate_of(rep_d)))
    classes.sort(key=lambda c: (c.decoration.grade, c.certificate))
    return GradedBarValue((m, n), max_nodes, classes)


# ---------------------------------------------------------------- multiplication


def substitute(outer: PortedGraph, assignment: Sequence[FGraph],
               edge_colour: Optional[Sequence] = None) -> FGraph:
    """Glue assignment[x] into each node x of the outer graph.

    The k-th in-flag of x (in flag order) is matched with the k-th import of
    assignment[x]. Edge colours of the outer graph are read off the assigned
    graphs; edges touching no node need edge_colour.
    """
    r = outer.graph
    if len(assignment) != r.n_nodes:
        raise ResidueMismatch("one assigned graph per node is required")
    in_maps = [0] * r.n_in
    out_maps = [0] * r.n_out
    colour: list = [None] * r.n_edges
    if edge_colour is not None:
        colour = list(edge_colour)

    def settle(e: int, c, where: str):
        if colour[e] is None:
            colour[e] = c
        elif colour[e] != c:
            raise ResidueMismatch(f"edge {e}: colour {colour[e]!r} vs {c!r} at {where}")

    for x, gx in enumerate(assignment):
        ins, outs = r.in_flags_of(x), r.out_flags_of(x)
        if (len(ins), len(outs)) != (len(gx.import_order), len(gx.export_order)):
            raise ResidueMismatch(f"node {x} has biarity {r.biarity(x)} but its graph has "
                                  f"{len(gx.import_order)} imports and {len(gx.export_order)} exports")
        for k, fl in enumerate(ins):
            in_maps[fl] = gx.import_order[k]
            settle(r.s[fl], gx.edge_colour[gx.import_order[k]], f"node {x}")
        for k, fl in enumerate(outs):
            out_maps[fl] = gx.export_order[k]
            settle(r.t[fl], gx.edge_colour[gx.export_order[k]], f"node {x}")
    if any(c is None for c in colour):
        raise ResidueMismatch("edges without nodes need an explicit colour")
    glued = colimit_of_graph_of_graphs(GraphOfGraphs(r, tuple(g.shape for g in assignment),
                                                     tuple(in_maps), tuple(out_maps)))
    q = glued.graph
    new_colour: list = [None] * q.n_edges
    ops: list = [None] * q.n_nodes
    for e in range(r.n_edges):
        new_colour[glued.edge_image[e]] = colour[e]
    for x, gx in enumerate(assignment):
        leg = glued.legs[x]
        for e, c in enumerate(gx.edge_colour):
            new_colour[leg.alpha[e]] = c
        for y, o in enumerate(gx.node_op):
            ops[leg.nu[y]] = o
    return FGraph(q, tuple(new_colour), tuple(ops),
                  tuple(glued.edge_image[e] for e in outer.import_order),
                  tuple(glued.edge_image[e] for e in outer.export_order))


def monad_mult(f: Species, outer: PortedGraph, assignment: Sequence[FGraph],
               edge_colour: Optional[Sequence[str]] = None) -> FGraph:
    """Multiplication of the free-properad monad on one F-bar-graph."""
    for gx in assignment:
        gx.check(f)
    result = substitute(outer, assignment, edge_colour)
    result.check(f)
    assert result.grade == sum(g.grade for g in assignment)
    return result


def unit_map(f: Species, op_id: str, ins: Sequence[str], outs: Sequence[str]) -> FGraph:
    """The unit of the monad: an element of F[C^m_n] as a one-node F-graph."""
    op = f.op(op_id)
    if Counter(ins) != Counter(op.in_colours) or Counter(outs) != Counter(op.out_colours):
        raise SpeciesError(f"{ins}->{outs} is not a rearrangement of operation {op_id}")
    return corolla_fgraph(op_id, ins, outs)


def flatten_outer(d: FGraph) -> tuple[PortedGraph, list[FGraph]]:
    """Split a graph whose nodes carry FGraphs into the outer graph and the assignment."""
    return d.ported, list(d.node_op)


# ---------------------------------------------------------------- random nestings


def _random_glue(pieces: Sequence[FGraph], rng: random.Random,
                 allow_node_units: bool = True) -> Optional[FGraph]:
    """A random connected acyclic graph with one node per piece, decorated by the pieces.

    Pieces are added one at a time; each new one has some inputs glued to
    existing exports or some outputs glued to existing imports (never both,
    so no cycle can appear), always matching colours.
    """
    current: Optional[Graph] = None
    colour: list = []
    node_pieces: list[FGraph] = []
    for piece in pieces:
        ins_c, outs_c = piece.residue
        c = corolla(len(ins_c), len(outs_c))
        c_colour = list(ins_c) + list(outs_c)
        if current is None:
            current, colour, node_pieces = c, c_colour, [piece]
            continue
        total, (inc_g, inc_c) = disjoint_union([current, c])
        tot_colour = [None] * total.n_edges
        for e, col in enumerate(colour):
            tot_colour[inc_g.alpha[e]] = col
        for e, col in enumerate(c_colour):
            tot_colour[inc_c.alpha[e]] = col
        options = []
        for direction in ("down", "up"):
            if direction == "down":
                mine = [inc_c.alpha[k] for k in range(len(ins_c))]
                theirs = [inc_g.alpha[e] for e in current.exports]
            else:
                mine = [inc_c.alpha[len(ins_c) + k] for k in range(len(outs_c))]
                theirs = [inc_g.alpha[e] for e in current.imports]
            pairs = [(a, b) for a in mine for b in theirs if tot_colour[a] == tot_colour[b]]
            if pairs:
                options.append((direction, pairs))
        if not options:
            return None
        direction, pairs = rng.choice(options)
        rng.shuffle(pairs)
        used_a, used_b, chosen = set(), set(), []
        for a, b in pairs:
            if a in used_a or b in used_b:
                continue
            if chosen and rng.random() < 0.4:
                continue
            used_a.add(a)
            used_b.add(b)
            chosen.append((b, a) if direction == "down" else (a, b))
        q, quot = coequalize(GluingDatum.from_pairs(total, chosen))
        new_colour = [None] * q.n_edges
        for e, col in enumerate(tot_colour):
            new_colour[quot.alpha[e]] = col
        current, colour = q, new_colour
        node_pieces.append(piece)
    if current is None:
        return None
    imports, exports = list(current.imports), list(current.exports)
    rng.shuffle(imports)
    rng.shuffle(exports)
    return FGraph(current, tuple(colour), tuple(node_pieces), tuple(imports), tuple(exports))


def random_fgraph(f: Species, rng: random.Random, max_nodes: int, unit_prob: float = 0.1) -> FGraph:
    """A random element of F-bar with at most max_nodes nodes."""
    if not f.operations or max_nodes == 0 or rng.random() < unit_prob:
        return unit_fgraph(rng.choice(f.colours))
    for _ in range(50):
        k = rng.randint(1, max_nodes)
        pieces = []
        for _ in range(k):
            op = rng.choice(f.operations)
            ins = list(op.in_colours)
            outs = list(op.out_colours)
            rng.shuffle(ins)
            rng.shuffle(outs)
            pieces.append(corolla_fgraph(op.id, ins, outs))
        glued = _random_glue(pieces, rng)
        if glued is not None:
            return substitute(glued.ported, list(glued.node_op))
    op = rng.choice(f.operations)
    return corolla_fgraph(op.id, op.in_colours, op.out_colours)


def _random_level(make_piece: Callable[[], FGraph], rng: random.Random, max_pieces: int,
                  unit_prob: float) -> FGraph:
    """A random graph whose nodes carry pieces, or occasionally a bare unit graph."""
    for _ in range(50):
        k = rng.randint(1, max_pieces)
        glued = _random_glue([make_piece() for _ in range(k)], rng)
        if glued is None:
            continue
        if rng.random() < unit_prob:
            # a unit graph in the middle of a node: keep one (1,1) piece's colour
            colour = glued.edge_colour[glued.import_order[0]] if glued.import_order else None
            if colour is not None:
                return unit_fgraph(colour)
        return glued
    return _random_glue([make_piece()], rng)


@dataclass
class LawReport:
    passed: bool
    checked: int
    counterexamples: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def _same(a: FGraph, b: FGraph) -> bool:
    return certificate_of(a) == certificate_of(b)


def associativity_witness(nest: FGraph, cache: Optional[dict] = None) -> Optional[dict]:
    """Compare inner-first and outer-first multiplication of a two-level nesting.

    nest is a graph whose nodes carry graphs whose nodes carry operations.
    Returns None when they agree, otherwise the witness. cache memoizes the
    multiplication of the middle graphs across calls.
    """
    cache = {} if cache is None else cache
    r, hs = nest.ported, list(nest.node_op)
    inner = []
    for h in hs:
        if h not in cache:
            cache[h] = substitute(h.ported, list(h.node_op), h.edge_colour)
        inner.append(cache[h])
    inner_first = substitute(r, inner, nest.edge_colour)
    middle = substitute(r, hs, nest.edge_colour)
    outer_first = substitute(middle.ported, list(middle.node_op), middle.edge_colour)
    if _same(inner_first, outer_first):
        return None
    return {"nesting": nest, "inner_first": certificate_of(inner_first),
            "outer_first": certificate_of(outer_first)}


def unit_witnesses(f: Species, x: FGraph) -> list[dict]:
    """Both unit laws at one F-graph."""
    bad = []
    ins, outs = x.residue
    lifted = FGraph(corolla(len(ins), len(outs)), tuple(ins) + tuple(outs), (x,))
    left = substitute(lifted.ported, [x])
    if not _same(left, x):
        bad.append({"law": "unit after substitution into a corolla", "graph": x})
    corollas = []
    g = x.shape
    for v in range(g.n_nodes):
        ci = [x.edge_colour[e] for e in g.in_edges_of(v)]
        co = [x.edge_colour[e] for e in g.out_edges_of(v)]
        corollas.append(unit_map(f, x.node_op[v], ci, co))
    right = substitute(x.ported, corollas, x.edge_colour)
    if not _same(right, x):
        bad.append({"law": "unit at every node", "graph": x})
    return bad


def check_monad_laws(f: Species, max_nodes: int, sample_budget: int = 200, seed: int = 0,
                     exhaustive: bool = False, max_level_nodes: int = 2) -> LawReport:
    """Unit laws and associativity, on random nestings or exhaustively within bounds.

    Random mode draws sample_budget nestings with at most max_nodes operation
    nodes in total. Exhaustive mode covers every nesting whose outer and middle
    graphs have at most max_level_nodes nodes, total grade at most max_nodes
    and ports at most two on each side.
    """
    report = LawReport(True, 0)
    if exhaustive:
        cache: dict = {}
        for nest in _all_nestings(f, max_nodes, max_level_nodes):
            w = associativity_witness(nest, cache)
            report.checked += 1
            if w:
                report.counterexamples.append(w)
        for m in range(3):
            for n in range(3):
                for c in free_properad(f, m, n, max_nodes).classes:
                    report.checked += 1
                    report.counterexamples.extend(unit_witnesses(f, c.decoration))
    else:
        rng = random.Random(seed)
        for _ in range(sample_budget):
            nest = _random_nesting(f, rng, max_nodes)
            if nest is None:
                continue
            report.checked += 1
            w = associativity_witness(nest)
            if w:
                report.counterexamples.append(w)
            for h in nest.node_op:
                for gx in h.node_op:
                    report.counterexamples.extend(unit_witnesses(f, gx))
    report.passed = not report.counterexamples
    return report


def _grade(nest: FGraph) -> int:
    return sum(g.grade for h in nest.node_op for g in h.node_op)


def _random_nesting(f: Species, rng: random.Random, max_nodes: int) -> Optional[FGraph]:
    for _ in range(20):
        budget = max(1, max_nodes // 2)

        def level0():
            return random_fgraph(f, rng, budget)

        def level1():
            return _random_level(level0, rng, 2, 0.1)

        nest = _random_level(level1, rng, 2, 0.0)
        if nest is not None and _grade(nest) <= max_nodes:
            return nest
    return None


def _all_nestings(f: Species, max_grade: int, max_level_nodes: int) -> Iterable[FGraph]:
    """Every two-level nesting within the bounds, up to isomorphism at each level."""
    level0: list[FGraph] = []
    for m in range(3):
        for n in range(3):
            level0 += [c.decoration for c in free_properad(f, m, n, max_grade).classes]
    by_res0 = _by_residue(level0)
    level1 = list(_decorate_all(by_res0, max_level_nodes, max_grade, lambda d: d.grade))
    by_res1 = _by_residue(level1)
    yield from _decorate_all(by_res1, max_level_nodes, max_grade,
                             lambda d: sum(x.grade for x in d.node_op))


def _by_residue(items: Sequence[FGraph]) -> dict:
    out: dict = {}
    for d in items:
        out.setdefault(d.residue, []).append(d)
    return out


def _decorate_all(by_res: dict, max_nodes: int, max_grade: int, weight) -> Iterable[FGraph]:
    """Graphs (up to max_nodes nodes) whose nodes carry items with matching residues."""
    arities = {(len(i), len(o)) for i, o in by_res}
    colours = sorted({c for i, o in by_res for c in i + o})
    for m in range(3):
        for n in range(3):
            for pg in enumerate_graphs(m, n, max_nodes, arities):
                g = pg.graph
                for col in itertools.product(colours, repeat=g.n_edges):
                    if g.n_nodes == 0:
                        yield FGraph(g, col, (), pg.import_order, pg.export_order)
                        continue
                    choices = []
                    for v in range(g.n_nodes):
                        key = (tuple(col[e] for e in g.in_edges_of(v)),
                               tuple(col[e] for e in g.out_edges_of(v)))
                        choices.append(by_res.get(key, []))
                    for combo in itertools.product(*choices):
                        if sum(weight(d) for d in combo) <= max_grade:
                            yield FGraph(g, col, combo, pg.import_order, pg.export_order)


# ---------------------------------------------------------------- algebras


def check_algebra(f: Species, structure: Callable[[FGraph], Optional[str]], max_nodes: int,
                  max_ports: int = 2) -> LawReport:
    """Unit and associativity axioms of a structure map F-bar -> F within bounds.

    structure sends a decorated ported graph to an operation id whose colours
    are a rearrangement of the graph's port colours.
    """
    report = LawReport(True, 0)

    def apply(d: FGraph) -> Optional[str]:
        try:
            op_id = structure(d)
        except Exception as exc:  # the oracle is user supplied
            report.counterexamples.append({"law": "structure raised", "graph": d, "error": repr(exc)})
            return None
        if op_id is None:
            report.counterexamples.append({"law": "structure undefined", "graph": d})
            return None
        ins, outs = d.residue
        op = f.op(op_id)
        if Counter(op.in_colours) != Counter(ins) or Counter(op.out_colours) != Counter(outs):
            report.counterexamples.append({"law": "structure changes the residue", "graph": d, "op": op_id})
            return None
        return op_id

    for op in f.operations:
        for op_id, ins, outs in corolla_values(f, *op.biarity):
            if op_id != op.id:
                continue
            report.checked += 1
            got = apply(corolla_fgraph(op.id, ins, outs))
            if got is not None and got != op.id:
                report.counterexamples.append({"law": "unit", "op": op.id, "got": got})

    # associativity: multiply a two-level nesting, or apply the structure at each node first
    level0: list[FGraph] = []
    for m in range(max_ports + 1):
        for n in range(max_ports + 1):
            level0 += [c.decoration for c in free_properad(f, m, n, max_nodes).classes]
    for nest in _decorate_all(_by_residue(level0), 2, max_nodes, lambda d: d.grade):
        if not nest.shape.n_nodes:
            continue
        total = apply(substitute(nest.ported, list(nest.node_op), nest.edge_colour))
        if total is None:
            continue
        report.checked += 1
        collapsed = []
        for piece in nest.node_op:
            got = apply(piece)
            if got is None:
                break
            ins, outs = piece.residue
            collapsed.append(corolla_fgraph(got, ins, outs))
        else:
            second = apply(substitute(nest.ported, collapsed, nest.edge_colour))
            if second is not None and second != total:
                report.counterexamples.append({"law": "associativity", "nesting": nest,
                                               "whole": total, "in_stages": second})
    report.passed = not report.counterexamples
    return report
