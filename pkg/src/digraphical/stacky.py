"""Finite groupoids, groupoid-enriched hypergraphs and the bar construction.

Groupoids are stored as explicit tables.  Equivalences are certified by a bijection
on connected components together with matching vertex-group orders, which is enough
for finite groupoids.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Optional, Sequence

from .digraph import (
    Diagram,
    Graph,
    GraphMorphism,
    HomKind,
    hom_set,
    is_acyclic,
    is_connected,
    is_etale,
    unit,
)
from .finsets import UnionFind
from .symmetry import PortedGraph, automorphism_group, canonical_form, enumerate_graphs


class GroupoidError(ValueError):
    pass


# ---------------------------------------------------------------- groups


@dataclass(frozen=True)
class FinGroup:
    """A finite group given by its multiplication table; mult[g][h] is "g then h"."""

    mult: tuple[tuple[int, ...], ...]
    identity: int = 0
    perms: Optional[tuple[tuple[int, ...], ...]] = field(default=None, compare=False)

    @property
    def order(self) -> int:
        return len(self.mult)

    @cached_property
    def inverse(self) -> tuple[int, ...]:
        return tuple(next(h for h in range(self.order) if self.mult[g][h] == self.identity)
                     for g in range(self.order))

    @classmethod
    def trivial(cls) -> FinGroup:
        return cls(((0,),), 0, ((),))

    @classmethod
    def from_permutations(cls, gens: Iterable[Sequence[int]], degree: Optional[int] = None) -> FinGroup:
        """The permutation group generated by gens; a perm g sends i to g[i]."""
        gens = [tuple(g) for g in gens]
        if degree is None:
            degree = len(gens[0]) if gens else 0
        ident = tuple(range(degree))
        elements = [ident]
        index = {ident: 0}
        frontier = [ident]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    c = tuple(g[a[i]] for i in range(degree))
                    if c not in index:
                        index[c] = len(elements)
                        elements.append(c)
                        nxt.append(c)
            frontier = nxt
        mult = tuple(tuple(index[tuple(b[a[i]] for i in range(degree))] for b in elements)
                     for a in elements)
        return cls(mult, 0, tuple(elements))

    def check(self) -> None:
        n = self.order
        for a in range(n):
            if self.mult[self.identity][a] != a or self.mult[a][self.identity] != a:
                raise GroupoidError("identity law fails")
            for b in range(n):
                for c in range(n):
                    if self.mult[self.mult[a][b]][c] != self.mult[a][self.mult[b][c]]:
                        raise GroupoidError("associativity fails")


# ---------------------------------------------------------------- groupoids


@dataclass(frozen=True, eq=False)
class FinGroupoid:
    """Objects 0..n-1; morphism k goes src[k] -> tgt[k]; comp[(f, g)] is "f then g"."""

    n_objects: int
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    comp: dict
    ident: tuple[int, ...]
    inv: tuple[int, ...]
    object_labels: Optional[tuple] = None
    morphism_labels: Optional[tuple] = None

    @property
    def n_morphisms(self) -> int:
        return len(self.src)

    @classmethod
    def discrete(cls, n: int, labels: Optional[Sequence] = None) -> FinGroupoid:
        ids = tuple(range(n))
        return cls(n, ids, ids, {(k, k): k for k in ids}, ids, ids,
                   tuple(labels) if labels is not None else None)

    @classmethod
    def build(cls, objects: Sequence[Hashable], morphisms: Sequence[tuple[Hashable, Hashable, Hashable]],
              compose: Callable[[Hashable, Hashable], Hashable], identity: Callable[[Hashable], Hashable],
              inverse: Callable[[Hashable], Hashable]) -> FinGroupoid:
        """Tabulate a groupoid given by labelled objects and morphisms (label, src, tgt)."""
        obj_index = {o: k for k, o in enumerate(objects)}
        mor_index = {m[0]: k for k, m in enumerate(morphisms)}
        src = tuple(obj_index[m[1]] for m in morphisms)
        tgt = tuple(obj_index[m[2]] for m in morphisms)
        by_src: dict[int, list[int]] = {}
        for k, s in enumerate(src):
            by_src.setdefault(s, []).append(k)
        comp = {}
        for f, m in enumerate(morphisms):
            for g in by_src.get(tgt[f], []):
                comp[(f, g)] = mor_index[compose(m[0], morphisms[g][0])]
        ident = tuple(mor_index[identity(o)] for o in objects)
        inv = tuple(mor_index[inverse(m[0])] for m in morphisms)
        return cls(len(objects), src, tgt, comp, ident, inv, tuple(objects), tuple(m[0] for m in morphisms))

    @cached_property
    def _hom(self) -> dict[tuple[int, int], list[int]]:
        out: dict[tuple[int, int], list[int]] = {}
        for k in range(self.n_morphisms):
            out.setdefault((self.src[k], self.tgt[k]), []).append(k)
        return out

    def hom(self, x: int, y: int) -> list[int]:
        return self._hom.get((x, y), [])

    @cached_property
    def out_of(self) -> tuple[tuple[int, ...], ...]:
        buckets: list[list[int]] = [[] for _ in range(self.n_objects)]
        for k, s in enumerate(self.src):
            buckets[s].append(k)
        return tuple(tuple(b) for b in buckets)

    def vertex_group(self, x: int) -> list[int]:
        return self.hom(x, x)

    @cached_property
    def component_of(self) -> tuple[int, ...]:
        uf = UnionFind(self.n_objects)
        for k in range(self.n_morphisms):
            uf.union(self.src[k], self.tgt[k])
        q = uf.quotient()
        return tuple(q(x) for x in range(self.n_objects))

    def components(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for x, c in enumerate(self.component_of):
            out.setdefault(c, []).append(x)
        return [out[c] for c in sorted(out)]

    @property
    def n_components(self) -> int:
        return len(set(self.component_of))

    def is_discrete(self) -> bool:
        """Equivalent to a set: every vertex group is trivial."""
        return all(len(self.vertex_group(x)) == 1 for x in range(self.n_objects))

    def check(self) -> None:
        for x in range(self.n_objects):
            i = self.ident[x]
            if self.src[i] != x or self.tgt[i] != x:
                raise GroupoidError(f"identity at {x} has the wrong ends")
        for f in range(self.n_morphisms):
            if self.comp.get((self.ident[self.src[f]], f)) != f or self.comp.get((f, self.ident[self.tgt[f]])) != f:
                raise GroupoidError(f"unit law fails at {f}")
            if self.comp.get((f, self.inv[f])) != self.ident[self.src[f]]:
                raise GroupoidError(f"inverse law fails at {f}")
            for g in self.out_of[self.tgt[f]]:
                fg = self.comp[(f, g)]
                if self.src[fg] != self.src[f] or self.tgt[fg] != self.tgt[g]:
                    raise GroupoidError(f"composite {f};{g} has the wrong ends")
                for h in self.out_of[self.tgt[g]]:
                    if self.comp[(fg, h)] != self.comp[(f, self.comp[(g, h)])]:
                        raise GroupoidError(f"associativity fails at {f};{g};{h}")

    def summary(self) -> list[tuple[int, int]]:
        """(component size, vertex-group order) per component."""
        return [(len(c), len(self.vertex_group(c[0]))) for c in self.components()]


def one_object(group: FinGroup) -> FinGroupoid:
    """The groupoid with one object and the group as its morphisms."""
    return FinGroupoid.build(
        [0], [(g, 0, 0) for g in range(group.order)],
        lambda a, b: group.mult[a][b], lambda _o: group.identity, lambda a: group.inverse[a])


@dataclass(frozen=True, eq=False)
class FinFunctor:
    source: FinGroupoid
    target: FinGroupoid
    on_objects: tuple[int, ...]
    on_morphisms: tuple[int, ...]

    def check(self) -> None:
        a, b = self.source, self.target
        for k in range(a.n_morphisms):
            m = self.on_morphisms[k]
            if b.src[m] != self.on_objects[a.src[k]] or b.tgt[m] != self.on_objects[a.tgt[k]]:
                raise GroupoidError(f"functor breaks the ends of morphism {k}")
        for (f, g), h in a.comp.items():
            if b.comp[(self.on_morphisms[f], self.on_morphisms[g])] != self.on_morphisms[h]:
                raise GroupoidError(f"functor breaks composition at {f};{g}")
        for x in range(a.n_objects):
            if self.on_morphisms[a.ident[x]] != b.ident[self.on_objects[x]]:
                raise GroupoidError(f"functor breaks the identity at {x}")

    def lift(self, i: int, m: int) -> Optional[int]:
        """The unique morphism out of i over m, or None when there is not exactly one."""
        found = [k for k in self.source.out_of[i] if self.on_morphisms[k] == m]
        return found[0] if len(found) == 1 else None

    def discrete_fibration_witness(self) -> Optional[tuple[int, int]]:
        for i in range(self.source.n_objects):
            for m in self.target.out_of[self.on_objects[i]]:
                if self.lift(i, m) is None:
                    return (i, m)
        return None

    def strict_fibre(self, x: int) -> list[int]:
        return [i for i in range(self.source.n_objects) if self.on_objects[i] == x]


def discrete_functor(source: FinGroupoid, target: FinGroupoid, on_objects: Sequence[int]) -> FinFunctor:
    """A functor out of a groupoid with only identities."""
    return FinFunctor(source, target, tuple(on_objects),
                      tuple(target.ident[on_objects[source.src[k]]] for k in range(source.n_morphisms)))


def equivalence_report(f: FinFunctor) -> tuple[bool, str]:
    """Is f an equivalence?  Checks the component bijection and vertex-group orders."""
    a, b = f.source, f.target
    image: dict[int, int] = {}
    for comp in a.components():
        c = b.component_of[f.on_objects[comp[0]]]
        if c in image.values():
            return False, "two components land in one"
        image[a.component_of[comp[0]]] = c
        if len(a.vertex_group(comp[0])) != len(b.vertex_group(f.on_objects[comp[0]])):
            return False, f"vertex-group orders differ at object {comp[0]}"
        # faithful on the vertex group
        if len({f.on_morphisms[k] for k in a.vertex_group(comp[0])}) != len(a.vertex_group(comp[0])):
            return False, f"not faithful at object {comp[0]}"
    if len(image) != b.n_components:
        return False, "some component is missed"
    return True, "equivalence"


# ---------------------------------------------------------------- actions and quotients


@dataclass(frozen=True, eq=False)
class GroupAction:
    """A right action of a group on a groupoid by automorphisms."""

    group: FinGroup
    on_objects: tuple[tuple[int, ...], ...]
    on_morphisms: tuple[tuple[int, ...], ...]

    def check(self, x: FinGroupoid) -> None:
        grp = self.group
        for g in range(grp.order):
            FinFunctor(x, x, self.on_objects[g], self.on_morphisms[g]).check()
            for h in range(grp.order):
                gh = grp.mult[g][h]
                for o in range(x.n_objects):
                    if self.on_objects[h][self.on_objects[g][o]] != self.on_objects[gh][o]:
                        raise GroupoidError("not a right action on objects")
                for m in range(x.n_morphisms):
                    if self.on_morphisms[h][self.on_morphisms[g][m]] != self.on_morphisms[gh][m]:
                        raise GroupoidError("not a right action on morphisms")
        e = grp.identity
        if self.on_objects[e] != tuple(range(x.n_objects)) or self.on_morphisms[e] != tuple(range(x.n_morphisms)):
            raise GroupoidError("identity does not act trivially")


def action_on_set(group: FinGroup, perms: Sequence[Sequence[int]]) -> GroupAction:
    perms = tuple(tuple(p) for p in perms)
    return GroupAction(group, perms, perms)


def naive_quotient(x: FinGroupoid, action: GroupAction) -> list[frozenset[int]]:
    """Orbits of the group on the components of x."""
    comp = x.component_of
    uf = UnionFind(x.n_objects)
    for g in range(action.group.order):
        for o in range(x.n_objects):
            uf.union(comp[o], comp[action.on_objects[g][o]])
    orbits: dict[int, set[int]] = {}
    for o in range(x.n_objects):
        orbits.setdefault(uf.find(comp[o]), set()).add(comp[o])
    return [frozenset(v) for v in orbits.values()]


def homotopy_quotient(x: FinGroupoid, action: GroupAction) -> FinGroupoid:
    """The action groupoid x//G: a morphism (g, m) goes from o to tgt(m), where m starts at o.g.

    The component bijection with the naive quotient is checked on every call.
    """
    grp = action.group
    act_o, act_m = action.on_objects, action.on_morphisms
    morphisms = []
    for o in range(x.n_objects):
        for g in range(grp.order):
            for m in x.out_of[act_o[g][o]]:
                morphisms.append(((g, m, o), o, x.tgt[m]))

    def compose(a, b):
        g, m, o = a
        h, n, _ = b
        return (grp.mult[g][h], x.comp[(act_m[h][m], n)], o)

    def identity(o):
        return (grp.identity, x.ident[o], o)

    def inverse(a):
        g, m, o = a
        ginv = grp.inverse[g]
        # m.g^-1 runs from o to tgt(m).g^-1; its inverse starts there and ends at o
        return (ginv, x.inv[act_m[ginv][m]], x.tgt[m])

    q = FinGroupoid.build(list(range(x.n_objects)), morphisms, compose, identity, inverse)
    _assert_pi0_identity(x, action, q)
    return q


def _assert_pi0_identity(x: FinGroupoid, action: GroupAction, q: FinGroupoid) -> None:
    orbits = naive_quotient(x, action)
    orbit_of = {c: k for k, orb in enumerate(orbits) for c in orb}
    image: dict[int, int] = {}
    for o in range(x.n_objects):
        k = orbit_of[x.component_of[o]]
        if image.setdefault(q.component_of[o], k) != k:
            raise AssertionError("a component of the homotopy quotient meets two orbits")
    if len(set(image.values())) != len(image) or len(image) != len(orbits):
        raise AssertionError("components of the homotopy quotient do not match the naive quotient")


def transport_groupoid(base: FinGroupoid, states_over: Sequence[Sequence[Hashable]],
                       act: Callable[[int, Hashable], Optional[Hashable]]) -> FinGroupoid:
    """Objects are pairs (x, state over x); a base morphism g: x -> y moves a state by act.

    Morphisms whose action is undefined (act returns None) are left out.
    """
    objects = [(x, st) for x in range(base.n_objects) for st in states_over[x]]
    known = set(objects)
    morphisms = []
    for x, st in objects:
        for g in base.out_of[x]:
            new = act(g, st)
            if new is None:
                continue
            target = (base.tgt[g], new)
            if target not in known:
                raise GroupoidError(f"state {new!r} is not listed over {base.tgt[g]}")
            morphisms.append(((g, x, st), (x, st), target))
    index = {m[0] for m in morphisms}

    def compose(a, b):
        return (base.comp[(a[0], b[0])], a[1], a[2])

    def identity(o):
        return (base.ident[o[0]], o[0], o[1])

    def inverse(a):
        g, x, st = a
        return (base.inv[g], base.tgt[g], act(g, st))

    for x, st in objects:
        if identity((x, st)) not in index:
            raise GroupoidError("identities must act trivially")
    return FinGroupoid.build(objects, morphisms, compose, identity, inverse)


# ---------------------------------------------------------------- groupoid-enriched hypergraphs


class GHypergraphError(ValueError):
    pass


class NonDiscrete(GHypergraphError):
    def __init__(self, level: str):
        self.level = level
        super().__init__(f"level {level} is not discrete")


class NotFibration(GHypergraphError):
    def __init__(self, side: str, witness):
        self.side, self.witness = side, witness
        super().__init__(f"{side} -> N is not a discrete fibration at {witness}")


class NotMono(GHypergraphError):
    def __init__(self, side: str, witness):
        self.side, self.witness = side, witness
        super().__init__(f"{side} -> A x N is not a monomorphism at {witness}")


@dataclass(frozen=True, eq=False)
class GHypergraph:
    """A diagram of groupoids A <- I -> N <- O -> A."""

    A: FinGroupoid
    I: FinGroupoid
    N: FinGroupoid
    O: FinGroupoid
    s: FinFunctor
    p: FinFunctor
    q: FinFunctor
    t: FinFunctor

    def side(self, name: str) -> tuple[FinGroupoid, FinFunctor, FinFunctor]:
        """(flags, flag -> hyperedge, flag -> node) for side "in" or "out"."""
        return (self.I, self.s, self.p) if name == "in" else (self.O, self.t, self.q)


def discrete_ghypergraph(x: Diagram) -> GHypergraph:
    a = FinGroupoid.discrete(x.n_edges)
    i = FinGroupoid.discrete(x.n_in)
    n = FinGroupoid.discrete(x.n_nodes)
    o = FinGroupoid.discrete(x.n_out)
    return GHypergraph(a, i, n, o, discrete_functor(i, a, x.s), discrete_functor(i, n, x.p),
                       discrete_functor(o, n, x.q), discrete_functor(o, a, x.t))


def mono_witness(flags: FinGroupoid, to_edge: FinFunctor, to_node: FinFunctor) -> Optional[tuple[int, int]]:
    """Failure of flags -> A x N to be faithful and injective on components.

    Two flags whose (hyperedge, node) pairs are isomorphic must themselves be
    isomorphic, and distinct morphisms must stay distinct.
    """
    a, n = to_edge.target, to_node.target
    seen: dict[tuple[int, int], int] = {}
    for i in range(flags.n_objects):
        key = (a.component_of[to_edge.on_objects[i]], n.component_of[to_node.on_objects[i]])
        j = seen.setdefault(key, i)
        if flags.component_of[j] != flags.component_of[i]:
            return (j, i)
    for i in range(flags.n_objects):
        for k in range(flags.n_objects):
            images = [(to_edge.on_morphisms[m], to_node.on_morphisms[m]) for m in flags.hom(i, k)]
            if len(set(images)) != len(images):
                return (i, k)
    return None


def validate_ghypergraph(x: GHypergraph) -> GHypergraph:
    for grp in (x.A, x.I, x.N, x.O):
        grp.check()
    for fn in (x.s, x.p, x.q, x.t):
        fn.check()
    for level, grp in (("A", x.A), ("I", x.I), ("O", x.O)):
        if not grp.is_discrete():
            raise NonDiscrete(level)
    for side in ("in", "out"):
        flags, to_edge, to_node = x.side(side)
        w = to_node.discrete_fibration_witness()
        if w is not None:
            raise NotFibration(side, w)
        w = mono_witness(flags, to_edge, to_node)
        if w is not None:
            raise NotMono(side, w)
        _assert_free_on_fibres(x.N, to_node)
    return x


def _assert_free_on_fibres(n: FinGroupoid, to_node: FinFunctor) -> None:
    """The vertex group of each node acts freely on the flags over it."""
    for v in range(n.n_objects):
        for g in n.vertex_group(v):
            if g == n.ident[v]:
                continue
            for i in to_node.strict_fibre(v):
                k = to_node.lift(i, g)
                if k is not None and to_node.source.tgt[k] == i:
                    raise AssertionError(f"vertex group of {v} fixes flag {i}")


# ---------------------------------------------------------------- stacky corollas


@dataclass(frozen=True, eq=False)
class StackyCorolla:
    hypergraph: GHypergraph
    group: FinGroup
    cover: dict  # level name -> object map from the corolla's sets


def stacky_corolla(m: int, n: int, generators: Sequence[tuple[Sequence[int], Sequence[int]]] = ()) -> StackyCorolla:
    """The levelwise homotopy quotient of Corolla(m, n) by a group acting freely on imports and exports.

    Each generator is a pair (permutation of the m imports, permutation of the n exports).
    """
    combined = [tuple(gi) + tuple(m + j for j in go) for gi, go in generators]
    group = FinGroup.from_permutations(combined, m + n) if combined else FinGroup(((0,),), 0, (tuple(range(m + n)),))
    perms = group.perms
    for g in range(group.order):
        if g == group.identity:
            continue
        if any(perms[g][k] == k for k in range(m + n)):
            raise GroupoidError("the action must be free on imports and on exports")
    edges = FinGroupoid.discrete(m + n)
    ins = FinGroupoid.discrete(m)
    outs = FinGroupoid.discrete(n)
    point = FinGroupoid.discrete(1)
    a = homotopy_quotient(edges, action_on_set(group, perms))
    i = homotopy_quotient(ins, action_on_set(group, [p[:m] for p in perms]))
    o = homotopy_quotient(outs, action_on_set(group, [tuple(v - m for v in p[m:]) for p in perms]))
    nn = homotopy_quotient(point, action_on_set(group, [(0,)] * group.order))

    def functor(src: FinGroupoid, tgt: FinGroupoid, obj: Callable[[int], int]) -> FinFunctor:
        # in the action groupoid of a set, morphism (g, m, o) runs from o to m (identities are
        # numbered like objects), so the functor induced by obj sends it to (g, obj(m), obj(o))
        index = {lab: k for k, lab in enumerate(tgt.morphism_labels)}
        mors = tuple(index[(g, obj(mm), obj(o_))] for g, mm, o_ in src.morphism_labels)
        return FinFunctor(src, tgt, tuple(obj(k) for k in range(src.n_objects)), mors)

    x = GHypergraph(
        a, i, nn, o,
        functor(i, a, lambda k: k), functor(i, nn, lambda k: 0),
        functor(o, nn, lambda k: 0), functor(o, a, lambda k: m + k),
    )
    validate_ghypergraph(x)
    return StackyCorolla(x, group, {"A": tuple(range(m + n)), "I": tuple(range(m)), "N": (0,),
                                    "O": tuple(range(n))})


def cover_is_etale(sc: StackyCorolla) -> bool:
    """Each node fibre of the corolla maps bijectively to the strict fibre over the quotient node."""
    x = sc.hypergraph
    m, n = len(sc.cover["I"]), len(sc.cover["O"])
    return len(x.p.strict_fibre(0)) == m and len(x.q.strict_fibre(0)) == n


# ---------------------------------------------------------------- corolla maps and the corolla lemma


def _bijections(fibre: Sequence[int], k: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(fibre)) if len(fibre) == k else []


def corolla_mapping_groupoid(x: GHypergraph, m: int, n: int, mark: Optional[str] = None) -> FinGroupoid:
    """Map(C^m_n, x): a node with numberings of the flags over it, moved by node morphisms.

    With mark="in" or "out" each object also carries a marked import or export number.
    """
    states = []
    for v in range(x.N.n_objects):
        base = [(bi, bo) for bi in _bijections(x.p.strict_fibre(v), m)
                for bo in _bijections(x.q.strict_fibre(v), n)]
        if mark is None:
            states.append(base)
        else:
            states.append([(st, j) for st in base for j in range(m if mark == "in" else n)])

    def move(g, numbering, fn):
        lifted = []
        for i in numbering:
            k = fn.lift(i, g)
            if k is None:
                return None
            lifted.append(fn.source.tgt[k])
        return tuple(lifted)

    def act(g, st):
        base, j = (st, None) if mark is None else st
        bi, bo = move(g, base[0], x.p), move(g, base[1], x.q)
        if bi is None or bo is None:
            return None
        return (bi, bo) if mark is None else ((bi, bo), j)

    return transport_groupoid(x.N, states, act)


def _symmetric_action(mg: FinGroupoid, m: int, n: int, marked: Optional[str] = None) -> GroupAction:
    """S_m x S_n renumbering the ports of corolla maps, optionally carrying a marked port."""
    gens = []
    deg = m + n
    for k in range(m - 1):
        p = list(range(deg)); p[k], p[k + 1] = p[k + 1], p[k]; gens.append(tuple(p))
    for k in range(n - 1):
        p = list(range(deg)); p[m + k], p[m + k + 1] = p[m + k + 1], p[m + k]; gens.append(tuple(p))
    group = FinGroup.from_permutations(gens, deg) if gens else FinGroup(((0,),), 0, (tuple(range(deg)),))
    obj_index = {lab: k for k, lab in enumerate(mg.object_labels)}
    mor_index = {lab: k for k, lab in enumerate(mg.morphism_labels)}

    def move(st, perm):
        # precompose numberings with the permutation: new[k] = old[perm^-1 k]
        if marked is None:
            bi, bo = st
            mark = None
        else:
            (bi, bo), mark = st
        inv = [0] * deg
        for a, b in enumerate(perm):
            inv[b] = a
        nbi = tuple(bi[inv[k]] for k in range(m))
        nbo = tuple(bo[inv[m + k] - m] for k in range(n))
        if marked is None:
            return (nbi, nbo)
        return ((nbi, nbo), perm[mark] if marked == "in" else perm[m + mark] - m)

    on_o, on_m = [], []
    for perm in group.perms:
        on_o.append(tuple(obj_index[(v, move(st, perm))] for v, st in mg.object_labels))
        on_m.append(tuple(mor_index[(g, v, move(st, perm))] for g, v, st in mg.morphism_labels))
    return GroupAction(group, tuple(on_o), tuple(on_m))


@dataclass
class CorollaReport:
    passed: bool
    nodes: str
    in_flags: str
    out_flags: str
    hyperedges: str
    mono: str

    def __str__(self):
        return (f"{'PASS' if self.passed else 'FAIL'} nodes={self.nodes} in={self.in_flags} "
                f"out={self.out_flags} hyperedges={self.hyperedges} mono={self.mono}")


def corolla_groupoids(x: GHypergraph) -> dict[str, list[tuple[FinGroupoid, list[int]]]]:
    """cor, cor^1 and cor_1 split by biarity.

    Each quotient groupoid comes with the node, in-flag or out-flag that each of its
    objects picks out.
    """
    biarities = sorted({(len(x.p.strict_fibre(v)), len(x.q.strict_fibre(v))) for v in range(x.N.n_objects)})
    out: dict[str, list] = {"cor": [], "cor_in": [], "cor_out": []}
    for m, n in biarities:
        mg = corolla_mapping_groupoid(x, m, n)
        cor = homotopy_quotient(mg, _symmetric_action(mg, m, n))
        out["cor"].append((cor, [v for v, _st in mg.object_labels]))
        for side, count in (("in", m), ("out", n)):
            if count == 0:
                continue
            marked = corolla_mapping_groupoid(x, m, n, side)
            q = homotopy_quotient(marked, _symmetric_action(marked, m, n, side))
            k = 0 if side == "in" else 1
            out["cor_" + side].append((q, [st[0][k][st[1]] for _v, st in marked.object_labels]))
    return out


def corolla_groupoid_check(x: GHypergraph) -> CorollaReport:
    """Compare the groupoids of corollas mapping into x with N, I and O.

    Each is certified by a bijection on components and equal vertex-group orders.  The
    marked corollas must also be told apart by their (hyperedge, node) pair.
    """
    parts = corolla_groupoids(x)
    verdicts = {}
    for name, target in (("cor", x.N), ("cor_in", x.I), ("cor_out", x.O)):
        verdicts[name] = _compare(parts[name], target)
    mono_ok, mono_why = True, "injective"
    for side, name in (("in", "cor_in"), ("out", "cor_out")):
        _flags, to_edge, to_node = x.side(side)
        seen = set()
        for q, picked in parts[name]:
            for comp in q.components():
                flag = picked[comp[0]]
                key = (x.A.component_of[to_edge.on_objects[flag]],
                       x.N.component_of[to_node.on_objects[flag]])
                if key in seen:
                    mono_ok, mono_why = False, f"two marked {side}-corollas over hyperedge/node {key}"
                seen.add(key)
    passed = all(v[0] for v in verdicts.values()) and mono_ok
    return CorollaReport(passed, verdicts["cor"][1], verdicts["cor_in"][1], verdicts["cor_out"][1],
                         f"{x.A.n_components} hyperedges", mono_why)


def _compare(pieces, target: FinGroupoid) -> tuple[bool, str]:
    seen = set()
    for q, picked in pieces:
        for comp in q.components():
            y = picked[comp[0]]
            c = target.component_of[y]
            if c in seen:
                return False, "two components over one"
            seen.add(c)
            if len(q.vertex_group(comp[0])) != len(target.vertex_group(y)):
                return False, (f"vertex group order {len(q.vertex_group(comp[0]))} "
                               f"against {len(target.vertex_group(y))}")
    if len(seen) != target.n_components:
        return False, f"{len(seen)} components against {target.n_components}"
    return True, "equivalence"


# ---------------------------------------------------------------- etale maps into a hypergraph


@dataclass(frozen=True, eq=False)
class EtaleClass:
    """One isomorphism class of etale maps G -> X with G connected and acyclic."""

    graph: Graph
    to_x: GraphMorphism
    deck: tuple[GraphMorphism, ...]
    key: str

    @property
    def node_labels(self) -> list[int]:
        return list(self.to_x.nu)

    @property
    def edge_labels(self) -> list[int]:
        return list(self.to_x.alpha)


@dataclass(frozen=True, eq=False)
class EtaleGroupoids:
    classes: tuple[EtaleClass, ...]
    et: FinGroupoid
    et_in: FinGroupoid
    et_out: FinGroupoid
    anchors_in: tuple[int, ...]
    anchors_out: tuple[int, ...]


def _partial_matchings(outs: Sequence, ins: Sequence) -> list[list[tuple]]:
    """Every partial bijection between two lists, as lists of pairs."""
    result = []
    for k in range(min(len(outs), len(ins)) + 1):
        for chosen in itertools.combinations(range(len(outs)), k):
            for targets in itertools.permutations(range(len(ins)), k):
                result.append([(outs[a], ins[b]) for a, b in zip(chosen, targets)])
    return result


def _covers_with_nodes(x: Diagram, over: Sequence[int]) -> Iterable[tuple[Graph, GraphMorphism]]:
    """Etale maps G -> X whose nodes lie over the X-nodes listed in over, all connected and acyclic.

    The flags of G copy the flags of X node by node; what remains is to decide, for each
    hyperedge, which out-flags above it meet which in-flags.
    """
    in_slots = [(u, k) for u, v in enumerate(over) for k in range(len(x.in_flags_of(v)))]
    out_slots = [(u, k) for u, v in enumerate(over) for k in range(len(x.out_flags_of(v)))]
    by_edge_in: dict[int, list] = {}
    by_edge_out: dict[int, list] = {}
    for u, k in in_slots:
        by_edge_in.setdefault(x.in_edges_of(over[u])[k], []).append((u, k))
    for u, k in out_slots:
        by_edge_out.setdefault(x.out_edges_of(over[u])[k], []).append((u, k))
    hyperedges = sorted(set(by_edge_in) | set(by_edge_out))
    options = [_partial_matchings(by_edge_out.get(a, []), by_edge_in.get(a, [])) for a in hyperedges]
    for choice in itertools.product(*options):
        in_edge: dict[tuple, int] = {}
        out_edge: dict[tuple, int] = {}
        alpha: list[int] = []
        for a, matching in zip(hyperedges, choice):
            for o, i in matching:
                out_edge[o] = in_edge[i] = len(alpha)
                alpha.append(a)
        for slot in in_slots:
            if slot not in in_edge:
                in_edge[slot] = len(alpha)
                alpha.append(x.in_edges_of(over[slot[0]])[slot[1]])
        for slot in out_slots:
            if slot not in out_edge:
                out_edge[slot] = len(alpha)
                alpha.append(x.out_edges_of(over[slot[0]])[slot[1]])
        ins = [[in_edge[(u, k)] for k in range(len(x.in_flags_of(v)))] for u, v in enumerate(over)]
        outs = [[out_edge[(u, k)] for k in range(len(x.out_flags_of(v)))] for u, v in enumerate(over)]
        g = Graph.from_lists(len(alpha), ins, outs)
        if not (is_connected(g) and is_acyclic(g)):
            continue
        iota = [x.in_flags_of(over[u])[k] for u, k in in_slots]
        omega = [x.out_flags_of(over[u])[k] for u, k in out_slots]
        yield g, GraphMorphism(g, x, tuple(alpha), tuple(iota), tuple(over), tuple(omega))


def labelled_key(g, to_x: GraphMorphism, ported: bool = False) -> str:
    """Certificate of G decorated by its map to X (node and edge images)."""
    return canonical_form(g, ported=ported, node_labels=list(to_x.nu), edge_labels=list(to_x.alpha)).certificate


def enumerate_etale_classes(x: Diagram, max_nodes: int) -> list[EtaleClass]:
    """Classes of etale maps from connected acyclic graphs with at most max_nodes nodes."""
    found: dict[str, EtaleClass] = {}
    for a in range(x.n_edges):
        u = unit()
        f = GraphMorphism(u, x, (a,), (), (), ())
        key = labelled_key(u, f)
        found[key] = EtaleClass(u, f, (GraphMorphism(u, u, (0,), (), (), ()),), key)
    for k in range(1, max_nodes + 1):
        for over in itertools.combinations_with_replacement(range(x.n_nodes), k):
            for g, f in _covers_with_nodes(x, over):
                key = labelled_key(g, f)
                if key in found:
                    continue
                deck = automorphism_group(g, fix_ports=False, node_labels=list(f.nu),
                                          edge_labels=list(f.alpha)).elements
                for d in deck:
                    if d.then(f).key() != f.key():
                        raise AssertionError("a deck transformation must commute with the map")
                _assert_free(g, deck)
                ident = [d for d in deck if d.nu == tuple(range(g.n_nodes)) and d.alpha == tuple(range(g.n_edges))]
                rest = [d for d in deck if d is not ident[0]]
                found[key] = EtaleClass(g, f, tuple(ident + rest), key)
    return [found[k] for k in sorted(found)]


def _assert_free(g: Graph, deck: Sequence[GraphMorphism]) -> None:
    """Deck transformations of a connected cover move every node and every edge."""
    for d in deck[0:]:
        if d.alpha == tuple(range(g.n_edges)) and d.nu == tuple(range(g.n_nodes)):
            continue
        if any(d.nu[v] == v for v in range(g.n_nodes)) or any(d.alpha[e] == e for e in range(g.n_edges)):
            raise AssertionError("a non-trivial deck transformation has a fixed point")


def _deck_table(c: EtaleClass) -> tuple[tuple[int, ...], ...]:
    index = {d.key(): k for k, d in enumerate(c.deck)}
    return tuple(tuple(index[a.then(b).key()] for b in c.deck) for a in c.deck)


def enumerate_etale_into(x: Diagram, max_nodes: int) -> EtaleGroupoids:
    """The groupoids et, et^1 and et_1 of etale maps into x, up to the node bound.

    et has one object per class with its deck group as vertex group.  The marked
    versions carry an import (or export) of G, moved around by deck transformations.
    """
    classes = enumerate_etale_classes(x, max_nodes)
    tables = [_deck_table(c) for c in classes]
    objects = list(range(len(classes)))
    morphisms = [((c, d), c, c) for c in objects for d in range(len(classes[c].deck))]

    def inverse(m):
        c, d = m
        return (c, next(e for e in range(len(tables[c])) if tables[c][d][e] == 0))

    et = FinGroupoid.build(objects, morphisms, lambda m1, m2: (m1[0], tables[m1[0]][m1[1]][m2[1]]),
                           lambda c: (c, 0), inverse)
    marked = {}
    for side in ("in", "out"):
        states = [list(c.graph.imports if side == "in" else c.graph.exports) for c in classes]

        def act(g, e):
            c, d = et.morphism_labels[g]
            return classes[c].deck[d].alpha[e]

        grp = transport_groupoid(et, states, act)
        if not grp.is_discrete():
            raise AssertionError("marked etale maps must have trivial automorphisms")
        anchors = tuple(classes[c].to_x.alpha[e] for c, e in grp.object_labels)
        marked[side] = (grp, anchors)
    return EtaleGroupoids(tuple(classes), et, marked["in"][0], marked["out"][0], marked["in"][1], marked["out"][1])


@dataclass(frozen=True, eq=False)
class Bar:
    hypergraph: GHypergraph
    etale: EtaleGroupoids


def bar(x: Diagram, max_nodes: int, validate: bool = True) -> Bar:
    """The hypergraph A <- et^1 X -> et X <- et_1 X -> A, truncated at max_nodes nodes."""
    eg = enumerate_etale_into(x, max_nodes)
    a = FinGroupoid.discrete(x.n_edges)

    def projection(marked: FinGroupoid) -> FinFunctor:
        objs = tuple(c for c, _e in marked.object_labels)
        mors = tuple(m[0] for m in marked.morphism_labels)
        return FinFunctor(marked, eg.et, objs, mors)

    hg = GHypergraph(
        a, eg.et_in, eg.et, eg.et_out,
        discrete_anchor(eg.et_in, a, eg.anchors_in), projection(eg.et_in),
        projection(eg.et_out), discrete_anchor(eg.et_out, a, eg.anchors_out),
    )
    if validate:
        validate_ghypergraph(hg)
    return Bar(hg, eg)


def discrete_anchor(marked: FinGroupoid, a: FinGroupoid, anchors: Sequence[int]) -> FinFunctor:
    """The functor to the discrete hyperedge groupoid; every morphism goes to an identity."""
    return FinFunctor(marked, a, tuple(anchors),
                      tuple(a.ident[anchors[marked.src[k]]] for k in range(marked.n_morphisms)))


# ---------------------------------------------------------------- the bar theorem


@dataclass
class BarReport:
    passed: bool
    biarity: tuple[int, int]
    max_nodes: int
    mapping_side: dict[str, list[int]]
    formula_side: dict[str, list[int]]
    problems: list[str]

    def table(self) -> list[tuple[str, Optional[int], Optional[int]]]:
        keys = sorted(set(self.mapping_side) | set(self.formula_side))
        rows = []
        for k in keys:
            a = self.mapping_side.get(k, [None])
            b = self.formula_side.get(k, [None])
            rows.append((k, a[0], b[0]))
        return rows

    def vertex_group_orders(self) -> list[int]:
        return sorted(o for orders in self.mapping_side.values() for o in orders)


def mapping_side(b: Bar, m: int, n: int) -> dict[str, list[int]]:
    """Components of Map(C^m_n, bar X), keyed by the ported etale map they name."""
    mg = corolla_mapping_groupoid(b.hypergraph, m, n)
    classes = b.etale.classes
    out: dict[str, list[int]] = {}
    for comp in mg.components():
        v, (bi, bo) = mg.object_labels[comp[0]]
        c = classes[v]
        imports = tuple(b.etale.et_in.object_labels[i][1] for i in bi)
        exports = tuple(b.etale.et_out.object_labels[o][1] for o in bo)
        pg = PortedGraph(c.graph, imports, exports)
        out.setdefault(labelled_key(pg, c.to_x, ported=True), []).append(len(mg.vertex_group(comp[0])))
    return out


def formula_side(x: Diagram, m: int, n: int, max_nodes: int) -> dict[str, list[int]]:
    """Components of the sum over (m,n)-graphs G of Map(G, X) // Aut(G), keyed the same way."""
    menu = {x.biarity(v) for v in range(x.n_nodes)}
    out: dict[str, list[int]] = {}
    for pg in enumerate_graphs(m, n, max_nodes, menu):
        g = pg.graph
        if isinstance(x, Graph):
            homs = hom_set(g, x, HomKind.ETALE)
        else:
            from .hypergraph import hyper_etale_homs
            homs = hyper_etale_homs(g, x)
        auts = automorphism_group(pg, fix_ports=True).elements
        index = {f.key(): k for k, f in enumerate(homs)}
        uf = UnionFind(len(homs))
        stabiliser = [0] * len(homs)
        for k, f in enumerate(homs):
            for sigma in auts:
                j = index[sigma.then(f).key()]
                uf.union(k, j)
                if j == k:
                    stabiliser[k] += 1
        seen = set()
        for k, f in enumerate(homs):
            r = uf.find(k)
            if r in seen:
                continue
            seen.add(r)
            out.setdefault(labelled_key(pg, f, ported=True), []).append(stabiliser[k])
    return out


def verify_bar_theorem(x: Diagram, m: int, n: int, max_nodes: int, b: Optional[Bar] = None) -> BarReport:
    """Compare Map(C^m_n, bar X) with the free-properad formula, component by component."""
    if b is None:
        b = bar(x, max_nodes)
    left = mapping_side(b, m, n)
    right = formula_side(x, m, n, max_nodes)
    problems = []
    for side, table in (("mapping", left), ("formula", right)):
        for k, orders in table.items():
            if len(orders) > 1:
                problems.append(f"{side} side has {len(orders)} components with key {k}")
    for k in sorted(set(left) | set(right)):
        if k not in left:
            problems.append(f"missing on the mapping side: {k}")
        elif k not in right:
            problems.append(f"missing on the formula side: {k}")
        elif sorted(left[k]) != sorted(right[k]):
            problems.append(f"vertex groups differ at {k}: {left[k]} against {right[k]}")
    return BarReport(not problems, (m, n), max_nodes, left, right, problems)


# ---------------------------------------------------------------- functoriality and the free category


def bar_functor_check(f: GraphMorphism, bx: Bar, by: Bar) -> list[str]:
    """Postcomposition with an etale f: X -> Y, checked against the two bar constructions.

    Every class over X must land on a class over Y with the same ports (the middle squares
    are pullbacks) and a deck group it embeds into.
    """
    problems = []
    index = {c.key: k for k, c in enumerate(by.etale.classes)}
    for c in bx.etale.classes:
        composite = c.to_x.then(f)
        if not is_etale(composite):
            problems.append("composite is not etale")
            continue
        key = labelled_key(c.graph, composite)
        if key not in index:
            problems.append(f"no class over Y for {c.key}")
            continue
        d = by.etale.classes[index[key]]
        if (len(d.graph.imports), len(d.graph.exports)) != (len(c.graph.imports), len(c.graph.exports)):
            problems.append(f"port counts change at {c.key}")
        if len(d.deck) % len(c.deck):
            problems.append(f"deck group does not embed at {c.key}")
    return problems


def count_paths(n_vertices: int, src: Sequence[int], tgt: Sequence[int], max_length: int) -> int:
    """Paths of length at most max_length in a digraph, counted by brute force."""
    total = n_vertices
    walks = [(a,) for a in range(len(src))]
    for _length in range(1, max_length + 1):
        total += len(walks)
        walks = [w + (a,) for w in walks for a in range(len(src)) if src[a] == tgt[w[-1]]]
    return total


@dataclass
class PathReport:
    passed: bool
    bar_count: int
    path_count: int
    discrete: bool


def free_category_restriction_check(d, max_nodes: int) -> PathReport:
    """Nodes of bar(dual_embed(D)) are the paths of D up to the node bound, with no symmetry."""
    from .hypergraph import dual_embed
    x = dual_embed(d)
    b = bar(x, max_nodes)
    for c in b.etale.classes:
        if any(c.graph.biarity(v) != (1, 1) for v in range(c.graph.n_nodes)):
            raise AssertionError("etale maps into a dual embedding have linear domains")
    discrete = b.hypergraph.N.is_discrete()
    bar_count = b.hypergraph.N.n_components
    paths = count_paths(d.n_vertices, d.src, d.tgt, max_nodes)
    return PathReport(discrete and bar_count == paths, bar_count, paths, discrete)


# ---------------------------------------------------------------- JSON


def groupoid_to_json(g: FinGroupoid) -> dict:
    return {
        "objects": g.n_objects,
        "morphisms": [[g.src[k], g.tgt[k]] for k in range(g.n_morphisms)],
        "compose": sorted([f, h, r] for (f, h), r in g.comp.items()),
        "identity": list(g.ident),
        "inverse": list(g.inv),
    }


def groupoid_from_json(obj: dict) -> FinGroupoid:
    mors = obj["morphisms"]
    g = FinGroupoid(int(obj["objects"]), tuple(m[0] for m in mors), tuple(m[1] for m in mors),
                    {(f, h): r for f, h, r in obj["compose"]}, tuple(obj["identity"]), tuple(obj["inverse"]))
    g.check()
    return g


def ghypergraph_to_json(x: GHypergraph) -> dict:
    out = {name: groupoid_to_json(getattr(x, name)) for name in ("A", "I", "N", "O")}
    for name in ("s", "p", "q", "t"):
        fn = getattr(x, name)
        out[name] = {"objects": list(fn.on_objects), "morphisms": list(fn.on_morphisms)}
    return out


def ghypergraph_from_json(obj: dict) -> GHypergraph:
    levels = {name: groupoid_from_json(obj[name]) for name in ("A", "I", "N", "O")}
    ends = {"s": ("I", "A"), "p": ("I", "N"), "q": ("O", "N"), "t": ("O", "A")}
    fns = {name: FinFunctor(levels[a], levels[b], tuple(obj[name]["objects"]), tuple(obj[name]["morphisms"]))
           for name, (a, b) in ends.items()}
    return validate_ghypergraph(GHypergraph(levels["A"], levels["I"], levels["N"], levels["O"],
                                            fns["s"], fns["p"], fns["q"], fns["t"]))
