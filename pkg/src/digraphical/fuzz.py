"""Random small graphs, diagrams and maps for property tests."""
from __future__ import annotations

import itertools
import random
from typing import Optional

from .assembly import GluingDatum
from .digraph import Diagram, Graph, GraphMorphism, HomKind, disjoint_union, hom_set, is_acyclic, is_connected


def random_diagram(rng: random.Random, max_nodes: int = 4, max_edges: int = 6, max_arity: int = 2) -> Diagram:
    """A diagram with arbitrary s and t; edges may repeat anywhere."""
    n_edges = rng.randint(0, max_edges)
    n_nodes = rng.randint(0, max_nodes)
    if n_edges == 0:
        return Diagram(0, n_nodes, (), (), (), ())
    ins = [[rng.randrange(n_edges) for _ in range(rng.randint(0, max_arity))] for _ in range(n_nodes)]
    outs = [[rng.randrange(n_edges) for _ in range(rng.randint(0, max_arity))] for _ in range(n_nodes)]
    return Diagram.from_lists(n_edges, ins, outs)


def random_graph(rng: random.Random, max_nodes: int = 4, max_arity: int = 2, *, connected: bool = False,
                 acyclic: bool = False, min_nodes: int = 0, link_prob: float = 0.6,
                 unit_prob: float = 0.1, tries: int = 200) -> Graph:
    """A random graph built by matching out-flags to in-flags.

    With acyclic=True, links only go forward in a random node order.  With connected=True
    the draw is repeated until the result is connected.
    """
    for _ in range(tries):
        if connected:
            g = _draw_connected(rng, rng.randint(min_nodes, max_nodes), max_arity, acyclic, link_prob)
        else:
            g = _draw(rng, max_nodes, max_arity, acyclic, min_nodes, link_prob, unit_prob)
        if connected and not is_connected(g):
            continue
        if acyclic and not is_acyclic(g):
            continue
        return g
    raise RuntimeError("could not draw a graph with the requested properties")


def _draw(rng, max_nodes, max_arity, acyclic, min_nodes, link_prob, unit_prob) -> Graph:
    n = rng.randint(min_nodes, max_nodes)
    arities = [(rng.randint(0, max_arity), rng.randint(0, max_arity)) for _ in range(n)]
    order = list(range(n))
    rng.shuffle(order)
    rank = {v: k for k, v in enumerate(order)}
    in_slots = [(v, k) for v in range(n) for k in range(arities[v][0])]
    out_slots = [(v, k) for v in range(n) for k in range(arities[v][1])]
    rng.shuffle(in_slots)
    rng.shuffle(out_slots)
    edge_of_in: dict = {}
    edge_of_out: dict = {}
    n_edges = 0
    free_in = list(in_slots)
    for o in out_slots:
        if rng.random() >= link_prob:
            continue
        cands = [i for i in free_in if not acyclic or rank[i[0]] > rank[o[0]]]
        if not cands:
            continue
        i = rng.choice(cands)
        free_in.remove(i)
        edge_of_in[i] = edge_of_out[o] = n_edges
        n_edges += 1
    for i in in_slots:
        if i not in edge_of_in:
            edge_of_in[i] = n_edges
            n_edges += 1
    for o in out_slots:
        if o not in edge_of_out:
            edge_of_out[o] = n_edges
            n_edges += 1
    extra = 1 if (n == 0 or rng.random() < unit_prob) else 0
    ins = [[edge_of_in[(v, k)] for k in range(arities[v][0])] for v in range(n)]
    outs = [[edge_of_out[(v, k)] for k in range(arities[v][1])] for v in range(n)]
    return Graph.from_lists(n_edges + extra, ins, outs)


def _draw_connected(rng, n, max_arity, acyclic, link_prob) -> Graph:
    """A random spanning tree of links, padded with ports and extra links.

    Node degrees can exceed max_arity where the tree needs it.
    """
    if n == 0:
        return Graph.from_lists(1, [], [])
    n_in = [rng.randint(0, max_arity) for _ in range(n)]
    n_out = [rng.randint(0, max_arity) for _ in range(n)]
    links = []
    for v in range(1, n):
        u = rng.randrange(v)
        links.append((u, v) if acyclic or rng.random() < 0.5 else (v, u))
    used_in, used_out = [0] * n, [0] * n
    for a, b in links:
        used_out[a] += 1
        used_in[b] += 1
    free_out = [(v, k) for v in range(n) for k in range(used_out[v], max(n_out[v], used_out[v]))]
    free_in = [(v, k) for v in range(n) for k in range(used_in[v], max(n_in[v], used_in[v]))]
    rng.shuffle(free_out)
    unlinked_out = []
    for o in free_out:
        cands = [i for i in free_in if not acyclic or i[0] > o[0]]
        if cands and rng.random() < link_prob:
            i = rng.choice(cands)
            free_in.remove(i)
            links.append((o[0], i[0]))
        else:
            unlinked_out.append(o)
    ins: list[list[int]] = [[] for _ in range(n)]
    outs: list[list[int]] = [[] for _ in range(n)]
    for e, (a, b) in enumerate(links):
        outs[a].append(e)
        ins[b].append(e)
    n_edges = len(links)
    for v, _ in free_in:
        ins[v].append(n_edges)
        n_edges += 1
    for v, _ in unlinked_out:
        outs[v].append(n_edges)
        n_edges += 1
    perm = list(range(n))
    rng.shuffle(perm)
    for lst in ins + outs:
        rng.shuffle(lst)
    new_ins, new_outs = [None] * n, [None] * n
    for v in range(n):
        new_ins[perm[v]], new_outs[perm[v]] = ins[v], outs[v]
    return Graph.from_lists(n_edges, new_ins, new_outs)


def random_morphism(rng: random.Random, src: Graph, tgt: Graph,
                    kind: HomKind = HomKind.ALL) -> Optional[GraphMorphism]:
    homs = hom_set(src, tgt, kind)
    return rng.choice(homs) if homs else None


def random_etale_into(rng: random.Random, x: Graph, max_nodes: int = 3) -> Optional[GraphMorphism]:
    """An etale map from a connected acyclic graph into x, drawn from the bar enumeration."""
    from .stacky import enumerate_etale_classes
    classes = enumerate_etale_classes(x, max_nodes)
    return rng.choice(classes).to_x if classes else None


def random_gluing(rng: random.Random, max_parts: int = 3, max_nodes: int = 3, max_arity: int = 2,
                  acyclic: bool = False) -> GluingDatum:
    """Connected graphs side by side, with a random matching of exports to imports."""
    parts = [random_graph(rng, max_nodes, max_arity, connected=True, acyclic=acyclic, min_nodes=1)
             for _ in range(rng.randint(1, max_parts))]
    total, _ = disjoint_union(parts)
    exports, imports = list(total.exports), list(total.imports)
    rng.shuffle(exports)
    rng.shuffle(imports)
    most = min(len(exports), len(imports))
    k = most - rng.randint(0, most // 2)
    return GluingDatum.from_pairs(total, list(zip(exports[:k], imports[:k])))


def random_species(rng: random.Random, max_colours: int = 3, max_ops: int = 4, max_arity: int = 2):
    """A species with random colours and operations; at least one operation has an input and an output."""
    from .species import Operation, Species
    colours = tuple(f"c{k}" for k in range(rng.randint(1, max_colours)))
    ops = []
    for k in range(rng.randint(1, max_ops)):
        lo = 1 if k == 0 else 0
        ins = tuple(rng.choice(colours) for _ in range(rng.randint(lo, max_arity)))
        outs = tuple(rng.choice(colours) for _ in range(rng.randint(lo, max_arity)))
        ops.append(Operation(f"op{k}", ins, outs))
    return Species(colours, tuple(ops))


def random_refinement(rng: random.Random, max_nodes: int = 4, max_arity: int = 2, collapses: int = 2,
                      target: Optional[Graph] = None):
    """A refinement onto a connected acyclic graph, built by collapsing convex hulls.

    The codomain is target when given, else a random graph.
    """
    from .assembly import open_hull
    from .kleisli import NotConvex, compose, convex_to_substitution, free, kleisli_identity, pushout_refinement
    from .symmetry import isomorphisms

    p = target or random_graph(rng, max_nodes, max_arity, connected=True, acyclic=True, min_nodes=1)
    ref = kleisli_identity(p)
    if p.n_nodes == 0:
        return ref
    for _ in range(rng.randint(0, collapses)):
        dom = ref.domain
        block = rng.sample(range(dom.n_nodes), rng.randint(1, dom.n_nodes))
        hull, inc = open_hull(dom, block)
        if not is_connected(hull):
            continue
        try:
            sub = convex_to_substitution(inc)
        except NotConvex:
            continue
        po = pushout_refinement(sub.inclusion, sub.refinement)
        back = rng.choice(isomorphisms(po.p, dom))
        ref = compose(compose(po.r_star, free(back)), ref)
    return ref


def random_kleisli(rng: random.Random, max_nodes: int = 4, max_arity: int = 2):
    """A random Kleisli map: a refinement followed by an etale map, or a draw from a small hom-set."""
    from .kleisli import compose, free, kleisli_homset, shuffle_representatives

    if rng.random() < 0.3:
        for _ in range(20):
            r = random_graph(rng, 3, max_arity, connected=True, min_nodes=1)
            y = random_graph(rng, max_nodes, max_arity, connected=rng.random() < 0.7)
            homs = kleisli_homset(r, y, 3)
            if homs:
                return shuffle_representatives(rng.choice(homs), rng)
    ref = random_refinement(rng, max_nodes, max_arity)
    q = ref.codomain
    e = identity_or_etale(rng, q, max_nodes, max_arity)
    return shuffle_representatives(compose(ref, free(e)), rng)


def identity_or_etale(rng: random.Random, q: Graph, max_nodes: int = 4, max_arity: int = 2) -> GraphMorphism:
    """An etale map out of q: into a random small graph when one is found, else a random automorphism."""
    for _ in range(10):
        y = random_graph(rng, max_nodes, max_arity)
        homs = hom_set(q, y, HomKind.ETALE)
        if homs:
            return rng.choice(homs)
    return rng.choice(hom_set(q, q, HomKind.ETALE))


def random_filler_square(rng: random.Random, max_nodes: int = 4, max_arity: int = 2):
    """A commuting square (g, e, f, h) with a refinement g on the left and a known diagonal d.

    Returns (g, e, f, h, d) where e = g followed by d and h = d followed by f.
    """
    from .kleisli import compose, free, shuffle_representatives

    g = random_refinement(rng, max_nodes, max_arity)
    d = identity_or_etale(rng, g.codomain, max_nodes, max_arity)
    f = identity_or_etale(rng, d.target, max_nodes + 1, max_arity)
    e = shuffle_representatives(compose(g, free(d)), rng)
    return g, e, f, d.then(f), d


def indiscrete_blocks(n: int, blocks: list[list[int]]):
    """The groupoid on n objects with one morphism between any two objects in the same block."""
    from .stacky import FinGroupoid
    block_of = {o: k for k, b in enumerate(blocks) for o in b}
    objects = list(range(n))
    morphisms = [((a, b), a, b) for a in objects for b in objects if block_of[a] == block_of[b]]
    return FinGroupoid.build(objects, morphisms, lambda f, g: (f[0], g[1]), lambda o: (o, o),
                             lambda f: (f[1], f[0]))


def random_group_action(rng: random.Random, max_points: int = 5):
    """A permutation group acting by automorphisms on an indiscrete-block groupoid.

    Returns (groupoid, action, blocks) where blocks is the union-find of the partition.
    """
    from .finsets import UnionFind
    from .stacky import FinGroup, GroupAction
    n = rng.randint(1, max_points)
    gens = []
    for _ in range(rng.randint(0, 2)):
        p = list(range(n))
        rng.shuffle(p)
        gens.append(tuple(p))
    group = FinGroup.from_permutations(gens, n) if gens else FinGroup(((0,),), 0, (tuple(range(n)),))
    # start from a random partition and coarsen it until the group preserves it
    uf = UnionFind(n)
    for o in range(n):
        uf.union(o, rng.randrange(o + 1))
    changed = True
    while changed:
        changed = False
        for perm in group.perms:
            for a, b in itertools.combinations(range(n), 2):
                if uf.find(a) == uf.find(b) and uf.find(perm[a]) != uf.find(perm[b]):
                    uf.union(perm[a], perm[b])
                    changed = True
    classes: dict[int, list[int]] = {}
    for o in range(n):
        classes.setdefault(uf.find(o), []).append(o)
    x = indiscrete_blocks(n, list(classes.values()))
    index = {lab: k for k, lab in enumerate(x.morphism_labels)}
    on_m = tuple(tuple(index[(perm[a], perm[b])] for a, b in x.morphism_labels) for perm in group.perms)
    return x, GroupAction(group, tuple(group.perms), on_m), uf
