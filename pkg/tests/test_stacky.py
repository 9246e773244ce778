from __future__ import annotations

import itertools
import json
import random

import pytest
from hypothesis import given, settings

from conftest import seeds
from digraphical.digraph import (
    Diagram,
    Graph,
    HomKind,
    corolla,
    diamond,
    hom_set,
    is_acyclic,
    is_connected,
    linear,
    theta,
    unit,
)
from digraphical.finsets import UnionFind
from digraphical.fuzz import random_graph, random_group_action
from digraphical.hypergraph import Digraph, random_digraph
from digraphical.stacky import (
    FinGroup,
    FinGroupoid,
    GHypergraph,
    GroupoidError,
    NonDiscrete,
    NotFibration,
    NotMono,
    action_on_set,
    bar,
    bar_functor_check,
    corolla_groupoid_check,
    corolla_groupoids,
    count_paths,
    cover_is_etale,
    discrete_functor,
    discrete_ghypergraph,
    enumerate_etale_classes,
    enumerate_etale_into,
    free_category_restriction_check,
    ghypergraph_from_json,
    ghypergraph_to_json,
    homotopy_quotient,
    mapping_side,
    mono_witness,
    one_object,
    stacky_corolla,
    validate_ghypergraph,
    verify_bar_theorem,
)
from digraphical.symmetry import automorphism_group, canonical_form, enumerate_graphs

Z2 = FinGroup.from_permutations([(1, 0)])


# ---------------------------------------------------------------- groups and groupoids


def test_symmetric_group_from_generators():
    s3 = FinGroup.from_permutations([(1, 0, 2), (0, 2, 1)])
    assert s3.order == 6
    s3.check()
    for g in range(6):
        assert s3.mult[g][s3.inverse[g]] == s3.identity


def test_discrete_groupoid():
    g = FinGroupoid.discrete(3)
    g.check()
    assert g.is_discrete() and g.n_components == 3


def test_one_object_groupoid_has_the_group():
    g = one_object(Z2)
    g.check()
    assert g.n_components == 1 and len(g.vertex_group(0)) == 2


@given(seeds)
@settings(max_examples=100)
def test_components_of_homotopy_quotient(seed):
    x, action, uf = random_group_action(random.Random(seed))
    action.check(x)
    q = homotopy_quotient(x, action)
    if q.n_morphisms <= 150:
        # the associativity check runs over composable triples
        q.check()
    # independent orbit computation: blocks joined along the group
    n = x.n_objects
    orbit = UnionFind(n)
    for o in range(n):
        orbit.union(o, uf.find(o))
        for perm in action.group.perms:
            orbit.union(o, perm[o])
    expected = {frozenset(o for o in range(n) if orbit.find(o) == orbit.find(r)) for r in range(n)}
    assert {frozenset(c) for c in q.components()} == expected
    # a loop at o is a group element moving o within its block
    for o in range(n):
        stab = sum(1 for perm in action.group.perms if uf.find(perm[o]) == uf.find(o))
        assert len(q.vertex_group(o)) == stab


def test_trivial_action_keeps_components():
    x = FinGroupoid.discrete(3)
    q = homotopy_quotient(x, action_on_set(Z2, [(0, 1, 2), (0, 1, 2)]))
    assert q.n_components == 3
    assert all(len(q.vertex_group(o)) == 2 for o in range(3))


def test_free_action_on_set_gives_orbit_set():
    x = FinGroupoid.discrete(4)
    q = homotopy_quotient(x, action_on_set(Z2, [(0, 1, 2, 3), (1, 0, 3, 2)]))
    assert q.n_components == 2
    assert all(len(q.vertex_group(o)) == 1 for o in range(4))


def test_swap_of_two_points_is_free():
    # the action groupoid of a free action has trivial loops
    q = homotopy_quotient(FinGroupoid.discrete(2), action_on_set(Z2, [(0, 1), (1, 0)]))
    assert q.n_components == 1
    assert len(q.vertex_group(0)) == 1


def test_bad_action_rejected():
    action = action_on_set(Z2, [(1, 0), (1, 0)])
    with pytest.raises(GroupoidError):
        action.check(FinGroupoid.discrete(2))


# ---------------------------------------------------------------- groupoid-enriched hypergraphs


def test_discrete_hypergraphs_validate():
    for g in (linear(2), theta(), diamond(), corolla(2, 1)):
        validate_ghypergraph(discrete_ghypergraph(g))


def _one_flag_over(n: FinGroupoid) -> GHypergraph:
    a = FinGroupoid.discrete(1)
    i = FinGroupoid.discrete(1)
    o = FinGroupoid.discrete(0)
    return GHypergraph(a, i, n, o, discrete_functor(i, a, (0,)), discrete_functor(i, n, (0,)),
                       discrete_functor(o, n, ()), discrete_functor(o, a, ()))


def test_flag_fixed_by_vertex_group_is_not_fibration():
    with pytest.raises(NotFibration) as info:
        validate_ghypergraph(_one_flag_over(one_object(Z2)))
    assert info.value.side == "in"


def test_non_discrete_hyperedges_rejected():
    x = discrete_ghypergraph(corolla(1, 0))
    a = one_object(Z2)
    bad = GHypergraph(a, x.I, x.N, x.O, discrete_functor(x.I, a, (0,)), x.p, x.q,
                      discrete_functor(x.O, a, ()))
    with pytest.raises(NonDiscrete):
        validate_ghypergraph(bad)


def test_repeated_flag_is_not_mono():
    raw = Diagram.from_lists(1, [[0, 0]], [[]])
    x = discrete_ghypergraph(raw)
    assert mono_witness(x.I, x.s, x.p) == (0, 1)
    with pytest.raises(NotMono):
        validate_ghypergraph(x)
    assert not corolla_groupoid_check(x).passed


# ---------------------------------------------------------------- stacky corollas


def test_trivial_group_gives_the_corolla():
    sc = stacky_corolla(2, 1)
    x = sc.hypergraph
    assert sc.group.order == 1
    assert (x.A.n_objects, x.I.n_objects, x.N.n_objects, x.O.n_objects) == (3, 2, 1, 1)
    assert x.N.is_discrete()
    assert cover_is_etale(sc)


def test_swap_on_both_sides():
    sc = stacky_corolla(2, 2, [((1, 0), (1, 0))])
    x = sc.hypergraph
    assert sc.group.order == 2
    assert x.N.n_components == 1 and len(x.N.vertex_group(0)) == 2
    assert x.I.is_discrete() and x.I.n_components == 1
    assert x.O.is_discrete() and x.O.n_components == 1
    assert x.A.n_components == 2
    assert cover_is_etale(sc)


def test_non_free_action_rejected():
    with pytest.raises(GroupoidError):
        stacky_corolla(2, 1, [((1, 0), (0,))])


def test_corolla_lemma_on_stacky_corolla():
    x = stacky_corolla(2, 2, [((1, 0), (1, 0))]).hypergraph
    report = corolla_groupoid_check(x)
    assert report.passed, str(report)
    (cor, _), = corolla_groupoids(x)["cor"]
    assert cor.n_components == 1
    assert len(cor.vertex_group(0)) == 2


@pytest.mark.parametrize("g", [linear(3), theta(), diamond(), corolla(0, 0)])
def test_corolla_lemma_on_discrete_graphs(g):
    x = discrete_ghypergraph(g)
    assert corolla_groupoid_check(x).passed
    cors = corolla_groupoids(x)["cor"]
    assert sum(q.n_components for q, _ in cors) == g.n_nodes
    assert all(q.is_discrete() or all(len(q.vertex_group(o)) == 1 for o in range(q.n_objects))
               for q, _ in cors)


# ---------------------------------------------------------------- etale maps and the bar construction


def brute_etale_class_count(x: Graph, max_nodes: int) -> int:
    """Orbits of etale maps under automorphisms, summed over unported connected acyclic graphs."""
    menu = {x.biarity(v) for v in range(x.n_nodes)}
    # a unit graph has one import and one export; otherwise ports come from node flags
    most_in = max(1, max_nodes * max((a for a, _ in menu), default=0))
    most_out = max(1, max_nodes * max((b for _, b in menu), default=0))
    seen = set()
    total = 0
    for m, n in itertools.product(range(most_in + 1), range(most_out + 1)):
        for pg in enumerate_graphs(m, n, max_nodes, menu):
            g = pg.graph
            cert = canonical_form(g, ported=False).certificate
            if cert in seen or not (is_connected(g) and is_acyclic(g)):
                continue
            seen.add(cert)
            homs = hom_set(g, x, HomKind.ETALE)
            auts = automorphism_group(g, fix_ports=False).elements
            orbits = {frozenset(s.then(f).key() for s in auts) for f in homs}
            total += len(orbits)
    return total


@pytest.mark.parametrize("name,x,expected", [
    ("unit", unit(), 1),
    ("corolla", corolla(1, 1), 3),
    ("linear2", linear(2), 6),
    ("linear3", linear(3), 10),
    ("theta", theta(), 12),
    ("diamond", diamond(), 23),
])
def test_etale_class_counts(name, x, expected):
    assert len(enumerate_etale_classes(x, 4)) == expected
    assert brute_etale_class_count(x, 4) == expected


def test_corolla_classes_are_identity_and_edges():
    for m, n in [(1, 1), (2, 1), (0, 2)]:
        classes = enumerate_etale_classes(corolla(m, n), 3)
        assert len(classes) == m + n + 1
        assert all(len(c.deck) == 1 for c in classes)


def test_theta_identity_has_trivial_deck_group():
    classes = enumerate_etale_classes(theta(), 2)
    closed = [c for c in classes if c.graph.n_nodes == 2 and not c.graph.imports and not c.graph.exports]
    assert len(closed) == 1 and len(closed[0].deck) == 1


def test_theta_double_cover_appears_at_four_nodes():
    classes = enumerate_etale_classes(theta(), 4)
    big = [c for c in classes if c.graph.n_nodes == 4 and not c.graph.imports and not c.graph.exports]
    assert len(big) == 1
    assert len(big[0].deck) == 2
    assert all(c.graph.n_nodes < 4 for c in enumerate_etale_classes(theta(), 3))


def test_bar_of_unit():
    b = bar(unit(), 2)
    x = b.hypergraph
    assert x.N.n_objects == 1 and x.A.n_objects == 1
    assert x.I.n_objects == 1 and x.O.n_objects == 1


def test_bar_of_corolla_at_one_node():
    b = bar(corolla(1, 1), 1)
    x = b.hypergraph
    assert x.N.n_objects == 3
    # every class has one import and one export: the corolla itself and the two edge units
    for v in range(3):
        assert len(x.p.strict_fibre(v)) == 1 and len(x.q.strict_fibre(v)) == 1
    assert sorted(b.etale.anchors_in) == [0, 0, 1]


def test_bar_of_theta_closed_node_has_no_flags():
    b = bar(theta(), 2)
    x = b.hypergraph
    closed = [k for k, c in enumerate(b.etale.classes) if c.graph.n_nodes == 2 and c.graph.is_closed()]
    (v,) = closed
    assert x.p.strict_fibre(v) == [] and x.q.strict_fibre(v) == []


@pytest.mark.parametrize("x", [unit(), corolla(1, 1), linear(2), linear(3), theta(), diamond()])
def test_bar_validates(x):
    validate_ghypergraph(bar(x, 3).hypergraph)


def test_bar_can_break_mono_yet_theorem_holds():
    # the node sends one edge to itself, so a two-node unrolling has both imports over edge 0
    x = Graph.from_lists(2, [[0, 1]], [[1]])
    b = bar(x, 2, validate=False)
    with pytest.raises(NotMono):
        validate_ghypergraph(b.hypergraph)
    for m, n in itertools.product(range(3), repeat=2):
        assert verify_bar_theorem(x, m, n, 2, b).passed


def test_marked_etale_maps_are_discrete():
    eg = enumerate_etale_into(theta(), 4)
    assert eg.et_in.is_discrete() and eg.et_out.is_discrete()
    assert not eg.et.is_discrete()


# ---------------------------------------------------------------- the bar theorem


def test_theorem_on_linear_two():
    r = verify_bar_theorem(linear(2), 1, 1, 2)
    assert r.passed, r.problems
    assert set(r.vertex_group_orders()) == {1}


def test_theorem_on_theta_small_bound():
    r = verify_bar_theorem(theta(), 0, 0, 2)
    assert r.passed, r.problems
    assert r.vertex_group_orders() == [1]


def test_theorem_on_theta_sees_deck_swap():
    r = verify_bar_theorem(theta(), 0, 0, 4)
    assert r.passed, r.problems
    assert r.vertex_group_orders() == [1, 2]
    assert sorted(o for orders in r.formula_side.values() for o in orders) == [1, 2]


def test_theorem_on_unit():
    r = verify_bar_theorem(unit(), 1, 1, 0)
    assert r.passed and len(r.mapping_side) == 1


@given(seeds)
@settings(max_examples=15)
def test_theorem_on_fuzzed_graphs(seed):
    rng = random.Random(seed)
    x = random_graph(rng, 3, 2)
    b = bar(x, 2, validate=False)
    m, n = rng.randint(0, 2), rng.randint(0, 2)
    r = verify_bar_theorem(x, m, n, 2, b)
    assert r.passed, r.problems


@given(seeds)
@settings(max_examples=10)
def test_mapping_side_stabilises(seed):
    rng = random.Random(seed)
    x = random_graph(rng, 3, 2, connected=True)
    m, n = rng.randint(0, 2), rng.randint(0, 2)
    small = mapping_side(bar(x, 2, validate=False), m, n)
    large = mapping_side(bar(x, 3, validate=False), m, n)
    for k, orders in small.items():
        assert large[k] == orders


@given(seeds)
@settings(max_examples=15)
def test_bar_is_functorial_on_etale_maps(seed):
    rng = random.Random(seed)
    y = random_graph(rng, 3, 2)
    x = random_graph(rng, 2, 2)
    homs = hom_set(x, y, HomKind.ETALE)
    if not homs:
        return
    f = rng.choice(homs)
    assert bar_functor_check(f, bar(x, 2, validate=False), bar(y, 2, validate=False)) == []


# ---------------------------------------------------------------- the free category


def test_paths_in_a_loop():
    report = free_category_restriction_check(Digraph(1, (0,), (0,)), 3)
    assert report.passed and report.bar_count == 4 and report.discrete


def test_paths_in_one_arrow():
    for k in (1, 2, 3):
        assert free_category_restriction_check(Digraph(2, (0,), (1,)), k).bar_count == 3


def test_paths_in_empty_digraph():
    report = free_category_restriction_check(Digraph(0, (), ()), 3)
    assert report.passed and report.bar_count == 0


def brute_paths(d: Digraph, k: int) -> int:
    """Sequences of composable arrows, by filtering all arrow words."""
    total = d.n_vertices
    for length in range(1, k + 1):
        for word in itertools.product(range(d.n_arrows), repeat=length):
            if all(d.tgt[a] == d.src[b] for a, b in zip(word, word[1:])):
                total += 1
    return total


@given(seeds)
@settings(max_examples=25)
def test_path_counts_fuzzed(seed):
    d = random_digraph(random.Random(seed), 3, 3)
    k = 3
    assert count_paths(d.n_vertices, d.src, d.tgt, k) == brute_paths(d, k)
    report = free_category_restriction_check(d, k)
    assert report.passed and report.bar_count == brute_paths(d, k)


# ---------------------------------------------------------------- JSON


def test_ghypergraph_json_round_trip():
    x = stacky_corolla(2, 2, [((1, 0), (1, 0))]).hypergraph
    back = ghypergraph_from_json(json.loads(json.dumps(ghypergraph_to_json(x))))
    assert ghypergraph_to_json(back) == ghypergraph_to_json(x)
    assert len(back.N.vertex_group(0)) == 2


def test_bar_json_round_trip():
    b = bar(theta(), 4)
    data = ghypergraph_to_json(b.hypergraph)
    back = ghypergraph_from_json(json.loads(json.dumps(data)))
    assert back.N.n_components == b.hypergraph.N.n_components
