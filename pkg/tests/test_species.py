from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings

from conftest import graphs, seeds
from digraphical.digraph import HomKind, corolla, hom_set, linear, wheel
from digraphical.fuzz import random_species
from digraphical.species import (
    Operation,
    ResidueMismatch,
    Species,
    SpeciesError,
    act,
    certificate_of,
    check_algebra,
    check_monad_laws,
    corolla_fgraph,
    evaluate,
    evaluate_by_limit,
    free_properad,
    monad_mult,
    random_fgraph,
    species_from_json,
    species_to_json,
    substitute,
    unit_fgraph,
)
from digraphical.symmetry import PortedGraph, automorphism_group, enumerate_graphs

CHAIN = Species(("c",), (Operation("f", ("c",), ("c",)),))
SPLIT_JOIN = Species(("c",), (Operation("split", (), ("c", "c")), Operation("join", ("c", "c"), ())))


def decorations(ds):
    return {(d.edge_colour, d.node_op) for d in ds}


class TestSpecies:
    def test_unknown_colour(self):
        with pytest.raises(SpeciesError):
            Species(("a",), (Operation("f", ("b",), ()),))

    def test_duplicate_ids(self):
        with pytest.raises(SpeciesError):
            Species(("a",), (Operation("f", (), ()), Operation("f", ("a",), ())))

    def test_json_round_trip(self):
        f = Species(("r", "b"), (Operation("g", ("r",), ("b", "b")),))
        assert species_from_json(species_to_json(f)) == f

    @given(seeds)
    def test_json_round_trip_fuzzed(self, seed):
        f = random_species(random.Random(seed))
        assert species_from_json(species_to_json(f)) == f

    def test_malformed_json(self):
        with pytest.raises(SpeciesError):
            species_from_json({"ops": []})


class TestEvaluate:
    @given(graphs(max_nodes=4, max_arity=2))
    def test_terminal_gives_one(self, g):
        f = Species.terminal({g.biarity(v) for v in range(g.n_nodes)} or {(1, 1)})
        assert len(evaluate(f, g)) == 1

    def test_colour_clash(self):
        f = Species(("r", "b"), (Operation("f", ("r",), ("b",)),))
        assert evaluate(f, linear(2)) == []
        assert len(evaluate(f, linear(1))) == 1

    def test_representable_loop(self):
        assert len(evaluate(Species.representable(wheel(1)), corolla(1, 1))) == 1

    def test_corolla_reproduces_raw_data(self):
        f = Species(("r", "b"), (Operation("f", ("r", "b"), ("b",)), Operation("g", ("b", "r"), ("b",))))
        got = evaluate(f, corolla(2, 1))
        assert sorted(d.node_op for d in got) == [("f",), ("f",), ("g",), ("g",)]

    @given(graphs(max_nodes=3), graphs(max_nodes=3))
    def test_representable_counts_etale_maps(self, g, x):
        assert len(evaluate(Species.representable(x), g)) == len(hom_set(g, x, HomKind.ETALE))

    @given(graphs(max_nodes=4), seeds)
    def test_limit_formula_agrees(self, g, seed):
        f = random_species(random.Random(seed))
        assert decorations(evaluate(f, g)) == decorations(evaluate_by_limit(f, g))


class TestFreeProperad:
    def test_chains_one_per_grade(self):
        value = free_properad(CHAIN, 1, 1, 3)
        assert {k: len(v) for k, v in value.by_grade().items()} == {0: 1, 1: 1, 2: 1, 3: 1}

    def test_theta_orbit(self):
        value = free_properad(SPLIT_JOIN, 0, 0, 2)
        (c,) = value.classes
        assert c.aut_order == 2 and c.orbit_size == 1

    def test_no_operations(self):
        empty = Species(("c",), ())
        assert [c.decoration.grade for c in free_properad(empty, 1, 1, 3).classes] == [0]
        assert free_properad(empty, 2, 1, 3).classes == []

    def test_unit_class_is_colours(self):
        f = Species(("a", "b"), (Operation("f", ("a",), ("b",)),))
        units = free_properad(f, 1, 1, 0).classes
        assert sorted(c.decoration.edge_colour for c in units) == [("a",), ("b",)]

    @pytest.mark.parametrize("seed", range(6))
    def test_linear_restriction_counts_paths(self, seed):
        rng = random.Random(seed)
        colours = ("a", "b", "c")[: rng.randint(1, 3)]
        ops = tuple(Operation(f"o{k}", (rng.choice(colours),), (rng.choice(colours),)) for k in range(rng.randint(1, 4)))
        f = Species(colours, ops)
        value = free_properad(f, 1, 1, 3, shape="linear")
        # composable words of operations of each length
        words = [[(c, c) for c in colours]]
        for _ in range(3):
            words.append([(a, op.out_colours[0]) for a, b in words[-1] for op in ops if op.in_colours[0] == b])
        assert [len(v) for v in value.by_grade().values()] == [len(w) for w in words]

    @settings(max_examples=15)
    @given(seeds)
    def test_orbits_partition_decorations(self, seed):
        f = random_species(random.Random(seed), max_ops=3)
        for m, n in ((1, 1), (0, 1), (2, 1)):
            value = free_properad(f, m, n, 2)
            by_shape = Counter()
            for c in value.classes:
                assert c.aut_order % c.orbit_size == 0
                by_shape[id(c.ported)] += c.orbit_size
            for pg in enumerate_graphs(m, n, 2, f.biarities):
                total = sum(c.orbit_size for c in value.classes if c.ported == pg)
                assert total == len(evaluate(f, pg.graph))

    @settings(max_examples=15)
    @given(seeds)
    def test_class_certificates_are_invariant(self, seed):
        f = random_species(random.Random(seed), max_ops=3)
        for c in free_properad(f, 1, 1, 2).classes:
            for sigma in automorphism_group(c.ported).elements:
                assert certificate_of(act(sigma, c.decoration)) == c.certificate


class TestMultiplication:
    def test_unit_corolla_outside(self):
        x = free_properad(CHAIN, 1, 1, 3).by_grade()[3][0].decoration
        outer = PortedGraph.standard(corolla(1, 1))
        assert certificate_of(monad_mult(CHAIN, outer, [x])) == certificate_of(x)

    def test_unit_corollas_inside(self):
        x = free_properad(CHAIN, 1, 1, 2).by_grade()[2][0].decoration
        pieces = [corolla_fgraph("f", ("c",), ("c",)) for _ in range(2)]
        assert certificate_of(monad_mult(CHAIN, x.ported, pieces)) == certificate_of(x)

    def test_chains_of_chains(self):
        l2 = free_properad(CHAIN, 1, 1, 2).by_grade()[2][0].decoration
        l4 = free_properad(CHAIN, 1, 1, 4).by_grade()[4][0].decoration
        outer = PortedGraph.standard(linear(2))
        result = monad_mult(CHAIN, outer, [l2, l2])
        assert result.grade == 4 and certificate_of(result) == certificate_of(l4)

    def test_residue_mismatch(self):
        outer = PortedGraph.standard(linear(2))
        with pytest.raises(ResidueMismatch):
            substitute(outer, [corolla_fgraph("f", ("c",), ("c",))])

    def test_unit_graph_at_a_node(self):
        outer = PortedGraph.standard(linear(2))
        pieces = [corolla_fgraph("f", ("c",), ("c",)), unit_fgraph("c")]
        result = monad_mult(CHAIN, outer, pieces)
        assert result.grade == 1

    @settings(max_examples=30)
    @given(seeds)
    def test_grades_add_and_representatives_do_not_matter(self, seed):
        rng = random.Random(seed)
        f = random_species(rng)
        outer = random_fgraph(f, rng, 3)
        pieces = []
        for v in range(outer.shape.n_nodes):
            ins = [outer.edge_colour[e] for e in outer.shape.in_edges_of(v)]
            outs = [outer.edge_colour[e] for e in outer.shape.out_edges_of(v)]
            pieces.append(corolla_fgraph(outer.node_op[v], ins, outs))
        result = monad_mult(f, outer.ported, pieces, outer.edge_colour)
        assert result.grade == outer.grade
        assert certificate_of(result) == certificate_of(outer)
        # move each piece by a port-fixing automorphism: the class must not change
        moved = [act(rng.choice(automorphism_group(p.ported).elements), p) for p in pieces]
        assert certificate_of(monad_mult(f, outer.ported, moved, outer.edge_colour)) == certificate_of(result)


class TestLaws:
    def test_terminal_exhaustive_small(self):
        report = check_monad_laws(Species.terminal({(1, 1), (2, 1)}), 3, exhaustive=True)
        assert report.passed and report.checked > 100

    @pytest.mark.parametrize("seed", range(3))
    def test_random_species(self, seed):
        f = random_species(random.Random(seed))
        report = check_monad_laws(f, 5, sample_budget=30, seed=seed)
        assert report.passed, report.counterexamples[:1]

    def test_degenerate_unit_nesting(self):
        outer = PortedGraph.standard(linear(3))
        f = CHAIN
        pieces = [corolla_fgraph("f", ("c",), ("c",)), unit_fgraph("c"), corolla_fgraph("f", ("c",), ("c",))]
        assert monad_mult(f, outer, pieces).grade == 2


class TestAlgebra:
    def test_terminal_chain_properad(self):
        # the single operation doubles as the identity, so every chain collapses to it
        report = check_algebra(CHAIN, lambda d: "f", 3, max_ports=1)
        assert report.passed and report.checked > 3

    def test_partial_structure_is_reported(self):
        report = check_algebra(CHAIN, lambda d: "f" if d.grade else None, 2, max_ports=1)
        assert [c["law"] for c in report.counterexamples][:1] == ["structure undefined"]

    def test_free_algebra_by_monad_laws(self):
        # the free algebra's structure map is the multiplication, so its axioms are the monad laws
        assert check_monad_laws(CHAIN, 4, exhaustive=True).passed

    def test_unit_violation_is_reported(self):
        f = Species(("c",), (Operation("f", ("c",), ("c",)), Operation("g", ("c",), ("c",))))
        report = check_algebra(f, lambda d: "g", 2, max_ports=1)
        assert not report.passed
        assert any(c["law"] == "unit" for c in report.counterexamples)
