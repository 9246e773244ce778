from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from digraphical.finsets import FinMap, FinSetError, UnionFind, image_factorization, pullback, pushout_of_injections


@st.composite
def finmaps(draw, dom=None, cod=None, injective=False):
    cod = draw(st.integers(1, 5)) if cod is None else cod
    if injective:
        dom = draw(st.integers(0, cod)) if dom is None else dom
        table = draw(st.permutations(range(cod)))[:dom]
    else:
        dom = draw(st.integers(0, 5)) if dom is None else dom
        table = draw(st.lists(st.integers(0, cod - 1), min_size=dom, max_size=dom))
    return FinMap(dom, cod, tuple(table))


def test_table_out_of_range_rejected():
    with pytest.raises(FinSetError):
        FinMap(1, 1, (1,))
    with pytest.raises(FinSetError):
        FinMap(2, 3, (0,))


class TestPullback:
    def test_identities(self):
        n, pf, pg = pullback(FinMap.identity(2), FinMap.identity(2))
        assert n == 2 and pf == FinMap.identity(2) and pg == FinMap.identity(2)

    def test_disjoint_images(self):
        n, _, _ = pullback(FinMap(1, 2, (0,)), FinMap(1, 2, (1,)))
        assert n == 0

    def test_constant_maps_give_product(self):
        n, pf, pg = pullback(FinMap(2, 1, (0, 0)), FinMap(3, 1, (0, 0, 0)))
        assert n == 6
        assert pf.table == (0, 0, 0, 1, 1, 1)
        assert pg.table == (0, 1, 2, 0, 1, 2)

    def test_codomain_mismatch(self):
        with pytest.raises(FinSetError):
            pullback(FinMap.identity(1), FinMap.identity(2))

    @given(st.data())
    def test_square_commutes_and_is_symmetric(self, data):
        cod = data.draw(st.integers(1, 4))
        f, g = data.draw(finmaps(cod=cod)), data.draw(finmaps(cod=cod))
        n, pf, pg = pullback(f, g)
        assert all(f(pf(k)) == g(pg(k)) for k in range(n))
        brute = sorted((a, b) for a in range(f.dom_size) for b in range(g.dom_size) if f(a) == g(b))
        assert [(pf(k), pg(k)) for k in range(n)] == brute
        m, qg, qf = pullback(g, f)
        assert m == n
        assert sorted(zip(qf.table, qg.table)) == brute


class TestPushout:
    def test_empty_amalgamation(self):
        n, lf, lg = pushout_of_injections(FinMap(0, 2, ()), FinMap(0, 3, ()))
        assert n == 5

    def test_point(self):
        n, _, _ = pushout_of_injections(FinMap(1, 1, (0,)), FinMap(1, 1, (0,)))
        assert n == 1

    def test_one_point_into_two_and_two(self):
        n, _, _ = pushout_of_injections(FinMap(1, 2, (0,)), FinMap(1, 2, (1,)))
        assert n == 3

    def test_rejects_non_injective(self):
        with pytest.raises(FinSetError):
            pushout_of_injections(FinMap(2, 1, (0, 0)), FinMap(2, 2, (0, 1)))

    @given(st.data())
    def test_legs_commute_and_cover(self, data):
        k = data.draw(st.integers(0, 3))
        f = data.draw(finmaps(dom=k, cod=data.draw(st.integers(k, 5)) if k else None, injective=True))
        g = data.draw(finmaps(dom=k, cod=data.draw(st.integers(max(k, 1), 5)), injective=True))
        n, lf, lg = pushout_of_injections(f, g)
        assert all(lf(f(a)) == lg(g(a)) for a in range(k))
        assert set(lf.table) | set(lg.table) == set(range(n))
        assert n == f.cod_size + g.cod_size - k


class TestImage:
    def test_identity(self):
        s, i = image_factorization(FinMap.identity(3))
        assert s == FinMap.identity(3) and i == FinMap.identity(3)

    def test_constant(self):
        s, i = image_factorization(FinMap(3, 1, (0, 0, 0)))
        assert s.table == (0, 0, 0) and i == FinMap.identity(1)

    def test_first_preimage_order(self):
        s, i = image_factorization(FinMap(3, 4, (2, 2, 0)))
        assert i.table == (2, 0) and s.table == (0, 0, 1)

    @given(finmaps())
    def test_recomposes(self, f):
        s, i = image_factorization(f)
        assert s.then(i) == f
        assert i.is_injective() and s.is_surjective()


def test_union_find_quotient_numbers_classes_in_order():
    uf = UnionFind(5)
    uf.union(3, 1)
    uf.union(4, 0)
    q = uf.quotient()
    assert q.table == (0, 1, 2, 1, 0)
