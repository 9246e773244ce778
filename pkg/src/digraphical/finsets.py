"""Finite sets as index ranges, maps between them, and three universal constructions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


class FinSetError(ValueError):
    pass


@dataclass(frozen=True)
class FinMap:
    """A map {0..dom_size-1} -> {0..cod_size-1} given by its table."""

    dom_size: int
    cod_size: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if len(self.table) != self.dom_size:
            raise FinSetError(f"table has length {len(self.table)}, expected {self.dom_size}")
        for v in self.table:
            if not 0 <= v < self.cod_size:
                raise FinSetError(f"entry {v} out of range for codomain {self.cod_size}")

    @classmethod
    def identity(cls, n: int) -> FinMap:
        return cls(n, n, tuple(range(n)))

    @classmethod
    def from_table(cls, table: Sequence[int], cod_size: int) -> FinMap:
        return cls(len(table), cod_size, tuple(table))

    def __call__(self, i: int) -> int:
        return self.table[i]

    def then(self, other: FinMap) -> FinMap:
        """Diagrammatic composite: first self, then other."""
        if self.cod_size != other.dom_size:
            raise FinSetError("composable maps must share the middle set")
        return FinMap(self.dom_size, other.cod_size, tuple(other.table[v] for v in self.table))

    def is_injective(self) -> bool:
        return len(set(self.table)) == self.dom_size

    def is_surjective(self) -> bool:
        return len(set(self.table)) == self.cod_size

    def is_bijective(self) -> bool:
        return self.dom_size == self.cod_size and self.is_injective()

    def fibre(self, b: int) -> list[int]:
        return [a for a, v in enumerate(self.table) if v == b]

    def inverse(self) -> FinMap:
        if not self.is_bijective():
            raise FinSetError("only bijections can be inverted")
        inv = [0] * self.dom_size
        for a, b in enumerate(self.table):
            inv[b] = a
        return FinMap(self.cod_size, self.dom_size, tuple(inv))


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # smaller root wins so class representatives are minimal elements
            if rx < ry:
                self.parent[ry] = rx
            else:
                self.parent[rx] = ry

    def quotient(self) -> FinMap:
        """The quotient map, classes numbered in order of their least element."""
        labels: dict[int, int] = {}
        table = []
        for x in range(len(self.parent)):
            r = self.find(x)
            if r not in labels:
                labels[r] = len(labels)
            table.append(labels[r])
        return FinMap(len(self.parent), len(labels), tuple(table))


def pullback(f: FinMap, g: FinMap) -> tuple[int, FinMap, FinMap]:
    """Apex {(a, b) : f(a) = g(b)} in lexicographic order, with its two projections."""
    if f.cod_size != g.cod_size:
        raise FinSetError(f"codomain mismatch: {f.cod_size} vs {g.cod_size}")
    by_value: dict[int, list[int]] = {}
    for b, v in enumerate(g.table):
        by_value.setdefault(v, []).append(b)
    pairs = [(a, b) for a, v in enumerate(f.table) for b in by_value.get(v, ())]
    n = len(pairs)
    return (
        n,
        FinMap(n, f.dom_size, tuple(a for a, _ in pairs)),
        FinMap(n, g.dom_size, tuple(b for _, b in pairs)),
    )


def pushout_of_injections(f: FinMap, g: FinMap) -> tuple[int, FinMap, FinMap]:
    """Glue cod(f) and cod(g) along the common domain of two injections."""
    if f.dom_size != g.dom_size:
        raise FinSetError("pushout legs must share their domain")
    if not f.is_injective():
        raise FinSetError("first map is not injective")
    if not g.is_injective():
        raise FinSetError("second map is not injective")
    offset = f.cod_size
    uf = UnionFind(f.cod_size + g.cod_size)
    for a in range(f.dom_size):
        uf.union(f.table[a], offset + g.table[a])
    quot = uf.quotient()
    leg_f = FinMap(f.cod_size, quot.cod_size, quot.table[:offset])
    leg_g = FinMap(g.cod_size, quot.cod_size, quot.table[offset:])
    return quot.cod_size, leg_f, leg_g


def image_factorization(f: FinMap) -> tuple[FinMap, FinMap]:
    """Split f as a surjection followed by an injection; image ordered by first preimage."""
    position: dict[int, int] = {}
    for v in f.table:
        if v not in position:
            position[v] = len(position)
    k = len(position)
    surj = FinMap(f.dom_size, k, tuple(position[v] for v in f.table))
    inj = FinMap(k, f.cod_size, tuple(position))
    return surj, inj
