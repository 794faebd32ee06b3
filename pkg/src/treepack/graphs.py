"""Finite cyclic and product groups, arc-colored Cayley digraphs, and the
target graphs that decompositions must partition exactly.

Vertex conventions, shared with certificates:

* ``int``       -- elements of Z_p, and relabeled matching-complement vertices
* ``(x, i)``    -- elements of Z_p x Z_r (blow-up vertices)
* ``"alpha:k"`` -- apex vertices adjoined by the near-complete constructions

All arc and edge containers are kept sorted under :func:`vertex_key`, so
iteration order is deterministic everywhere downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

Vertex = Union[int, tuple, str]

TARGET_KINDS = ("blowup", "matching-complement", "near-complete", "clique-complement")


def is_prime(n: int) -> bool:
    """Trial-division primality check; adequate at desk scale."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def vertex_key(v: Vertex) -> tuple:
    """Total order over the three vertex shapes, for stable sorting."""
    if isinstance(v, int) and not isinstance(v, bool):
        return (0, v, 0)
    if isinstance(v, tuple) and len(v) == 2:
        return (1, v[0], v[1])
    if isinstance(v, str) and v.startswith("alpha:"):
        return (2, int(v[6:]), 0)
    raise ValueError(f"not a vertex: {v!r}")


def edge_key(u: Vertex, v: Vertex) -> tuple:
    """Canonical undirected form of an edge; rejects loops."""
    if u == v:
        raise ValueError(f"loop edge at {u!r}")
    return (u, v) if vertex_key(u) <= vertex_key(v) else (v, u)


def arc_sort_key(arc: tuple) -> tuple:
    u, v = arc
    return (vertex_key(u), vertex_key(v))


@dataclass(frozen=True)
class CyclicGroup:
    """Z_p under addition, p an odd prime (verified at construction)."""

    p: int

    def __post_init__(self):
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"modulus must be a prime >= 3, got {self.p}")

    @property
    def order(self) -> int:
        return self.p

    def elements(self) -> Iterable[int]:
        return range(self.p)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p


@dataclass(frozen=True)
class ProductGroup:
    """Z_p x Z_r with componentwise addition."""

    p: int
    r: int

    def __post_init__(self):
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"modulus must be a prime >= 3, got {self.p}")
        if self.r < 1:
            raise ValueError(f"blow-up factor must be >= 1, got {self.r}")

    @property
    def order(self) -> int:
        return self.p * self.r

    def elements(self) -> Iterable[tuple]:
        return itertools.product(range(self.p), range(self.r))

    def add(self, a: tuple, b: tuple) -> tuple:
        return ((a[0] + b[0]) % self.p, (a[1] + b[1]) % self.r)


@dataclass(frozen=True)
class ColorSet:
    """Ordered antisymmetric subset of Z_p*: never both s and p - s."""

    p: int
    elements: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"modulus must be a prime >= 3, got {self.p}")
        seen = set()
        for s in self.elements:
            if not 1 <= s <= self.p - 1:
                raise ValueError(f"color {s} outside 1..{self.p - 1}")
            if s in seen:
                raise ValueError(f"repeated color {s}")
            if self.p - s in seen:
                raise ValueError(f"symmetric pair {{{self.p - s}, {s}}} is not antisymmetric")
            seen.add(s)
        if len(self.elements) > (self.p - 1) // 2:
            raise ValueError("antisymmetric set cannot exceed (p-1)/2 elements")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, s: int) -> bool:
        return s in self.elements

    def union(self, other: "ColorSet") -> "ColorSet":
        if other.p != self.p:
            raise ValueError("mismatched moduli")
        return ColorSet(self.p, self.elements + other.elements)


@dataclass(frozen=True)
class CayleyDigraph:
    """Cay(G, S) with arc (x, x+s) carrying color s.

    Over a product group the generating set is the lift S x Z_r, and arc
    colors are the pairs (s, j).
    """

    group: Union[CyclicGroup, ProductGroup]
    colors: ColorSet

    def __post_init__(self):
        if self.colors.p != self.group.p:
            raise ValueError("color set modulus does not match the group")

    def lifted_colors(self) -> tuple:
        if isinstance(self.group, CyclicGroup):
            return self.colors.elements
        return tuple((s, j) for s in self.colors.elements for j in range(self.group.r))

    def out_degree(self) -> int:
        return len(self.lifted_colors())

    def arc_color(self, u: Vertex, v: Vertex):
        """Color of the arc (u, v); raises if the arc is not in the digraph."""
        if isinstance(self.group, CyclicGroup):
            c = (v - u) % self.group.p
            if c not in self.colors:
                raise ValueError(f"arc ({u}, {v}) not in the digraph")
            return c
        c = ((v[0] - u[0]) % self.group.p, (v[1] - u[1]) % self.group.r)
        if c[0] not in self.colors:
            raise ValueError(f"arc ({u}, {v}) not in the digraph")
        return c

    def arcs(self) -> tuple:
        """All arcs as ((u, v), color), sorted lexicographically."""
        out = []
        for x in self.group.elements():
            for c in self.lifted_colors():
                out.append(((x, self.group.add(x, c)), c))
        out.sort(key=lambda ac: arc_sort_key(ac[0]))
        return tuple(out)

    def underlying_edges(self) -> frozenset:
        return frozenset(edge_key(u, v) for (u, v), _ in self.arcs())


def build_cayley(group: Union[CyclicGroup, ProductGroup], colors: ColorSet) -> CayleyDigraph:
    """Arc-colored Cayley digraph of `group` with respect to `colors`."""
    return CayleyDigraph(group, colors)


def blow_up_arc(arc: tuple[int, int], r: int) -> tuple:
    """The oriented K_{r,r} replacing one arc in the blow-up: all ((x,i),(y,j))."""
    x, y = arc
    if x == y:
        raise ValueError("loop arc cannot be blown up")
    if r < 1:
        raise ValueError("r must be >= 1")
    return tuple(((x, i), (y, j)) for i in range(r) for j in range(r))


def translate(arcs: Iterable[tuple], g, group: Union[CyclicGroup, ProductGroup]) -> tuple:
    """Shift every arc (u, v) to (u+g, v+g). Arc colors are unchanged."""
    out = [(group.add(u, g), group.add(v, g)) for u, v in arcs]
    out.sort(key=arc_sort_key)
    return tuple(out)


@dataclass(frozen=True)
class TargetGraph:
    """Explicit vertex and undirected edge set of a decomposition target."""

    kind: str
    p: int
    r: int
    apex_count: int
    vertices: tuple
    edges: frozenset

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> tuple:
        return tuple(sorted(self.edges, key=lambda e: (vertex_key(e[0]), vertex_key(e[1]))))


def _apex_target(kind: str, p: int, r: int) -> TargetGraph:
    t = (r + 1) // 2
    base = list(itertools.product(range(p), range(r)))
    apexes = [f"alpha:{k}" for k in range(t)]
    edges = set()
    for (x, i), (y, j) in itertools.combinations(base, 2):
        if x != y:
            edges.add(edge_key((x, i), (y, j)))
    # cocliques of the blow-up become cliques: K_{n} \ K_t keeps them complete
    for x in range(p):
        for i, j in itertools.combinations(range(r), 2):
            edges.add(edge_key((x, i), (x, j)))
    for v in base:
        for a in apexes:
            edges.add(edge_key(v, a))
    return TargetGraph(kind, p, r, t, tuple(base) + tuple(apexes), frozenset(edges))


def build_target(kind: str, p: int, r: int | None = None) -> TargetGraph:
    """Explicit target graph for one of the supported decomposition kinds."""
    if kind not in TARGET_KINDS:
        raise ValueError(f"unknown target kind {kind!r}")
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    if kind == "blowup":
        if r is None or r < 1:
            raise ValueError("blowup target needs r >= 1")
        vertices = tuple(itertools.product(range(p), range(r)))
        edges = frozenset(
            edge_key(u, v)
            for u, v in itertools.combinations(vertices, 2)
            if u[0] != v[0]
        )
        return TargetGraph(kind, p, r, 0, vertices, edges)
    if kind == "matching-complement":
        if r not in (None, 2):
            raise ValueError("matching-complement target forces r = 2")
        vertices = tuple(range(2 * p))
        edges = frozenset(
            edge_key(u, v)
            for u, v in itertools.combinations(vertices, 2)
            if u // 2 != v // 2
        )
        return TargetGraph(kind, p, 2, 0, vertices, edges)
    if kind == "near-complete":
        if r not in (None, 3):
            raise ValueError("near-complete target forces r = 3")
        return _apex_target(kind, p, 3)
    # clique-complement
    if r is None or r < 3 or r % 2 == 0:
        raise ValueError("clique-complement target needs odd r >= 3")
    return _apex_target(kind, p, r)
