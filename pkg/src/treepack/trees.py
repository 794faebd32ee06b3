"""Trees, peeling orderings, leaf stripping, random samplers, and free-tree
canonical forms.

The unlabeled sampler is exact: it draws uniformly over isomorphism classes
using arbitrary-precision rooted-tree counts (Nijenhuis-Wilf recursion), a
bounded-forest table for the centroid case, and an Otter-style correction
for bicentroidal trees. Count tables are cached per process behind a lock.
"""

from __future__ import annotations

import math
import sys
import threading
from collections import Counter, deque
from dataclasses import dataclass
from random import Random

from .seeding import STAGE_SAMPLE, derive_seed


@dataclass(frozen=True)
class Tree:
    """Vertex-labeled tree on {0..n-1} with a designated root."""

    n: int
    edges: tuple[tuple[int, int], ...]
    root: int = 0

    def __post_init__(self):
        norm = tuple(sorted(tuple(sorted(e)) for e in self.edges))
        object.__setattr__(self, "edges", norm)
        if self.n < 1:
            raise ValueError("tree needs at least one vertex")
        if len(norm) != self.n - 1:
            raise ValueError(f"tree on {self.n} vertices needs {self.n - 1} edges, got {len(norm)}")
        if not 0 <= self.root < self.n:
            raise ValueError(f"root {self.root} out of range")
        seen = set()
        for u, v in norm:
            if u == v:
                raise ValueError(f"loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if (u, v) in seen:
                raise ValueError(f"repeated edge ({u}, {v})")
            seen.add((u, v))
        if self.n > 1 and len(self._component(0)) != self.n:
            raise ValueError("edges do not form a connected tree")

    def _component(self, start: int) -> set:
        adj = self.adjacency()
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
        return seen

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for row in adj:
            row.sort()
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def leaves(tree: Tree) -> list[int]:
    deg = tree.degrees()
    return [v for v in range(tree.n) if deg[v] == 1]


def leaf_count(tree: Tree) -> int:
    """Number of degree-1 vertices."""
    return len(leaves(tree))


def leaf_bound(m: int) -> int:
    """The ceil(2m/5) leaf threshold the stripping step relies on."""
    return -((-2 * m) // 5)


def peeling_ordering(tree: Tree) -> tuple[int, ...]:
    """Breadth-first order from the root; every prefix induces a subtree."""
    adj = tree.adjacency()
    order = [tree.root]
    seen = {tree.root}
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                order.append(u)
                queue.append(u)
    if len(order) != tree.n:
        raise ValueError("disconnected input")
    return tuple(order)


def bfs_parents(tree: Tree) -> list[int]:
    """parent[v] along the peeling ordering; parent[root] == -1."""
    adj = tree.adjacency()
    parent = [-1] * tree.n
    seen = {tree.root}
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                parent[u] = v
                queue.append(u)
    return parent


@dataclass(frozen=True)
class StarForest:
    """Stars (center, leaf count), centers being vertices of the stripped tree."""

    stars: tuple[tuple[int, int], ...]

    def __post_init__(self):
        centers = [c for c, _ in self.stars]
        if len(set(centers)) != len(centers):
            raise ValueError("star centers must be pairwise distinct")
        if any(h < 1 for _, h in self.stars):
            raise ValueError("every star needs at least one leaf")

    @property
    def edge_count(self) -> int:
        return sum(h for _, h in self.stars)

    def slot_centers(self) -> tuple[int, ...]:
        """Center of each forest edge, one slot per edge in star order."""
        out = []
        for c, h in self.stars:
            out.extend([c] * h)
        return tuple(out)


@dataclass(frozen=True)
class Split:
    """A tree split into a stripped tree plus a star forest on its vertices.

    `kept[i]` is the original id of t0 vertex i; `dropped[s]` is the original
    id of the stripped leaf in forest slot s (aligned with
    ``forest.slot_centers()``).
    """

    t0: Tree
    forest: StarForest
    kept: tuple[int, ...]
    dropped: tuple[int, ...]


def reattach(split: Split) -> Tree:
    """Rebuild a tree from a split; isomorphic to the original input."""
    edges = list(split.t0.edges)
    nxt = split.t0.n
    for center, h in split.forest.stars:
        for _ in range(h):
            edges.append((center, nxt))
            nxt += 1
    return Tree(nxt, tuple(edges), split.t0.root)


def _root_choices(n: int, chosen: list[int], neighbor: dict[int, int]) -> set:
    centers = {neighbor[v] for v in chosen}
    return {v for v in range(n) if v not in chosen and v not in centers}


def strip_leaves(tree: Tree, count: int) -> Split:
    """Remove `count` leaves of `tree`, grouping them into a star forest.

    Leaves are taken in decreasing peeling-index order, skipping picks that
    would leave no non-center vertex to serve as the stripped tree's root.
    """
    if len(tree.edges) < 2:
        raise ValueError("tree must have at least 2 edges")
    if count < 0:
        raise ValueError("count must be >= 0")
    lv = leaves(tree)
    if count > len(lv):
        raise ValueError(f"count {count} exceeds leaf count {len(lv)}")
    adj = tree.adjacency()
    neighbor = {v: adj[v][0] for v in lv}
    pos = {v: i for i, v in enumerate(peeling_ordering(tree))}
    cands = sorted(lv, key=lambda v: pos[v], reverse=True)

    chosen: list[int] = []
    idx = 0
    while True:
        while len(chosen) < count and idx < len(cands):
            chosen.append(cands[idx])
            idx += 1
        if len(chosen) < count:
            raise ValueError("no admissible selection leaves a non-center root")
        if count == 0 or _root_choices(tree.n, chosen, neighbor):
            break
        chosen.pop()

    kept = [v for v in range(tree.n) if v not in set(chosen)]
    old2new = {v: i for i, v in enumerate(kept)}
    t0_edges = tuple(
        (old2new[u], old2new[v])
        for u, v in tree.edges
        if u in old2new and v in old2new
    )
    per_center: dict[int, list[int]] = {}
    for v in chosen:
        per_center.setdefault(old2new[neighbor[v]], []).append(v)
    stars = tuple((c, len(per_center[c])) for c in sorted(per_center))
    dropped = tuple(w for c, _ in stars for w in sorted(per_center[c]))
    center_set = set(per_center)
    root = min(i for i in range(len(kept)) if i not in center_set)
    t0 = Tree(len(kept), t0_edges, root)
    return Split(t0, StarForest(stars), tuple(kept), dropped)


# ---------------------------------------------------------------------------
# canonical forms


def _centers(tree: Tree) -> list[int]:
    if tree.n == 1:
        return [0]
    adj = tree.adjacency()
    deg = tree.degrees()
    layer = [v for v in range(tree.n) if deg[v] == 1]
    remaining = tree.n
    removed = [False] * tree.n
    while remaining > 2:
        nxt = []
        for v in layer:
            removed[v] = True
        remaining -= len(layer)
        for v in layer:
            for u in adj[v]:
                if not removed[u]:
                    deg[u] -= 1
                    if deg[u] == 1:
                        nxt.append(u)
        layer = nxt
    return sorted(v for v in range(tree.n) if not removed[v])


def _rooted_code(adj: list[list[int]], root: int, blocked: int = -1) -> bytes:
    """AHU code of the subtree at `root`, not crossing `blocked`. Iterative."""
    codes: dict[int, bytes] = {}
    stack = [(root, blocked, False)]
    while stack:
        v, parent, expanded = stack.pop()
        if expanded:
            children = [codes[u] for u in adj[v] if u != parent]
            children.sort()
            codes[v] = b"(" + b"".join(children) + b")"
        else:
            stack.append((v, parent, True))
            for u in adj[v]:
                if u != parent:
                    stack.append((u, v, False))
    return codes[root]


def canonical_form(tree: Tree) -> bytes:
    """Canonical code of the underlying free tree; equal iff isomorphic."""
    if tree.n == 1:
        return b"V()"
    adj = tree.adjacency()
    cs = _centers(tree)
    if len(cs) == 1:
        return b"V" + _rooted_code(adj, cs[0])
    c1, c2 = cs
    a = _rooted_code(adj, c1, blocked=c2)
    b = _rooted_code(adj, c2, blocked=c1)
    lo, hi = sorted((a, b))
    return b"E" + lo + hi


def _children_code(children: list[list[int]]) -> bytes:
    """AHU code of a children-list tree rooted at vertex 0."""
    order = []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(children[v])
    codes: dict[int, bytes] = {}
    for v in reversed(order):
        kid = sorted(codes[u] for u in children[v])
        codes[v] = b"(" + b"".join(kid) + b")"
    return codes[0]


# ---------------------------------------------------------------------------
# exact counts (arbitrary precision, cached per process)

_lock = threading.Lock()
_t: list[int] = [0, 1]  # _t[n]: rooted trees on n vertices
_s: list[int] = [0, 1]  # _s[n] = sum over d | n of d * _t[d]
_forest_cache: dict[str, object] = {"nmax": -1, "smax": -1, "table": None}


def _ensure_rooted_counts(n: int) -> None:
    with _lock:
        while len(_t) <= n:
            k = len(_t)
            total = sum(_s[m] * _t[k - m] for m in range(1, k))
            _t.append(total // (k - 1))
            _s.append(sum(d * _t[d] for d in range(1, k + 1) if k % d == 0))


def rooted_tree_count(n: int) -> int:
    """Number of unlabeled rooted trees on n vertices."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _ensure_rooted_counts(n)
    return _t[n]


def free_tree_count(n: int) -> int:
    """Number of unlabeled free trees on n vertices (Otter's formula)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 2:
        return 1
    _ensure_rooted_counts(n)
    conv = sum(_t[i] * _t[n - i] for i in range(1, n))
    if n % 2 == 0:
        return _t[n] - (conv - _t[n // 2]) // 2
    return _t[n] - conv // 2


def _ensure_forest_table(nmax: int, smax: int) -> list[list[int]]:
    """F[s][N]: multisets of rooted trees, N vertices total, parts <= s."""
    with _lock:
        if _forest_cache["nmax"] >= nmax and _forest_cache["smax"] >= smax:
            return _forest_cache["table"]  # type: ignore[return-value]
    _ensure_rooted_counts(max(smax, 1))
    table: list[list[int]] = [[1] + [0] * nmax]
    for s in range(1, smax + 1):
        ts = _t[s]
        prev = table[s - 1]
        row = [0] * (nmax + 1)
        for N in range(nmax + 1):
            acc = 0
            for j in range(N // s + 1):
                acc += math.comb(ts + j - 1, j) * prev[N - j * s]
            row[N] = acc
        table.append(row)
    with _lock:
        _forest_cache.update(nmax=nmax, smax=smax, table=table)
    return table


# ---------------------------------------------------------------------------
# samplers


def _attach_copies(trunk: list[list[int]], limb: list[list[int]], j: int) -> list[list[int]]:
    children = [list(c) for c in trunk]
    for _ in range(j):
        off = len(children)
        for c in limb:
            children.append([u + off for u in c])
        children[0].append(off)
    return children


def _ranrut(n: int, rng: Random) -> list[list[int]]:
    """Nijenhuis-Wilf uniform rooted tree; children lists, vertex 0 = root."""
    if n == 1:
        return [[]]
    if n == 2:
        return [[1], []]
    x = rng.randrange((n - 1) * _t[n])
    jd = None
    for d in range(1, n):
        td = d * _t[d]
        for j in range(1, (n - 1) // d + 1):
            w = td * _t[n - j * d]
            if x < w:
                jd = (j, d)
                break
            x -= w
        if jd:
            break
    j, d = jd  # type: ignore[misc]
    trunk = _ranrut(n - j * d, rng)
    limb = _ranrut(d, rng)
    return _attach_copies(trunk, limb, j)


def _uniform_multiset(size: int, j: int, rng: Random) -> list[list[list[int]]]:
    """Uniform multiset of j rooted trees on `size` vertices."""
    if _t[size] == 1:
        return [_ranrut(size, rng) for _ in range(j)]
    jfact = math.factorial(j)
    while True:
        trees = [_ranrut(size, rng) for _ in range(j)]
        mult = Counter(_children_code(t) for t in trees)
        num = 1
        for c in mult.values():
            num *= math.factorial(c)
        if rng.randrange(jfact) < num:
            return trees


def _sample_forest(total: int, bound: int, rng: Random, table: list[list[int]]) -> list[list[list[int]]]:
    out: list[list[list[int]]] = []
    remaining = total
    for s in range(bound, 0, -1):
        if remaining == 0:
            break
        x = rng.randrange(table[s][remaining])
        prev = table[s - 1]
        ts = _t[s]
        for j in range(remaining // s + 1):
            w = math.comb(ts + j - 1, j) * prev[remaining - j * s]
            if x < w:
                break
            x -= w
        if j:
            out.extend(_uniform_multiset(s, j, rng))
            remaining -= j * s
    return out


def _tree_from_children(children: list[list[int]]) -> Tree:
    edges = []
    for v, kids in enumerate(children):
        for u in kids:
            edges.append((v, u))
    return Tree(len(children), tuple(edges), 0)


def sample_labeled_tree(m: int, seed: int) -> Tree:
    """Uniform random labeled tree with m edges (generating-sequence decode)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n = m + 1
    if m == 1:
        return Tree(2, ((0, 1),), 0)
    rng = Random(derive_seed(seed, STAGE_SAMPLE, 1, m))
    seq = [rng.randrange(n) for _ in range(n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    ptr = degree.index(1)
    leaf = ptr
    for x in seq:
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1 and x < ptr:
            leaf = x
        else:
            ptr += 1
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
    edges.append((leaf, n - 1))
    return Tree(n, tuple(edges), 0)


def sample_unlabeled_tree(m: int, seed: int) -> Tree:
    """Uniform over isomorphism classes of free trees with m edges."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n = m + 1
    if n == 2:
        return Tree(2, ((0, 1),), 0)
    if n == 3:
        return Tree(3, ((0, 1), (1, 2)), 0)
    if n > 250 and sys.getrecursionlimit() < 4 * n:
        sys.setrecursionlimit(4 * n)
    _ensure_rooted_counts(n)
    bound = (n - 1) // 2 if n % 2 else n // 2 - 1
    table = _ensure_forest_table(n - 1, bound)
    centered = table[bound][n - 1]
    if n % 2:
        total = centered
    else:
        th = _t[n // 2]
        total = centered + th * (th + 1) // 2
    assert total == free_tree_count(n)
    rng = Random(derive_seed(seed, STAGE_SAMPLE, 2, m))
    x = rng.randrange(total)
    if x < centered:
        forest = _sample_forest(n - 1, bound, rng, table)
        children = _attach_forest(forest)
        return _tree_from_children(children)
    # bicentroidal: an unordered pair of rooted trees on n/2 vertices
    h = n // 2
    while True:
        a = _ranrut(h, rng)
        b = _ranrut(h, rng)
        if _children_code(a) == _children_code(b) or rng.randrange(2) == 0:
            break
    children = [list(c) for c in a]
    off = len(children)
    for c in b:
        children.append([u + off for u in c])
    edges = [(v, u) for v, kids in enumerate(children) for u in kids]
    edges.append((0, off))
    return Tree(n, tuple(edges), 0)


def _attach_forest(forest: list[list[list[int]]]) -> list[list[int]]:
    children: list[list[int]] = [[]]
    for sub in forest:
        off = len(children)
        for c in sub:
            children.append([u + off for u in c])
        children[0].append(off)
    return children


# ---------------------------------------------------------------------------
# tree text format: first line "n", then n-1 lines "u v"


def format_tree(tree: Tree) -> str:
    lines = [str(tree.n)]
    lines.extend(f"{u} {v}" for u, v in tree.edges)
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> Tree:
    rows = [ln for ln in (ln.strip() for ln in text.splitlines()) if ln]
    if not rows:
        raise ValueError("empty tree file")
    try:
        n = int(rows[0])
        edges = tuple(tuple(int(w) for w in ln.split()) for ln in rows[1:])
    except ValueError as exc:
        raise ValueError(f"malformed tree file: {exc}") from exc
    if any(len(e) != 2 for e in edges):
        raise ValueError("malformed tree file: each edge line needs two vertices")
    return Tree(n, edges, 0)  # type: ignore[arg-type]
