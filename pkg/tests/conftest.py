"""Shared helpers: deterministic tree shapes and batteries for the suite."""

from __future__ import annotations

from treepack.trees import Tree, leaf_bound, leaf_count, sample_unlabeled_tree


def star_tree(m: int) -> Tree:
    return Tree(m + 1, tuple((0, i) for i in range(1, m + 1)), 0)


def path_tree(m: int) -> Tree:
    return Tree(m + 1, tuple((i, i + 1) for i in range(m)), 0)


def broom_tree(m: int) -> Tree:
    """Path of m//2 edges with the remaining edges as leaves at the far end."""
    handle = m // 2
    edges = [(i, i + 1) for i in range(handle)]
    nxt = handle + 1
    for _ in range(m - handle):
        edges.append((handle, nxt))
        nxt += 1
    return Tree(m + 1, tuple(edges), 0)


def caterpillar_tree(m: int) -> Tree:
    """Spine of ceil(2m/3) edges, legs round-robin on interior spine vertices."""
    spine = -((-2 * m) // 3)
    edges = [(i, i + 1) for i in range(spine)]
    interior = list(range(1, spine))
    nxt = spine + 1
    for k in range(m - spine):
        edges.append((interior[k % len(interior)], nxt))
        nxt += 1
    return Tree(m + 1, tuple(edges), 0)


def spider_tree(m: int) -> Tree:
    """Legs of length 2 from a hub, plus one length-1 leg when m is odd."""
    edges = []
    nxt = 1
    for _ in range(m // 2):
        edges.append((0, nxt))
        edges.append((nxt, nxt + 1))
        nxt += 2
    if m % 2:
        edges.append((0, nxt))
        nxt += 1
    return Tree(nxt, tuple(edges), 0)


def named_battery(m: int) -> list[Tree]:
    trees = [star_tree(m), broom_tree(m), caterpillar_tree(m), spider_tree(m)]
    for t in trees:
        assert leaf_count(t) >= leaf_bound(m), "battery shape misses the leaf bound"
    return trees


def random_battery(m: int, count: int, seed0: int = 0) -> list[Tree]:
    """Seeded unlabeled samples conditioned on the ceil(2m/5) leaf bound."""
    out = []
    seed = seed0
    while len(out) < count:
        t = sample_unlabeled_tree(m, seed)
        if leaf_count(t) >= leaf_bound(m):
            out.append(t)
        seed += 1
    return out
