"""Tree kit: peeling, stripping, samplers, canonical forms."""

import itertools
from collections import Counter
from random import Random

import pytest

from treepack.trees import (
    Tree,
    canonical_form,
    format_tree,
    free_tree_count,
    leaf_bound,
    leaf_count,
    parse_tree,
    peeling_ordering,
    reattach,
    rooted_tree_count,
    sample_labeled_tree,
    sample_unlabeled_tree,
    strip_leaves,
)
from conftest import path_tree, star_tree


def brute_isomorphic(a: Tree, b: Tree) -> bool:
    """Permutation-search isomorphism oracle for small trees."""
    if a.n != b.n:
        return False
    eb = set(b.edges)
    for perm in itertools.permutations(range(a.n)):
        if all(tuple(sorted((perm[u], perm[v]))) in eb for u, v in a.edges):
            return True
    return False


def test_tree_validation():
    with pytest.raises(ValueError):
        Tree(3, ((0, 1),))  # too few edges
    with pytest.raises(ValueError):
        Tree(4, ((0, 1), (2, 3), (0, 1)))  # repeated edge
    with pytest.raises(ValueError):
        Tree(4, ((0, 1), (1, 2), (1, 1)))  # loop
    with pytest.raises(ValueError):
        Tree(4, ((0, 1), (1, 2), (0, 2)))  # cycle / disconnected split
    Tree(1, ())


def test_peeling_single_edge_and_path():
    assert peeling_ordering(Tree(2, ((0, 1),), 0)) == (0, 1)
    assert peeling_ordering(path_tree(3)) == (0, 1, 2, 3)


def test_peeling_prefixes_connected_random_trees():
    for seed in range(100):
        t = sample_labeled_tree(8, seed)
        order = peeling_ordering(t)
        # union-find oracle over each prefix
        for k in range(1, t.n + 1):
            prefix = set(order[:k])
            parent = {v: v for v in prefix}

            def find(v):
                while parent[v] != v:
                    parent[v] = parent[parent[v]]
                    v = parent[v]
                return v

            for u, v in t.edges:
                if u in prefix and v in prefix:
                    parent[find(u)] = find(v)
            assert len({find(v) for v in prefix}) == 1


def test_strip_leaves_star():
    split = strip_leaves(star_tree(5), 2)
    assert len(split.t0.edges) == 3
    assert split.forest.stars == ((0, 2),)
    # t0 root must avoid the star center (the hub)
    assert split.t0.root != 0


def test_strip_leaves_path_five():
    split = strip_leaves(path_tree(5), 2)
    assert len(split.t0.edges) == 3
    assert len(split.forest.stars) == 2
    assert all(h == 1 for _, h in split.forest.stars)
    rebuilt = reattach(split)
    assert canonical_form(rebuilt) == canonical_form(path_tree(5))


def test_strip_leaves_eight_vertex_tree():
    # two-leaf star hanging off a 5-edge core
    t = Tree(8, ((0, 1), (0, 2), (1, 3), (2, 4), (2, 5), (5, 6), (5, 7)), 0)
    split = strip_leaves(t, 2)
    assert len(split.t0.edges) == 5
    assert split.forest.edge_count == 2
    assert canonical_form(reattach(split)) == canonical_form(t)


def test_strip_then_reattach_isomorphic_random():
    for seed in range(40):
        t = sample_unlabeled_tree(7, seed)
        for count in range(1, leaf_count(t)):
            split = strip_leaves(t, count)
            assert canonical_form(reattach(split)) == canonical_form(t)
            assert len(split.t0.edges) == 7 - count
            centers = {c for c, _ in split.forest.stars}
            assert split.t0.root not in centers


def test_strip_leaves_errors():
    with pytest.raises(ValueError):
        strip_leaves(Tree(2, ((0, 1),)), 1)  # too small
    with pytest.raises(ValueError):
        strip_leaves(path_tree(4), 3)  # exceeds leaf count


def test_sample_labeled_small():
    assert sample_labeled_tree(1, 0).edges == ((0, 1),)
    t = sample_labeled_tree(2, 3)
    assert canonical_form(t) == canonical_form(path_tree(2))
    with pytest.raises(ValueError):
        sample_labeled_tree(0, 1)


def test_sample_labeled_star_fraction():
    # 4 of the 16 labeled trees on 4 vertices are stars
    star = canonical_form(star_tree(3))
    hits = sum(
        1 for s in range(100_000) if canonical_form(sample_labeled_tree(3, s)) == star
    )
    assert abs(hits / 100_000 - 0.25) < 0.01


def test_sample_labeled_deterministic():
    assert sample_labeled_tree(9, 41) == sample_labeled_tree(9, 41)


def prufer_decode(seq, n):
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
    return tuple(edges)


def brute_free_classes(n: int) -> set:
    if n == 1:
        return {canonical_form(Tree(1, ()))}
    if n == 2:
        return {canonical_form(Tree(2, ((0, 1),)))}
    return {
        canonical_form(Tree(n, prufer_decode(seq, n)))
        for seq in itertools.product(range(n), repeat=n - 2)
    }


def test_free_tree_count_matches_enumeration():
    for n in range(1, 8):
        assert free_tree_count(n) == len(brute_free_classes(n))


def test_rooted_count_values_from_recurrence_cross_check():
    # independently recompute by a direct convolution of the generating identity
    assert [rooted_tree_count(n) for n in range(1, 9)] == [1, 1, 2, 4, 9, 20, 48, 115]


def test_sample_unlabeled_small():
    assert canonical_form(sample_unlabeled_tree(2, 0)) == canonical_form(path_tree(2))
    cnt = Counter(canonical_form(sample_unlabeled_tree(3, s)) for s in range(4000))
    assert len(cnt) == 2  # path and star, roughly even
    assert min(cnt.values()) > 1700
    with pytest.raises(ValueError):
        sample_unlabeled_tree(0, 1)


def test_sample_unlabeled_uniform_m5():
    n_samples = 12_000
    cnt = Counter(canonical_form(sample_unlabeled_tree(5, s)) for s in range(n_samples))
    assert set(cnt) == brute_free_classes(6)
    expected = n_samples / 6
    chi2 = sum((c - expected) ** 2 / expected for c in cnt.values())
    assert chi2 < 15.09  # 99% critical value, 5 degrees of freedom


def test_sample_unlabeled_deterministic():
    assert sample_unlabeled_tree(12, 99) == sample_unlabeled_tree(12, 99)


def test_leaf_count_examples():
    assert leaf_count(path_tree(6)) == 2
    assert leaf_count(star_tree(7)) == 7
    assert leaf_count(Tree(2, ((0, 1),))) == 2
    assert leaf_bound(5) == 2 and leaf_bound(6) == 3 and leaf_bound(11) == 5


def test_every_tree_with_two_edges_has_two_leaves():
    for seed in range(50):
        t = sample_labeled_tree(6, seed)
        assert leaf_count(t) >= 2


def test_canonical_form_examples():
    a = Tree(3, ((0, 1), (1, 2)))
    b = Tree(3, ((2, 0), (0, 1)))
    assert canonical_form(a) == canonical_form(b)
    assert canonical_form(star_tree(3)) != canonical_form(path_tree(3))


def test_canonical_form_separates_six_vertex_classes():
    assert len(brute_free_classes(6)) == 6


def test_canonical_form_agrees_with_permutation_search():
    rng = Random(11)
    for _ in range(60):
        n = rng.randrange(4, 8)
        a = sample_labeled_tree(n - 1, rng.randrange(10**6))
        b = sample_labeled_tree(n - 1, rng.randrange(10**6))
        assert (canonical_form(a) == canonical_form(b)) == brute_isomorphic(a, b)


def test_tree_text_round_trip():
    t = spider = Tree(6, ((0, 1), (1, 2), (0, 3), (3, 4), (0, 5)), 0)
    assert parse_tree(format_tree(t)) == t
    with pytest.raises(ValueError):
        parse_tree("")
    with pytest.raises(ValueError):
        parse_tree("3\n0 1\n1 2 3\n")
