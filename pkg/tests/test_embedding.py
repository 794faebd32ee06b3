"""Rainbow tree embedding, coefficient oracle, distinct sums, star forests."""

import itertools
from random import Random

import pytest

from treepack.embedding import (
    cn_coefficient_oracle,
    compose_quasi_embedding,
    distinct_sums_permutation,
    embed_star_forest,
    embed_tree_rainbow,
)
from treepack.errors import ConstructionError
from treepack.graphs import ColorSet
from treepack.trees import StarForest, Tree, bfs_parents, peeling_ordering, strip_leaves
from conftest import path_tree, star_tree


def check_embedding(emb, t0: Tree, p: int):
    assert len(set(emb.vertex_image)) == t0.n  # injective
    assert emb.vertex_image[t0.root] == 0
    colors = [c for _, _, c in emb.edge_arcs]
    assert len(set(colors)) == len(colors)
    assert not set(colors) & {(p - c) % p for c in colors}  # antisymmetric
    parent = bfs_parents(t0)
    img = emb.vertex_image
    for u, v, c in emb.edge_arcs:
        assert (v - u) % p == c  # arcs run parent -> child
    for w in peeling_ordering(t0)[1:]:
        assert ((img[w] - img[parent[w]]) % p) in set(colors)


def test_embed_single_edge():
    t = Tree(2, ((0, 1),), 0)
    emb = embed_tree_rainbow(t, 11, seed=0)
    check_embedding(emb, t, 11)
    assert len(emb.s0) == 1


def test_embed_path_three():
    t = path_tree(3)
    emb = embed_tree_rainbow(t, 11, seed=0)
    check_embedding(emb, t, 11)


def all_three_edge_trees():
    return [path_tree(3), star_tree(3)]


def brute_force_embeddable(t0: Tree, p: int) -> bool:
    """Exhaustive oracle over ordered antisymmetric color tuples."""
    k = t0.n - 1
    parent = bfs_parents(t0)
    order = peeling_ordering(t0)

    def extend(colors, images):
        depth = len(colors)
        if depth == k:
            return True
        child = order[depth + 1]
        for a in range(1, p):
            if a in colors or (p - a) % p in colors:
                continue
            val = (images[parent[child]] + a) % p
            if val in images.values():
                continue
            images[child] = val
            if extend(colors + [a], images):
                return True
            del images[child]
        return False

    return extend([], {t0.root: 0})


@pytest.mark.parametrize("p", [11, 13])
def test_embed_matches_exhaustive_oracle_k3(p):
    for t in all_three_edge_trees():
        assert brute_force_embeddable(t, p)
        emb = embed_tree_rainbow(t, p, seed=5)
        check_embedding(emb, t, p)


def test_embed_matches_exhaustive_oracle_k2_small_p():
    # oracle consistency at the smallest usable primes
    for p in (5, 7):
        for t in (path_tree(2),):
            if brute_force_embeddable(t, p):
                emb = embed_tree_rainbow(t, p, seed=1)
                check_embedding(emb, t, p)


def test_embed_deterministic_and_bounded():
    t = star_tree(4)
    a = embed_tree_rainbow(t, 13, seed=9)
    b = embed_tree_rainbow(t, 13, seed=9)
    assert a == b
    with pytest.raises(ValueError):
        embed_tree_rainbow(star_tree(6), 11, seed=0)  # k > (p-1)/2


def test_cn_oracle_k1():
    assert cn_coefficient_oracle(Tree(2, ((0, 1),)), 11) == 1


def test_cn_oracle_k2_path():
    # (y2^2 - y1^2)(y1 - (y1 + y2)) has coefficient -1 on y2^3
    assert cn_coefficient_oracle(path_tree(2), 11) == 10


def test_cn_oracle_k3_both_trees():
    for t in all_three_edge_trees():
        for p in (13, 17):
            assert cn_coefficient_oracle(t, p) in (1, p - 1)


def test_cn_oracle_rejects_large_trees():
    with pytest.raises(ValueError):
        cn_coefficient_oracle(path_tree(5), 31)


def test_distinct_sums_trivial_cases():
    assert distinct_sums_permutation((3,), (4,), 11, 0) == (0,)
    sigma = distinct_sums_permutation((0, 0), (1, 2), 5, 0)
    sums = {(0 + (1, 2)[sigma[i]]) % 5 for i in range(2)}
    assert len(sums) == 2


def test_distinct_sums_random_cases_against_brute_force():
    p, k = 13, 6
    rng = Random(123)
    for _ in range(300):
        a = tuple(rng.randrange(p) for _ in range(k))
        b = tuple(rng.sample(range(p), k))
        exists = any(
            len({(a[i] + b[pi[i]]) % p for i in range(k)}) == k
            for pi in itertools.permutations(range(k))
        )
        assert exists  # Alon's theorem: always
        sigma = distinct_sums_permutation(a, b, p, rng.randrange(1 << 30))
        assert sorted(sigma) == list(range(k))
        sums = [(a[i] + b[sigma[i]]) % p for i in range(k)]
        assert len(set(sums)) == k


def test_distinct_sums_validates_input():
    with pytest.raises(ValueError):
        distinct_sums_permutation((1, 2), (3, 3), 11, 0)
    with pytest.raises(ValueError):
        distinct_sums_permutation(tuple(range(11)), tuple(range(11)), 11, 0)


def test_star_forest_single_leaf():
    f = StarForest(((0, 1),))
    out = embed_star_forest(f, {0: 0}, ColorSet(11, (4,)), 11, seed=0)
    assert out.leaf_image == (4,)
    assert out.arcs() == ((0, 4),)


def test_star_forest_two_singleton_stars():
    f = StarForest(((0, 1), (1, 1)))
    out = embed_star_forest(f, {0: 0, 1: 1}, ColorSet(11, (2, 5)), 11, seed=0)
    assert len(set(out.leaf_image)) == 2
    for img, ctr, col in zip(out.leaf_image, out.center_image, out.slot_color):
        assert (ctr + col) % 11 == img


def test_star_forest_five_edges_many_seeds():
    f = StarForest(((0, 2), (1, 2), (2, 1)))
    colors = ColorSet(11, (1, 2, 3, 4, 5))
    centers = {0: 3, 1: 7, 2: 9}
    for seed in range(500):
        out = embed_star_forest(f, centers, colors, 11, seed=seed)
        assert len(set(out.leaf_image)) == 5  # indegree <= 1 in the image
        assert sorted(out.slot_color) == [1, 2, 3, 4, 5]


def test_star_forest_respects_forbidden_images():
    # two singleton stars; {0+2, 1+5} = {2, 6} is banned, {0+5, 1+2} = {5, 3} is not
    f = StarForest(((0, 1), (1, 1)))
    colors = ColorSet(11, (2, 5))
    for seed in range(20):
        out = embed_star_forest(
            f, {0: 0, 1: 1}, colors, 11, seed=seed, forbidden_images=frozenset({2})
        )
        assert set(out.leaf_image) == {5, 3}


def test_star_forest_validates_color_count():
    with pytest.raises(ValueError):
        embed_star_forest(StarForest(((0, 2),)), {0: 0}, ColorSet(11, (1,)), 11, 0)


def build_quasi(m=5, p=11, seed=0):
    """One embed + forest + compose round, root landings excluded (as in the
    pipeline); returns None when this seed's forced images cannot avoid 0."""
    t = star_tree(m) if seed % 2 else path_tree(m)
    split = strip_leaves(t, 2)
    emb = embed_tree_rainbow(split.t0, p, seed)
    used = {min(s, p - s) for s in emb.s0}
    free = tuple(q for q in range(1, (p - 1) // 2 + 1) if q not in used)
    try:
        stars = embed_star_forest(
            split.forest,
            {c: emb.vertex_image[c] for c, _ in split.forest.stars},
            ColorSet(p, free),
            p,
            seed,
            forbidden_images=frozenset({0}),
        )
    except ConstructionError:
        return None, split
    colors = ColorSet(p, emb.s0.elements + free)
    return compose_quasi_embedding(emb, stars, split.forest, colors), split


def test_compose_empty_forest_is_plain_tree():
    t = path_tree(4)
    emb = embed_tree_rainbow(t, 11, seed=2)
    stars = embed_star_forest(StarForest(()), {}, ColorSet(11, ()), 11, 0)
    H = compose_quasi_embedding(emb, stars, StarForest(()), emb.s0)
    assert H.conflicts == ()
    assert len(H.arcs) == 4
    assert all(a.kind == "tree" for a in H.arcs)


def test_compose_conflicts_match_indegree_two():
    found_conflict = False
    for seed in range(60):
        H, _ = build_quasi(seed=seed)
        if H is None:
            continue
        indeg = {}
        for a in H.arcs:
            indeg[a.v] = indeg.get(a.v, 0) + 1
        assert max(indeg.values()) <= 2
        twos = {v for v, d in indeg.items() if d == 2}
        assert {c.y for c in H.conflicts} == twos
        for c in H.conflicts:
            assert c.z != c.x
            srcs = {H.arcs[c.tree_arc].u, H.arcs[c.star_arc].u}
            assert srcs == {c.x, c.z}
        if twos:
            found_conflict = True
        colors = [a.color for a in H.arcs]
        assert len(set(colors)) == len(colors)
        assert len(H.arcs) == 5
    assert found_conflict  # the battery must exercise the conflict path


def test_compose_uses_every_color_once_when_full():
    H, _ = build_quasi(seed=3)
    assert sorted(a.color for a in H.arcs) == sorted(H.colors.elements)
    assert len(H.colors) == 5  # (p-1)/2


def test_compose_rejects_color_overlap():
    t = path_tree(4)
    emb = embed_tree_rainbow(t, 11, seed=2)
    overlap = ColorSet(11, (emb.s0.elements[0],))
    f = StarForest(((0, 1),))
    stars = embed_star_forest(f, {0: emb.vertex_image[0]}, overlap, 11, 0)
    with pytest.raises(ValueError):
        compose_quasi_embedding(emb, stars, f, emb.s0)


def test_compose_orientation_away_from_root():
    # every tree arc's source is its head's peeling parent image
    H, split = build_quasi(seed=4)
    parent = bfs_parents(split.t0)
    img = {("v", split.t0.root): 0}
    for a in H.arcs:
        img[a.key] = a.v
    for a in H.arcs:
        if a.kind == "tree":
            w = a.key[1]
            assert a.u == img[("v", parent[w])]
