"""Constructive rainbow embeddings in Cay(Z_p, S).

The existence results behind the pipeline are realized by deterministic
seeded backtracking: a rainbow tree embedding with antisymmetric colors and
pairwise-distinct vertex sums, a distinct-sums permutation for star forests,
and their composition into the quasi-embedding H with its conflict list.
A symbolic oracle checks the +-1 coefficient claim underlying the embedding
guarantee at small sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from random import Random
from typing import Mapping, Sequence

from .errors import ConstructionError
from .graphs import ColorSet, is_prime
from .seeding import STAGE_EMBED, derive_seed
from .trees import StarForest, Tree, bfs_parents, peeling_ordering

GUARANTEE_RESTARTS = 64


def embedding_regime(p: int, k: int) -> bool:
    """True inside the guaranteed-success regime: p > 10, k < 3(p-1)/10."""
    return p > 10 and 10 * k < 3 * (p - 1)


@dataclass(frozen=True)
class RainbowEmbedding:
    """Injective image of a rooted tree in Z_p with rainbow antisymmetric colors.

    `vertex_image[v]` is the image of tree vertex v (root at 0). Arc i of
    `edge_arcs` is (parent image, child image, color), edges in peeling
    order and oriented away from the root, so the color of arc (u, v) is
    v - u mod p by construction.
    """

    p: int
    s0: ColorSet
    tree: Tree
    vertex_image: tuple[int, ...]
    edge_arcs: tuple[tuple[int, int, int], ...]

    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u, v, _ in self.edge_arcs)


def _peeling_edges(tree: Tree) -> list[tuple[int, int]]:
    """Tree edges (parent, child), children in peeling order."""
    parent = bfs_parents(tree)
    return [(parent[v], v) for v in peeling_ordering(tree)[1:]]


def embed_tree_rainbow(t0: Tree, p: int, seed: int) -> RainbowEmbedding:
    """Backtracking search for a rainbow embedding of `t0` in some Cay(Z_p, S).

    Colors are assigned along the peeling order with a_i distinct from every
    +-a_j chosen so far and all partial vertex sums pairwise distinct. Value
    order is a seeded shuffle, fixed per (restart, depth); 64 restarts with
    derived seeds are tried before giving up.
    """
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    k = t0.n - 1
    if k > (p - 1) // 2:
        raise ValueError(f"tree has {k} edges, more than (p-1)/2 = {(p - 1) // 2}")
    if k == 0:
        return RainbowEmbedding(p, ColorSet(p, ()), t0, (0,), ())
    edges = _peeling_edges(t0)
    residues = list(range(1, p))

    for restart in range(GUARANTEE_RESTARTS):
        orders = []
        for d in range(k):
            rng = Random(derive_seed(seed, STAGE_EMBED, restart, d))
            perm = residues[:]
            rng.shuffle(perm)
            orders.append(perm)

        image = {t0.root: 0}
        colors: list[int] = []
        taken = {0}
        banned: set[int] = set()
        scan = [0]
        while scan:
            d = len(colors)
            if d == k:
                vimg = tuple(image[v] for v in range(t0.n))
                arcs = tuple(
                    (image[pa], image[ch], colors[i]) for i, (pa, ch) in enumerate(edges)
                )
                return RainbowEmbedding(p, ColorSet(p, tuple(colors)), t0, vimg, arcs)
            pa, ch = edges[d]
            pos = scan[-1]
            placed = False
            order = orders[d]
            while pos < len(order):
                a = order[pos]
                pos += 1
                val = (image[pa] + a) % p
                if a in banned or (p - a) in banned or val in taken:
                    continue
                scan[-1] = pos
                image[ch] = val
                colors.append(a)
                taken.add(val)
                banned.add(a)
                scan.append(0)
                placed = True
                break
            if not placed:
                scan.pop()
                if colors:
                    a = colors.pop()
                    _, ch_prev = edges[len(colors)]
                    taken.discard(image.pop(ch_prev))
                    banned.discard(a)
    regime = "inside" if embedding_regime(p, k) else "outside"
    raise ConstructionError(
        "embed_tree_rainbow",
        f"no embedding found for k={k}, p={p} ({regime} the guaranteed regime "
        f"p > 10, k < 3(p-1)/10) after {GUARANTEE_RESTARTS} restarts",
    )


def cn_coefficient_oracle(t0: Tree, p: int) -> int:
    """Coefficient of y_k^{3(k-1)} ... y_1^0 in the embedding polynomial, mod p.

    Expands prod_{i<j} (y_j^2 - y_i^2) * prod_{i<j} (path-sum of x_i minus
    path-sum of x_j) symbolically over F_p. The result is +-1 mod p, which
    is what guarantees a nonzero point and hence an embedding.
    """
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    k = t0.n - 1
    if k > 4:
        raise ValueError("k exceeds oracle bound")
    if k and p <= 3 * (k - 1):
        raise ValueError(f"p must exceed 3(k-1) = {3 * (k - 1)}")
    if k == 0:
        return 1
    edges = _peeling_edges(t0)
    parent = {ch: pa for pa, ch in edges}
    edge_idx = {ch: i for i, (_, ch) in enumerate(edges)}

    def path_vars(v: int) -> frozenset[int]:
        out = set()
        while v in parent:
            out.add(edge_idx[v])
            v = parent[v]
        return frozenset(out)

    paths = [path_vars(ch) for _, ch in edges]

    def times(poly: dict, factor: dict) -> dict:
        out: dict[tuple, int] = {}
        for e1, c1 in poly.items():
            for e2, c2 in factor.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = (out.get(key, 0) + c1 * c2) % p
        return {e: c for e, c in out.items() if c}

    def mono(var: int, deg: int) -> tuple:
        e = [0] * k
        e[var] = deg
        return tuple(e)

    poly: dict[tuple, int] = {tuple([0] * k): 1}
    for i in range(k):
        for j in range(i + 1, k):
            poly = times(poly, {mono(j, 2): 1, mono(i, 2): p - 1})
    for i in range(k):
        for j in range(i + 1, k):
            f: dict[tuple, int] = {}
            for v in paths[i]:
                key = mono(v, 1)
                f[key] = (f.get(key, 0) + 1) % p
            for v in paths[j]:
                key = mono(v, 1)
                f[key] = (f.get(key, 0) - 1) % p
            poly = times(poly, {e: c for e, c in f.items() if c})
    return poly.get(tuple(3 * i for i in range(k)), 0)


def _distinct_sums_search(
    a: Sequence[int],
    b: Sequence[int],
    p: int,
    seed: int,
    forbidden: frozenset[int] = frozenset(),
) -> tuple[int, ...]:
    """Backtracking core shared by the permutation search and forest embedding.

    Positions with equal a-value are interchangeable, so each distinct value
    is assigned a whole combination of b's at once (killing the factorial
    symmetry). Groups are chosen most-constrained-first with forward
    checking: a branch dies as soon as some remaining value has fewer usable
    b's than it still needs. Candidate order inside a group is a seeded
    shuffle, so retries with derived seeds explore different solutions.
    """
    k = len(a)
    by_value: dict[int, list[int]] = {}
    for i, x in enumerate(a):
        by_value.setdefault(x, []).append(i)
    values = sorted(by_value, key=lambda v: (-len(by_value[v]), v))
    orders: dict[int, list[int]] = {}
    for gi, v in enumerate(values):
        rng = Random(derive_seed(seed, STAGE_EMBED, 101, gi))
        perm = list(range(k))
        rng.shuffle(perm)
        orders[v] = perm

    sigma = [-1] * k
    used_b = [False] * k
    used_sums = set(forbidden)

    def usable(v: int) -> list[int]:
        return [
            bi for bi in orders[v] if not used_b[bi] and (v + b[bi]) % p not in used_sums
        ]

    def solve(remaining: tuple[int, ...]) -> bool:
        if not remaining:
            return True
        pick = None
        pick_usable: list[int] = []
        pick_slack = k + 1
        for v in remaining:
            options = usable(v)
            need = len(by_value[v])
            if len(options) < need:
                return False
            slack = len(options) - need
            if slack < pick_slack:
                pick, pick_usable, pick_slack = v, options, slack
        rest = tuple(v for v in remaining if v != pick)
        need = len(by_value[pick])
        for combo in itertools.combinations(pick_usable, need):
            for pos, bi in zip(by_value[pick], combo):
                sigma[pos] = bi
                used_b[bi] = True
                used_sums.add((pick + b[bi]) % p)
            if solve(rest):
                return True
            for pos, bi in zip(by_value[pick], combo):
                sigma[pos] = -1
                used_b[bi] = False
                used_sums.discard((pick + b[bi]) % p)
        return False

    if not solve(tuple(values)):
        raise ConstructionError(
            "distinct_sums_permutation",
            "search exhausted" + (" (with forbidden sums)" if forbidden else ""),
        )
    return tuple(sigma)


def distinct_sums_permutation(
    a: Sequence[int], b: Sequence[int], p: int, seed: int
) -> tuple[int, ...]:
    """sigma with a_i + b_{sigma(i)} pairwise distinct mod p.

    Exists for every a, every k-set b with k < p. Positions are filled in
    order of increasing a-multiplicity with seeded value order; the search
    backtracks but cannot exhaust on valid input.
    """
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    k = len(a)
    if k >= p:
        raise ValueError(f"k = {k} must be smaller than p = {p}")
    if len(set(b)) != len(b) or len(b) != k:
        raise ValueError("b must contain k distinct residues")
    if k == 0:
        return ()
    return _distinct_sums_search(a, b, p, seed)


@dataclass(frozen=True)
class StarEmbedding:
    """Rainbow image of a star forest: one (center, color, leaf image) per slot."""

    p: int
    colors: ColorSet
    center_image: tuple[int, ...]
    leaf_image: tuple[int, ...]
    slot_color: tuple[int, ...]

    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.center_image, self.leaf_image))


def embed_star_forest(
    forest: StarForest,
    centers_image: Mapping[int, int],
    colors: ColorSet,
    p: int,
    seed: int,
    forbidden_images: frozenset[int] = frozenset(),
) -> StarEmbedding:
    """Assign `colors` bijectively to forest edges so leaf images are distinct.

    Centers sit at their prescribed images; the leaf of slot j lands at
    f(center) + s_j per a distinct-sums permutation, so the image has
    maximum indegree one. `forbidden_images` excludes landing spots on top
    of distinctness (the pipeline excludes the root image 0).
    """
    h = forest.edge_count
    if len(colors) != h:
        raise ValueError(f"need exactly {h} colors, got {len(colors)}")
    imgs = [centers_image[c] for c, _ in forest.stars]
    if len(set(imgs)) != len(imgs):
        raise ValueError("centers_image must be injective on the star centers")
    if h == 0:
        return StarEmbedding(p, colors, (), (), ())
    a = tuple(centers_image[c] for c in forest.slot_centers())
    sigma = _distinct_sums_search(a, colors.elements, p, seed, forbidden_images)
    slot_color = tuple(colors.elements[sigma[i]] for i in range(h))
    leaf_image = tuple((a[i] + slot_color[i]) % p for i in range(h))
    return StarEmbedding(p, colors, a, leaf_image, slot_color)


@dataclass(frozen=True)
class HArc:
    """One arc of the quasi-embedding H.

    `depth` is the peeling depth of the arc's source in T0; the blow-up lift
    adds (s, j) per step, so all layer bookkeeping runs on source depths.
    `key` names what the head is the image of: ("v", t0 vertex) for tree
    arcs, ("leaf", slot) for star arcs.
    """

    u: int
    v: int
    color: int
    depth: int
    kind: str  # "tree" | "star"
    key: tuple

    def arc(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class ConflictRecord:
    """A star leaf landed on the image y of a T0 vertex.

    x is the image of that vertex's T0 parent, z the image of the star
    center; `tree_arc`/`star_arc` index the two in-arcs of y in H, and
    `peel_index` orders repairs along the peeling ordering of T0.
    """

    y: int
    x: int
    z: int
    tree_arc: int
    star_arc: int
    peel_index: int


@dataclass(frozen=True)
class QuasiEmbedding:
    """H = f0(T0) + f1(F): rainbow subgraph of Cay(Z_p, S), indegree <= 2."""

    p: int
    colors: ColorSet
    t0: Tree
    forest: StarForest
    arcs: tuple[HArc, ...]
    conflicts: tuple[ConflictRecord, ...]

    @property
    def root_image(self) -> int:
        return 0

    def vertex_positions(self) -> dict[tuple, int]:
        """Z_p image of every position key ("v", vertex) / ("leaf", slot)."""
        out: dict[tuple, int] = {("v", self.t0.root): 0}
        for a in self.arcs:
            out[a.key] = a.v
        return out


def compose_quasi_embedding(
    emb: RainbowEmbedding,
    f1: StarEmbedding,
    forest: StarForest,
    colors: ColorSet,
) -> QuasiEmbedding:
    """Union of the tree and star-forest images, with the conflict list.

    Conflicts are star leaves whose image coincides with a T0 vertex image;
    each carries the hit vertex's T0-parent image x and the star center
    image z, and the list is ordered by peeling index of the hit vertex.
    """
    t0 = emb.tree
    if set(emb.s0) & set(f1.colors):
        raise ValueError("tree and forest colors overlap")
    if set(colors.elements) != set(emb.s0) | set(f1.colors):
        raise ValueError("combined color set must be the union of both parts")
    slot_centers = forest.slot_centers()
    for slot, c in enumerate(slot_centers):
        if f1.center_image[slot] != emb.vertex_image[c]:
            raise ValueError(f"star center {c} not anchored at its tree image")

    order = peeling_ordering(t0)
    peel = {v: i for i, v in enumerate(order)}
    parent = bfs_parents(t0)
    depth = [0] * t0.n
    for v in order[1:]:
        depth[v] = depth[parent[v]] + 1
    image_of = {img: v for v, img in enumerate(emb.vertex_image)}

    arcs: list[HArc] = []
    tree_arc_at: dict[int, int] = {}
    for pa, ch, color in emb.edge_arcs:
        child = image_of[ch]
        arcs.append(HArc(pa, ch, color, depth[child] - 1, "tree", ("v", child)))
        tree_arc_at[ch] = len(arcs) - 1
    star_start = len(arcs)
    for slot, c in enumerate(slot_centers):
        arcs.append(
            HArc(
                f1.center_image[slot],
                f1.leaf_image[slot],
                f1.slot_color[slot],
                depth[c],
                "star",
                ("leaf", slot),
            )
        )

    seen_colors = [a.color for a in arcs]
    if len(set(seen_colors)) != len(seen_colors):
        raise ValueError("combined image is not rainbow")

    conflicts = []
    for slot in range(len(slot_centers)):
        y = f1.leaf_image[slot]
        if y not in image_of:
            continue
        w = image_of[y]
        if w == t0.root:
            raise ConstructionError(
                "compose_quasi_embedding",
                "a forest leaf landed on the root image; re-run the forest "
                "embedding with a different seed",
            )
        conflicts.append(
            ConflictRecord(
                y=y,
                x=emb.vertex_image[parent[w]],
                z=f1.center_image[slot],
                tree_arc=tree_arc_at[y],
                star_arc=star_start + slot,
                peel_index=peel[w],
            )
        )
    conflicts.sort(key=lambda c: c.peel_index)

    indeg: dict[int, int] = {}
    for a in arcs:
        indeg[a.v] = indeg.get(a.v, 0) + 1
    if indeg and max(indeg.values()) > 2:
        raise ValueError("quasi-embedding indegree exceeded two")
    star_heads = [a.v for a in arcs if a.kind == "star"]
    if len(set(star_heads)) != len(star_heads):
        raise ValueError("star image indegree exceeded one")

    return QuasiEmbedding(emb.p, colors, t0, forest, tuple(arcs), tuple(conflicts))
