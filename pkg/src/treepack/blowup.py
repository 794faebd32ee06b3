"""Lift the quasi-embedding to the blow-up, repair conflicts, close under
translations: the full decomposition of K_p(r) into copies of the tree.

The r^2 lifts are tracked as one assignment per H-arc mapping each copy
label to the blown arc it owns inside that arc's K_{r,r}. A conflict repair
permutes the landing layers within columns of the two in-arc label matrices
at the conflicted coclique; the repair is chosen transversal to the current
out-arc targets so that re-anchoring the outgoing arcs stays a bijection.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Mapping, Sequence

from .errors import ConstructionError
from .graphs import TargetGraph, arc_sort_key, build_target, is_prime
from .seeding import STAGE_EMBED, STAGE_FOREST, STAGE_REPAIR, derive_seed
from .embedding import (
    ConflictRecord,
    QuasiEmbedding,
    RainbowEmbedding,
    StarEmbedding,
    compose_quasi_embedding,
    embed_star_forest,
    embed_tree_rainbow,
)
from .graphs import ColorSet
from .trees import Split, Tree, bfs_parents, leaf_bound, leaf_count, strip_leaves

EMBED_VARIANTS = 4
FOREST_ATTEMPTS = 16
REPAIR_ATTEMPTS = 64
REPAIR_VARIANTS = 16
REPAIR_INVOCATIONS = 4096
EXHAUSTIVE_BUDGET = 2_000_000


class RepairInfeasible(ConstructionError):
    """No column rearrangement satisfies the repair constraints as stated.

    Distinguished from retryable failures: feasibility here depends only on
    the current family state, so callers must vary upstream choices.
    """


def lift_copy(H: QuasiEmbedding, i: int, j: int, r: int) -> tuple:
    """Arcs of the (i, j)-lift of H: root at (0, i), each arc step adds (s, j)."""
    if not 0 <= i < r or not 0 <= j < r:
        raise ValueError("lift parameters must satisfy 0 <= i, j < r")
    out = []
    for arc in H.arcs:
        a = (i + j * arc.depth) % r
        out.append(((arc.u, a), (arc.v, (a + j) % r)))
    return tuple(sorted(out, key=arc_sort_key))


class CopyFamily:
    """The r^2 labeled lifts of H, as per-arc assignments label -> blown arc.

    `assign[arc_index][label0]` is the (source layer, target layer) pair of
    the blown arc that copy `label0 + 1` owns inside that arc's K_{r,r}.
    Label (i+1) + r*j is the lift with parameters (i, j).
    """

    def __init__(self, p: int, r: int, arcs: tuple):
        self.p = p
        self.r = r
        self.arcs = arcs
        self.assign: list[list[tuple[int, int]]] = []

    @classmethod
    def initial(cls, H: QuasiEmbedding, r: int) -> "CopyFamily":
        fam = cls(H.p, r, H.arcs)
        for arc in H.arcs:
            per = []
            for lab0 in range(r * r):
                i, j = lab0 % r, lab0 // r
                a = (i + j * arc.depth) % r
                per.append((a, (a + j) % r))
            fam.assign.append(per)
        return fam

    def out_arc_indices(self, y: int) -> list[int]:
        return [idx for idx, arc in enumerate(self.arcs) if arc.u == y]

    def out_target_maps(self, y: int) -> list[dict[int, int]]:
        """Current target layer of every copy's arc, per out-arc of y."""
        maps = []
        for idx in self.out_arc_indices(y):
            maps.append({lab0 + 1: b for lab0, (_, b) in enumerate(self.assign[idx])})
        return maps

    def copy_arcs(self, lab0: int, shift: int = 0) -> tuple:
        out = []
        for arc, per in zip(self.arcs, self.assign):
            a, b = per[lab0]
            out.append((((arc.u + shift) % self.p, a), ((arc.v + shift) % self.p, b)))
        return tuple(sorted(out, key=arc_sort_key))

    def positions(self, H: QuasiEmbedding) -> list[dict[tuple, tuple[int, int]]]:
        """Per copy, the blow-up vertex of every position key of H.

        Walking arcs in order (tree arcs in peeling order, then star arcs)
        also asserts the connectivity invariant: every arc leaves from the
        position its copy currently assigns to the arc's source.
        """
        parent = bfs_parents(H.t0)
        slot_centers = H.forest.slot_centers()
        out = []
        for lab0 in range(self.r * self.r):
            pos: dict[tuple, tuple[int, int]] = {("v", H.t0.root): (0, lab0 % self.r)}
            for aidx, arc in enumerate(self.arcs):
                if arc.kind == "tree":
                    src_key = ("v", parent[arc.key[1]])
                else:
                    src_key = ("v", slot_centers[arc.key[1]])
                a, b = self.assign[aidx][lab0]
                szp, slayer = pos[src_key]
                if szp != arc.u or slayer != a:
                    raise ConstructionError(
                        "copy-family",
                        f"copy {lab0 + 1} disconnected at arc {arc.arc()}",
                    )
                pos[arc.key] = (arc.v, b)
            if len(set(pos.values())) != len(pos):
                raise ConstructionError(
                    "copy-family", f"copy {lab0 + 1} has identified vertices"
                )
            out.append(pos)
        return out


@dataclass(frozen=True)
class ConflictMatrixPair:
    """Label matrices at a conflicted coclique y x Z_r.

    Row b lists the copies whose in-arc lands on (y, b): column a of `m_x`
    holds the label owning the blown arc from (x, a), and column c of `m_z`
    the one from (z, c). Repairs permute entries within columns, i.e. they
    re-target arcs while keeping their sources.
    """

    m_x: tuple[tuple[int, ...], ...]
    m_z: tuple[tuple[int, ...], ...]
    y: int | None = None
    x: int | None = None
    z: int | None = None


def row_assignment(matrix: Sequence[Sequence[int]]) -> dict[int, int]:
    """label -> row index of a label matrix."""
    return {lab: b for b, row in enumerate(matrix) for lab in row}


def _columns(matrix: Sequence[Sequence[int]]) -> list[list[int]]:
    r = len(matrix)
    return [[matrix[b][a] for b in range(r)] for a in range(r)]


def _check_pair(pair: ConflictMatrixPair) -> int:
    r = len(pair.m_x)
    full = list(range(1, r * r + 1))
    for name, m in (("m_x", pair.m_x), ("m_z", pair.m_z)):
        if len(m) != r or any(len(row) != r for row in m):
            raise ValueError(f"{name} must be {r} x {r}")
        if sorted(lab for row in m for lab in row) != full:
            raise ValueError(f"{name} must contain every label 1..r^2 exactly once")
    return r


def conflict_matrices(family: CopyFamily, conflict: ConflictRecord) -> ConflictMatrixPair:
    """Current (M_x | M_z) at the conflict's coclique, read from the family."""
    if (
        family.arcs[conflict.tree_arc].v != conflict.y
        or family.arcs[conflict.star_arc].v != conflict.y
    ):
        raise ValueError("conflict record does not give in-degree 2 at y")
    r = family.r

    def matrix(aidx: int) -> tuple:
        m = [[0] * r for _ in range(r)]
        for lab0, (a, b) in enumerate(family.assign[aidx]):
            if m[b][a]:
                raise ValueError("arc assignment is not a bijection")
            m[b][a] = lab0 + 1
        return tuple(tuple(row) for row in m)

    return ConflictMatrixPair(
        matrix(conflict.tree_arc),
        matrix(conflict.star_arc),
        conflict.y,
        conflict.x,
        conflict.z,
    )


def _dedupe_taus(taus: Sequence[Mapping[int, int]], r: int) -> list[dict[int, int]]:
    uniq: list[dict[int, int]] = []
    seen = set()
    for tau in taus:
        if sorted(tau) != list(range(1, r * r + 1)):
            raise ValueError("tau must assign a layer to every label")
        key = tuple(tau[lab] for lab in range(1, r * r + 1))
        if key not in seen:
            seen.add(key)
            uniq.append(dict(tau))
    return uniq


def _rows_plain(x_cols: list[list[int]], rng: Random, shuffle: bool) -> dict[int, int]:
    rows_x = {}
    for col in x_cols:
        order = list(col)
        if shuffle:
            rng.shuffle(order)
        for b, lab in enumerate(order):
            rows_x[lab] = b
    return rows_x


def _rows_via_matchings(
    x_cols: list[list[int]], tau: dict[int, int], rng: Random, shuffle: bool
) -> dict[int, int] | None:
    """Rows transversal to both the columns and the tau classes.

    The bipartite multigraph columns x tau-classes with one edge per label is
    r-regular when tau is balanced, so r perfect matchings always exist; each
    matching becomes one row. Returns None when tau is unbalanced.
    """
    r = len(x_cols)
    counts = [0] * r
    for tau_v in tau.values():
        if not 0 <= tau_v < r:
            return None
        counts[tau_v] += 1
    if counts != [r] * r:
        return None
    remaining = [list(c) for c in x_cols]
    if shuffle:
        for c in remaining:
            rng.shuffle(c)
    rows: list[list[int]] = []
    for _ in range(r):
        match: list[tuple[int, int] | None] = [None] * r  # tau class -> (col, label)

        def augment(col: int, visited: set) -> bool:
            for lab in remaining[col]:
                cls = tau[lab]
                if cls in visited:
                    continue
                visited.add(cls)
                if match[cls] is None or augment(match[cls][0], visited):
                    match[cls] = (col, lab)
                    return True
            return False

        for col in range(r):
            if not augment(col, set()):
                return None
        row = [0] * r
        for cls in range(r):
            col, lab = match[cls]  # type: ignore[misc]
            row[col] = lab
            remaining[col].remove(lab)
        rows.append(row)
    rows.sort(key=min)
    return {lab: b for b, row in enumerate(rows) for lab in row}


def _z_blocked(rows_x: dict[int, int], z_cols: list[list[int]], r: int) -> bool:
    fibers: list[set] = [set() for _ in range(r)]
    for lab, b in rows_x.items():
        fibers[b].add(lab)
    zsets = [set(c) for c in z_cols]
    return any(f in zsets for f in fibers)


def _assign_z(
    z_cols: list[list[int]], rows_x: dict[int, int], rng: Random, shuffle: bool
) -> dict[int, int] | None:
    """Per z-column bijections to rows avoiding each label's x-row."""
    r = len(z_cols)
    rows_z: dict[int, int] = {}
    for col in z_cols:
        order = list(col)
        if shuffle:
            rng.shuffle(order)
        match: list[int | None] = [None] * r  # row -> label

        def augment(lab: int, visited: set) -> bool:
            for b in range(r):
                if b == rows_x[lab] or b in visited:
                    continue
                visited.add(b)
                if match[b] is None or augment(match[b], visited):
                    match[b] = lab
                    return True
            return False

        for lab in order:
            if not augment(lab, set()):
                return None
        for b, lab in enumerate(match):
            rows_z[lab] = b  # type: ignore[index]
    return rows_z


def _rows_exhaustive(
    x_cols: list[list[int]],
    z_cols: list[list[int]],
    taus: list[dict[int, int]],
    budget: int = EXHAUSTIVE_BUDGET,
) -> list[list[int]] | None:
    """Complete DFS over row assignments; None if provably infeasible."""
    r = len(x_cols)
    zsets = {frozenset(c) for c in z_cols}
    unused = [sorted(c) for c in x_cols]
    grid: list[list[int]] = [[0] * r for _ in range(r)]
    nodes = 0

    def rec(beta: int, col: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise ConstructionError("hall_repair", "exhaustive search budget exceeded")
        if beta == r:
            return all(frozenset(row) not in zsets for row in grid)
        if col == r:
            return rec(beta + 1, 0)
        prefix = grid[beta][:col]
        for lab in sorted(unused[col]):
            if any(any(tau[lab] == tau[x] for x in prefix) for tau in taus):
                continue
            unused[col].remove(lab)
            grid[beta][col] = lab
            if rec(beta, col + 1):
                return True
            unused[col].append(lab)
        return False

    return grid if rec(0, 0) else None


def _matrix_from_rows(cols: list[list[int]], rows: dict[int, int]) -> tuple:
    r = len(cols)
    m = [[0] * r for _ in range(r)]
    for a, col in enumerate(cols):
        for lab in col:
            m[rows[lab]][a] = lab
    return tuple(tuple(row) for row in m)


def hall_repair(
    pair: ConflictMatrixPair,
    taus: Sequence[Mapping[int, int]] = (),
    seed: int = 0,
    all_shuffled: bool = False,
) -> ConflictMatrixPair:
    """Permute entries within columns so no row of (M_x | M_z) repeats a label.

    Rows are built as transversals of the column sets (perfect matchings of
    the column/tau-class multigraph when out-arc targets `taus` are given, so
    the subsequent source rewiring stays bijective), with the star-side rows
    matched per column against the constraint that no label keeps both of
    its occurrences in one row. Seeded retries handle the rare blocked
    configurations; a complete DFS is the fallback, and its proven-dead-end
    outcome raises :class:`RepairInfeasible`. `all_shuffled` randomizes even
    the first attempt, which callers use to diversify retries.
    """
    r = _check_pair(pair)
    if r < 2:
        raise ValueError("repair requires r >= 2")
    x_cols = _columns(pair.m_x)
    z_cols = _columns(pair.m_z)
    tau_list = _dedupe_taus(taus, r)

    rows_x: dict[int, int] | None = None
    rows_z: dict[int, int] | None = None
    if len(tau_list) <= 1:
        for attempt in range(REPAIR_ATTEMPTS):
            rng = Random(derive_seed(seed, STAGE_REPAIR, attempt))
            shuffle = all_shuffled or attempt > 0
            if tau_list:
                cand = _rows_via_matchings(x_cols, tau_list[0], rng, shuffle=shuffle)
            else:
                cand = _rows_plain(x_cols, rng, shuffle=shuffle)
            if cand is None:
                break
            if _z_blocked(cand, z_cols, r):
                continue
            rz = _assign_z(z_cols, cand, rng, shuffle=shuffle)
            if rz is not None:
                rows_x, rows_z = cand, rz
                break
    if rows_x is None:
        grid = _rows_exhaustive(x_cols, z_cols, tau_list)
        if grid is None:
            raise RepairInfeasible(
                "hall_repair", "no admissible column rearrangement exists"
            )
        rows_x = {lab: b for b, row in enumerate(grid) for lab in row}
        rows_z = _assign_z(z_cols, rows_x, Random(derive_seed(seed, STAGE_REPAIR, 9999)), False)
        if rows_z is None:
            raise ConstructionError("hall_repair", "star-side matching failed unexpectedly")

    repaired = ConflictMatrixPair(
        _matrix_from_rows(x_cols, rows_x),
        _matrix_from_rows(z_cols, rows_z),
        pair.y,
        pair.x,
        pair.z,
    )
    for b in range(r):
        row = repaired.m_x[b] + repaired.m_z[b]
        if len(set(row)) != 2 * r:
            raise ConstructionError("hall_repair", "internal: repeated label in a row")
    return repaired


def apply_repair(family: CopyFamily, conflict: ConflictRecord, repaired: ConflictMatrixPair) -> None:
    """Re-target the two in-arcs of the conflicted coclique per the repair."""
    rx = row_assignment(repaired.m_x)
    rz = row_assignment(repaired.m_z)
    tree_assign = family.assign[conflict.tree_arc]
    star_assign = family.assign[conflict.star_arc]
    for lab0 in range(family.r * family.r):
        tree_assign[lab0] = (tree_assign[lab0][0], rx[lab0 + 1])
        star_assign[lab0] = (star_assign[lab0][0], rz[lab0 + 1])


def reassign_outgoing(
    family: CopyFamily, y: int, repaired: ConflictMatrixPair
) -> CopyFamily:
    """Re-anchor arcs out of y x Z_r at each copy's new position, keeping targets."""
    rx = row_assignment(repaired.m_x)
    r2 = family.r * family.r
    for idx in family.out_arc_indices(y):
        cur = family.assign[idx]
        new = [(rx[lab0 + 1], cur[lab0][1]) for lab0 in range(r2)]
        if len(set(new)) != r2:
            raise ConstructionError(
                "reassign_outgoing",
                f"source rewiring at arc {family.arcs[idx].arc()} is not a bijection",
            )
        family.assign[idx] = new
    return family


def _snapshot(family: CopyFamily, conflict: ConflictRecord) -> dict[int, list]:
    touched = {conflict.tree_arc, conflict.star_arc}
    touched.update(family.out_arc_indices(conflict.y))
    return {idx: list(family.assign[idx]) for idx in touched}


def _restore(family: CopyFamily, snap: dict[int, list]) -> None:
    for idx, per in snap.items():
        family.assign[idx] = list(per)


def _repair_conflicts(family: CopyFamily, quasi: QuasiEmbedding, seed: int) -> None:
    """Repair every conflict, in peeling order, backtracking across conflicts.

    A repair is chosen among many valid ones; a later conflict can become
    provably unrepairable under earlier choices (the forced rows can collide
    with a star-side column). When that happens, earlier repairs are redone
    with fresh seeded variants until the whole chain goes through.
    """
    conflicts = quasi.conflicts
    variants = [0] * len(conflicts)
    snapshots: list[dict[int, list]] = []
    ci = 0
    invocations = 0
    while ci < len(conflicts):
        conflict = conflicts[ci]
        snap = _snapshot(family, conflict)
        pair = conflict_matrices(family, conflict)
        taus = family.out_target_maps(conflict.y)
        invocations += 1
        if invocations > REPAIR_INVOCATIONS:
            raise ConstructionError(
                "decompose_blowup", "conflict repair backtracking budget exceeded"
            )
        try:
            repaired = hall_repair(
                pair,
                taus,
                derive_seed(seed, STAGE_REPAIR, ci, variants[ci]),
                all_shuffled=variants[ci] > 0,
            )
            apply_repair(family, conflict, repaired)
            reassign_outgoing(family, conflict.y, repaired)
        except ConstructionError as exc:
            _restore(family, snap)
            retryable = not isinstance(exc, RepairInfeasible)
            if retryable and variants[ci] + 1 < REPAIR_VARIANTS:
                variants[ci] += 1
                continue
            while True:
                if ci == 0:
                    raise ConstructionError(
                        "decompose_blowup", f"conflict repairs unsatisfiable: {exc}"
                    ) from exc
                ci -= 1
                _restore(family, snapshots.pop())
                for k in range(ci + 1, len(conflicts)):
                    variants[k] = 0
                variants[ci] += 1
                if variants[ci] < REPAIR_VARIANTS:
                    break
            continue
        snapshots.append(snap)
        ci += 1


@dataclass(frozen=True)
class Decomposition:
    """A claimed exact partition of a target graph into copies of a tree."""

    target: TargetGraph
    copies: tuple
    tree: Tree
    meta: dict


@dataclass
class FamilyResult:
    """Pipeline state before translation closure (consumed by the apex builders)."""

    p: int
    r: int
    split: Split
    embedding: RainbowEmbedding
    stars: StarEmbedding
    quasi: QuasiEmbedding
    family: CopyFamily
    positions: list[dict]
    conflicts_repaired: int


def build_blowup_family(
    tree: Tree, p: int, r: int, seed: int, best_effort: bool = False
) -> FamilyResult:
    """Steps 1-3 of the pipeline: embed, lift, and repair, prior to translation."""
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    m = len(tree.edges)
    if 2 * m + 1 != p:
        raise ValueError(f"tree must have (p-1)/2 = {(p - 1) // 2} edges, got {m}")
    if m < 2:
        raise ValueError("tree must have at least 2 edges")
    if r < 1:
        raise ValueError("r must be >= 1")
    if p <= 10 and not best_effort:
        raise ValueError("p must exceed 10 (pass best_effort to try anyway)")
    required = leaf_bound(m)
    nleaves = leaf_count(tree)
    if nleaves < required and not best_effort:
        raise ValueError(
            f"tree has {nleaves} leaves, below the ceil(2m/5) = {required} bound "
            "(pass best_effort to strip fewer)"
        )
    count = required if nleaves >= required else nleaves - 1
    split = strip_leaves(tree, count)

    # The conflict repairs can be jointly unsatisfiable for one particular
    # quasi-embedding (blocked star columns can force incompatible rows), so
    # the whole embed-compose-repair chain retries under derived seeds.
    last_exc: ConstructionError | None = None
    for e_att in range(EMBED_VARIANTS):
        try:
            emb = embed_tree_rainbow(split.t0, p, derive_seed(seed, STAGE_EMBED, e_att))
        except ConstructionError as exc:
            last_exc = exc
            continue
        used_pairs = {min(s, p - s) for s in emb.s0}
        free_pairs = [q for q in range(1, (p - 1) // 2 + 1) if q not in used_pairs]
        for f_att in range(FOREST_ATTEMPTS):
            rng = Random(derive_seed(seed, STAGE_FOREST, e_att, f_att))
            chosen = tuple(q if rng.randrange(2) == 0 else p - q for q in free_pairs)
            try:
                stars = embed_star_forest(
                    split.forest,
                    {c: emb.vertex_image[c] for c, _ in split.forest.stars},
                    ColorSet(p, chosen),
                    p,
                    derive_seed(seed, STAGE_FOREST, e_att, f_att, 1),
                    forbidden_images=frozenset({0}),
                )
                colors = ColorSet(p, emb.s0.elements + stars.colors.elements)
                quasi = compose_quasi_embedding(emb, stars, split.forest, colors)
                if r == 1 and quasi.conflicts:
                    raise ConstructionError(
                        "decompose_blowup", "r = 1 requires a conflict-free embedding"
                    )
                family = CopyFamily.initial(quasi, r)
                _repair_conflicts(family, quasi, derive_seed(seed, STAGE_REPAIR, e_att, f_att))
                positions = family.positions(quasi)
                return FamilyResult(
                    p, r, split, emb, stars, quasi, family, positions, len(quasi.conflicts)
                )
            except ConstructionError as exc:
                last_exc = exc
                continue
    raise ConstructionError(
        "decompose_blowup",
        f"pipeline retries exhausted ({EMBED_VARIANTS} embeddings x "
        f"{FOREST_ATTEMPTS} forest attempts); last failure: {last_exc}",
    )


def decompose_blowup(
    tree: Tree, p: int, r: int, seed: int, best_effort: bool = False
) -> Decomposition:
    """Decompose K_p(r) into r^2 * p copies of `tree` (m = (p-1)/2 edges)."""
    res = build_blowup_family(tree, p, r, seed, best_effort)
    target = build_target("blowup", p, r)
    copies = []
    for shift in range(p):
        for lab0 in range(r * r):
            copies.append((shift * r * r + lab0 + 1, res.family.copy_arcs(lab0, shift)))
    total_arcs = len(copies) * len(tree.edges)
    if total_arcs != target.edge_count:
        raise ConstructionError(
            "decompose_blowup",
            f"arc count {total_arcs} does not match target size {target.edge_count}",
        )
    meta = {
        "kind": "blowup",
        "p": p,
        "r": r,
        "seed": seed,
        "conflicts_repaired": res.conflicts_repaired,
        "best_effort": best_effort,
    }
    return Decomposition(target, tuple(copies), tree, meta)
