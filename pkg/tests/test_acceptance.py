"""Acceptance suite: the exit criteria, one test per criterion.

Each test prints a single `[acceptance] criterion N: PASS/FAIL` line; run
with `pytest tests/test_acceptance.py -s` to watch them live. All checks are
exact except the leaf statistic, whose tolerance (5% around 0.438 m, bound
fraction above 0.9) is fixed here.
"""

import itertools
from random import Random

from treepack.blowup import ConflictMatrixPair, decompose_blowup, hall_repair
from treepack.certify import certificate_from_decomposition, verify_decomposition
from treepack.corollaries import (
    _choose_deleted_leaf,
    _delete_leaf,
    decompose_clique_complement,
    decompose_matching_complement,
    decompose_near_complete,
)
from treepack.embedding import cn_coefficient_oracle, distinct_sums_permutation
from treepack.trees import (
    Tree,
    canonical_form,
    leaf_bound,
    leaf_count,
    sample_unlabeled_tree,
)
from conftest import named_battery, random_battery

from test_certify import mutate_one_arc
from test_trees import brute_free_classes, prufer_decode


def run_criterion(n: int, fn):
    try:
        detail = fn()
    except BaseException as exc:
        print(f"\n[acceptance] criterion {n}: FAIL ({exc})")
        raise
    print(f"\n[acceptance] criterion {n}: PASS ({detail})")


def verified(decomp) -> None:
    report = verify_decomposition(certificate_from_decomposition(decomp))
    assert report.ok, report.counterexample


def test_criterion_1_theorem_instances():
    def body():
        instances = 0
        for p in (11, 13, 17, 19, 23):
            m = (p - 1) // 2
            battery = named_battery(m) + random_battery(m, 20, seed0=1000 * p)
            for r in (2, 3):
                for i, tree in enumerate(battery):
                    d = decompose_blowup(tree, p, r, seed=i)
                    assert len(d.copies) == r * r * p
                    verified(d)
                    instances += 1
        return f"{instances} exact partitions of K_p(r)"

    run_criterion(1, body)


def test_criterion_2_matching_complement():
    def body():
        instances = 0
        for p in (11, 13):
            m = (p - 1) // 2
            battery = named_battery(m) + random_battery(m, 20, seed0=1000 * p)
            for i, tree in enumerate(battery):
                d = decompose_matching_complement(tree, p, seed=i)
                verified(d)
                for _, arcs in d.copies:
                    for u, v in arcs:
                        assert u // 2 != v // 2, "matching edge covered"
                instances += 1
        return f"{instances} partitions of K_(4m+2) minus a perfect matching"

    run_criterion(2, body)


def apex_battery(p: int, count: int, seed0: int) -> list[Tree]:
    """Trees with m+1 edges whose deterministic leaf deletion meets the bound."""
    m = (p - 1) // 2
    out = []
    seed = seed0
    while len(out) < count:
        t = sample_unlabeled_tree(m + 1, seed)
        seed += 1
        tprime, _ = _delete_leaf(t, _choose_deleted_leaf(t))
        if leaf_count(tprime) >= leaf_bound(m):
            out.append(t)
    return out


def test_criterion_3_near_complete():
    def body():
        instances = 0
        for p in (11, 13):
            for i, tree in enumerate(apex_battery(p, 10, seed0=37 * p)):
                d = decompose_near_complete(tree, p, seed=i)
                assert len(d.copies) == 9 * p
                verified(d)
                instances += 1
        return f"{instances} partitions of K_(6m+5) minus an edge, 9p copies each"

    run_criterion(3, body)


def test_criterion_4_clique_complement():
    def body():
        instances = 0
        for i, tree in enumerate(apex_battery(11, 5, seed0=4321)):
            d = decompose_clique_complement(tree, 11, 5, seed=i)
            assert len(d.target.vertices) == 58 and d.target.apex_count == 3
            verified(d)
            instances += 1
        return f"{instances} partitions of K_58 minus K_3"

    run_criterion(4, body)


def test_criterion_5_hall_repair_suite():
    def body():
        checked = 0
        for r in range(2, 9):
            rng = Random(900 + r)
            m_x = tuple(tuple(range(b * r + 1, b * r + r + 1)) for b in range(r))
            for _ in range(1000):
                sigma = list(range(1, r * r + 1))
                rng.shuffle(sigma)
                m_z = tuple(tuple(sigma[b * r : b * r + r]) for b in range(r))
                pair = ConflictMatrixPair(m_x, m_z)
                out = hall_repair(pair, seed=rng.randrange(1 << 30))
                for a in range(r):
                    assert {out.m_x[b][a] for b in range(r)} == {
                        m_x[b][a] for b in range(r)
                    }
                    assert {out.m_z[b][a] for b in range(r)} == {
                        m_z[b][a] for b in range(r)
                    }
                for b in range(r):
                    assert len(set(out.m_x[b]) | set(out.m_z[b])) == 2 * r
                checked += 1
        return f"{checked} random label matrices repaired"

    run_criterion(5, body)


def test_criterion_6_distinct_sums_suite():
    def body():
        checked = 0
        for p in (11, 13, 17):
            rng = Random(p)
            for k in range(2, p):
                for _ in range(200):
                    a = tuple(rng.randrange(p) for _ in range(k))
                    b = tuple(rng.sample(range(p), k))
                    sigma = distinct_sums_permutation(a, b, p, rng.randrange(1 << 30))
                    assert sorted(sigma) == list(range(k))
                    sums = {(a[i] + b[sigma[i]]) % p for i in range(k)}
                    assert len(sums) == k
                    checked += 1
        return f"{checked} distinct-sum permutations found and revalidated"

    run_criterion(6, body)


def free_trees_with_edges(k: int) -> list[Tree]:
    n = k + 1
    if n == 2:
        return [Tree(2, ((0, 1),), 0)]
    reps = {}
    for seq in itertools.product(range(n), repeat=n - 2):
        t = Tree(n, prufer_decode(seq, n))
        reps.setdefault(canonical_form(t), t)
    return list(reps.values())


def test_criterion_7_coefficient_oracle():
    def body():
        checked = 0
        for k in (1, 2, 3, 4):
            trees = free_trees_with_edges(k)
            assert len(trees) == len(brute_free_classes(k + 1))
            for t in trees:
                for p in (13, 17):
                    coeff = cn_coefficient_oracle(t, p)
                    assert coeff in (1, p - 1), (k, p, coeff)
                    checked += 1
        return f"{checked} leading coefficients all +-1"

    run_criterion(7, body)


def test_criterion_8_leaf_statistic():
    def body():
        m, samples = 500, 10_000
        bound = leaf_bound(m)
        total = meets = 0
        for s in range(samples):
            t = sample_unlabeled_tree(m, s)
            n = leaf_count(t)
            total += n
            meets += 1 if n >= bound else 0
        mean = total / samples
        ref = 0.438 * m
        rel = abs(mean - ref) / ref
        frac = meets / samples
        assert rel < 0.05, f"mean {mean} vs {ref}"
        assert frac > 0.9, f"bound fraction {frac}"
        return f"mean leaves {mean:.1f} vs {ref:.1f} (rel err {rel:.4f}), bound fraction {frac:.4f}"

    run_criterion(8, body)


def test_criterion_9_mutation_robustness():
    def body():
        from conftest import broom_tree, caterpillar_tree, star_tree

        certs = [
            certificate_from_decomposition(decompose_blowup(broom_tree(5), 11, 2, seed=0)),
            certificate_from_decomposition(decompose_near_complete(star_tree(6), 11, seed=0)),
            certificate_from_decomposition(
                decompose_matching_complement(caterpillar_tree(5), 11, seed=0)
            ),
        ]
        rng = Random(2024)
        mutants = 0
        for cert in certs:
            assert verify_decomposition(cert).ok
            for _ in range(100):
                assert not verify_decomposition(mutate_one_arc(cert, rng)).ok
                mutants += 1
        return f"{mutants} single-arc mutants all rejected"

    run_criterion(9, body)
