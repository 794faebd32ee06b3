"""Command-line surface: sample trees, build decompositions, verify
certificates, and run the small diagnostic oracles.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 construction
failure. `decompose` and `verify` print a single machine-parsable key=value
summary line on stdout.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import trees
from .blowup import decompose_blowup
from .certify import (
    atomic_write_text,
    read_certificate,
    verify_decomposition,
    write_certificate,
)
from .corollaries import (
    decompose_clique_complement,
    decompose_matching_complement,
    decompose_near_complete,
)
from .embedding import cn_coefficient_oracle
from .errors import CertificateError, ConstructionError
from .graphs import is_prime

LEAF_FRACTION = 0.438  # asymptotic mean leaf fraction of random unlabeled trees

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_CONSTRUCTION = 3


class InputError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="treepack",
        description="Decompose blow-up and near-complete graphs into copies of a tree.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    st = sub.add_parser("sample-tree", help="sample a random tree to a file")
    st.add_argument("--m", type=int, required=True, help="number of edges")
    st.add_argument("--sample", choices=("labeled", "unlabeled"), default="unlabeled")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out", required=True)

    de = sub.add_parser("decompose", help="build a decomposition certificate")
    de.add_argument(
        "--kind",
        choices=("blowup", "matching-complement", "near-complete", "clique-complement"),
        default="blowup",
    )
    de.add_argument("--p", type=int, required=True)
    de.add_argument("--r", type=int, default=None)
    de.add_argument("--tree", help="tree file (first line n, then n-1 edge lines)")
    de.add_argument("--sample", choices=("labeled", "unlabeled"), help="sample the tree instead")
    de.add_argument("--m", type=int, help="edge count when sampling")
    de.add_argument("--seed", type=int, default=0)
    de.add_argument("--out", required=True)
    de.add_argument("--best-effort", action="store_true")
    de.add_argument("--jobs", type=int, default=1, help="accepted for batch parity; decompose runs in-process")

    ve = sub.add_parser("verify", help="verify a certificate file")
    ve.add_argument("path")

    cn = sub.add_parser("cn-oracle", help="coefficient oracle for small trees")
    cn.add_argument("--tree", required=True)
    cn.add_argument("--p", type=int, required=True)

    ls = sub.add_parser("leaf-stats", help="empirical leaf statistics of random trees")
    ls.add_argument("--m", type=int, required=True)
    ls.add_argument("--samples", type=int, default=10000)
    ls.add_argument("--sample", choices=("labeled", "unlabeled"), default="unlabeled")
    ls.add_argument("--seed", type=int, default=0)
    ls.add_argument("--jobs", type=int, default=1)
    return ap


def _require_prime(p: int) -> None:
    if not is_prime(p):
        raise InputError("p must be prime")


def _load_tree(args) -> trees.Tree:
    if bool(args.tree) == bool(args.sample):
        raise InputError("provide exactly one tree source: --tree FILE or --sample KIND --m M")
    if args.tree:
        try:
            with open(args.tree, "r", encoding="utf-8") as fh:
                return trees.parse_tree(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read tree file: {exc}") from exc
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if args.m is None:
        raise InputError("--sample needs --m")
    sampler = trees.sample_labeled_tree if args.sample == "labeled" else trees.sample_unlabeled_tree
    return sampler(args.m, args.seed)


def _cmd_sample_tree(args) -> int:
    if args.m < 1:
        raise InputError("m must be >= 1")
    sampler = trees.sample_labeled_tree if args.sample == "labeled" else trees.sample_unlabeled_tree
    tree = sampler(args.m, args.seed)
    atomic_write_text(args.out, trees.format_tree(tree))
    nleaves = trees.leaf_count(tree)
    bound = trees.leaf_bound(args.m)
    print(
        f"m={args.m} kind={args.sample} seed={args.seed} leaves={nleaves} "
        f"bound={bound} meets_bound={'true' if nleaves >= bound else 'false'} out={args.out}"
    )
    return EXIT_OK


def _cmd_decompose(args) -> int:
    _require_prime(args.p)
    tree = _load_tree(args)
    t0 = time.perf_counter()
    if args.kind == "blowup":
        r = 2 if args.r is None else args.r
        d = decompose_blowup(tree, args.p, r, args.seed, args.best_effort)
    elif args.kind == "matching-complement":
        if args.r not in (None, 2):
            raise InputError("matching-complement forces r = 2")
        d = decompose_matching_complement(tree, args.p, args.seed, args.best_effort)
    elif args.kind == "near-complete":
        if args.r not in (None, 3):
            raise InputError("near-complete forces r = 3")
        d = decompose_near_complete(tree, args.p, args.seed, args.best_effort)
    else:
        if args.r is None:
            raise InputError("clique-complement needs --r (odd, >= 3)")
        d = decompose_clique_complement(tree, args.p, args.r, args.seed, args.best_effort)
    write_certificate(d, args.out)
    elapsed = time.perf_counter() - t0
    print(
        f"kind={d.meta['kind']} p={d.target.p} r={d.target.r} copies={len(d.copies)} "
        f"edges={d.target.edge_count} conflicts={d.meta['conflicts_repaired']} "
        f"seconds={elapsed:.3f} out={args.out}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    cert = read_certificate(args.path)
    report = verify_decomposition(cert)
    if report.ok:
        print(
            f"result=pass kind={cert.kind} p={cert.p} r={cert.r} "
            f"copies={report.copy_count} edges={report.edge_count}"
        )
        return EXIT_OK
    print(f"result=fail check={report.failed_check()} counterexample={report.counterexample!r}")
    return EXIT_FAIL


def _cmd_cn_oracle(args) -> int:
    _require_prime(args.p)
    try:
        with open(args.tree, "r", encoding="utf-8") as fh:
            tree = trees.parse_tree(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read tree file: {exc}") from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    try:
        coeff = cn_coefficient_oracle(tree, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    ok = coeff in (1, args.p - 1)
    print(f"coefficient={coeff} p={args.p} expected=+-1 {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _leaf_batch(payload) -> tuple[int, int]:
    m, kind, seeds = payload
    sampler = trees.sample_labeled_tree if kind == "labeled" else trees.sample_unlabeled_tree
    bound = trees.leaf_bound(m)
    total = 0
    meets = 0
    for s in seeds:
        tree = sampler(m, s)
        n = trees.leaf_count(tree)
        total += n
        meets += 1 if n >= bound else 0
    return total, meets


def _cmd_leaf_stats(args) -> int:
    if args.m < 1 or args.samples < 1:
        raise InputError("m and samples must be >= 1")
    seeds = [args.seed + i for i in range(args.samples)]
    jobs = max(1, args.jobs)
    if jobs == 1:
        total, meets = _leaf_batch((args.m, args.sample, seeds))
    else:
        chunks = [seeds[i::jobs] for i in range(jobs)]
        if args.sample == "unlabeled":
            trees.sample_unlabeled_tree(args.m, seeds[0])  # warm tables before fork
        total = meets = 0
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for t, k in pool.map(_leaf_batch, [(args.m, args.sample, c) for c in chunks]):
                total += t
                meets += k
    mean = total / args.samples
    frac = mean / args.m
    rel = abs(frac - LEAF_FRACTION) / LEAF_FRACTION
    print(
        f"m={args.m} kind={args.sample} samples={args.samples} mean_leaves={mean:.3f} "
        f"mean_fraction={frac:.4f} ref={LEAF_FRACTION} rel_err={rel:.4f} "
        f"bound_fraction={meets / args.samples:.4f}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "sample-tree": _cmd_sample_tree,
        "decompose": _cmd_decompose,
        "verify": _cmd_verify,
        "cn-oracle": _cmd_cn_oracle,
        "leaf-stats": _cmd_leaf_stats,
    }
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CertificateError as exc:
        print(f"error: malformed certificate ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConstructionError as exc:
        print(f"error: construction failed at {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
