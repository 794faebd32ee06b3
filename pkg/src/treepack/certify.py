"""Construction-blind verification of decompositions, plus the certificate
file format.

Certificates are line-delimited JSON, version "ringel-decomp/1": line 1 is a
header with the target kind, parameters, tree, and run metadata; every
further line is one copy. Keys are sorted and arc lists are sorted, so a
certificate is a deterministic function of the decomposition.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable

from .blowup import Decomposition
from .errors import CertificateError
from .graphs import CayleyDigraph, build_target, edge_key, vertex_key
from .trees import Tree, canonical_form

CERT_VERSION = "ringel-decomp/1"


@dataclass(frozen=True)
class Certificate:
    """Self-contained record of a claimed decomposition."""

    version: str
    kind: str
    p: int
    r: int
    tree_n: int
    tree_edges: tuple[tuple[int, int], ...]
    tree_canonical: str  # hex of the canonical form
    copies: tuple  # (label, arcs) pairs
    meta: dict


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the five partition/isomorphism checks."""

    ok: bool
    checks: tuple[tuple[str, bool], ...]
    counterexample: str | None
    copy_count: int
    edge_count: int

    def failed_check(self) -> str | None:
        for name, passed in self.checks:
            if not passed:
                return name
        return None


def _encode_vertex(v) -> object:
    if isinstance(v, tuple):
        return [v[0], v[1]]
    return v


def _decode_vertex(v) -> object:
    if isinstance(v, list):
        if len(v) != 2 or not all(isinstance(c, int) for c in v):
            raise CertificateError("schema", f"bad vertex {v!r}")
        return (v[0], v[1])
    if isinstance(v, int) and not isinstance(v, bool):
        return v
    if isinstance(v, str) and v.startswith("alpha:"):
        return v
    raise CertificateError("schema", f"bad vertex {v!r}")


def certificate_from_decomposition(d: Decomposition) -> Certificate:
    return Certificate(
        version=CERT_VERSION,
        kind=d.target.kind,
        p=d.target.p,
        r=d.target.r,
        tree_n=d.tree.n,
        tree_edges=d.tree.edges,
        tree_canonical=canonical_form(d.tree).hex(),
        copies=d.copies,
        meta=dict(d.meta),
    )


def certificate_text(cert: Certificate) -> str:
    header = {
        "version": cert.version,
        "kind": cert.kind,
        "p": cert.p,
        "r": cert.r,
        "tree": {
            "n": cert.tree_n,
            "edges": [list(e) for e in cert.tree_edges],
            "canonical": cert.tree_canonical,
        },
        "meta": cert.meta,
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for label, arcs in cert.copies:
        row = {
            "label": label,
            "arcs": [[_encode_vertex(u), _encode_vertex(v)] for u, v in arcs],
        }
        lines.append(json.dumps(row, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-cert-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_certificate(d: Decomposition | Certificate, path: str) -> Certificate:
    cert = d if isinstance(d, Certificate) else certificate_from_decomposition(d)
    atomic_write_text(path, certificate_text(cert))
    return cert


def read_certificate(path: str) -> Certificate:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CertificateError("io", f"cannot read {path}: {exc}") from exc
    if not lines:
        raise CertificateError("schema", "empty certificate file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CertificateError("schema", f"bad header: {exc}") from exc
    if not isinstance(header, dict) or "version" not in header:
        raise CertificateError("schema", "header is not an object with a version")
    if header["version"] != CERT_VERSION:
        raise CertificateError("version", f"unsupported version {header['version']!r}")
    try:
        tree = header["tree"]
        cert = Certificate(
            version=header["version"],
            kind=header["kind"],
            p=int(header["p"]),
            r=int(header["r"]),
            tree_n=int(tree["n"]),
            tree_edges=tuple(tuple(int(x) for x in e) for e in tree["edges"]),
            tree_canonical=str(tree["canonical"]),
            copies=_read_copies(lines[1:]),
            meta=dict(header.get("meta", {})),
        )
    except CertificateError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError("schema", f"malformed header: {exc}") from exc
    return cert


def _read_copies(lines: Iterable[str]) -> tuple:
    copies = []
    for ln, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            label = row["label"]
            arcs = tuple(
                (_decode_vertex(a[0]), _decode_vertex(a[1])) for a in row["arcs"]
            )
        except CertificateError:
            raise
        except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
            raise CertificateError("schema", f"malformed copy on line {ln}: {exc}") from exc
        if not isinstance(label, int):
            raise CertificateError("schema", f"non-integer label on line {ln}")
        copies.append((label, arcs))
    return tuple(copies)


def decomposition_from_certificate(cert: Certificate) -> Decomposition:
    target = build_target(cert.kind, cert.p, cert.r)
    tree = Tree(cert.tree_n, cert.tree_edges, 0)
    return Decomposition(target, cert.copies, tree, dict(cert.meta))


def verify_rainbow(arcs: Iterable[tuple], colors, group) -> bool:
    """True iff no two of the arcs carry the same Cayley color."""
    digraph = CayleyDigraph(group, colors)
    seen = set()
    for u, v in arcs:
        c = digraph.arc_color(u, v)
        if c in seen:
            return False
        seen.add(c)
    return True


def verify_decomposition(cert: Certificate) -> VerificationReport:
    """Check that the certificate is an exact partition into copies of its tree.

    Checks, in order: (a) every copy has |E(T)| distinct target edges;
    (b) copies are pairwise edge-disjoint; (c) their union is exactly the
    target edge set; (d) every copy is a tree isomorphic to the stated tree;
    (e) copy count times |E(T)| equals the target size. The first failure is
    reported with a concrete counterexample.
    """
    try:
        target = build_target(cert.kind, cert.p, cert.r)
        tree = Tree(cert.tree_n, cert.tree_edges, 0)
    except ValueError as exc:
        raise CertificateError("schema", f"unusable certificate: {exc}") from exc
    want_canonical = canonical_form(tree).hex()
    m = len(tree.edges)

    checks: list[tuple[str, bool]] = []
    counterexample: str | None = None

    def fail(name: str, message: str) -> VerificationReport:
        nonlocal counterexample
        checks.append((name, False))
        counterexample = message
        return VerificationReport(False, tuple(checks), message, len(cert.copies), len(seen_edges))

    if cert.tree_canonical != want_canonical:
        # header self-consistency; not one of the five checks proper
        return VerificationReport(
            False,
            (("tree-canonical", False),),
            "stated canonical form does not match the stated tree",
            len(cert.copies),
            0,
        )

    seen_edges: dict[tuple, int] = {}
    for label, arcs in cert.copies:
        edges = set()
        for u, v in arcs:
            try:
                e = edge_key(u, v)
            except ValueError:
                return fail("copy-edges", f"copy {label} has a loop at {u!r}")
            if e not in target.edges:
                return fail("copy-edges", f"copy {label} uses non-target edge {e!r}")
            if e in edges:
                return fail("copy-edges", f"copy {label} repeats edge {e!r}")
            edges.add(e)
        if len(edges) != m:
            return fail("copy-edges", f"copy {label} has {len(edges)} edges, wants {m}")
        for e in edges:
            if e in seen_edges:
                return fail(
                    "disjoint", f"edge {e!r} covered by copies {seen_edges[e]} and {label}"
                )
            seen_edges[e] = label
    checks.append(("copy-edges", True))
    checks.append(("disjoint", True))

    if len(seen_edges) != target.edge_count:
        missing = next(iter(target.edges - seen_edges.keys()))
        return fail("cover", f"target edge {missing!r} is uncovered")
    checks.append(("cover", True))

    for label, arcs in cert.copies:
        verts = sorted({w for arc in arcs for w in arc}, key=vertex_key)
        index = {w: i for i, w in enumerate(verts)}
        if len(verts) != m + 1:
            return fail("isomorphic", f"copy {label} has {len(verts)} vertices, wants {m + 1}")
        try:
            as_tree = Tree(len(verts), tuple((index[u], index[v]) for u, v in arcs), 0)
        except ValueError as exc:
            return fail("isomorphic", f"copy {label} is not a tree: {exc}")
        if canonical_form(as_tree).hex() != want_canonical:
            return fail("isomorphic", f"copy {label} is not isomorphic to the tree")
    checks.append(("isomorphic", True))

    if len(cert.copies) * m != target.edge_count:
        return fail(
            "count",
            f"{len(cert.copies)} copies x {m} edges != {target.edge_count}",
        )
    labels = [label for label, _ in cert.copies]
    if len(set(labels)) != len(labels):
        return fail("count", "copy labels are not distinct")
    checks.append(("count", True))

    return VerificationReport(True, tuple(checks), None, len(cert.copies), len(seen_edges))
