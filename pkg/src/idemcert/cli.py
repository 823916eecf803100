"""Command-line front end.

Subcommands::

    idemcert analyze INPUT     structure report for an idempotent matrix
    idemcert generic --n N     certificates for the generic idempotent
    idemcert azumaya INPUT     evaluation-tree dump with leaf conjugations
    idemcert verify CERT PRES  re-check an archive by pure expansion

Exit codes: 0 success, 1 verification failure, 2 parse error,
3 non-idempotent matrix, 4 certificate failure, 5 effort bound
exhausted.  All output is deterministic; timings go to stderr.
"""

from __future__ import annotations

import argparse
import itertools
import sys
import time

from . import __version__
from .engine import RankCertifier, azumaya_run
from .formats import (
    ArchiveEntry,
    CertificateArchive,
    DocumentError,
    InputDocument,
    emit_archive,
    emit_input_document,
    parse_archive,
    parse_input_document,
    verify_archive,
)
from .freeness import freeness_reduce
from .matrix import Mat, WitMat, det_cofactor
from .poly import EffortExceededError, Poly, PolyParseError
from .presentation import MembershipCertificate, RingPresentation
from .projector import (
    NotIdempotentError,
    ProjectorMat,
    comaximal_family,
    fundamental_idempotents,
    localization_rank,
    minor_annihilation,
    rank_polynomial,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_NOT_IDEMPOTENT = 3
EXIT_CERT = 4
EXIT_EFFORT = 5


def _write(out_path: str | None, text: str) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_projector(path: str):
    doc = parse_input_document(_read(path))
    if doc.matrix is None:
        raise DocumentError("input document has no matrix section")
    return doc, ProjectorMat.build(doc.matrix, doc.pres)


def _meta(command: str, **flags) -> tuple[str, ...]:
    rendered = " ".join(f"{k}={v}" for k, v in sorted(flags.items()))
    lines = [f"tool=idemcert/{__version__}", f"command={command}"]
    if rendered:
        lines.append(rendered)
    return tuple(lines)


def cmd_analyze(args) -> int:
    try:
        doc, fp = _load_projector(args.input)
    except (OSError, DocumentError, PolyParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotIdempotentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_IDEMPOTENT
    pres = fp.pres
    try:
        ids = fundamental_idempotents(fp, args.effort)
        fam = comaximal_family(fp, ids, args.effort)
        minors = {k: minor_annihilation(fp, ids, k, args.effort)
                  for k in range(fp.n)}
    except EffortExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EFFORT
    entries = []
    entries.append(ArchiveEntry("unit-sum", (), "membership", ids.unit_sum))
    for (i, j), cert in sorted(ids.orthogonality.items()):
        entries.append(ArchiveEntry(f"orthogonality r{i}*r{j}", (),
                                    "membership", cert))
    for k in sorted(fam.per_rank):
        entries.append(ArchiveEntry(f"rank-sum k={k}", (), "membership",
                                    fam.per_rank[k]))
    entries.append(ArchiveEntry("global-sum", (), "membership", fam.global_sum))
    for k in sorted(minors):
        for rows, cols, cert in minors[k]:
            entries.append(ArchiveEntry(
                f"minor-annihilation k={k} rows={rows} cols={cols}", (),
                "membership", cert))
    basis_lines = []
    if args.bases:
        try:
            basis_entries, basis_lines = _localization_bases(fp, ids, fam, minors)
        except EffortExceededError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_EFFORT
        entries.extend(basis_entries)
    archive = CertificateArchive(
        _meta("analyze", bases=int(args.bases), effort=args.effort or 0,
              max_exponent=args.max_exponent),
        (), tuple(entries))
    failures = [label for label, ok in verify_archive(archive, pres) if not ok]
    if failures:
        print(f"error: certificates failed re-verification: {failures[:3]}",
              file=sys.stderr)
        return EXIT_CERT
    if args.format == "structured":
        _write(args.out, emit_archive(archive))
        return EXIT_OK
    lines = [f"matrix: {fp.n}x{fp.n} over variables "
             f"({', '.join(pres.generators)})"]
    lines.append(f"rank-polynomial: {rank_polynomial(fp)}")
    for k, r in enumerate(ids.r):
        lines.append(f"idempotent r{k}: {r}")
    for (i, j) in sorted(ids.orthogonality):
        lines.append(f"orthogonality r{i}*r{j}: verified")
    for k, subset, s in fam.entries:
        lines.append(f"family k={k} subset={subset}: {s}")
    for k in sorted(fam.per_rank):
        lines.append(f"rank-sum k={k}: verified")
    lines.append("global-sum: verified")
    for k in sorted(minors):
        lines.append(f"minor-annihilation k={k}: {len(minors[k])} certificates verified")
    for k, subset, s in fam.entries:
        h = localization_rank(fp, ids, s, args.max_exponent)
        shown = "inconclusive" if h is None else str(h)
        lines.append(f"localization-rank at k={k} subset={subset}: {shown}")
    lines.extend(basis_lines)
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _localization_bases(fp, ids, fam, minors):
    """Per-family-element freeness reductions over the adjoined-inverse
    extension, with certificates suitable for the archive."""
    pres = fp.pres
    entries = []
    lines = []
    for idx, (k, subset, s) in enumerate(fam.entries):
        name = f"sig{idx}"
        amb = pres.ambient + (name,)
        ext = pres.with_param(name, Poly.var(amb, name) * s.embed(amb) - 1)
        pidx = len(ext.params) - 1
        param_cert = MembershipCertificate(
            ext.params[pidx][1], ((("param", pidx), ext.const(1)),))
        inverse = Poly.var(ext.ambient, name) * ids.r[k].embed(ext.ambient)
        minor_certs = {}
        if k < fp.n:
            for rows, cols, cert in minors[k]:
                value = det_cofactor(fp.f.embed(ext.ambient).submatrix(rows, cols))
                scaled = cert.embed(ext.ambient).scaled(
                    Poly.var(ext.ambient, name)
                    * det_cofactor(fp.f.embed(ext.ambient).submatrix(subset, subset)))
                full = scaled.plus(param_cert.scaled(-value))
                minor_certs[(rows, cols)] = MembershipCertificate(value, full.terms)
        res = freeness_reduce(ext, fp.f.embed(ext.ambient), k, subset, subset,
                              inverse, param_cert, minor_certs)
        params = ((name, str(ext.params[pidx][1])),)
        for i in range(fp.n):
            for j in range(fp.n):
                cert = res.canonical_certs[i * fp.n + j]
                entries.append(ArchiveEntry(
                    f"basis k={k} subset={subset} entry ({i},{j})",
                    params, "membership", cert))
        lines.append(f"basis k={k} subset={subset}: rank {k} after inverting {s}")
    return entries, lines


def cmd_generic(args) -> int:
    n = args.n
    if n < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return EXIT_PARSE
    t0 = time.monotonic()
    gens = [f"f{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    ctx = tuple(gens)
    f = Mat.from_rows([[gens[i * n + j] for j in range(n)] for i in range(n)], ctx)
    rels = (f @ f - f).entries
    pres = RingPresentation.build(gens, eq0=[str(e) for e in rels])
    f = f.embed(pres.ambient)
    diff = f @ f - f
    idem = WitMat(pres, f @ f, f, tuple(
        MembershipCertificate(e, ((("eq0", i), pres.const(1)),))
        for i, e in enumerate(diff.entries)))
    try:
        certifier = RankCertifier(pres, f, idem, args.effort)
        entries = []
        if args.goal == "orthogonality":
            for h in range(n + 1):
                for k in range(h + 1, n + 1):
                    cert = certifier.orthogonality(h, k)
                    entries.append(ArchiveEntry(f"orthogonality r{h}*r{k}", (),
                                                "membership", cert))
        else:
            for k in range(n):
                for rows in itertools.combinations(range(n), k + 1):
                    for cols in itertools.combinations(range(n), k + 1):
                        cert = certifier.minor_annihilation(k, rows, cols)
                        entries.append(ArchiveEntry(
                            f"minor-annihilation k={k} rows={rows} cols={cols}",
                            (), "membership", cert))
    except EffortExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EFFORT
    archive = CertificateArchive(
        _meta("generic", n=n, goal=args.goal, effort=args.effort or 0),
        (), tuple(entries))
    failures = [label for label, ok in verify_archive(archive, pres) if not ok]
    if failures:
        print(f"error: certificates failed re-verification: {failures[:3]}",
              file=sys.stderr)
        return EXIT_CERT
    text = emit_archive(archive)
    _write(args.out, text)
    if args.pres_out:
        _write(args.pres_out, emit_input_document(InputDocument(pres, f)))
    elapsed = time.monotonic() - t0
    total_terms = sum(
        len(e.payload.terms) if hasattr(e.payload, "terms") else 0
        for e in entries)
    print(f"generic n={n}: {len(entries)} certificates, "
          f"{len(text)} bytes, {total_terms} combination terms, "
          f"{elapsed:.2f}s", file=sys.stderr)
    return EXIT_OK


def cmd_azumaya(args) -> int:
    try:
        doc, fp = _load_projector(args.input)
    except (OSError, DocumentError, PolyParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotIdempotentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_IDEMPOTENT
    pres = fp.pres
    try:
        result = azumaya_run(pres, fp.f, fp.idem_witmat(), args.effort)
    except EffortExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EFFORT
    from .engine import render_tree
    entries = []
    for idx, leaf in enumerate(result.leaves):
        params = tuple((nm, str(rel)) for nm, rel in leaf.pres.params)
        conj = leaf.conj
        for i in range(fp.n):
            for j in range(fp.n):
                entries.append(ArchiveEntry(
                    f"leaf-{idx} conjugation entry ({i},{j})", params,
                    "membership", conj.conj_certs[i * fp.n + j]))
    entries.append(ArchiveEntry("comaximality", (), "membership",
                                result.comax_cert))
    archive = CertificateArchive(
        _meta("azumaya", effort=args.effort or 0), (), tuple(entries))
    failures = [label for label, ok in verify_archive(archive, pres) if not ok]
    if failures:
        print(f"error: certificates failed re-verification: {failures[:3]}",
              file=sys.stderr)
        return EXIT_CERT
    head = [f"# evaluation tree dump ({fp.n}x{fp.n} matrix)",
            f"leaf-count: {result.leaf_count()}",
            "tree:"]
    head.extend("  " + line for line in
                render_tree(result.tree, result.leaves).splitlines())
    for idx, leaf in enumerate(result.leaves):
        head.append(f"leaf-{idx}: rank={leaf.rank} inverted={leaf.element} "
                    f"coefficient={result.comax_coeffs[idx]}"
                    + (" trivial" if leaf.trivial else ""))
    _write(args.out, "\n".join(head) + "\n\n" + emit_archive(archive))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        doc = parse_input_document(_read(args.presentation))
        text = _read(args.certificates)
        archive = parse_archive(text, doc.pres)
    except (OSError, DocumentError, PolyParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    results = verify_archive(archive, doc.pres)
    bad = 0
    for label, ok in results:
        print(f"{'ok ' if ok else 'FAIL'} {label}")
        if not ok:
            bad += 1
    print(f"{len(results) - bad}/{len(results)} certificates verified")
    return EXIT_OK if bad == 0 else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idemcert",
        description="certified structure analysis of idempotent matrices")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full structure report for one matrix")
    p.add_argument("input", help="presentation document with a matrix section")
    p.add_argument("--bases", action="store_true",
                   help="emit per-localization basis reductions")
    p.add_argument("--max-exponent", type=int, default=8,
                   help="bound for the localization-rank search (default 8)")
    p.add_argument("--effort", type=int, default=None,
                   help="work bound for the evaluation engine")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--out", default=None, help="write to a file instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generic", help="certificates for the generic idempotent")
    p.add_argument("--n", type=int, required=True, help="matrix size")
    p.add_argument("--goal", choices=("orthogonality", "minors"),
                   default="orthogonality")
    p.add_argument("--effort", type=int, default=200_000_000,
                   help="work bound (default targets about ten minutes)")
    p.add_argument("--out", default=None)
    p.add_argument("--pres-out", default=None,
                   help="also write the generic presentation document")
    p.set_defaults(func=cmd_generic)

    p = sub.add_parser("azumaya", help="evaluation-tree dump with conjugations")
    p.add_argument("input")
    p.add_argument("--effort", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_azumaya)

    p = sub.add_parser("verify", help="re-check an archive by expansion")
    p.add_argument("certificates", help="certificate archive file")
    p.add_argument("presentation", help="presentation document file")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
