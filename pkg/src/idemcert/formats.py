"""Text formats: presentation documents and certificate archives.

Both formats are line-based UTF-8 with LF endings and deterministic
emission, so equal inputs produce byte-identical files and archives
round-trip through the parser unchanged after one canonicalization.

Presentation document::

    # comment
    variables: e, f
    eq0: e^2 - e
    rnul: <poly>          (zero or more of each relation kind)
    unit: <poly>
    param: s | s*e - 1    (ordered ambient extensions)
    matrix:
    [e, 0]
    [0, f]

Certificate archive::

    archive: 1
    meta: <free text>
    param: u1 | u1*e - 1  (archive-level ambient extensions)

    certificate: membership
    label: <free text>
    param: v1 | v1*e - 1  (per-certificate extensions, optional)
    target: <poly>
    term: eq0 0 | <poly>
    term: param 1 | <poly>
    end

    certificate: fact-ideal
    target: <poly>
    exponent: 2
    unit: 0 1             (indices into the unit relations; formal product)
    rnul-term: 0 | <poly>
    term: eq0 0 | <poly>
    aux: <poly>           (fact-unit only)
    end
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .matrix import Mat
from .poly import Poly, PolyParseError, parse_poly
from .presentation import (
    IDEAL,
    UNIT,
    ZERO,
    FactCertificate,
    MembershipCertificate,
    RingPresentation,
)


class DocumentError(ValueError):
    """Malformed presentation or certificate document."""


FACT_TAGS = {"fact-zero": ZERO, "fact-ideal": IDEAL, "fact-unit": UNIT}
TAG_OF_KIND = {v: k for k, v in FACT_TAGS.items()}


@dataclass(frozen=True)
class InputDocument:
    pres: RingPresentation
    matrix: Mat | None


def _content_lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        out.append(line)
    return out


def parse_input_document(text: str) -> InputDocument:
    variables: list[str] | None = None
    eq0: list[str] = []
    rnul: list[str] = []
    unit: list[str] = []
    params: list[tuple[str, str]] = []
    matrix_rows: list[str] = []
    in_matrix = False
    for line in _content_lines(text):
        if in_matrix:
            if line.startswith("[") and line.endswith("]"):
                matrix_rows.append(line)
                continue
            in_matrix = False
        if line == "matrix:":
            in_matrix = True
            continue
        if ":" not in line:
            raise DocumentError(f"unrecognized line {line!r}")
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if key == "variables":
            if variables is not None:
                raise DocumentError("duplicate variables line")
            variables = [v.strip() for v in value.split(",") if v.strip()]
        elif key == "eq0":
            eq0.append(value)
        elif key == "rnul":
            rnul.append(value)
        elif key == "unit":
            unit.append(value)
        elif key == "param":
            name, _, rel = value.partition("|")
            if not rel:
                raise DocumentError("param line needs 'name | relation'")
            params.append((name.strip(), rel.strip()))
        else:
            raise DocumentError(f"unknown key {key!r}")
    if variables is None:
        raise DocumentError("missing variables line")
    try:
        pres = RingPresentation.build(variables, eq0=eq0, rnul=rnul, unit=unit)
        for name, rel in params:
            pres = pres.with_param(name, rel)
    except (PolyParseError, ValueError) as exc:
        raise DocumentError(str(exc)) from exc
    matrix = None
    if matrix_rows:
        matrix = parse_matrix_rows(matrix_rows, pres.ambient)
    return InputDocument(pres, matrix)


def parse_matrix_rows(rows: Iterable[str], context: tuple[str, ...]) -> Mat:
    parsed = []
    for line in rows:
        line = line.strip()
        if not (line.startswith("[") and line.endswith("]")):
            raise DocumentError(f"matrix row must be bracketed: {line!r}")
        body = line[1:-1].strip()
        if body:
            try:
                entries = [parse_poly(part, context) for part in body.split(",")]
            except PolyParseError as exc:
                raise DocumentError(str(exc)) from exc
        else:
            entries = []
        parsed.append(entries)
    if not parsed:
        raise DocumentError("empty matrix")
    width = len(parsed[0])
    if any(len(row) != width for row in parsed):
        raise DocumentError("ragged matrix rows")
    return Mat.from_rows(parsed, context)


def emit_input_document(doc: InputDocument) -> str:
    pres = doc.pres
    lines = [f"variables: {', '.join(pres.generators)}"]
    for p in pres.rel_eq0:
        lines.append(f"eq0: {p}")
    for p in pres.rel_rnul:
        lines.append(f"rnul: {p}")
    for p in pres.rel_unit:
        lines.append(f"unit: {p}")
    for name, rel in pres.params:
        lines.append(f"param: {name} | {rel}")
    if doc.matrix is not None:
        lines.append("matrix:")
        m = doc.matrix
        for i in range(m.rows):
            row = ", ".join(str(m.entry(i, j)) for j in range(m.cols))
            lines.append(f"[{row}]")
    return "\n".join(lines) + "\n"


# -- certificate archives -----------------------------------------------------

@dataclass(frozen=True)
class ArchiveEntry:
    label: str
    params: tuple[tuple[str, str], ...]  # per-entry ambient extensions
    kind: str  # "membership" or one of FACT_TAGS
    payload: MembershipCertificate | FactCertificate


@dataclass(frozen=True)
class CertificateArchive:
    meta: tuple[str, ...]
    params: tuple[tuple[str, str], ...]
    entries: tuple[ArchiveEntry, ...]


def _ref_to_text(ref) -> str:
    kind, idx = ref
    return f"{kind} {idx}"


def _ref_from_text(text: str):
    parts = text.split()
    if len(parts) != 2 or parts[0] not in ("eq0", "param"):
        raise DocumentError(f"bad relation reference {text!r}")
    return (parts[0], int(parts[1]))


def emit_archive(archive: CertificateArchive) -> str:
    lines = ["archive: 1"]
    for meta in archive.meta:
        lines.append(f"meta: {meta}")
    for name, rel in archive.params:
        lines.append(f"param: {name} | {rel}")
    for entry in archive.entries:
        lines.append("")
        lines.append(f"certificate: {entry.kind}")
        if entry.label:
            lines.append(f"label: {entry.label}")
        for name, rel in entry.params:
            lines.append(f"param: {name} | {rel}")
        payload = entry.payload
        lines.append(f"target: {payload.target}")
        if isinstance(payload, MembershipCertificate):
            for ref, coeff in payload.terms:
                lines.append(f"term: {_ref_to_text(ref)} | {coeff}")
        else:
            if payload.exponent is not None:
                lines.append(f"exponent: {payload.exponent}")
            if payload.unit_refs:
                lines.append("unit: " + " ".join(str(i) for i in payload.unit_refs))
            for idx, coeff in payload.rnul_terms:
                lines.append(f"rnul-term: {idx} | {coeff}")
            for ref, coeff in payload.eq0_terms:
                lines.append(f"term: {_ref_to_text(ref)} | {coeff}")
            if payload.aux is not None:
                lines.append(f"aux: {payload.aux}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def parse_archive(text: str, base: RingPresentation) -> CertificateArchive:
    """Parse an archive against its base presentation.

    Polynomials are parsed over the ambient context extended by the
    archive-level and per-certificate parameters, in order.
    """
    lines = _content_lines(text)
    # tolerate leading report or dump lines: the archive starts at its header
    while lines and lines[0] != "archive: 1":
        lines.pop(0)
    if not lines:
        raise DocumentError("missing archive header")
    meta: list[str] = []
    params: list[tuple[str, str]] = []
    entries: list[ArchiveEntry] = []
    i = 1
    while i < len(lines) and not lines[i].startswith("certificate:"):
        line = lines[i]
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "meta":
            meta.append(value)
        elif key == "param":
            name, _, rel = value.partition("|")
            params.append((name.strip(), rel.strip()))
        else:
            raise DocumentError(f"unexpected line before certificates: {line!r}")
        i += 1
    archive_pres = base
    try:
        for name, rel in params:
            archive_pres = archive_pres.with_param(name, rel)
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc

    while i < len(lines):
        line = lines[i]
        if not line.startswith("certificate:"):
            raise DocumentError(f"expected certificate block, got {line!r}")
        kind = line.partition(":")[2].strip()
        if kind not in ("membership",) and kind not in FACT_TAGS:
            raise DocumentError(f"unknown certificate kind {kind!r}")
        i += 1
        label = ""
        entry_params: list[tuple[str, str]] = []
        target_text = None
        exponent = None
        unit_refs: tuple[int, ...] = ()
        rnul_rows: list[tuple[int, str]] = []
        term_rows: list[tuple[tuple[str, int], str]] = []
        aux_text = None
        while i < len(lines) and lines[i] != "end":
            key, _, value = lines[i].partition(":")
            key, value = key.strip(), value.strip()
            if key == "label":
                label = value
            elif key == "param":
                name, _, rel = value.partition("|")
                entry_params.append((name.strip(), rel.strip()))
            elif key == "target":
                target_text = value
            elif key == "exponent":
                exponent = int(value)
            elif key == "unit":
                unit_refs = tuple(int(p) for p in value.split())
            elif key == "rnul-term":
                idx, _, coeff = value.partition("|")
                rnul_rows.append((int(idx.strip()), coeff.strip()))
            elif key == "term":
                ref, _, coeff = value.partition("|")
                term_rows.append((_ref_from_text(ref.strip()), coeff.strip()))
            elif key == "aux":
                aux_text = value
            else:
                raise DocumentError(f"unknown certificate key {key!r}")
            i += 1
        if i >= len(lines):
            raise DocumentError("unterminated certificate block")
        i += 1  # consume "end"
        if target_text is None:
            raise DocumentError("certificate without target")
        pres = archive_pres
        try:
            for name, rel in entry_params:
                pres = pres.with_param(name, rel)
            amb = pres.ambient
            target = parse_poly(target_text, amb)
            terms = tuple((ref, parse_poly(coeff, amb)) for ref, coeff in term_rows)
            if kind == "membership":
                payload = MembershipCertificate(target, terms)
            else:
                rnul_terms = tuple((idx, parse_poly(coeff, amb))
                                   for idx, coeff in rnul_rows)
                aux = parse_poly(aux_text, amb) if aux_text is not None else None
                payload = FactCertificate(FACT_TAGS[kind], target,
                                          unit_refs=unit_refs,
                                          rnul_terms=rnul_terms,
                                          eq0_terms=terms, aux=aux,
                                          exponent=exponent)
        except (PolyParseError, ValueError) as exc:
            raise DocumentError(str(exc)) from exc
        entries.append(ArchiveEntry(label, tuple(entry_params), kind, payload))
    return CertificateArchive(tuple(meta), tuple(params), tuple(entries))


def verify_archive(archive: CertificateArchive, base: RingPresentation
                   ) -> list[tuple[str, bool]]:
    """Verify every entry by expansion; returns (label, ok) pairs.

    Verification is independent of whatever produced the archive: it
    re-parses nothing and runs no search, only the expansion identities.
    """
    pres0 = base
    for name, rel in archive.params:
        pres0 = pres0.with_param(name, rel)
    results = []
    for entry in archive.entries:
        pres = pres0
        ok = True
        try:
            for name, rel in entry.params:
                pres = pres.with_param(name, rel)
            ok = entry.payload.verify(pres)
        except Exception:
            ok = False
        results.append((entry.label or entry.kind, ok))
    return results
