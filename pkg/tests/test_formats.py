"""Document formats: parsing, emission, byte-stable round trips."""

import pytest

from idemcert.formats import (
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
from idemcert.matrix import Mat
from idemcert.poly import Poly
from idemcert.presentation import (
    IDEAL,
    FactCertificate,
    MembershipCertificate,
    RingPresentation,
)

DOC = """\
# demo input
variables: e
eq0: e^2 - e
matrix:
[e]
"""


class TestInputDocument:
    def test_parse_basic(self):
        doc = parse_input_document(DOC)
        assert doc.pres.generators == ("e",)
        assert len(doc.pres.rel_eq0) == 1
        assert doc.matrix.rows == doc.matrix.cols == 1

    def test_round_trip(self):
        doc = parse_input_document(DOC)
        text = emit_input_document(doc)
        again = parse_input_document(text)
        assert again.pres == doc.pres
        assert again.matrix == doc.matrix
        assert emit_input_document(again) == text

    def test_relation_kinds_and_params(self):
        text = ("variables: x, y\n"
                "eq0: x*y - 1\n"
                "rnul: x^2\n"
                "unit: y + 1\n"
                "param: s | s*x - 1\n")
        doc = parse_input_document(text)
        assert doc.pres.rel_rnul[0] == doc.pres.parse("x^2")
        assert doc.pres.params[0][0] == "s"
        # emission canonicalizes ("s*x" becomes "x*s"); one round settles it
        canonical = emit_input_document(InputDocument(doc.pres, None))
        again = parse_input_document(canonical)
        assert emit_input_document(InputDocument(again.pres, None)) == canonical

    def test_missing_variables(self):
        with pytest.raises(DocumentError):
            parse_input_document("eq0: x\n")

    def test_unknown_variable_in_matrix(self):
        with pytest.raises(DocumentError):
            parse_input_document("variables: x\nmatrix:\n[y]\n")

    def test_ragged_matrix(self):
        with pytest.raises(DocumentError):
            parse_input_document("variables: x\nmatrix:\n[x, x]\n[x]\n")


class TestArchive:
    def _pres(self):
        return RingPresentation.build(["e"], eq0=["e^2 - e"], rnul=["e"])

    def _archive(self, pres):
        member = MembershipCertificate(
            pres.parse("e - e^2"), ((("eq0", 0), pres.const(-1)),))
        fact = FactCertificate(IDEAL, pres.parse("e"), exponent=1,
                               rnul_terms=((0, pres.const(-1)),))
        return CertificateArchive(
            ("tool=test",), (),
            (ArchiveEntry("member", (), "membership", member),
             ArchiveEntry("fact", (), "fact-ideal", fact)))

    def test_round_trip_byte_identical(self):
        pres = self._pres()
        archive = self._archive(pres)
        text = emit_archive(archive)
        parsed = parse_archive(text, pres)
        assert emit_archive(parsed) == text
        assert parsed.entries[0].payload == archive.entries[0].payload
        assert parsed.entries[1].payload == archive.entries[1].payload

    def test_verification(self):
        pres = self._pres()
        archive = self._archive(pres)
        assert all(ok for _, ok in verify_archive(archive, pres))

    def test_per_entry_params(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        ext = pres.with_param("u1", "u1*e - 1")
        cert = MembershipCertificate(ext.parse("u1*e - 1"),
                                     ((("param", 0), ext.const(1)),))
        archive = CertificateArchive(
            (), (), (ArchiveEntry("local", (("u1", "u1*e - 1"),),
                                  "membership", cert),))
        text = emit_archive(archive)
        parsed = parse_archive(text, pres)
        assert all(ok for _, ok in verify_archive(parsed, pres))
        assert emit_archive(parsed) == text

    def test_leading_report_lines_skipped(self):
        pres = self._pres()
        text = "leaf-count: 2\ntree:\n" + emit_archive(self._archive(pres))
        parsed = parse_archive(text, pres)
        assert len(parsed.entries) == 2

    def test_header_required(self):
        with pytest.raises(DocumentError):
            parse_archive("certificate: membership\nend\n", self._pres())

    def test_corrupted_coefficient_fails_verification(self):
        pres = self._pres()
        text = emit_archive(self._archive(pres))
        corrupted = text.replace("| -1", "| -2")
        parsed = parse_archive(corrupted, pres)
        results = verify_archive(parsed, pres)
        assert not all(ok for _, ok in results)
