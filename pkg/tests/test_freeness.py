"""Base-change algorithms: canonical reduction, oracle sweep, peeling."""

import pytest

from idemcert.freeness import (
    AzumayaStep,
    ConjugationResult,
    FreenessResult,
    LocalReduction,
    OracleRefusal,
    azumaya_step,
    freeness_reduce,
    local_presentation_reduce,
    projector_standardize,
)
from idemcert.matrix import CanonicalProjector, Mat, WitMat
from idemcert.poly import Poly
from idemcert.presentation import (
    CertificateError,
    MembershipCertificate,
    RingPresentation,
)

ZPRES = RingPresentation.build([], eq0=[])


def unit_cert(pres, option=1):
    return MembershipCertificate(pres.const(option) * pres.const(1) - 1)


def idem_witmat(pres, f):
    f = f.embed(pres.ambient)
    diff = f @ f - f
    certs = []
    for entry in diff.entries:
        if entry.is_zero():
            certs.append(MembershipCertificate(entry))
        else:
            from idemcert.presentation import reduce_by_relations
            cert = reduce_by_relations(entry, pres)
            assert cert is not None
            certs.append(cert)
    return WitMat(pres, f @ f, f, tuple(certs))


class TestFreenessReduce:
    def test_row_swap_case(self):
        g = Mat.from_rows([[0, 0], [1, 0]], ())
        one_cert = MembershipCertificate(Poly.zero(()))
        res = freeness_reduce(ZPRES, g, 1, (1,), (0,),
                              Poly.const((), 1), one_cert)
        assert res.canonical == Mat.from_rows([[1, 0], [0, 0]], ())
        assert res.witness.p == Mat.from_rows([[0, 1], [1, 0]], ())
        assert res.witness.q == Mat.identity(2, ())
        assert res.verify(ZPRES, g)

    def test_identity_input(self):
        g = CanonicalProjector(1, 2, 3).realize(())
        res = freeness_reduce(ZPRES, g, 1, (0,), (0,),
                              Poly.const((), 1),
                              MembershipCertificate(Poly.zero(())))
        assert res.canonical == g
        assert res.verify(ZPRES, g)

    def test_adjoined_inverse(self):
        pres = RingPresentation.build([], eq0=[]).with_param("s", "2*s - 1")
        g = Mat.from_rows([[2]], pres.ambient)
        cert = MembershipCertificate(pres.parse("2*s - 1"),
                                     ((("param", 0), pres.const(1)),))
        res = freeness_reduce(pres, g, 1, (0,), (0,), pres.parse("s"), cert)
        assert res.witness.q == Mat.from_rows([["s"]], pres.ambient)
        assert res.canonical == Mat.from_rows([["2*s"]], pres.ambient)
        assert res.verify(pres, g)

    def test_residual_block_certified(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"]).with_param(
            "u", "u*e - 1")
        g = Mat.from_rows([["e", "e"], ["e", "e"]], pres.ambient)
        cert = MembershipCertificate(pres.parse("u*e - 1"),
                                     ((("param", 0), pres.const(1)),))
        res = freeness_reduce(pres, g, 1, (0,), (0,), pres.parse("u"), cert)
        assert res.k == 1
        assert res.verify(pres, g)
        # bottom-right residual entry certified zero
        assert res.canonical_certs[-1].verify(pres)

    def test_unverified_precondition_rejected(self):
        g = Mat.from_rows([[2]], ())
        bad = MembershipCertificate(Poly.const((), 1))
        with pytest.raises(CertificateError):
            freeness_reduce(ZPRES, g, 1, (0,), (0,), Poly.const((), 1), bad)

    def test_basis_data_shapes(self):
        g = Mat.from_rows([[0, 0], [1, 0]], ())
        res = freeness_reduce(ZPRES, g, 1, (1,), (0,),
                              Poly.const((), 1),
                              MembershipCertificate(Poly.zero(())))
        assert (res.image_basis.rows, res.image_basis.cols) == (2, 1)
        assert (res.cokernel_classes.rows, res.cokernel_classes.cols) == (2, 1)


def make_unit_oracle(*unit_values):
    """Classify listed values as units (adjoining inverses), rest residually null."""
    def oracle(pres, entry):
        for val in unit_values:
            if entry == pres.parse(str(val)):
                if entry == 1:
                    return ("unit", pres, pres.const(1),
                            MembershipCertificate(Poly.zero(pres.ambient)))
                name = f"w{len(pres.params)}"
                ext = pres.with_param(name, Poly.var(pres.ambient + (name,), name)
                                      * entry.embed(pres.ambient + (name,)) - 1)
                cert = MembershipCertificate(
                    ext.params[-1][1], ((("param", len(ext.params) - 1),
                                         ext.const(1)),))
                return ("unit", ext, ext.parse(name), cert)
        return ("rnul", pres)
    return oracle


class TestLocalPresentationReduce:
    def test_numeric_block(self):
        pres = ZPRES
        g = Mat.from_rows([[1, 0], [0, 0]], ())
        red = local_presentation_reduce(pres, g, make_unit_oracle(1))
        assert red.k == 1
        assert red.residual == Mat.zeros(1, 1, red.pres.ambient)
        assert red.verify(g)

    def test_symbolic_unit_branch(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        g = Mat.from_rows([["e"]], pres.ambient)
        red = local_presentation_reduce(pres, g, make_unit_oracle("e"))
        assert red.k == 1
        assert red.residual.rows == 0 or all(
            e.is_zero() for e in red.residual.entries)
        assert red.pres.params  # inverse adjoined
        assert red.verify(g)

    def test_symbolic_rnul_branch(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        g = Mat.from_rows([["e"]], pres.ambient)
        red = local_presentation_reduce(pres, g, make_unit_oracle())
        assert red.k == 0
        assert red.residual == g
        assert [str(fl) for fl in red.residual_flags] == ["e"]
        assert red.verify(g)

    def test_oracle_refusal(self):
        pres = ZPRES
        g = Mat.from_rows([[1]], ())
        with pytest.raises(OracleRefusal):
            local_presentation_reduce(pres, g, lambda p, e: None)

    def test_mixed_sweep(self):
        pres = ZPRES
        g = Mat.from_rows([[0, 2], [1, 3]], ())
        red = local_presentation_reduce(pres, g, make_unit_oracle(1, 2, 3, "2", "3"))
        assert red.k == 2
        assert red.verify(g)


class TestProjectorStandardize:
    def test_standard_input(self):
        f = CanonicalProjector(1, 2, 2).realize(())
        red = local_presentation_reduce(ZPRES, f, make_unit_oracle(1))
        idem = idem_witmat(red.pres, f)
        conj = projector_standardize(
            red.pres, f, idem, red, Poly.const(red.pres.ambient, 1),
            MembershipCertificate(Poly.zero(red.pres.ambient)))
        assert conj.k == 1
        assert conj.verify(red.pres, f)

    def test_rank_one_projector(self):
        f = Mat.from_rows([[1, 1], [0, 0]], ())
        red = local_presentation_reduce(ZPRES, f, make_unit_oracle(1))
        idem = idem_witmat(red.pres, f)
        dd = 1  # det(I - H E) with H = 0
        conj = projector_standardize(
            red.pres, f, idem, red, Poly.const(red.pres.ambient, 1),
            MembershipCertificate(Poly.zero(red.pres.ambient)))
        assert conj.k == 1
        assert conj.verify(red.pres, f)
        prod = conj.c @ f.embed(red.pres.ambient) @ conj.c_inv
        target = CanonicalProjector(1, 2, 2).realize(red.pres.ambient)
        diff = prod - target
        assert all(c.verify(red.pres) for c in conj.conj_certs)

    def test_idempotent_unit_branch(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        f = Mat.from_rows([["e"]], pres.ambient)
        red = local_presentation_reduce(pres, f, make_unit_oracle("e"))
        idem = idem_witmat(red.pres, f)
        conj = projector_standardize(
            red.pres, f, idem, red, Poly.const(red.pres.ambient, 1),
            MembershipCertificate(Poly.zero(red.pres.ambient)))
        assert conj.k == 1
        assert conj.verify(red.pres, f)


class TestAzumayaStep:
    def test_identity_first(self):
        pres = ZPRES
        f = Mat.identity(2, ())
        idem = idem_witmat(pres, f)
        step = azumaya_step(pres, f, idem, "first", Poly.const((), 1),
                            MembershipCertificate(Poly.zero(())))
        assert step.bit == 1
        assert step.f1 == Mat.identity(1, ())
        assert step.conj.verify()
        assert step.f1_idem.verify()

    def test_rank_one_first(self):
        pres = ZPRES
        f = Mat.from_rows([[1, 1], [0, 0]], ())
        idem = idem_witmat(pres, f)
        step = azumaya_step(pres, f, idem, "first", Poly.const((), 1),
                            MembershipCertificate(Poly.zero(())))
        assert step.f1 == Mat.zeros(1, 1, ())
        assert step.conj.rhs == Mat.from_rows([[1, 0], [0, 0]], ())
        assert step.conj.lhs == step.l @ f @ step.l_inv
        assert step.conj.verify()

    def test_idempotent_second_branch(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"]).with_param(
            "v", "v*(1 - e) - 1")
        f = Mat.from_rows([["e"]], pres.ambient)
        idem = idem_witmat(pres, f)
        cert = MembershipCertificate(pres.parse("v*(1 - e) - 1"),
                                     ((("param", 0), pres.const(1)),))
        step = azumaya_step(pres, f, idem, "second", pres.parse("v"), cert)
        assert step.bit == 0
        assert step.f1.rows == 0
        assert step.conj.rhs == Mat.zeros(1, 1, pres.ambient)
        assert step.conj.verify()

    def test_inverse_witness_checked(self):
        pres = ZPRES
        f = Mat.identity(1, ())
        idem = idem_witmat(pres, f)
        with pytest.raises(CertificateError):
            azumaya_step(pres, f, idem, "first", Poly.const((), 2),
                         MembershipCertificate(Poly.zero(())))
