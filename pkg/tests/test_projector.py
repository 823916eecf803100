"""Idempotent structure: rank polynomial, hidden idempotents, family."""

import random

import pytest

from idemcert.matrix import CanonicalProjector, Mat, det_cofactor
from idemcert.poly import Poly, parse_poly
from idemcert.presentation import RingPresentation
from idemcert.projector import (
    CheckResult,
    ComaximalFamily,
    IdempotentSystem,
    NotIdempotentError,
    ProjectorMat,
    charpoly_decomposition_check,
    comaximal_family,
    constant_rank_check,
    fundamental_idempotents,
    localization_rank,
    minor_annihilation,
    rank_polynomial,
)

ZPRES = RingPresentation.build([], eq0=[])
EPRES = RingPresentation.build(["e"], eq0=["e^2 - e"])


def zproj(rows):
    return ProjectorMat.build(Mat.from_rows(rows, ()), ZPRES)


def eproj():
    return ProjectorMat.build(Mat.from_rows([["e"]], EPRES.ambient), EPRES)


def random_unimodular(rng, n, bound=3):
    if n == 1:
        return Mat.from_rows([[rng.choice([-1, 1])]], ())
    while True:
        u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        for _ in range(3 * n):
            i, j = rng.sample(range(n), 2)
            lam = rng.choice([-2, -1, 1, 2])
            for c in range(n):
                u[i][c] += lam * u[j][c]
        if max(abs(x) for row in u for x in row) <= bound:
            return Mat.from_rows(u, ())


def integer_inverse(u):
    n = u.rows
    d = det_cofactor(u).const_value()
    assert d in (1, -1)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            rs = [r for r in range(n) if r != j]
            cs = [c for c in range(n) if c != i]
            cof = det_cofactor(u.submatrix(rs, cs)).const_value()
            row.append(d * cof * (-1) ** (i + j))
        rows.append(row)
    return Mat.from_rows(rows, ())


def random_projector(rng, n, k=None):
    if k is None:
        k = rng.randrange(n + 1)
    u = random_unimodular(rng, n)
    f = u @ CanonicalProjector(k, n, n).realize(()) @ integer_inverse(u)
    return ProjectorMat.build(f, ZPRES), k


class TestProjectorMat:
    def test_non_idempotent_rejected(self):
        with pytest.raises(NotIdempotentError):
            zproj([[1, 1], [0, 1]])

    def test_symbolic_idempotent(self):
        fp = eproj()
        assert fp.verify()

    def test_non_square_rejected(self):
        with pytest.raises(NotIdempotentError):
            ProjectorMat.build(Mat.from_rows([[1, 0]], ()), ZPRES)


class TestRankPolynomial:
    def test_zero_matrix(self):
        fp = zproj([[0, 0], [0, 0]])
        assert rank_polynomial(fp) == parse_poly("1", ("X",))

    def test_identity(self):
        fp = zproj([[1, 0], [0, 1]])
        assert rank_polynomial(fp) == parse_poly("X^2", ("X",))

    def test_rank_one(self):
        fp = zproj([[1, 1], [0, 0]])
        assert rank_polynomial(fp) == parse_poly("X", ("X",))

    def test_symbolic(self):
        fp = eproj()
        assert rank_polynomial(fp) == parse_poly("(1 - e) + e*X", ("e", "X"))

    def test_evaluates_to_one(self):
        rng = random.Random(11)
        for _ in range(8):
            fp, _ = random_projector(rng, rng.randrange(1, 5))
            rp = rank_polynomial(fp)
            xname = rp.context[-1]
            assert rp.substitute({xname: Poly.const(rp.context, 1)}) == 1


class TestFundamentalIdempotents:
    def test_symbolic_idempotent(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        assert ids.r == (EPRES.parse("1 - e"), EPRES.parse("e"))
        # the worked reduction gives coefficient -1 on the relation
        assert ids.orthogonality[(0, 1)].terms == \
            ((("eq0", 0), EPRES.const(-1)),)
        assert ids.verify(EPRES)

    def test_numeric_exactly_one_nonzero(self):
        rng = random.Random(5)
        for _ in range(10):
            n = rng.randrange(1, 5)
            fp, k = random_projector(rng, n)
            ids = fundamental_idempotents(fp)
            values = [r.const_value() if not r.is_zero() else 0 for r in ids.r]
            assert values[k] == 1
            assert all(v == 0 for i, v in enumerate(values) if i != k)
            assert ids.verify(ZPRES)

    def test_full_identity(self):
        fp = zproj([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        ids = fundamental_idempotents(fp)
        assert [str(r) for r in ids.r] == ["0", "0", "0", "1"]


class TestComaximalFamily:
    def test_rank_one_projector(self):
        fp = zproj([[1, 1], [0, 0]])
        ids = fundamental_idempotents(fp)
        fam = comaximal_family(fp, ids)
        rank1 = {subset: s for k, subset, s in fam.entries if k == 1}
        assert rank1[(0,)] == Poly.const((), 1)
        assert rank1[(1,)] == Poly.zero(())
        assert fam.verify(ZPRES, ids)

    def test_zero_matrix_single_entry(self):
        fp = zproj([[0, 0], [0, 0]])
        ids = fundamental_idempotents(fp)
        fam = comaximal_family(fp, ids)
        assert fam.entries[0] == (0, (), Poly.const((), 1))
        assert fam.verify(ZPRES, ids)

    def test_symbolic(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        fam = comaximal_family(fp, ids)
        fam_map = {(k, subset): s for k, subset, s in fam.entries}
        assert fam_map[(0, ())] == EPRES.parse("1 - e")
        assert fam_map[(1, (0,))] == EPRES.parse("e^2")
        assert fam.verify(EPRES, ids)
        assert fam.global_sum.verify(EPRES)


class TestMinorAnnihilation:
    def test_rank_one(self):
        fp = zproj([[1, 1], [0, 0]])
        ids = fundamental_idempotents(fp)
        certs = minor_annihilation(fp, ids, 1)
        assert len(certs) == 1  # only the full 2x2 minor
        assert all(cert.target.is_zero() for _, _, cert in certs)

    def test_symbolic_rank_zero(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        certs = minor_annihilation(fp, ids, 0)
        ((rows, cols, cert),) = certs
        assert cert.target == EPRES.parse("(1 - e)*e")
        assert cert.verify(EPRES)

    def test_numeric_random(self):
        rng = random.Random(17)
        fp, k = random_projector(rng, 3)
        ids = fundamental_idempotents(fp)
        for kk in range(3):
            for _, _, cert in minor_annihilation(fp, ids, kk):
                assert cert.verify(ZPRES)


class TestConstantRank:
    def test_canonical_matrices(self):
        for n, k in [(2, 0), (2, 1), (2, 2), (3, 2)]:
            fp = ProjectorMat.build(CanonicalProjector(k, n, n).realize(()), ZPRES)
            for kk in range(n + 1):
                want = CheckResult.TRUE if kk == k else CheckResult.FALSE
                assert constant_rank_check(fp, kk) is want

    def test_rank_one(self):
        fp = zproj([[1, 1], [0, 0]])
        assert constant_rank_check(fp, 1) is CheckResult.TRUE
        assert constant_rank_check(fp, 0) is CheckResult.FALSE

    def test_symbolic_no_constant_rank(self):
        fp = eproj()
        assert constant_rank_check(fp, 0) is CheckResult.FALSE
        assert constant_rank_check(fp, 1) is CheckResult.FALSE
        assert constant_rank_check(fp, 0, mode="dynamic-nilpotent") \
            is CheckResult.UNKNOWN
        assert constant_rank_check(fp, 1, mode="dynamic-nilpotent") \
            is CheckResult.UNKNOWN

    def test_dynamic_mode_confirms(self):
        fp = zproj([[1, 1], [0, 0]])
        assert constant_rank_check(fp, 1, mode="dynamic-nilpotent") \
            is CheckResult.TRUE


class TestDecompositionCheck:
    def test_examples(self):
        assert charpoly_decomposition_check(zproj([[1, 1], [0, 0]]))
        assert charpoly_decomposition_check(zproj([[0, 0], [0, 0]]))
        assert charpoly_decomposition_check(eproj())

    def test_random(self):
        rng = random.Random(23)
        for _ in range(10):
            fp, _ = random_projector(rng, rng.randrange(1, 5))
            assert charpoly_decomposition_check(fp)


class TestLocalizationRank:
    def test_idempotent_divides_itself(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        assert localization_rank(fp, ids, ids.r[1]) == 1

    def test_symbolic_element(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        assert localization_rank(fp, ids, EPRES.parse("e")) == 1

    def test_inconclusive(self):
        fp = eproj()
        ids = fundamental_idempotents(fp)
        assert localization_rank(fp, ids, EPRES.const(1)) is None
