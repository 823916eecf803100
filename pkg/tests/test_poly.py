"""Exact polynomial arithmetic: canonical form, parsing, ring axioms."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idemcert.poly import (
    ContextMismatchError,
    Poly,
    PolyParseError,
    parse_poly,
)

CTX = ("x", "y", "z")


def p(text, ctx=CTX):
    return parse_poly(text, ctx)


@st.composite
def polys(draw, ctx=CTX, max_terms=5, max_deg=4, coeff_bound=9):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exp = []
        budget = max_deg
        for _ in ctx:
            e = draw(st.integers(0, budget))
            exp.append(e)
            budget -= e
        coeff = draw(st.integers(-coeff_bound, coeff_bound))
        terms[tuple(exp)] = coeff
    return Poly(ctx, terms)


class TestArithmetic:
    def test_difference_of_squares(self):
        assert p("(x + 1) * (x - 1)") == p("x^2 - 1")

    def test_additive_identity(self):
        assert p("x^2 - x") + 0 == p("x^2 - x")

    def test_cube_matches_schoolbook(self):
        # oracle: repeated schoolbook multiplication
        s = p("x + y")
        naive = s
        for _ in range(2):
            naive = naive * p("x + y")
        assert s**3 == naive
        assert s**3 == p("x^3 + 3*x^2*y + 3*x*y^2 + y^3")

    def test_pow_zero(self):
        assert p("x + 5") ** 0 == Poly.const(CTX, 1)

    def test_context_mismatch_rejected(self):
        with pytest.raises(ContextMismatchError):
            p("x") + parse_poly("x", ("x",))

    @given(a=polys(), b=polys(), c=polys())
    @settings(max_examples=120, deadline=None)
    def test_ring_axioms(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a
        assert a + Poly.zero(CTX) == a
        assert a * Poly.const(CTX, 1) == a

    @given(a=polys())
    @settings(max_examples=60, deadline=None)
    def test_canonical_order(self, a):
        degs = [sum(exp) for exp in a.terms]
        assert degs == sorted(degs, reverse=True)
        items = list(a.terms)
        for first, second in zip(items, items[1:]):
            assert (sum(first), first) > (sum(second), second)


class TestSubstitution:
    def test_basis_shift(self):
        ctx = ("X", "e")
        q = parse_poly("1 + X*e", ctx)
        shifted = q.substitute({"X": parse_poly("X - 1", ctx)})
        assert shifted == parse_poly("(1 - e) + e*X", ctx)

    def test_identity_substitution(self):
        q = p("x^2")
        assert q.substitute({"x": Poly.var(CTX, "x")}) == q

    def test_all_ones(self):
        q = p("x^7")
        assert q.substitute({"x": Poly.const(CTX, 1)}) == Poly.const(CTX, 1)

    def test_unbound_variable_must_exist_in_image_context(self):
        q = p("x + y")
        with pytest.raises(ContextMismatchError):
            q.substitute({"x": parse_poly("t", ("t",))})


class TestCoefficients:
    def test_collect_by_degree(self):
        ctx = ("x", "u")
        q = parse_poly("2*u*x - u*x^2 + x - 1", ctx)
        c0, c1 = q.coeffs_in("u")
        assert c0 == parse_poly("x - 1", ctx)
        assert c1 == parse_poly("2*x - x^2", ctx)

    def test_constant(self):
        assert p("7").coeffs_in("y") == [p("7")]

    def test_pure_power(self):
        cs = p("z^3").coeffs_in("z")
        assert cs == [p("0"), p("0"), p("0"), p("1")]

    @given(a=polys())
    @settings(max_examples=60, deadline=None)
    def test_round_trip(self, a):
        cs = a.coeffs_in("y")
        rebuilt = Poly.zero(CTX)
        for k, ck in enumerate(cs):
            rebuilt = rebuilt + ck * Poly.var(CTX, "y") ** k
        assert rebuilt == a


class TestTextForm:
    @pytest.mark.parametrize("text,expect", [
        ("0", "0"),
        ("x - x", "0"),
        ("- x + 1", "-x + 1"),
        ("3*x*y^2 - y + 7", "3*x*y^2 - y + 7"),
        ("x*(y + 1)", "x*y + x"),
        ("  x ^ 2  -  1 ", "x^2 - 1"),
        ("-(x - y)", "-x + y"),
        ("-5", "-5"),
        ("x^2*y - x*y^2", "x^2*y - x*y^2"),
    ])
    def test_canonical_strings(self, text, expect):
        assert str(p(text)) == expect

    @given(a=polys())
    @settings(max_examples=80, deadline=None)
    def test_parse_round_trip(self, a):
        assert parse_poly(str(a), CTX) == a

    def test_unknown_variable(self):
        with pytest.raises(PolyParseError):
            p("w + 1")

    def test_garbage(self):
        with pytest.raises(PolyParseError):
            p("x ++")
        with pytest.raises(PolyParseError):
            p("(x")
        with pytest.raises(PolyParseError):
            p("x @ y")

    def test_embed_and_restrict(self):
        small = parse_poly("x^2 - x", ("x",))
        big = small.embed(("x", "y"))
        assert str(big) == "x^2 - x"
        assert big.restrict(("x",)) == small
        with pytest.raises(ContextMismatchError):
            parse_poly("x*y", ("x", "y")).restrict(("x",))
