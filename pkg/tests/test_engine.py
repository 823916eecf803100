"""Dynamic evaluation: rules, branching, collapse, peeling runs."""

import pytest

from idemcert.engine import (
    RULE_NAMES,
    AzumayaResult,
    Branch,
    DynState,
    Leaf,
    RankCertifier,
    apply_rule,
    azumaya_run,
    branch,
    collapse_local,
    collapse_unit_ideal,
    derived_unit_split,
    glue_split,
    param_relation_cert,
    prove_orthogonality,
    render_tree,
    split_local,
    split_unit_ideal,
)
from idemcert.matrix import Mat, WitMat
from idemcert.poly import Poly
from idemcert.presentation import (
    IDEAL,
    UNIT,
    ZERO,
    CertificateError,
    FactCertificate,
    MembershipCertificate,
    RingPresentation,
    fact_check,
    fact_to_membership,
    membership_to_fact,
    reduce_by_relations,
)


def idem_witmat(pres, f):
    f = f.embed(pres.ambient)
    diff = f @ f - f
    certs = []
    for entry in diff.entries:
        if entry.is_zero():
            certs.append(MembershipCertificate(entry))
        else:
            cert = reduce_by_relations(entry, pres)
            assert cert is not None
            certs.append(cert)
    return WitMat(pres, f @ f, f, tuple(certs))


@pytest.fixture
def rich_pres():
    return RingPresentation.build(["x", "y"], eq0=["x*y - 1"],
                                  rnul=["x^2"], unit=["y + 1"])


class TestRules:
    def test_zero_refl(self, rich_pres):
        state = DynState(rich_pres)
        fact = apply_rule("zero_refl", [], state)
        assert fact.kind == ZERO and fact.target.is_zero()

    def test_unit_one_shape(self, rich_pres):
        state = DynState(rich_pres)
        fact = apply_rule("unit_one", [], state)
        assert fact.kind == UNIT
        assert fact.unit_refs == ()
        assert fact.aux == rich_pres.const(-1)
        assert fact_check(fact, rich_pres)

    def test_zero_add_and_scale(self, rich_pres):
        state = DynState(rich_pres)
        base = membership_to_fact(MembershipCertificate(
            rich_pres.parse("x*y - 1"), ((("eq0", 0), rich_pres.const(1)),)))
        assert fact_check(base, rich_pres)
        doubled = apply_rule("zero_add", [base, base], state)
        assert doubled.target == rich_pres.parse("2*x*y - 2")
        scaled = apply_rule("zero_scale", [base], state, arg=rich_pres.parse("y"))
        assert scaled.target == rich_pres.parse("x*y^2 - y")
        assert fact_check(scaled, rich_pres)

    def test_ideal_rules(self, rich_pres):
        state = DynState(rich_pres)
        gen = FactCertificate(IDEAL, rich_pres.parse("x^2"), exponent=1,
                              rnul_terms=((0, rich_pres.const(-1)),))
        assert fact_check(gen, rich_pres)
        summed = apply_rule("ideal_add", [gen, gen], state)
        assert summed.target == rich_pres.parse("2*x^2")
        assert summed.exponent == 2
        scaled = apply_rule("ideal_scale", [gen], state, arg=rich_pres.parse("y"))
        assert scaled.target == rich_pres.parse("x^2*y")
        # radical: the generator is itself a square
        root = apply_rule("ideal_radical", [gen], state, arg=rich_pres.parse("x"))
        assert root.target == rich_pres.parse("x")
        assert root.exponent == 2
        assert root.unit_refs == gen.unit_refs
        assert root.rnul_terms == gen.rnul_terms

    def test_unit_composites(self, rich_pres):
        state = DynState(rich_pres)
        u1 = apply_rule("unit_one", [], state)
        gen = FactCertificate(IDEAL, rich_pres.parse("x^2"), exponent=1,
                              rnul_terms=((0, rich_pres.const(-1)),))
        absorbed = apply_rule("unit_absorb_ideal", [u1, gen], state)
        assert absorbed.kind == UNIT
        assert absorbed.target == rich_pres.parse("1 + x^2")
        assert fact_check(absorbed, rich_pres)
        atom = FactCertificate(UNIT, rich_pres.parse("y + 1"), unit_refs=(0,),
                               aux=rich_pres.const(-1))
        assert fact_check(atom, rich_pres)
        prod = apply_rule("unit_mul", [atom, absorbed], state)
        assert prod.target == rich_pres.parse("(y + 1)*(1 + x^2)")
        assert fact_check(prod, rich_pres)
        factor = apply_rule("unit_factor", [prod], state,
                            arg=(rich_pres.parse("y + 1"),
                                 rich_pres.parse("1 + x^2")))
        assert factor.target == rich_pres.parse("y + 1")
        assert fact_check(factor, rich_pres)

    def test_unit_cancellations(self, rich_pres):
        state = DynState(rich_pres)
        atom = FactCertificate(UNIT, rich_pres.parse("y + 1"), unit_refs=(0,),
                               aux=rich_pres.const(-1))
        # (y+1) * q == 0 where q = (x*y - 1)*(y + 1)... build from the relation
        base = MembershipCertificate(
            rich_pres.parse("(y + 1)*(x*y - 1)"),
            ((("eq0", 0), rich_pres.parse("y + 1")),))
        zfact = membership_to_fact(base)
        out = apply_rule("unit_cancel_zero", [atom, zfact], state,
                         arg=(rich_pres.parse("y + 1"), rich_pres.parse("x*y - 1")))
        assert out.kind == ZERO
        assert out.target == rich_pres.parse("x*y - 1")
        assert fact_check(out, rich_pres)
        jfact = FactCertificate(IDEAL, rich_pres.parse("(y + 1)*x^2"), exponent=1,
                                rnul_terms=((0, rich_pres.parse("-y - 1")),))
        assert fact_check(jfact, rich_pres)
        out2 = apply_rule("unit_cancel_ideal", [atom, jfact], state,
                          arg=(rich_pres.parse("y + 1"), rich_pres.parse("x^2")))
        assert out2.kind == IDEAL
        assert out2.target == rich_pres.parse("x^2")
        assert fact_check(out2, rich_pres)

    def test_every_rule_listed(self):
        assert len(RULE_NAMES) == 13


class TestBranching:
    def test_local_split_relations(self):
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        state = DynState(pres)
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        event, left, right = split_local(state, pres.parse("x"),
                                         pres.parse("1 - x"), trigger)
        assert left.pres.params[0][0] == "u1"
        assert str(left.pres.params[0][1]) == "x*u1 - 1"
        assert right.pres.params[0][0] == "v1"
        assert str(right.pres.params[0][1]) == "-x*v1 + v1 - 1"  # v1*(1-x) - 1
        assert param_relation_cert(left.pres, 0).verify(left.pres)

    def test_local_split_needs_verified_trigger(self):
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        state = DynState(pres)
        bad = MembershipCertificate(pres.parse("x + x - 1"))
        with pytest.raises(CertificateError):
            split_local(state, pres.parse("x"), pres.parse("x"), bad)

    def test_unit_ideal_split_adds_assumptions(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        state = DynState(pres)
        event, left, right = split_unit_ideal(state, pres.parse("e"))
        assert left.pres.rel_unit[-1] == pres.parse("e").embed(left.pres.ambient)
        assert right.pres.rel_rnul[-1] == pres.parse("e").embed(right.pres.ambient)
        assert left.proved[-1].kind == UNIT
        assert right.proved[-1].kind == IDEAL

    def test_inverting_one_makes_sibling_trivial(self):
        # splitting 1 + 0 == 1 gives a branch that inverts 0
        pres = RingPresentation.build(["x"], eq0=[])
        state = DynState(pres)
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        event, left, right = split_local(state, pres.const(1), pres.const(0),
                                         trigger)
        from idemcert.presentation import is_marked_trivial
        assert not is_marked_trivial(left.pres)
        assert is_marked_trivial(right.pres)

    def test_grow_by_path(self):
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        tree = Leaf(DynState(pres))
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        tree = branch(tree, (), "local_split", s=pres.parse("x"),
                      t=pres.parse("1 - x"), trigger=trigger)
        assert isinstance(tree, Branch)
        tree = branch(tree, (0,), "unit_ideal_split",
                      t=tree.children[0].state.pres.parse("x"))
        assert isinstance(tree.children[0], Branch)
        assert sum(1 for _ in tree.leaves()) == 3


class TestCollapse:
    def test_worked_split_example(self):
        # presentation (x; x^2 - x), split on x + (1 - x), goal x^2 - x
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        state = DynState(pres)
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        event, left, right = split_local(state, pres.parse("x"),
                                         pres.parse("1 - x"), trigger)
        goal = pres.parse("x^2 - x")
        lp = left.pres
        cert_left = MembershipCertificate(
            goal.embed(lp.ambient),
            ((("eq0", 0), lp.parse("x*u1")),
             (("param", 0), lp.parse("x*(1 - x)"))))
        assert cert_left.verify(lp)
        rp = right.pres
        cert_right = MembershipCertificate(
            goal.embed(rp.ambient), ((("eq0", 0), rp.const(1)),))
        assert cert_right.verify(rp)
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_local(tree, goal, [cert_left, cert_right])
        assert out.verify(pres)
        # the worked example collapses all the way down to the plain
        # combination with coefficient 1
        assert out.terms == ((("eq0", 0), pres.const(1)),)

    def test_parameter_free_leaves(self):
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        state = DynState(pres)
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        event, left, right = split_local(state, pres.parse("x"),
                                         pres.parse("1 - x"), trigger)
        goal = pres.parse("x^2 - x")
        plain = ((("eq0", 0), pres.const(1)),)
        cl = MembershipCertificate(goal.embed(left.pres.ambient),
                                   ((("eq0", 0), left.pres.const(1)),))
        cr = MembershipCertificate(goal.embed(right.pres.ambient),
                                   ((("eq0", 0), right.pres.const(1)),))
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_local(tree, goal, [cl, cr])
        assert out.verify(pres)
        assert out.terms == plain

    def test_comaximal_pair_goal(self):
        pres = RingPresentation.build(["s", "t"], eq0=["s + t - 1"])
        state = DynState(pres)
        trigger = MembershipCertificate(pres.parse("s + t - 1"),
                                        ((("eq0", 0), pres.const(1)),))
        event, left, right = split_local(state, pres.parse("s"),
                                         pres.parse("t"), trigger)
        goal = pres.parse("(s + t - 1)*(s + t + 1)")
        cl = MembershipCertificate(goal.embed(left.pres.ambient),
                                   ((("eq0", 0),
                                     left.pres.parse("s + t + 1")),))
        cr = MembershipCertificate(goal.embed(right.pres.ambient),
                                   ((("eq0", 0),
                                     right.pres.parse("s + t + 1")),))
        assert cl.verify(left.pres) and cr.verify(right.pres)
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_local(tree, goal, [cl, cr])
        assert out.verify(pres)

    def test_parameter_using_leaves(self):
        # leaf certificates that genuinely use the adjoined inverses
        pres = RingPresentation.build(["x"], eq0=["x^2 - x"])
        state = DynState(pres)
        trigger = MembershipCertificate(Poly.zero(pres.ambient))
        event, left, right = split_local(state, pres.parse("x"),
                                         pres.parse("1 - x"), trigger)
        goal = pres.parse("x^2 - x")
        lp, rp = left.pres, right.pres
        base_l = MembershipCertificate(goal.embed(lp.ambient),
                                       ((("eq0", 0), lp.const(1)),))
        wrapped_l = MembershipCertificate(
            goal.embed(lp.ambient),
            ((("eq0", 0), lp.parse("u1*x")),
             (("param", 0), lp.parse("-(x^2 - x)"))))
        assert wrapped_l.verify(lp)
        wrapped_r = MembershipCertificate(
            goal.embed(rp.ambient),
            ((("eq0", 0), rp.parse("v1*(1 - x)")),
             (("param", 0), rp.parse("-(x^2 - x)"))))
        assert wrapped_r.verify(rp)
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_local(tree, goal, [wrapped_l, wrapped_r])
        assert out.verify(pres)

    def test_unit_ideal_collapse(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        state = DynState(pres)
        event, left, right = split_unit_ideal(state, pres.parse("e"))
        goal = pres.parse("e^2 - e")
        fl = membership_to_fact(MembershipCertificate(
            goal.embed(left.pres.ambient), ((("eq0", 0), left.pres.const(1)),)))
        fr = membership_to_fact(MembershipCertificate(
            goal.embed(right.pres.ambient), ((("eq0", 0), right.pres.const(1)),)))
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_unit_ideal(tree, goal, [fl, fr])
        assert out.kind == ZERO
        assert fact_check(out, pres)
        # over empty predicate relations this converts to plain membership
        back = fact_to_membership(out, pres)
        assert back.verify(pres)

    def test_unit_ideal_collapse_with_atom_use(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        state = DynState(pres)
        event, left, right = split_unit_ideal(state, pres.parse("e"))
        goal = pres.parse("e^2 - e")
        lp, rp = left.pres, right.pres
        # preinvertible branch: scale through the new atom (u = e)
        fl = FactCertificate(ZERO, goal.embed(lp.ambient), unit_refs=(0,),
                             eq0_terms=((("eq0", 0), lp.parse("-e")),))
        assert fact_check(fl, lp)
        # residually-null branch: tilt by the new atom (j-part 1*e)
        fr = FactCertificate(ZERO, goal.embed(rp.ambient),
                             rnul_terms=((0, rp.const(1)),),
                             eq0_terms=((("eq0", 0), rp.parse("-(1 + e)")),))
        assert fact_check(fr, rp)
        tree = Branch(state, event, (Leaf(left), Leaf(right)))
        out = collapse_unit_ideal(tree, goal, [fl, fr])
        assert fact_check(out, pres)
        assert fact_to_membership(out, pres).verify(pres)

    def test_inversion_collapse(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"],
                                      unit=["e"])
        state = DynState(pres)
        atom = FactCertificate(UNIT, pres.parse("e"), unit_refs=(0,),
                               aux=pres.const(-1))
        state = state.with_fact(atom)
        tree = Leaf(state)
        tree = branch(tree, (), "inversion", unit_fact=atom)
        child = tree.children[0].state.pres
        goal = pres.parse("e^2 - e")
        # child certificate using the adjoined inverse
        inner = MembershipCertificate(
            goal.embed(child.ambient),
            ((("eq0", 0), child.parse("u1*e")),
             (("param", 0), child.parse("-(e^2 - e)"))))
        assert inner.verify(child)
        fact = membership_to_fact(inner)
        out = collapse_unit_ideal(tree, goal, [fact])
        assert fact_check(out, pres)


class TestDerivedSplit:
    def test_complement_preinvertible(self):
        pres = RingPresentation.build(["x", "y"], eq0=["x + y - 1"])
        state = DynState(pres)
        event, left, right = split_unit_ideal(state, pres.parse("x"))
        trig = membership_to_fact(MembershipCertificate(
            right.pres.parse("x + y - 1"),
            ((("eq0", 0), right.pres.const(1)),)))
        out = derived_unit_split(right, right.pres.parse("x"),
                                 right.pres.parse("y"), trig)
        assert out.kind == UNIT
        assert out.target == right.pres.parse("y")
        assert fact_check(out, right.pres)


class TestAzumaya:
    def test_single_idempotent_two_leaves(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        f = Mat.from_rows([["e"]], pres.ambient)
        result = azumaya_run(pres, f, idem_witmat(pres, f))
        assert result.leaf_count() == 2
        assert [leaf.rank for leaf in result.leaves] == [1, 0]
        assert [str(leaf.element) for leaf in result.leaves] == ["e", "-e + 1"]
        assert [str(c) for c in result.comax_coeffs] == ["1", "1"]
        assert result.comax_cert.verify(pres)
        assert result.verify(pres, f)

    def test_numeric_identity_trivial_branch(self):
        pres = RingPresentation.build([], eq0=[])
        f = Mat.identity(1, ())
        result = azumaya_run(pres, f, idem_witmat(pres, f))
        assert result.leaf_count() == 2
        assert str(result.leaves[0].element) == "1"
        assert result.leaves[0].rank == 1
        assert str(result.leaves[1].element) == "0"
        assert result.leaves[1].trivial
        assert result.comax_cert.verify(pres)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_leaf_count_identity(self, n):
        pres = RingPresentation.build([], eq0=[])
        f = Mat.identity(n, ())
        result = azumaya_run(pres, f, idem_witmat(pres, f))
        assert result.leaf_count() == 2 ** n
        assert result.verify(pres, f)

    def test_render_tree(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        f = Mat.from_rows([["e"]], pres.ambient)
        result = azumaya_run(pres, f, idem_witmat(pres, f))
        text = render_tree(result.tree, result.leaves)
        assert "split local" in text
        assert "leaf rank=1 inverted=e" in text
        assert text == render_tree(result.tree, result.leaves)  # stable


class TestRankCertifier:
    def test_idempotent_orthogonality(self):
        pres = RingPresentation.build(["e"], eq0=["e^2 - e"])
        f = Mat.from_rows([["e"]], pres.ambient)
        cert = prove_orthogonality(pres, f, idem_witmat(pres, f), 0, 1)
        assert cert.target == pres.parse("(1 - e)*e")
        assert cert.verify(pres)

    def test_numeric_matrix_orthogonality(self):
        pres = RingPresentation.build([], eq0=[])
        f = Mat.from_rows([[1, 1], [0, 0]], ())
        certifier = RankCertifier(pres, f, idem_witmat(pres, f))
        for h in range(3):
            for k in range(3):
                if h != k:
                    cert = certifier.orthogonality(h, k)
                    assert cert.target.is_zero() or cert.verify(pres)

    def test_generic_one_generator(self):
        pres = RingPresentation.build(["f11"], eq0=["f11^2 - f11"])
        f = Mat.from_rows([["f11"]], pres.ambient)
        certifier = RankCertifier(pres, f, idem_witmat(pres, f))
        cert = certifier.orthogonality(0, 1)
        assert cert.target == pres.parse("(1 - f11)*f11")
        assert cert.verify(pres)
        fam = certifier.family_sum(1)
        assert fam.verify(pres)
        tot = certifier.global_sum()
        assert tot.verify(pres)
        minor_cert = certifier.minor_annihilation(0, (0,), (0,))
        assert minor_cert.verify(pres)
