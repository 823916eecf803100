"""Dynamic evaluation of presented rings as local rings.

A computation under the local-ring rule branches: whenever s + t == 1 is
certified, one child adjoins an inverse for s, the other for t.  The
resulting finite tree proves facts at its leaves; the collapse
procedures eliminate the adjoined inverses (clearing denominators, then
recombining the two sides through a binomial splitting) and return a
certificate over the original presentation.  Nothing here decides
anything: every function transforms verified certificates into verified
certificates along fixed schedules.

The richer predicate theory (residually-null and preinvertible atoms)
has its own branching rule, splitting on "preinvertible or residually
null", and its own collapse combining the two certificate shapes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .freeness import ConjugationResult, azumaya_step
from .matrix import (
    CanonicalProjector,
    Mat,
    WitMat,
    det_cofactor,
    det_identity_plus_scaled,
    fresh_name,
    wmat_det,
    wmat_embed,
    wmat_minor,
    wmat_mul,
    wmat_sym,
    wmat_trans,
)
from .poly import Poly, effort_limit
from .presentation import (
    IDEAL,
    UNIT,
    ZERO,
    CertificateError,
    EqualityWitness,
    FactCertificate,
    MembershipCertificate,
    RingPresentation,
    fact_check,
    is_marked_trivial,
    witness_add,
    witness_mul,
    witness_sub,
    witness_through_polymap,
)

# -- theories ---------------------------------------------------------------

RING = "ring"
LOCAL_RING = "local_ring"
RING_IDEAL_UNITS = "ring_ideal_units"
LOCAL_RING_MAX_IDEAL = "local_ring_max_ideal"

_THEORY_EVENTS = {
    RING: frozenset(),
    LOCAL_RING: frozenset({"local_split"}),
    RING_IDEAL_UNITS: frozenset(),
    LOCAL_RING_MAX_IDEAL: frozenset({"unit_ideal_split", "inversion"}),
}


@dataclass(frozen=True)
class DynTheory:
    tag: str

    def allows(self, event_kind: str) -> bool:
        if self.tag not in _THEORY_EVENTS:
            raise ValueError(f"unknown theory {self.tag!r}")
        return event_kind in _THEORY_EVENTS[self.tag]


@dataclass(frozen=True)
class DynState:
    """A presentation plus the facts proved so far along a branch."""

    pres: RingPresentation
    proved: tuple[FactCertificate, ...] = ()

    def __post_init__(self):
        for fact in self.proved:
            if not fact.verify(self.pres):
                raise CertificateError("state contains a non-verifying fact")

    def with_fact(self, fact: FactCertificate) -> "DynState":
        if not fact.verify(self.pres):
            raise CertificateError("refusing to store a non-verifying fact")
        return DynState(self.pres, self.proved + (fact,))


# -- proof rules as certificate transformers --------------------------------

def _expect(fact: FactCertificate, kind: str, pres: RingPresentation) -> None:
    if fact.kind != kind:
        raise CertificateError(f"rule expects a {kind} fact, got {fact.kind}")
    if not fact.verify(pres):
        raise CertificateError("rule input does not verify")


def _scaled_terms(terms, factor):
    return tuple((ref, coeff * factor) for ref, coeff in terms)


def _scaled_rnul(terms, factor):
    return tuple((i, coeff * factor) for i, coeff in terms)


def _binomial_split(s: Poly, t: Poly, n: int, m: int) -> tuple[Poly, Poly]:
    """a, b with a*s**n + b*t**m == (s + t)**(n + m), by assigning each
    monomial of the expansion to the s-side when its s-exponent reaches n."""
    ctx = s.context
    p = n + m
    if p == 0:
        return Poly.const(ctx, 1), Poly.zero(ctx)
    a = Poly.zero(ctx)
    b = Poly.zero(ctx)
    for j in range(p + 1):
        coeff = math.comb(p, j)
        if j >= n:
            a = a + coeff * s ** (j - n) * t ** (p - j)
        else:
            b = b + coeff * s ** j * t ** (p - j - m)
    return a, b


def _power_tail(base_cert_target: Poly, power: int) -> Poly:
    """h with (1 + d)**power - 1 == d*h for d the certificate target."""
    d = base_cert_target
    h = Poly.zero(d.context)
    for i in range(1, power + 1):
        h = h + math.comb(power, i) * d ** (i - 1)
    return h


def apply_rule(rule: str, inputs: Sequence[FactCertificate], state: DynState,
               arg=None) -> FactCertificate:
    """Apply one proof rule, building the output certificate explicitly.

    ``arg`` carries the rule's side data: the scaling polynomial for the
    scaling rules, the root for the radical rule, the factor pair for
    the factor/cancellation rules.
    """
    pres = state.pres
    amb = pres.ambient
    out = _RULES[rule](list(inputs), pres, arg)
    if not out.verify(pres):
        raise CertificateError(f"rule {rule} produced a non-verifying certificate")
    return out


def _rule_zero_refl(inputs, pres, arg):
    return FactCertificate(ZERO, pres.zero_poly())


def _rule_zero_add(inputs, pres, arg):
    f1, f2 = inputs
    _expect(f1, ZERO, pres)
    _expect(f2, ZERO, pres)
    u1, u2 = f1.unit_value(pres), f2.unit_value(pres)
    j1, j2 = f1.rnul_value(pres), f2.rnul_value(pres)
    return FactCertificate(
        ZERO, f1.target.embed(pres.ambient) + f2.target.embed(pres.ambient),
        unit_refs=f1.unit_refs + f2.unit_refs,
        rnul_terms=_scaled_rnul(f2.rnul_terms, u1)
        + _scaled_rnul(f1.rnul_terms, u2 + j2),
        eq0_terms=_scaled_terms(f1.eq0_terms, u2 + j2)
        + _scaled_terms(f2.eq0_terms, u1 + j1))


def _rule_zero_scale(inputs, pres, arg):
    (f1,) = inputs
    _expect(f1, ZERO, pres)
    y = arg.embed(pres.ambient)
    return FactCertificate(
        ZERO, f1.target.embed(pres.ambient) * y,
        unit_refs=f1.unit_refs, rnul_terms=f1.rnul_terms,
        eq0_terms=_scaled_terms(f1.eq0_terms, y))


def _rule_ideal_of_zero(inputs, pres, arg):
    (f1,) = inputs
    _expect(f1, ZERO, pres)
    t = f1.target.embed(pres.ambient)
    return FactCertificate(
        IDEAL, t, exponent=1,
        unit_refs=f1.unit_refs,
        rnul_terms=_scaled_rnul(f1.rnul_terms, t),
        eq0_terms=f1.eq0_terms)


def _rule_ideal_add(inputs, pres, arg):
    f1, f2 = inputs
    _expect(f1, IDEAL, pres)
    _expect(f2, IDEAL, pres)
    t1 = f1.target.embed(pres.ambient)
    t2 = f2.target.embed(pres.ambient)
    m, n = f1.exponent, f2.exponent
    a, b = _binomial_split(t1, t2, m, n)
    u1, u2 = f1.unit_value(pres), f2.unit_value(pres)
    ca = u2 * a
    cb = u1 * b
    return FactCertificate(
        IDEAL, t1 + t2, exponent=m + n,
        unit_refs=f1.unit_refs + f2.unit_refs,
        rnul_terms=_scaled_rnul(f1.rnul_terms, ca) + _scaled_rnul(f2.rnul_terms, cb),
        eq0_terms=_scaled_terms(f1.eq0_terms, ca) + _scaled_terms(f2.eq0_terms, cb))


def _rule_ideal_scale(inputs, pres, arg):
    (f1,) = inputs
    _expect(f1, IDEAL, pres)
    y = arg.embed(pres.ambient)
    ym = y ** f1.exponent
    return FactCertificate(
        IDEAL, f1.target.embed(pres.ambient) * y, exponent=f1.exponent,
        unit_refs=f1.unit_refs,
        rnul_terms=_scaled_rnul(f1.rnul_terms, ym),
        eq0_terms=_scaled_terms(f1.eq0_terms, ym))


def _rule_ideal_radical(inputs, pres, arg):
    (f1,) = inputs
    _expect(f1, IDEAL, pres)
    root = arg.embed(pres.ambient)
    if f1.target.embed(pres.ambient) != root * root:
        raise CertificateError("radical rule needs the square of the given root")
    return FactCertificate(
        IDEAL, root, exponent=2 * f1.exponent,
        unit_refs=f1.unit_refs, rnul_terms=f1.rnul_terms,
        eq0_terms=f1.eq0_terms)


def _rule_unit_one(inputs, pres, arg):
    return FactCertificate(UNIT, pres.const(1), aux=pres.const(-1))


def _rule_unit_absorb_ideal(inputs, pres, arg):
    fu, fj = inputs
    _expect(fu, UNIT, pres)
    _expect(fj, IDEAL, pres)
    amb = pres.ambient
    x = fu.target.embed(amb)
    y = fj.target.embed(amb)
    m = fj.exponent
    u2, j2, i2 = fu.unit_value(pres), fu.rnul_value(pres), fu.eq0_value(pres)
    a2 = fu.aux.embed(amb)
    u1 = fj.unit_value(pres)
    s_total = x + y
    w = u2 + j2 + i2
    # (w + a2*(x+y))^m = w^m + (x+y)*A ; w^m = u2^m + (j2+i2)*B
    a_co = Poly.zero(amb)
    for i in range(1, m + 1):
        a_co = a_co + math.comb(m, i) * a2 ** i * s_total ** (i - 1) * w ** (m - i)
    b_co = Poly.zero(amb)
    for i in range(1, m + 1):
        b_co = b_co + math.comb(m, i) * u2 ** (m - i) * (j2 + i2) ** (i - 1)
    a2m = a2 ** m
    return FactCertificate(
        UNIT, s_total,
        unit_refs=fj.unit_refs + fu.unit_refs * m,
        rnul_terms=_scaled_rnul(fu.rnul_terms, u1 * b_co)
        + _scaled_rnul(fj.rnul_terms, a2m),
        aux=u1 * a_co,
        eq0_terms=_scaled_terms(fu.eq0_terms, u1 * b_co)
        + _scaled_terms(fj.eq0_terms, a2m))


def _rule_unit_mul(inputs, pres, arg):
    f1, f2 = inputs
    _expect(f1, UNIT, pres)
    _expect(f2, UNIT, pres)
    amb = pres.ambient
    x = f1.target.embed(amb)
    y = f2.target.embed(amb)
    u1, j1, i1 = f1.unit_value(pres), f1.rnul_value(pres), f1.eq0_value(pres)
    u2, j2, i2 = f2.unit_value(pres), f2.rnul_value(pres), f2.eq0_value(pres)
    a1 = f1.aux.embed(amb)
    a2 = f2.aux.embed(amb)
    return FactCertificate(
        UNIT, x * y,
        unit_refs=f1.unit_refs + f2.unit_refs,
        rnul_terms=_scaled_rnul(f2.rnul_terms, u1)
        + _scaled_rnul(f1.rnul_terms, u2 + j2),
        aux=-a1 * a2,
        eq0_terms=_scaled_terms(f1.eq0_terms, u2 + j2 + i2)
        + _scaled_terms(f2.eq0_terms, u1 + j1))


def _rule_unit_factor(inputs, pres, arg):
    (f1,) = inputs
    _expect(f1, UNIT, pres)
    amb = pres.ambient
    x, y = (p.embed(amb) for p in arg)
    if f1.target.embed(amb) != x * y:
        raise CertificateError("factor rule needs target == x*y")
    return FactCertificate(
        UNIT, x, unit_refs=f1.unit_refs, rnul_terms=f1.rnul_terms,
        aux=f1.aux.embed(amb) * y, eq0_terms=f1.eq0_terms)


def _rule_unit_cancel_zero(inputs, pres, arg):
    fu, fz = inputs
    _expect(fu, UNIT, pres)
    _expect(fz, ZERO, pres)
    amb = pres.ambient
    x, y = (p.embed(amb) for p in arg)
    if fu.target.embed(amb) != x or fz.target.embed(amb) != x * y:
        raise CertificateError("cancellation needs facts about x and x*y")
    u1, j1, i1 = fu.unit_value(pres), fu.rnul_value(pres), fu.eq0_value(pres)
    u2, j2 = fz.unit_value(pres), fz.rnul_value(pres)
    a1 = fu.aux.embed(amb)
    return FactCertificate(
        ZERO, y,
        unit_refs=fu.unit_refs + fz.unit_refs,
        rnul_terms=_scaled_rnul(fz.rnul_terms, u1)
        + _scaled_rnul(fu.rnul_terms, u2 + j2),
        eq0_terms=_scaled_terms(fu.eq0_terms, (u2 + j2) * y)
        + _scaled_terms(fz.eq0_terms, -a1))


def _rule_unit_cancel_ideal(inputs, pres, arg):
    fu, fj = inputs
    _expect(fu, UNIT, pres)
    _expect(fj, IDEAL, pres)
    amb = pres.ambient
    x, y = (p.embed(amb) for p in arg)
    if fu.target.embed(amb) != x or fj.target.embed(amb) != x * y:
        raise CertificateError("cancellation needs facts about x and x*y")
    m = fj.exponent
    u1, j1, i1 = fu.unit_value(pres), fu.rnul_value(pres), fu.eq0_value(pres)
    u2 = fj.unit_value(pres)
    a1 = fu.aux.embed(amb)
    b_co = Poly.zero(amb)
    for i in range(1, m + 1):
        b_co = b_co + math.comb(m, i) * u1 ** (m - i) * (j1 + i1) ** (i - 1)
    neg_a1_m = (-a1) ** m
    ym = y ** m
    return FactCertificate(
        IDEAL, y, exponent=m,
        unit_refs=fu.unit_refs * m + fj.unit_refs,
        rnul_terms=_scaled_rnul(fu.rnul_terms, b_co * u2 * ym)
        + _scaled_rnul(fj.rnul_terms, neg_a1_m),
        eq0_terms=_scaled_terms(fu.eq0_terms, b_co * u2 * ym)
        + _scaled_terms(fj.eq0_terms, neg_a1_m))


_RULES: dict[str, Callable] = {
    "zero_refl": _rule_zero_refl,
    "zero_add": _rule_zero_add,
    "zero_scale": _rule_zero_scale,
    "ideal_of_zero": _rule_ideal_of_zero,
    "ideal_add": _rule_ideal_add,
    "ideal_scale": _rule_ideal_scale,
    "ideal_radical": _rule_ideal_radical,
    "unit_one": _rule_unit_one,
    "unit_absorb_ideal": _rule_unit_absorb_ideal,
    "unit_mul": _rule_unit_mul,
    "unit_factor": _rule_unit_factor,
    "unit_cancel_zero": _rule_unit_cancel_zero,
    "unit_cancel_ideal": _rule_unit_cancel_ideal,
}

RULE_NAMES = tuple(sorted(_RULES))


def derived_unit_split(state: DynState, x: Poly, y: Poly,
                       trigger_zero: FactCertificate) -> FactCertificate:
    """Derived rule: from a zero-fact for x + y - 1 and a residually-null
    fact for x, conclude y preinvertible (so the "one of x, y is
    preinvertible" split needs no primitive of its own: branch on x with
    the predicate split and use this in the residually-null child)."""
    pres = state.pres
    amb = pres.ambient
    x = x.embed(amb)
    y = y.embed(amb)
    ideal_x = None
    for fact in state.proved:
        if fact.kind == IDEAL and fact.target == x:
            ideal_x = fact
            break
    if ideal_x is None:
        raise CertificateError("derived split needs a residually-null fact for x")
    unit_one = apply_rule("unit_one", [], state)
    neg_x = apply_rule("ideal_scale", [ideal_x], state, arg=pres.const(-1))
    unit_comp = apply_rule("unit_absorb_ideal", [unit_one, neg_x], state)
    # unit_comp certifies 1 - x; shift by the zero-fact for x + y - 1
    shift = apply_rule("ideal_of_zero", [trigger_zero], state)
    out = apply_rule("unit_absorb_ideal", [unit_comp, shift], state)
    if out.target != y:
        raise CertificateError("derived split produced the wrong target")
    return out


# -- evaluation trees --------------------------------------------------------

@dataclass(frozen=True)
class LocalSplit:
    """Invert s on the left, t on the right, justified by s + t == 1."""

    s: Poly
    t: Poly
    trigger: MembershipCertificate
    param_left: str
    param_right: str

    kind = "local_split"


@dataclass(frozen=True)
class UnitIdealSplit:
    """Assume t preinvertible on the left, residually null on the right."""

    t: Poly

    kind = "unit_ideal_split"


@dataclass(frozen=True)
class Inversion:
    """Adjoin an inverse for x, justified by a preinvertibility fact."""

    x: Poly
    unit_fact: FactCertificate
    param: str

    kind = "inversion"


@dataclass(frozen=True)
class Leaf:
    state: DynState

    def leaves(self):
        yield self

    def size(self):
        return 1


@dataclass(frozen=True)
class Branch:
    state: DynState
    event: LocalSplit | UnitIdealSplit | Inversion
    children: tuple["EvalTree", ...]

    def leaves(self):
        for child in self.children:
            yield from child.leaves()

    def size(self):
        return 1 + sum(c.size() for c in self.children)


EvalTree = Leaf | Branch


def _fresh_param(pres: RingPresentation, base: str) -> str:
    return fresh_name(f"{base}{len(pres.params) + 1}", pres.ambient)


def split_local(state: DynState, s: Poly, t: Poly,
                trigger: MembershipCertificate) -> tuple[LocalSplit, DynState, DynState]:
    """Open the two local-ring branches for a certified s + t == 1."""
    pres = state.pres
    amb = pres.ambient
    s = s.embed(amb)
    t = t.embed(amb)
    if trigger.target != s + t - 1 or not trigger.verify(pres):
        raise CertificateError("local split needs a verified s + t == 1")
    uname = _fresh_param(pres, "u")
    vname = _fresh_param(pres, "v")
    pres_l = pres.with_param(uname, Poly.var(amb + (uname,), uname) * s.embed(amb + (uname,)) - 1)
    pres_r = pres.with_param(vname, Poly.var(amb + (vname,), vname) * t.embed(amb + (vname,)) - 1)
    event = LocalSplit(s, t, trigger, uname, vname)
    embed = lambda p: tuple(  # facts carry over unchanged
        FactCertificate(f.kind, f.target.embed(p.ambient),
                        f.unit_refs,
                        None if f.unit_expanded is None else f.unit_expanded.embed(p.ambient),
                        tuple((i, c.embed(p.ambient)) for i, c in f.rnul_terms),
                        tuple((r, c.embed(p.ambient)) for r, c in f.eq0_terms),
                        None if f.aux is None else f.aux.embed(p.ambient),
                        f.exponent)
        for f in state.proved)
    return event, DynState(pres_l, embed(pres_l)), DynState(pres_r, embed(pres_r))


def param_relation_cert(pres: RingPresentation, index: int) -> MembershipCertificate:
    return MembershipCertificate(pres.params[index][1],
                                 ((("param", index), pres.const(1)),))


def split_unit_ideal(state: DynState, t: Poly) -> tuple[UnitIdealSplit, DynState, DynState]:
    """Open the "preinvertible or residually null" branches for t."""
    pres = state.pres
    t = t.embed(pres.ambient)
    pres_u = pres.with_relation(UNIT, t)
    pres_r = pres.with_relation(IDEAL, t)
    event = UnitIdealSplit(t)
    left = DynState(pres_u, tuple(state.proved))
    right = DynState(pres_r, tuple(state.proved))
    # the assumed facts are immediate from the new relations
    unit_fact = FactCertificate(UNIT, t, unit_refs=(len(pres.rel_unit),),
                                aux=pres_u.const(-1))
    ideal_fact = FactCertificate(IDEAL, t, exponent=1,
                                 rnul_terms=((len(pres.rel_rnul),
                                              pres_r.const(-1)),))
    return event, left.with_fact(unit_fact), right.with_fact(ideal_fact)


def adjoin_inverse(state: DynState, unit_fact: FactCertificate
                   ) -> tuple[Inversion, DynState]:
    """Adjoin an actual inverse for a certified preinvertible element."""
    pres = state.pres
    if unit_fact.kind != UNIT or not unit_fact.verify(pres):
        raise CertificateError("inversion needs a verified preinvertibility fact")
    x = unit_fact.target.embed(pres.ambient)
    name = _fresh_param(pres, "u")
    child = pres.with_param(name, Poly.var(pres.ambient + (name,), name)
                            * x.embed(pres.ambient + (name,)) - 1)
    event = Inversion(x, unit_fact, name)
    return event, DynState(child, ())


def branch(tree: EvalTree, path: tuple[int, ...], event_kind: str,
           **event_args) -> EvalTree:
    """Replace the leaf at ``path`` by a branch of the given kind.

    event_args: local_split needs s, t, trigger; unit_ideal_split needs
    t; inversion needs unit_fact.
    """
    if path:
        if not isinstance(tree, Branch):
            raise ValueError("path does not lead to a leaf")
        i = path[0]
        children = list(tree.children)
        children[i] = branch(children[i], path[1:], event_kind, **event_args)
        return Branch(tree.state, tree.event, tuple(children))
    if not isinstance(tree, Leaf):
        raise ValueError("path does not lead to a leaf")
    state = tree.state
    if event_kind == "local_split":
        event, left, right = split_local(state, event_args["s"], event_args["t"],
                                         event_args["trigger"])
        return Branch(state, event, (Leaf(left), Leaf(right)))
    if event_kind == "unit_ideal_split":
        event, left, right = split_unit_ideal(state, event_args["t"])
        return Branch(state, event, (Leaf(left), Leaf(right)))
    if event_kind == "inversion":
        event, child = adjoin_inverse(state, event_args["unit_fact"])
        return Branch(state, event, (Leaf(child),))
    raise ValueError(f"unknown event kind {event_kind!r}")


# -- collapse: denominators out, branches recombined -------------------------

def rabinowitsch_drop(cert: MembershipCertificate, child_pres: RingPresentation,
                      parent_pres: RingPresentation, s: Poly
                      ) -> tuple[int, MembershipCertificate]:
    """Eliminate the innermost adjoined inverse from a certificate.

    Returns (n, certificate for s**n * target over the parent): each
    coefficient c(u) becomes sum(c_k s**(n-k)), the terms on the inverse
    relation vanish, and the exponent n is the largest u-degree seen.
    For the degenerate s == 0 the scaled target is zero outright.
    """
    pname, prel = child_pres.params[-1]
    pidx = len(child_pres.params) - 1
    parent_amb = parent_pres.ambient
    s = s.embed(parent_amb)
    target = cert.target
    if target.degree_in(pname) > 0:
        raise CertificateError("collapse goal must not involve the adjoined inverse")
    if s.is_zero():
        return 1, MembershipCertificate(Poly.zero(parent_amb))
    n = 0
    kept = []
    for ref, coeff in cert.terms:
        if ref == ("param", pidx):
            continue
        n = max(n, max(0, coeff.degree_in(pname)))
        kept.append((ref, coeff))
    s_child = s.embed(child_pres.ambient)
    new_terms = []
    for ref, coeff in kept:
        parts = coeff.coeffs_in(pname)
        phi = Poly.zero(child_pres.ambient)
        for kdeg, part in enumerate(parts):
            phi = phi + part * s_child ** (n - kdeg)
        new_terms.append((ref, phi.restrict(parent_amb)))
    new_target = target.restrict(parent_amb) * s ** n
    return n, MembershipCertificate(new_target, tuple(new_terms))


def collapse_local(tree: EvalTree, goal: Poly,
                   leaf_certs: Sequence[MembershipCertificate]
                   ) -> MembershipCertificate:
    """Fold a local-ring evaluation tree into one parent certificate.

    ``leaf_certs`` lists, in left-first leaf order, a verifying
    certificate for the goal over each leaf presentation.  The result
    verifies over the root presentation by plain expansion.
    """
    it = iter(leaf_certs)
    out = _collapse_local_rec(tree, goal, it)
    try:
        next(it)
    except StopIteration:
        return out
    raise CertificateError("more leaf certificates than leaves")


def _collapse_local_rec(tree: EvalTree, goal: Poly,
                        it: Iterator[MembershipCertificate]) -> MembershipCertificate:
    pres = tree.state.pres
    goal = goal.embed(pres.ambient)
    if isinstance(tree, Leaf):
        cert = next(it)
        if cert.target != goal:
            raise CertificateError("leaf certificate does not target the goal")
        if not cert.verify(pres):
            raise CertificateError("leaf certificate does not verify")
        return cert
    if not isinstance(tree.event, LocalSplit):
        raise CertificateError("membership collapse expects local splits only")
    left_cert = _collapse_local_rec(tree.children[0], goal, it)
    right_cert = _collapse_local_rec(tree.children[1], goal, it)
    return glue_split(pres, tree.event, goal,
                      (tree.children[0].state.pres, left_cert),
                      (tree.children[1].state.pres, right_cert))


def glue_split(pres: RingPresentation, event: LocalSplit, goal: Poly,
               left: tuple[RingPresentation, MembershipCertificate],
               right: tuple[RingPresentation, MembershipCertificate]
               ) -> MembershipCertificate:
    """Recombine the two sides of one local split (the collapse core)."""
    amb = pres.ambient
    goal = goal.embed(amb)
    s = event.s.embed(amb)
    t = event.t.embed(amb)
    n, cl = rabinowitsch_drop(left[1], left[0], pres, s)
    m, cr = rabinowitsch_drop(right[1], right[0], pres, t)
    a, b = _binomial_split(s, t, n, m)
    power = n + m
    d = s + t - 1
    glue_target = a * s ** n + b * t ** m - 1
    if power == 0:
        glue_cert = MembershipCertificate(glue_target)
    else:
        glue_cert = event.trigger.scaled(_power_tail(d, power))
    if glue_cert.target != glue_target:
        raise CertificateError("binomial gluing identity drifted")
    out = cl.scaled(a).plus(cr.scaled(b)).plus(glue_cert.scaled(-goal))
    if out.target != goal:
        raise CertificateError("collapsed certificate misses the goal")
    return out


def collapse_unit_ideal(tree: EvalTree, goal: Poly,
                        leaf_facts: Sequence[FactCertificate]) -> FactCertificate:
    """Fold a preinvertible/residually-null evaluation tree into one
    zero-fact certificate over the root presentation."""
    it = iter(leaf_facts)
    out = _collapse_fact_rec(tree, goal, it)
    try:
        next(it)
    except StopIteration:
        return out
    raise CertificateError("more leaf facts than leaves")


def _collapse_fact_rec(tree: EvalTree, goal: Poly,
                       it: Iterator[FactCertificate]) -> FactCertificate:
    pres = tree.state.pres
    goal = goal.embed(pres.ambient)
    if isinstance(tree, Leaf):
        fact = next(it)
        if fact.kind != ZERO or fact.target != goal:
            raise CertificateError("leaf fact must be a zero-fact for the goal")
        if not fact.verify(pres):
            raise CertificateError("leaf fact does not verify")
        return fact
    if isinstance(tree.event, UnitIdealSplit):
        fu = _collapse_fact_rec(tree.children[0], goal, it)
        fr = _collapse_fact_rec(tree.children[1], goal, it)
        return glue_unit_ideal(pres, tree.event.t, goal, fu, fr)
    if isinstance(tree.event, Inversion):
        inner = _collapse_fact_rec(tree.children[0], goal, it)
        return drop_inversion(pres, tree.event, goal, inner,
                              tree.children[0].state.pres)
    raise CertificateError("fact collapse expects predicate events only")


def glue_unit_ideal(pres: RingPresentation, t: Poly, goal: Poly,
                    fact_u: FactCertificate, fact_r: FactCertificate
                    ) -> FactCertificate:
    """Combine zero-facts from the two predicate branches on t.

    The preinvertible branch contributes (u1 t^m + j1) p + i1 == 0, the
    residually-null branch (u2 + j2 + c t) p + i2 == 0; a telescoping
    power manipulation cancels the t-parts.
    """
    amb = pres.ambient
    t = t.embed(amb)
    goal = goal.embed(amb)
    iu = len(pres.rel_unit)
    ir = len(pres.rel_rnul)

    # split the preinvertible-branch certificate by its use of the new atom
    m = sum(1 for r in fact_u.unit_refs if r == iu)
    u1_refs = tuple(r for r in fact_u.unit_refs if r != iu)
    if any(i >= ir for i, _ in fact_u.rnul_terms):
        raise CertificateError("preinvertible branch used the wrong new relation")
    if m == 0:
        out = FactCertificate(ZERO, goal, unit_refs=u1_refs,
                              rnul_terms=fact_u.rnul_terms,
                              eq0_terms=fact_u.eq0_terms)
        if not out.verify(pres):
            raise CertificateError("re-based branch certificate does not verify")
        return out

    # split the residually-null-branch certificate
    c = Poly.zero(amb)
    j2_terms = []
    for i, coeff in fact_r.rnul_terms:
        if i == ir:
            c = c + coeff.embed(amb)
        else:
            j2_terms.append((i, coeff.embed(amb)))
    if any(r >= iu for r in fact_r.unit_refs):
        raise CertificateError("residually-null branch used the wrong new relation")

    u1v = Poly.const(amb, 1)
    for r in u1_refs:
        u1v = u1v * pres.rel_unit[r]
    u2v = Poly.const(amb, 1)
    for r in fact_r.unit_refs:
        u2v = u2v * pres.rel_unit[r]
    j2v = Poly.zero(amb)
    for i, coeff in j2_terms:
        j2v = j2v + coeff * pres.rel_rnul[i]
    uv = u2v + j2v
    sv = -c * t
    # multiply by sum(uv^(m-1-i) sv^i): (uv - sv) -> uv^m - sv^m
    something = Poly.zero(amb)
    for i in range(m):
        something = something + uv ** (m - 1 - i) * sv ** i
    i3_terms = _scaled_terms(fact_r.eq0_terms, something)
    # uv^m = u2v^m + j3 with j3 the mixed binomial part
    w_co = Poly.zero(amb)
    for i in range(1, m + 1):
        w_co = w_co + math.comb(m, i) * u2v ** (m - i) * j2v ** (i - 1)
    a3 = (-c) ** m
    # (4) + (5): fact_u scaled a3, step (3) scaled u1v
    rnul_out = (_scaled_rnul(fact_u.rnul_terms, a3)
                + _scaled_rnul(j2_terms, u1v * w_co))
    eq0_out = (_scaled_terms(fact_u.eq0_terms, a3)
               + _scaled_terms(i3_terms, u1v))
    out = FactCertificate(ZERO, goal,
                          unit_refs=u1_refs + fact_r.unit_refs * m,
                          rnul_terms=tuple(rnul_out),
                          eq0_terms=tuple(eq0_out))
    if not out.verify(pres):
        raise CertificateError("predicate gluing identity drifted")
    return out


def drop_inversion(pres: RingPresentation, event: Inversion, goal: Poly,
                   fact: FactCertificate, child_pres: RingPresentation
                   ) -> FactCertificate:
    """Eliminate an adjoined inverse from a zero-fact certificate."""
    amb = pres.ambient
    goal = goal.embed(amb)
    x = event.x.embed(amb)
    fx = event.unit_fact
    pname = event.param
    pidx = len(child_pres.params) - 1

    if x.is_zero():
        # preinvertible zero: the fact's own identity times the goal
        u_x = fx.unit_value(pres)
        out = FactCertificate(
            ZERO, goal, unit_refs=fx.unit_refs,
            rnul_terms=fx.rnul_terms,
            eq0_terms=_scaled_terms(fx.eq0_terms, goal))
        if not out.verify(pres):
            raise CertificateError("degenerate inversion collapse failed")
        return out

    degrees = [coeff.degree_in(pname) for _, coeff in fact.rnul_terms]
    degrees += [coeff.degree_in(pname) for ref, coeff in fact.eq0_terms
                if ref != ("param", pidx)]
    n = max(degrees, default=0)
    if n % 2:
        n += 1

    x_child = x.embed(child_pres.ambient)

    def phi(coeff: Poly) -> Poly:
        parts = coeff.coeffs_in(pname)
        total = Poly.zero(child_pres.ambient)
        for k, part in enumerate(parts):
            total = total + part * x_child ** (n - k)
        return total.restrict(amb)

    j_hat = tuple((i, phi(c)) for i, c in fact.rnul_terms)
    i_hat = tuple((r, phi(c)) for r, c in fact.eq0_terms if r != ("param", pidx))

    # (a_x x)^n = (u_x + j_x + i_x)^n split into monoid, ideal, membership parts
    u_xv = fx.unit_value(pres)
    j_xv = fx.rnul_value(pres)
    i_xv = fx.eq0_value(pres)
    a_x = fx.aux.embed(amb)
    w1 = Poly.zero(amb)
    for i in range(1, n + 1):
        w1 = w1 + math.comb(n, i) * u_xv ** (n - i) * j_xv ** (i - 1)
    w2 = Poly.zero(amb)
    for i in range(1, n + 1):
        w2 = w2 + math.comb(n, i) * (u_xv + j_xv) ** (n - i) * i_xv ** (i - 1)
    u_big = Poly.const(amb, 1)
    for r in fact.unit_refs:
        u_big = u_big * pres.rel_unit[r]
    axn = a_x ** n
    out = FactCertificate(
        ZERO, goal,
        unit_refs=fact.unit_refs + fx.unit_refs * n,
        rnul_terms=_scaled_rnul(fx.rnul_terms, u_big * w1)
        + _scaled_rnul(j_hat, axn),
        eq0_terms=_scaled_terms(fx.eq0_terms, u_big * w2 * goal)
        + _scaled_terms(i_hat, axn))
    if not out.verify(pres):
        raise CertificateError("inversion collapse identity drifted")
    return out


# -- the full peeling evaluation ---------------------------------------------

@dataclass(frozen=True)
class AzumayaLeaf:
    """One leaf of the peeling tree: its extended presentation, the
    conjugation to a standard projector, the cleared product of the
    elements inverted along the path, and a triviality mark."""

    path: tuple[str, ...]
    pres: RingPresentation
    rank: int
    conj: ConjugationResult
    element: Poly
    trivial: bool


@dataclass(frozen=True)
class AzumayaResult:
    tree: EvalTree
    leaves: tuple[AzumayaLeaf, ...]
    comax_coeffs: tuple[Poly, ...]
    comax_cert: MembershipCertificate

    def leaf_count(self) -> int:
        return len(self.leaves)

    def verify(self, pres: RingPresentation, f: Mat) -> bool:
        for leaf in self.leaves:
            if not leaf.conj.verify(leaf.pres, f.embed(leaf.pres.ambient)):
                return False
        return self.comax_cert.verify(pres)


@dataclass(frozen=True)
class _Acc:
    """Accumulated conjugation along a path: c f0 c_inv certified equal
    to diag(finished bits) + current block."""

    pres: RingPresentation
    c: Mat
    c_inv: Mat
    total: WitMat
    cc: WitMat
    cinvc: WitMat

    @classmethod
    def initial(cls, pres: RingPresentation, f: Mat) -> "_Acc":
        ident = Mat.identity(f.rows, pres.ambient)
        return cls(pres, ident, ident, WitMat.refl(pres, f.embed(pres.ambient)),
                   WitMat.refl(pres, ident), WitMat.refl(pres, ident))

    def embed(self, pres: RingPresentation) -> "_Acc":
        return _Acc(pres, self.c.embed(pres.ambient), self.c_inv.embed(pres.ambient),
                    wmat_embed(self.total, pres), wmat_embed(self.cc, pres),
                    wmat_embed(self.cinvc, pres))

    def extend(self, step, bits: tuple[int, ...]) -> "_Acc":
        pres = self.pres
        amb = pres.ambient
        d = len(bits)
        bits_mat = Mat(d, d, amb, tuple(
            Poly.const(amb, bits[i] if i == j else 0)
            for i in range(d) for j in range(d)))
        l_emb = Mat.identity(d, amb).block_diag(step.l)
        l_inv_emb = Mat.identity(d, amb).block_diag(step.l_inv)
        zero = MembershipCertificate(Poly.zero(amb))
        n_total = d + step.l.rows

        def block_certs(inner_certs, inner_size):
            certs = []
            for i in range(n_total):
                for j in range(n_total):
                    if i >= d and j >= d:
                        certs.append(inner_certs[(i - d) * inner_size + (j - d)])
                    else:
                        certs.append(zero)
            return tuple(certs)

        conj_emb = WitMat(pres, bits_mat.block_diag(step.conj.lhs),
                          bits_mat.block_diag(step.conj.rhs),
                          block_certs(step.conj.certs, step.l.rows))
        transported = wmat_mul(wmat_mul(WitMat.refl(pres, l_emb), self.total),
                               WitMat.refl(pres, l_inv_emb))
        new_total = wmat_trans(transported, conj_emb)

        ident = Mat.identity(n_total, amb)
        wm_ll = WitMat(pres, l_emb @ l_inv_emb, ident,
                       block_certs(step.ll_certs, step.l.rows))
        wm_lil = WitMat(pres, l_inv_emb @ l_emb, ident,
                        block_certs(step.l_inv_l_certs, step.l.rows))
        new_cc = wmat_trans(
            wmat_mul(wmat_mul(WitMat.refl(pres, l_emb), self.cc),
                     WitMat.refl(pres, l_inv_emb)), wm_ll)
        new_cinvc = wmat_trans(
            wmat_mul(wmat_mul(WitMat.refl(pres, self.c_inv), wm_lil),
                     WitMat.refl(pres, self.c)), self.cinvc)
        return _Acc(pres, l_emb @ self.c, self.c_inv @ l_inv_emb,
                    new_total, new_cc, new_cinvc)


def _leaf_conjugation(acc: _Acc, bits: tuple[int, ...]) -> ConjugationResult:
    pres = acc.pres
    amb = pres.ambient
    n = len(bits)
    k = sum(bits)
    order = [i for i in range(n) if bits[i] == 1] + [i for i in range(n) if bits[i] == 0]
    perm = Mat(n, n, amb, tuple(Poly.const(amb, 1 if c == order[r] else 0)
                                for r in range(n) for c in range(n)))
    perm_t = Mat(n, n, amb, tuple(Poly.const(amb, 1 if order[c] == r else 0)
                                  for r in range(n) for c in range(n)))
    wm_final = wmat_mul(wmat_mul(WitMat.refl(pres, perm), acc.total),
                        WitMat.refl(pres, perm_t))
    target = CanonicalProjector(k, n, n).realize(amb)
    if wm_final.rhs != target:
        raise CertificateError("sorted diagonal is not the standard projector")
    c = perm @ acc.c
    c_inv = acc.c_inv @ perm_t
    wm_cc = wmat_trans(
        wmat_mul(wmat_mul(WitMat.refl(pres, perm), acc.cc),
                 WitMat.refl(pres, perm_t)),
        WitMat.refl(pres, perm @ perm_t))
    if wm_cc.rhs != Mat.identity(n, amb):
        raise CertificateError("permutation transport drifted")
    wm_cinvc = wmat_trans(
        wmat_mul(wmat_mul(WitMat.refl(pres, acc.c_inv), WitMat.refl(pres, perm_t @ perm)),
                 WitMat.refl(pres, acc.c)), acc.cinvc)
    return ConjugationResult(c, c_inv, k, wm_final.certs, wm_cc.certs,
                             wm_cinvc.certs)


def azumaya_run(pres: RingPresentation, f: Mat, idem: WitMat,
                effort: int | None = None) -> AzumayaResult:
    """Evaluate the idempotent matrix under the local-ring rule.

    At each level the split inverts f[0,0] on the left and 1 - f[0,0]
    on the right (the trigger s + t == 1 is exact), yielding exactly
    2**n leaves.  Each leaf carries its conjugation to a standard
    projector; the cleared path products come with a certificate that
    they generate the unit ideal.
    """
    with effort_limit(effort):
        return _azumaya_run_inner(pres, f, idem)


def _azumaya_run_inner(base_pres: RingPresentation, f0: Mat, idem: WitMat):
    leaves: list[AzumayaLeaf] = []

    def rec(pres, f, wm_idem, acc, path, bits):
        amb = pres.ambient
        if f.rows == 0:
            conj = _leaf_conjugation(acc, bits)
            leaf = Leaf(DynState(pres))
            record = AzumayaLeaf(path, pres, sum(bits), conj,
                                 Poly.const(amb, 1), is_marked_trivial(pres))
            leaves.append(record)
            one = Poly.const(amb, 1)
            cert = MembershipCertificate(Poly.zero(amb))
            return leaf, [one], [one], cert
        s = f.entry(0, 0)
        t = 1 - s
        trigger = MembershipCertificate(Poly.zero(amb))
        state = DynState(pres)
        event, state_l, state_r = split_local(state, s, t, trigger)
        sides = []
        for branch_name, child_state, base_elt in (
                ("first", state_l, s), ("second", state_r, t)):
            cpres = child_state.pres
            pidx = len(cpres.params) - 1
            pname = cpres.params[pidx][0]
            inv = Poly.var(cpres.ambient, pname)
            inv_cert = param_relation_cert(cpres, pidx)
            f_c = f.embed(cpres.ambient)
            idem_c = wmat_embed(wm_idem, cpres)
            acc_c = acc.embed(cpres)
            step = azumaya_step(cpres, f_c, idem_c, branch_name, inv, inv_cert)
            acc_next = acc_c.extend(step, bits)
            subtree, elems, coeffs, cert = rec(
                cpres, step.f1, step.f1_idem, acc_next,
                path + (branch_name,), bits + (step.bit,))
            sides.append((cpres, base_elt, subtree, elems, coeffs, cert))
        (pres_l, s_elt, tree_l, elems_l, coeffs_l, cert_l) = sides[0]
        (pres_r, t_elt, tree_r, elems_r, coeffs_r, cert_r) = sides[1]
        tree = Branch(state, event, (tree_l, tree_r))
        elems, coeffs, cert = _comax_combine(
            pres, event, (pres_l, elems_l, coeffs_l, cert_l),
            (pres_r, elems_r, coeffs_r, cert_r))
        return tree, elems, coeffs, cert

    f0 = f0.embed(base_pres.ambient)
    acc0 = _Acc.initial(base_pres, f0)
    tree, elems, coeffs, cert = rec(base_pres, f0, idem, acc0, (), ())
    if not cert.verify(base_pres):
        raise CertificateError("comaximality certificate does not verify")
    leaves_out = []
    for leaf, elt in zip(leaves, elems):
        leaves_out.append(AzumayaLeaf(leaf.path, leaf.pres, leaf.rank, leaf.conj,
                                      elt, leaf.trivial))
    return AzumayaResult(tree, tuple(leaves_out), tuple(coeffs), cert)


def _clear_family(cert, elems, coeffs, child_pres, parent_pres, s):
    """Push a family identity sum(c_i e_i) == 1 out of one adjoined
    inverse: returns the degree used, cleared elements and coefficients,
    and a certificate for sum(cleared) == s**n over the parent."""
    pname = child_pres.params[-1][0]
    pidx = len(child_pres.params) - 1
    parent_amb = parent_pres.ambient
    s = s.embed(parent_amb)
    if s.is_zero():
        zero = Poly.zero(parent_amb)
        return 1, [zero] * len(elems), [zero] * len(elems), None

    def deg(p):
        return max(0, p.degree_in(pname))

    n = 0
    kept = []
    for ref, coeff in cert.terms:
        if ref == ("param", pidx):
            continue
        n = max(n, deg(coeff))
        kept.append((ref, coeff))
    degs = [deg(e) for e in elems]
    for e, c, d in zip(elems, coeffs, degs):
        n = max(n, d + deg(c))
    s_child = s.embed(child_pres.ambient)

    def phi(poly, power):
        parts = poly.coeffs_in(pname)
        total = Poly.zero(child_pres.ambient)
        for k, part in enumerate(parts):
            total = total + part * s_child ** (power - k)
        return total.restrict(parent_amb)

    cleared_elems = [phi(e, d) for e, d in zip(elems, degs)]
    cleared_coeffs = [phi(c, n - d) for c, d in zip(coeffs, degs)]
    new_terms = tuple((ref, phi(c, n)) for ref, c in kept)
    total = Poly.zero(parent_amb)
    for ce, cc in zip(cleared_elems, cleared_coeffs):
        total = total + cc * ce
    out = MembershipCertificate(total - s ** n, new_terms)
    if not out.verify(parent_pres):
        raise CertificateError("family clearing identity drifted")
    return n, cleared_elems, cleared_coeffs, out


def _comax_combine(pres, event: LocalSplit, left, right):
    """Assemble the unit-ideal certificate for the cleared path products
    directly from the branch structure."""
    amb = pres.ambient
    s = event.s
    t = event.t
    (pres_l, elems_l, coeffs_l, cert_l) = left
    (pres_r, elems_r, coeffs_r, cert_r) = right
    n_l, el_l, co_l, cl = _clear_family(cert_l, elems_l, coeffs_l, pres_l, pres, s)
    n_r, el_r, co_r, cr = _clear_family(cert_r, elems_r, coeffs_r, pres_r, pres, t)
    p_l, p_r = n_l + 1, n_r + 1
    power = p_l + p_r - 1
    a = Poly.zero(amb)
    b = Poly.zero(amb)
    for j in range(power + 1):
        coeff = math.comb(power, j)
        if j >= p_l:
            a = a + coeff * s ** (j - p_l) * t ** (power - j)
        else:
            b = b + coeff * s ** j * t ** (power - j - p_r)
    d = s + t - 1
    glue_target = a * s ** p_l + b * t ** p_r - 1
    glue_cert = (MembershipCertificate(glue_target) if d.is_zero()
                 else event.trigger.scaled(_power_tail(d, power)))
    if glue_cert.target != glue_target:
        raise CertificateError("family gluing identity drifted")
    out_elems = [s * e for e in el_l] + [t * e for e in el_r]
    out_coeffs = [a * c for c in co_l] + [b * c for c in co_r]
    total = glue_cert
    if cl is not None:
        total = total.plus(cl.scaled(a * s))
    if cr is not None:
        total = total.plus(cr.scaled(b * t))
    expected = Poly.zero(amb)
    for e, c in zip(out_elems, out_coeffs):
        expected = expected + c * e
    if total.target != expected - 1:
        raise CertificateError("family combination target drifted")
    return out_elems, out_coeffs, total


# -- rank facts at the leaves, collapsed to global certificates --------------

class RankCertifier:
    """One peeling run, reused to certify every rank-polynomial fact.

    At each leaf the conjugation gives entrywise witnesses; pushing them
    through determinant maps yields, for each h, witnesses that the h-th
    rank idempotent of the matrix equals 0 or 1 and that the h-th minor
    sum equals a binomial count.  Collapsing the tree then produces
    certificates over the original presentation.
    """

    def __init__(self, pres: RingPresentation, f: Mat, idem: WitMat,
                 effort: int | None = None):
        self.pres = pres
        self.f = f.embed(pres.ambient)
        self.n = f.rows
        self.effort = effort
        with effort_limit(effort):
            self.result = _azumaya_run_inner(pres, self.f, idem)
            xname = fresh_name("X", pres.ambient)
            shifted = det_identity_plus_scaled(self.f, xname)
            coeffs = shifted.coeffs_in(xname)
            self.minor_sums = [
                (coeffs[h] if h < len(coeffs) else Poly.zero(shifted.context)
                 ).restrict(pres.ambient) for h in range(self.n + 1)]
            xv = Poly.var(shifted.context, xname)
            rank_poly = shifted.substitute({xname: xv - 1})
            rcoeffs = rank_poly.coeffs_in(xname)
            self.rank_idempotents = [
                (rcoeffs[h] if h < len(rcoeffs) else Poly.zero(shifted.context)
                 ).restrict(pres.ambient) for h in range(self.n + 1)]
            self._leaf_data = [self._leaf_witnesses(leaf)
                               for leaf in self.result.leaves]

    # witnesses per leaf ----------------------------------------------------

    def _leaf_witnesses(self, leaf: AzumayaLeaf):
        pres = leaf.pres
        amb = pres.ambient
        n = self.n
        conj = leaf.conj
        fmat = self.f.embed(amb)
        ident = Mat.identity(n, amb)
        target = CanonicalProjector(conj.k, n, n).realize(amb)
        wm_d = WitMat(pres, conj.c @ conj.c_inv, ident, conj.cc_certs)
        wm_e = WitMat(pres, conj.c @ fmat @ conj.c_inv, target, conj.conj_certs)
        w_unit = wmat_det(wm_d)  # det(c) det(c_inv) == 1
        u_c = w_unit.lhs

        slots = tuple(f"d{i}_{j}" for i in range(n) for j in range(n)) + tuple(
            f"e{i}_{j}" for i in range(n) for j in range(n))
        args = ([wm_d.witness(i, j) for i in range(n) for j in range(n)]
                + [wm_e.witness(i, j) for i in range(n) for j in range(n)])
        d_gen = Mat(n, n, slots, tuple(Poly.var(slots, s) for s in slots[:n * n]))
        e_gen = Mat(n, n, slots, tuple(Poly.var(slots, s) for s in slots[n * n:]))

        # mixed determinants pick columns from the second matrix on a subset
        mixed_w = {}
        for h in range(n + 1):
            acc = EqualityWitness.const(pres, 0)
            for subset in itertools.combinations(range(n), h):
                cols = []
                for j in range(n):
                    src = e_gen if j in subset else d_gen
                    cols.append([src.entry(i, j) for i in range(n)])
                mixed = Mat(n, n, slots,
                            tuple(cols[j][i] for i in range(n) for j in range(n)))
                det_map = det_cofactor(mixed)
                acc = witness_add(acc, witness_through_polymap(det_map, args))
            mixed_w[h] = acc

        # u_c * minor_sum_h == binom(k, h)
        e_wit = {}
        r_wit = {}
        k = conj.k
        for h in range(n + 1):
            w = mixed_w[h]
            want_lhs = u_c * self.minor_sums[h].embed(amb)
            if w.lhs != want_lhs:
                raise CertificateError("mixed determinant expansion drifted")
            if w.rhs != Poly.const(amb, math.comb(k, h)):
                raise CertificateError("mixed determinant count drifted")
            e_wit[h] = w
        for h in range(n + 1):
            acc = EqualityWitness.const(pres, 0)
            for j in range(h, n + 1):
                c = (-1) ** (j - h) * math.comb(j, h)
                acc = witness_add(acc, witness_mul(
                    EqualityWitness.const(pres, c), e_wit[j]))
            want_lhs = u_c * self.rank_idempotents[h].embed(amb)
            if acc.lhs != want_lhs:
                raise CertificateError("rank idempotent combination drifted")
            r_wit[h] = acc

        def strip_unit(w, base_value):
            # from u_c * value == const and u_c == 1 derive value == const
            cert = w.cert.plus(w_unit.cert.scaled(-base_value))
            return EqualityWitness(pres, base_value, w.rhs, cert)

        e_final = {h: strip_unit(e_wit[h], self.minor_sums[h].embed(amb))
                   for h in range(n + 1)}
        r_final = {h: strip_unit(r_wit[h], self.rank_idempotents[h].embed(amb))
                   for h in range(n + 1)}
        return {"rank": r_final, "minor_sum": e_final, "wm_d": wm_d,
                "wm_e": wm_e, "conj": conj}

    # collapsed certificates --------------------------------------------------

    def _collapse(self, goal: Poly, leaf_certs) -> MembershipCertificate:
        with effort_limit(self.effort):
            out = collapse_local(self.result.tree, goal, leaf_certs)
        if not out.verify(self.pres):
            raise CertificateError("collapsed certificate does not verify")
        return out

    def orthogonality(self, h: int, k: int) -> MembershipCertificate:
        """Certificate that the h-th and k-th rank idempotents multiply
        to zero in the presented ring."""
        if h == k:
            raise ValueError("orthogonality needs distinct indices")
        goal = self.rank_idempotents[h] * self.rank_idempotents[k]
        certs = []
        for data in self._leaf_data:
            w = witness_mul(data["rank"][h], data["rank"][k])
            if not w.rhs.is_zero():
                raise CertificateError("distinct rank witnesses should multiply to zero")
            certs.append(w.cert)
        return self._collapse(goal, certs)

    def minor_annihilation(self, k: int, rows: tuple[int, ...],
                           cols: tuple[int, ...]) -> MembershipCertificate:
        """Certificate that the k-th rank idempotent kills the given
        order-(k+1) minor of the matrix."""
        goal_minor = det_cofactor(self.f.submatrix(rows, cols))
        goal = self.rank_idempotents[k] * goal_minor
        certs = []
        for data in self._leaf_data:
            pres = data["conj"]
            leaf_pres = data["rank"][k].pres
            conj = data["conj"]
            if conj.k <= k:
                # the minor of a product through k columns vanishes
                wm_f = self._conjugated_matrix_witness(data)
                w_minor = wmat_minor(wm_f, rows, cols)
                if not w_minor.rhs.is_zero():
                    raise CertificateError("low-rank minor did not vanish")
                w = witness_mul(
                    EqualityWitness.refl(leaf_pres,
                                         self.rank_idempotents[k].embed(
                                             leaf_pres.ambient)), w_minor)
            else:
                w = witness_mul(data["rank"][k],
                                EqualityWitness.refl(
                                    leaf_pres, goal_minor.embed(leaf_pres.ambient)))
                if not w.rhs.is_zero():
                    raise CertificateError("rank witness should vanish here")
            certs.append(w.cert)
        return self._collapse(goal, certs)

    def _conjugated_matrix_witness(self, data) -> WitMat:
        conj = data["conj"]
        pres = data["rank"][0].pres
        amb = pres.ambient
        fmat = self.f.embed(amb)
        wm_cinvc = WitMat(pres, conj.c_inv @ conj.c, Mat.identity(self.n, amb),
                          conj.c_inv_c_certs)
        wm1 = wmat_mul(wmat_mul(wm_cinvc, WitMat.refl(pres, fmat)), wm_cinvc)
        wm2 = wmat_mul(wmat_mul(WitMat.refl(pres, conj.c_inv), data["wm_e"]),
                       WitMat.refl(pres, conj.c))
        return wmat_trans(wmat_sym(wm1), wm2)

    def family_sum(self, k: int) -> MembershipCertificate:
        """Certificate that the k-th rank idempotent times the k-th minor
        sum equals the idempotent itself."""
        r_k = self.rank_idempotents[k]
        goal = r_k * self.minor_sums[k] - r_k
        certs = []
        for data in self._leaf_data:
            pres = data["rank"][k].pres
            w = witness_sub(witness_mul(data["rank"][k], data["minor_sum"][k]),
                            data["rank"][k])
            if not w.rhs.is_zero():
                raise CertificateError("family sum witness should vanish")
            certs.append(w.cert)
        return self._collapse(goal, certs)

    def global_sum(self) -> MembershipCertificate:
        """Certificate that the scaled minors over all ranks sum to 1."""
        amb = self.pres.ambient
        goal = Poly.const(amb, -1)
        for k in range(self.n + 1):
            goal = goal + self.rank_idempotents[k] * self.minor_sums[k]
        certs = []
        for data in self._leaf_data:
            pres = data["rank"][0].pres
            acc = EqualityWitness.const(pres, -1)
            for k in range(self.n + 1):
                acc = witness_add(acc, witness_mul(data["rank"][k],
                                                   data["minor_sum"][k]))
            if not acc.rhs.is_zero():
                raise CertificateError("global sum witness should vanish")
            certs.append(acc.cert)
        return self._collapse(goal, certs)


def prove_orthogonality(pres: RingPresentation, f: Mat, idem: WitMat,
                        h: int, k: int,
                        effort: int | None = None) -> MembershipCertificate:
    """Run the peeling evaluation and collapse it into a certificate that
    the h-th and k-th rank idempotents of f multiply into the ideal."""
    certifier = RankCertifier(pres, f, idem, effort)
    return certifier.orthogonality(h, k)


def render_tree(tree: EvalTree, leaves: Sequence[AzumayaLeaf] = ()) -> str:
    """Stable structured-text dump of an evaluation tree."""
    lines: list[str] = []
    leaf_iter = iter(leaves)

    def rec(node, depth):
        pad = "  " * depth
        if isinstance(node, Leaf):
            try:
                leaf = next(leaf_iter)
            except StopIteration:
                lines.append(f"{pad}leaf")
                return
            mark = " trivial" if leaf.trivial else ""
            lines.append(f"{pad}leaf rank={leaf.rank} inverted={leaf.element}{mark}")
            return
        ev = node.event
        if isinstance(ev, LocalSplit):
            lines.append(f"{pad}split local: s = {ev.s} | t = {ev.t}")
        elif isinstance(ev, UnitIdealSplit):
            lines.append(f"{pad}split predicate: t = {ev.t}")
        else:
            lines.append(f"{pad}invert: x = {ev.x}")
        for child in node.children:
            rec(child, depth + 1)

    rec(tree, 0)
    return "\n".join(lines)
