"""Ring presentations and the certificate calculus.

A presentation declares generators plus three relation lists:

* ``rel_eq0``  -- polynomials asserted equal to zero,
* ``rel_rnul`` -- polynomials asserted residually null (in the
  designated ideal),
* ``rel_unit`` -- polynomials asserted preinvertible (invertible
  modulo the designated ideal),

together with introduced parameters, each carrying its own defining
relation (typically an adjoined inverse ``u`` with ``u*s - 1``).

Equality in a presented ring is never *decided* here, only *certified*:
a :class:`MembershipCertificate` exhibits an explicit coefficient
combination, and verification is pure polynomial expansion.  Facts about
the three predicates carry a :class:`FactCertificate` in one of three
fixed shapes, checked the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .poly import ContextMismatchError, Poly, parse_poly

# Fact kinds.
ZERO = "zero"    # t = 0 in the quotient
IDEAL = "ideal"  # t residually null (some power falls into the ideal data)
UNIT = "unit"    # t preinvertible

FACT_KINDS = (ZERO, IDEAL, UNIT)

RelRef = tuple[str, int]  # ("eq0", i) or ("param", i)


class CertificateError(ValueError):
    """Raised for structurally invalid certificates (dangling refs etc.)."""


class PresentationError(ValueError):
    """Raised for malformed presentations."""


@dataclass(frozen=True)
class RingPresentation:
    """Generators, relation lists and introduced parameters.

    All relation polynomials are stored over the ambient context
    ``generators + parameter names``.
    """

    generators: tuple[str, ...]
    rel_eq0: tuple[Poly, ...] = ()
    rel_rnul: tuple[Poly, ...] = ()
    rel_unit: tuple[Poly, ...] = ()
    params: tuple[tuple[str, Poly], ...] = ()

    def __post_init__(self):
        names = list(self.generators) + [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise PresentationError(f"generator/parameter names not distinct: {names}")
        ambient = self.ambient
        for group in (self.rel_eq0, self.rel_rnul, self.rel_unit):
            for p in group:
                if p.context != ambient:
                    raise PresentationError(
                        f"relation {p} not over ambient context {ambient}")
        for i, (name, p) in enumerate(self.params):
            if p.context != ambient:
                raise PresentationError(f"parameter relation {p} not over ambient context")
            allowed = set(self.generators) | {n for n, _ in self.params[: i + 1]}
            extra = p.variables() - allowed
            if extra:
                raise PresentationError(
                    f"parameter {name!r} relation uses later names {sorted(extra)}")

    @property
    def ambient(self) -> tuple[str, ...]:
        return self.generators + tuple(n for n, _ in self.params)

    # -- construction helpers ------------------------------------------

    @classmethod
    def build(cls, generators: Sequence[str],
              eq0: Iterable[str | Poly] = (),
              rnul: Iterable[str | Poly] = (),
              unit: Iterable[str | Poly] = ()) -> "RingPresentation":
        gens = tuple(generators)

        def conv(items):
            out = []
            for it in items:
                out.append(parse_poly(it, gens) if isinstance(it, str) else it.embed(gens))
            return tuple(out)

        return cls(gens, conv(eq0), conv(rnul), conv(unit))

    def _reambient(self, ambient: tuple[str, ...]) -> dict:
        return dict(
            rel_eq0=tuple(p.embed(ambient) for p in self.rel_eq0),
            rel_rnul=tuple(p.embed(ambient) for p in self.rel_rnul),
            rel_unit=tuple(p.embed(ambient) for p in self.rel_unit),
        )

    def with_param(self, name: str, defining: Poly | str) -> "RingPresentation":
        """Adjoin a fresh parameter with its defining relation."""
        if name in self.ambient:
            raise PresentationError(f"parameter name {name!r} not fresh")
        ambient = self.ambient + (name,)
        if isinstance(defining, str):
            defining = parse_poly(defining, ambient)
        else:
            defining = defining.embed(ambient)
        parts = self._reambient(ambient)
        params = tuple((n, p.embed(ambient)) for n, p in self.params) + ((name, defining),)
        return RingPresentation(self.generators, params=params, **parts)

    def with_relation(self, kind: str, p: Poly) -> "RingPresentation":
        """Append a relation of the given fact kind (assumption axioms)."""
        p = p.embed(self.ambient)
        if kind == ZERO:
            return RingPresentation(self.generators, self.rel_eq0 + (p,),
                                    self.rel_rnul, self.rel_unit, self.params)
        if kind == IDEAL:
            return RingPresentation(self.generators, self.rel_eq0,
                                    self.rel_rnul + (p,), self.rel_unit, self.params)
        if kind == UNIT:
            return RingPresentation(self.generators, self.rel_eq0,
                                    self.rel_rnul, self.rel_unit + (p,), self.params)
        raise PresentationError(f"unknown relation kind {kind!r}")

    def drop_last_param(self) -> "RingPresentation":
        if not self.params:
            raise PresentationError("no parameter to drop")
        ambient = self.ambient[:-1]
        parts = dict(
            rel_eq0=tuple(p.restrict(ambient) for p in self.rel_eq0),
            rel_rnul=tuple(p.restrict(ambient) for p in self.rel_rnul),
            rel_unit=tuple(p.restrict(ambient) for p in self.rel_unit),
        )
        params = tuple((n, p.restrict(ambient)) for n, p in self.params[:-1])
        return RingPresentation(self.generators, params=params, **parts)

    # -- relation access -------------------------------------------------

    def relation(self, ref: RelRef) -> Poly:
        kind, i = ref
        try:
            if kind == "eq0":
                return self.rel_eq0[i]
            if kind == "param":
                return self.params[i][1]
        except IndexError:
            pass
        raise CertificateError(f"dangling relation reference {ref}")

    def eq0_refs(self) -> list[RelRef]:
        return ([("eq0", i) for i in range(len(self.rel_eq0))]
                + [("param", i) for i in range(len(self.params))])

    def zero_poly(self) -> Poly:
        return Poly.zero(self.ambient)

    def const(self, c: int) -> Poly:
        return Poly.const(self.ambient, c)

    def parse(self, text: str) -> Poly:
        return parse_poly(text, self.ambient)


# -- ideal combinations ------------------------------------------------

Terms = tuple[tuple[RelRef, Poly], ...]


def _merge_terms(ambient: tuple[str, ...], *groups: Iterable[tuple[RelRef, Poly]]) -> Terms:
    acc: dict[RelRef, Poly] = {}
    for group in groups:
        for ref, coeff in group:
            coeff = coeff.embed(ambient)
            if ref in acc:
                acc[ref] = acc[ref] + coeff
            else:
                acc[ref] = coeff
    ordered = sorted(acc.items(), key=lambda rc: rc[0])
    return tuple((ref, coeff) for ref, coeff in ordered if not coeff.is_zero())


def expand_terms(pres: RingPresentation, terms: Terms) -> Poly:
    total = pres.zero_poly()
    for ref, coeff in terms:
        total = total + coeff * pres.relation(ref)
    return total


@dataclass(frozen=True)
class MembershipCertificate:
    """Witness that ``target`` lies in the ideal generated by the
    equal-to-zero relations (including parameter relations)."""

    target: Poly
    terms: Terms = ()

    def verify(self, pres: RingPresentation) -> bool:
        """Pure expansion check: target - sum(coeff * relation) == 0."""
        target = self.target.embed(pres.ambient)
        return (target - expand_terms(pres, self.terms)).is_zero()

    def scaled(self, factor: Poly) -> "MembershipCertificate":
        return MembershipCertificate(
            self.target * factor,
            _merge_terms(factor.context, ((r, c * factor) for r, c in self.terms)))

    def plus(self, other: "MembershipCertificate") -> "MembershipCertificate":
        target = self.target + other.target
        return MembershipCertificate(
            target, _merge_terms(target.context, self.terms, other.terms))

    def negated(self) -> "MembershipCertificate":
        return MembershipCertificate(
            -self.target, tuple((r, -c) for r, c in self.terms))

    def embed(self, ambient: tuple[str, ...]) -> "MembershipCertificate":
        return MembershipCertificate(
            self.target.embed(ambient),
            tuple((r, c.embed(ambient)) for r, c in self.terms))

    def restrict(self, ambient: tuple[str, ...]) -> "MembershipCertificate":
        return MembershipCertificate(
            self.target.restrict(ambient),
            tuple((r, c.restrict(ambient)) for r, c in self.terms))


def verify_membership(cert: MembershipCertificate, pres: RingPresentation) -> bool:
    return cert.verify(pres)


@dataclass(frozen=True)
class FactCertificate:
    """Certificate for a provable fact about ``target``.

    Writing ``u`` for the expansion of the formal product ``unit_refs``
    over ``rel_unit``, ``j`` for the ``rnul_terms`` combination over
    ``rel_rnul`` and ``i`` for the ``eq0_terms`` combination, the three
    shapes verified by expansion are::

        zero :  (u + j) * t + i            == 0
        ideal:  u * t**exponent + j + i    == 0
        unit :  u + j + aux * t + i        == 0
    """

    kind: str
    target: Poly
    unit_refs: tuple[int, ...] = ()
    unit_expanded: Poly | None = None
    rnul_terms: tuple[tuple[int, Poly], ...] = ()
    eq0_terms: Terms = ()
    aux: Poly | None = None
    exponent: int | None = None

    def unit_value(self, pres: RingPresentation) -> Poly:
        u = pres.const(1)
        for i in self.unit_refs:
            if i < 0 or i >= len(pres.rel_unit):
                raise CertificateError(f"dangling unit reference {i}")
            u = u * pres.rel_unit[i]
        return u

    def rnul_value(self, pres: RingPresentation) -> Poly:
        j = pres.zero_poly()
        for i, coeff in self.rnul_terms:
            if i < 0 or i >= len(pres.rel_rnul):
                raise CertificateError(f"dangling ideal reference {i}")
            j = j + coeff.embed(pres.ambient) * pres.rel_rnul[i]
        return j

    def eq0_value(self, pres: RingPresentation) -> Poly:
        return expand_terms(pres, self.eq0_terms)

    def verify(self, pres: RingPresentation) -> bool:
        if self.kind not in FACT_KINDS:
            raise CertificateError(f"unknown fact kind {self.kind!r}")
        u = self.unit_value(pres)
        if self.unit_expanded is not None and self.unit_expanded.embed(pres.ambient) != u:
            return False
        j = self.rnul_value(pres)
        i = self.eq0_value(pres)
        t = self.target.embed(pres.ambient)
        if self.kind == ZERO:
            return ((u + j) * t + i).is_zero()
        if self.kind == IDEAL:
            if self.exponent is None or self.exponent < 0:
                raise CertificateError("ideal-fact certificate needs a natural exponent")
            return (u * t**self.exponent + j + i).is_zero()
        if self.aux is None:
            raise CertificateError("unit-fact certificate needs the aux polynomial")
        return (u + j + self.aux.embed(pres.ambient) * t + i).is_zero()


def fact_check(cert: FactCertificate, pres: RingPresentation) -> bool:
    """Expansion verification of a fact certificate (independent of how
    the certificate was produced)."""
    return cert.verify(pres)


def membership_to_fact(cert: MembershipCertificate) -> FactCertificate:
    """View ``t in ideal`` as the zero-fact ``(1 + 0) t + (-combination) = 0``."""
    return FactCertificate(
        kind=ZERO, target=cert.target,
        eq0_terms=tuple((r, -c) for r, c in cert.terms))


def fact_to_membership(cert: FactCertificate, pres: RingPresentation) -> MembershipCertificate:
    """Collapse a zero-fact with trivial unit and ideal parts back to a
    plain membership certificate (valid whenever the preinvertible and
    residually-null relation lists play no role)."""
    if cert.kind != ZERO:
        raise CertificateError("only zero-facts convert to membership certificates")
    if cert.unit_refs or cert.rnul_terms:
        raise CertificateError("fact certificate uses unit or ideal relations")
    out = MembershipCertificate(cert.target,
                                tuple((r, -c) for r, c in cert.eq0_terms))
    if not out.verify(pres):
        raise CertificateError("converted certificate does not verify")
    return out


# -- witnessed equality -------------------------------------------------

@dataclass(frozen=True)
class EqualityWitness:
    """``lhs == rhs`` in the presented ring, witnessed by a membership
    certificate for ``lhs - rhs``."""

    pres: RingPresentation
    lhs: Poly
    rhs: Poly
    cert: MembershipCertificate

    def __post_init__(self):
        if self.cert.target != self.lhs - self.rhs:
            raise CertificateError("witness certificate target is not lhs - rhs")

    def verify(self) -> bool:
        return self.cert.verify(self.pres)

    @classmethod
    def refl(cls, pres: RingPresentation, p: Poly) -> "EqualityWitness":
        p = p.embed(pres.ambient)
        return cls(pres, p, p, MembershipCertificate(Poly.zero(pres.ambient)))

    @classmethod
    def const(cls, pres: RingPresentation, c: int) -> "EqualityWitness":
        return cls.refl(pres, pres.const(c))


def _same_pres(w1: EqualityWitness, w2: EqualityWitness) -> RingPresentation:
    if w1.pres != w2.pres:
        raise CertificateError("witnesses over different presentations")
    return w1.pres


def witness_add(w1: EqualityWitness, w2: EqualityWitness) -> EqualityWitness:
    pres = _same_pres(w1, w2)
    return EqualityWitness(pres, w1.lhs + w2.lhs, w1.rhs + w2.rhs,
                           w1.cert.plus(w2.cert))


def witness_mul(w1: EqualityWitness, w2: EqualityWitness) -> EqualityWitness:
    # lhs1*lhs2 - rhs1*rhs2 = lhs1*(lhs2 - rhs2) + rhs2*(lhs1 - rhs1)
    pres = _same_pres(w1, w2)
    cert = w2.cert.scaled(w1.lhs).plus(w1.cert.scaled(w2.rhs))
    return EqualityWitness(pres, w1.lhs * w2.lhs, w1.rhs * w2.rhs, cert)


def witness_neg(w: EqualityWitness) -> EqualityWitness:
    return EqualityWitness(w.pres, -w.lhs, -w.rhs, w.cert.negated())


def witness_sub(w1: EqualityWitness, w2: EqualityWitness) -> EqualityWitness:
    return witness_add(w1, witness_neg(w2))


def witness_scale(w: EqualityWitness, factor: Poly) -> EqualityWitness:
    return witness_mul(EqualityWitness.refl(w.pres, factor), w)


def witness_pow(w: EqualityWitness, n: int) -> EqualityWitness:
    out = EqualityWitness.const(w.pres, 1)
    for _ in range(n):
        out = witness_mul(out, w)
    return out


def witness_trans(w1: EqualityWitness, w2: EqualityWitness) -> EqualityWitness:
    """From lhs==mid and mid==rhs derive lhs==rhs."""
    pres = _same_pres(w1, w2)
    if w1.rhs != w2.lhs:
        raise CertificateError("witness chain does not match")
    return EqualityWitness(pres, w1.lhs, w2.rhs, w1.cert.plus(w2.cert))


def witness_sym(w: EqualityWitness) -> EqualityWitness:
    return EqualityWitness(w.pres, w.rhs, w.lhs, w.cert.negated())


def witness_embed(w: EqualityWitness, pres: RingPresentation) -> EqualityWitness:
    """Carry a witness into an extended presentation (appended relations
    and parameters keep all references valid)."""
    amb = pres.ambient
    return EqualityWitness(pres, w.lhs.embed(amb), w.rhs.embed(amb),
                           w.cert.embed(amb))


def compose_witnesses(op: str, w1: EqualityWitness, w2: EqualityWitness) -> EqualityWitness:
    """Spec-level dispatcher: ``op`` is "add" or "mul"."""
    if op == "add":
        return witness_add(w1, w2)
    if op == "mul":
        return witness_mul(w1, w2)
    raise ValueError(f"unknown composition {op!r}")


def witness_through_polymap(f: Poly, args: Sequence[EqualityWitness]) -> EqualityWitness:
    """Push entrywise witnesses through a polynomial map.

    ``f`` is a polynomial in formal slot variables, one per argument;
    the result witnesses ``f(lhs_1..lhs_k) == f(rhs_1..rhs_k)``, built
    by repeated composition following f's term structure.
    """
    if len(f.context) != len(args):
        raise CertificateError(
            f"slot count {len(f.context)} does not match argument count {len(args)}")
    if not args:
        raise CertificateError("polynomial map needs at least one argument")
    pres = args[0].pres
    for w in args[1:]:
        _same_pres(args[0], w)
    total = EqualityWitness.const(pres, 0)
    for exp, coeff in f.terms.items():
        term = EqualityWitness.const(pres, coeff)
        for w, e in zip(args, exp):
            if e:
                term = witness_mul(term, witness_pow(w, e))
        total = witness_add(total, term)
    return total


# -- best-effort syntactic reduction ------------------------------------

def reduce_by_relations(target: Poly, pres: RingPresentation) -> MembershipCertificate | None:
    """Try to express ``target`` over the equal-to-zero relations by
    leading-monomial reduction.

    This is deliberately *not* a decision procedure: it succeeds exactly
    when iterated cancellation against the given relation list reaches
    zero, which covers targets assembled directly from the relations.
    Returns None on failure.
    """
    target = target.embed(pres.ambient)
    rels = [(ref, pres.relation(ref)) for ref in pres.eq0_refs()]
    rels = [(ref, rel) for ref, rel in rels if not rel.is_zero()]
    acc: dict[RelRef, Poly] = {}
    rem = target
    while not rem.is_zero():
        step = None
        for exp, coeff in rem.terms.items():
            for ref, rel in rels:
                lexp, lc = rel.leading()
                if all(l <= e for l, e in zip(lexp, exp)) and coeff % lc == 0:
                    step = (exp, coeff, ref, rel, lexp, lc)
                    break
            if step:
                break
        if step is None:
            return None
        exp, coeff, ref, rel, lexp, lc = step
        q = Poly(pres.ambient, {tuple(e - l for e, l in zip(exp, lexp)): coeff // lc})
        rem = rem - q * rel
        acc[ref] = acc.get(ref, pres.zero_poly()) + q
    return MembershipCertificate(target, _merge_terms(pres.ambient, acc.items()))


def certify_zero(target: Poly, pres: RingPresentation) -> MembershipCertificate | None:
    """Exact-zero check first, then syntactic reduction."""
    embedded = target.embed(pres.ambient)
    if embedded.is_zero():
        return MembershipCertificate(embedded)
    return reduce_by_relations(embedded, pres)


def is_marked_trivial(pres: RingPresentation) -> bool:
    """Best-effort detection that 1 == 0 is certified by the relations."""
    return certify_zero(pres.const(1), pres) is not None
