"""Concrete local-global gluing over a comaximal family.

Given elements s_1..s_n with a certified combination sum(c_i s_i) == 1,
raising the combination to a pigeonhole power produces coefficients u_i
with sum(u_i s_i**h) == 1 for any h; with those, local annihilation or
local inversion witnesses merge into global ones by explicit expansion.
Any valid coefficient family passes verification, including ones built
from coarser powers than the minimal pigeonhole exponent used here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .poly import Poly
from .presentation import (
    CertificateError,
    MembershipCertificate,
    RingPresentation,
)


@dataclass(frozen=True)
class ComaximalityData:
    """Elements with a certificate that they generate the unit ideal."""

    elements: tuple[Poly, ...]
    coefficients: tuple[Poly, ...]
    cert: MembershipCertificate

    def __post_init__(self):
        if len(self.elements) != len(self.coefficients):
            raise CertificateError("one coefficient per element required")
        total = None
        for c, s in zip(self.coefficients, self.elements):
            term = c * s
            total = term if total is None else total + term
        if total is None or self.cert.target != total - 1:
            raise CertificateError("certificate does not target the unit combination")

    def verify(self, pres: RingPresentation) -> bool:
        return self.cert.verify(pres)


def comaximal_power(data: ComaximalityData, h: int
                    ) -> tuple[tuple[Poly, ...], MembershipCertificate]:
    """Coefficients u_i with sum(u_i s_i**h) == 1, certified.

    Expands (sum c_i s_i)**N with N = n (h - 1) + 1; every monomial has
    some s_i-exponent at least h (pigeonhole) and goes to the smallest
    such index, which keeps the output deterministic.
    """
    if h < 1:
        raise ValueError("power must be at least 1")
    s = data.elements
    c = data.coefficients
    n = len(s)
    ctx = s[0].context
    big_n = n * (h - 1) + 1
    u = [Poly.zero(ctx) for _ in range(n)]
    for exps in _compositions(big_n, n):
        coeff = math.factorial(big_n)
        for e in exps:
            coeff //= math.factorial(e)
        target = min(i for i, e in enumerate(exps) if e >= h)
        term = Poly.const(ctx, coeff)
        for i, e in enumerate(exps):
            if e:
                term = term * c[i] ** e
            power = e - h if i == target else e
            if power:
                term = term * s[i] ** power
        u[target] = u[target] + term
    # sum(u_i s_i^h) == (sum c_i s_i)^N == (1 + d)^N with d certified
    total = Poly.zero(ctx)
    for ui, si in zip(u, s):
        total = total + ui * si ** h
    d = data.cert.target
    tail = Poly.zero(ctx)
    for i in range(1, big_n + 1):
        tail = tail + math.comb(big_n, i) * d ** (i - 1)
    scaled = data.cert.scaled(tail)
    if scaled.target != total - 1:
        raise CertificateError("power identity drifted")
    return tuple(u), scaled


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def glue_equalities(a: Poly, locals_: Sequence[tuple[Poly, int, MembershipCertificate]],
                    data: ComaximalityData) -> MembershipCertificate:
    """From witnesses s_i**h_i * a == 0, certify a == 0.

    ``locals_`` pairs each family element with its annihilation exponent
    and witness; a = sum(u_i s_i**(h-h_i) * (s_i**h_i a)) modulo the
    power identity.
    """
    if len(locals_) != len(data.elements):
        raise CertificateError("one local witness per family element required")
    ctx = a.context
    h = max([1] + [hi for _, hi, _ in locals_])
    u, power_cert = comaximal_power(data, h)
    out = power_cert.scaled(-a)
    for (si, hi, wit), ui, fam in zip(locals_, u, data.elements):
        if si != fam:
            raise CertificateError("local witnesses out of order")
        if wit.target != si ** hi * a:
            raise CertificateError("local witness does not target s^h * a")
        out = out.plus(wit.scaled(ui * si ** (h - hi)))
    if out.target != a:
        raise CertificateError("glued certificate misses its target")
    return out


def glue_inverses(a: Poly,
                  locals_: Sequence[tuple[Poly, Poly, int, int, MembershipCertificate]],
                  data: ComaximalityData) -> tuple[Poly, MembershipCertificate]:
    """From witnesses a b_i s_i**p_i == s_i**(p_i + k_i), certify a d == 1.

    Each local witness says a is invertible after allowing the
    denominator s_i; the returned d = sum(u_i b_i s_i**(h - k_i)) is a
    global inverse.
    """
    if len(locals_) != len(data.elements):
        raise CertificateError("one local witness per family element required")
    ctx = a.context
    h = max([1] + [p + k for _, _, p, k, _ in locals_])
    u, power_cert = comaximal_power(data, h)
    d = Poly.zero(ctx)
    out = power_cert
    for (si, bi, p, k, wit), ui, fam in zip(locals_, u, data.elements):
        if si != fam:
            raise CertificateError("local witnesses out of order")
        if wit.target != a * bi * si ** p - si ** (p + k):
            raise CertificateError("local witness does not target the inversion shape")
        d = d + ui * bi * si ** (h - k)
        out = out.plus(wit.scaled(ui * si ** (h - k - p)))
    if out.target != a * d - 1:
        raise CertificateError("glued inverse certificate misses its target")
    return d, out


LocalAnnihilator = Callable[[Poly, MembershipCertificate],
                            tuple[int, MembershipCertificate]]


def glue_nonzerodivisor(a: Poly, reducers: Sequence[LocalAnnihilator],
                        data: ComaximalityData
                        ) -> Callable[[Poly, MembershipCertificate],
                                      MembershipCertificate]:
    """Regularity of a, as a procedure: local annihilator providers turn
    a challenge a*b == 0 into s_i-power annihilations of b, which glue
    into b == 0."""
    if len(reducers) != len(data.elements):
        raise CertificateError("one local reducer per family element required")

    def run(b: Poly, ab_zero: MembershipCertificate) -> MembershipCertificate:
        if ab_zero.target != a * b:
            raise CertificateError("challenge witness does not target a*b")
        locals_ = []
        for si, reducer in zip(data.elements, reducers):
            m, wit = reducer(b, ab_zero)
            locals_.append((si, m, wit))
        return glue_equalities(b, locals_, data)

    return run
