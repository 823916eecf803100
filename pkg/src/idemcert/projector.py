"""Structure of an idempotent matrix: hidden idempotents, comaximal family.

From a square matrix F with F*F == F (witnessed) over a presented ring,
the shifted determinant R(X) = det(I + (X-1) F) has coefficients
r_0..r_n forming a fundamental system of orthogonal idempotents; the
products of each r_k with the order-k diagonal minors of F form a family
generating the unit ideal whose members localize the image of F to a
free module.  Everything this module emits carries a certificate checked
by expansion; where a needed identity does not hold in the free ring and
does not reduce syntactically, the dynamic evaluation engine supplies
the certificate.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

from .matrix import (
    Mat,
    WitMat,
    charpoly_div_free,
    det_cofactor,
    det_identity_plus_scaled,
    diagonal_minors,
    fresh_name,
)
from .poly import Poly
from .presentation import (
    CertificateError,
    MembershipCertificate,
    RingPresentation,
    certify_zero,
)


class NotIdempotentError(ValueError):
    """The input matrix is not certifiably idempotent."""


class CertificateSearchError(RuntimeError):
    """No verifying certificate was found within the configured effort."""


class CheckResult(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __bool__(self):
        return self is CheckResult.TRUE


@dataclass(frozen=True)
class ProjectorMat:
    """An idempotent matrix with entrywise idempotence certificates."""

    f: Mat
    pres: RingPresentation
    idem_certs: tuple[MembershipCertificate, ...]

    @classmethod
    def build(cls, f: Mat, pres: RingPresentation,
              certs: Sequence[MembershipCertificate] | None = None) -> "ProjectorMat":
        if not f.is_square():
            raise NotIdempotentError("projector matrices are square")
        f = f.embed(pres.ambient)
        diff = (f @ f) - f
        if certs is None:
            found = []
            for entry in diff.entries:
                cert = certify_zero(entry, pres)
                if cert is None:
                    raise NotIdempotentError(
                        f"entry {entry} of F*F - F is not certifiably zero")
                found.append(cert)
            certs = found
        certs = tuple(certs)
        for entry, cert in zip(diff.entries, certs):
            if cert.target != entry or not cert.verify(pres):
                raise NotIdempotentError("idempotence certificate does not verify")
        return cls(f, pres, certs)

    @property
    def n(self) -> int:
        return self.f.rows

    def idem_witmat(self) -> WitMat:
        return WitMat(self.pres, self.f @ self.f, self.f, self.idem_certs)

    def verify(self) -> bool:
        return self.idem_witmat().verify()


@dataclass(frozen=True)
class IdempotentSystem:
    """The coefficients of the shifted determinant, with orthogonality
    and unit-sum certificates."""

    r: tuple[Poly, ...]
    orthogonality: dict[tuple[int, int], MembershipCertificate]
    unit_sum: MembershipCertificate

    def verify(self, pres: RingPresentation) -> bool:
        for (i, j), cert in self.orthogonality.items():
            if cert.target != self.r[i] * self.r[j] or not cert.verify(pres):
                return False
        total = Poly.const(pres.ambient, -1)
        for rk in self.r:
            total = total + rk
        return self.unit_sum.target == total and self.unit_sum.verify(pres)


@dataclass(frozen=True)
class ComaximalFamily:
    """Scaled diagonal minors s = r_k * t_{k,i} with per-rank and global
    unit-sum certificates."""

    entries: tuple[tuple[int, tuple[int, ...], Poly], ...]
    per_rank: dict[int, MembershipCertificate]
    global_sum: MembershipCertificate

    def verify(self, pres: RingPresentation, ids: IdempotentSystem) -> bool:
        for k, cert in self.per_rank.items():
            total = -ids.r[k]
            for kk, _, s in self.entries:
                if kk == k:
                    total = total + s
            if cert.target != total or not cert.verify(pres):
                return False
        total = Poly.const(pres.ambient, -1)
        for _, _, s in self.entries:
            total = total + s
        return self.global_sum.target == total and self.global_sum.verify(pres)


def rank_polynomial(fp: ProjectorMat, x: str = "X") -> Poly:
    """R(X) = det(I + (X-1) F), monic-free exact; R(1) == 1 identically."""
    x = fresh_name(x, fp.pres.ambient)
    shifted = det_identity_plus_scaled(fp.f, x)
    xv = Poly.var(shifted.context, x)
    return shifted.substitute({x: xv - 1})


def _rank_coefficients(fp: ProjectorMat, x: str = "X") -> list[Poly]:
    rp = rank_polynomial(fp, x)
    xname = rp.context[-1]
    coeffs = rp.coeffs_in(xname)
    amb = fp.pres.ambient
    out = [(coeffs[k] if k < len(coeffs) else Poly.zero(rp.context)).restrict(amb)
           for k in range(fp.n + 1)]
    return out


def _certifier(fp: ProjectorMat, effort):
    from .engine import RankCertifier
    return RankCertifier(fp.pres, fp.f, fp.idem_witmat(), effort)


def fundamental_idempotents(fp: ProjectorMat,
                            effort: int | None = None) -> IdempotentSystem:
    """The coefficients r_0..r_n with their orthogonality certificates.

    Certificates come from direct expansion when the product is already
    zero in the free ring, from syntactic reduction against the
    relations next, and from the dynamic evaluation pipeline last.
    """
    pres = fp.pres
    r = _rank_coefficients(fp)
    unit_total = Poly.const(pres.ambient, -1)
    for rk in r:
        unit_total = unit_total + rk
    if not unit_total.is_zero():
        raise CertificateError("rank polynomial does not evaluate to 1 at 1")
    unit_sum = MembershipCertificate(unit_total)
    orth: dict[tuple[int, int], MembershipCertificate] = {}
    certifier = None
    for i in range(fp.n + 1):
        for j in range(i + 1, fp.n + 1):
            target = r[i] * r[j]
            cert = certify_zero(target, pres)
            if cert is None:
                if certifier is None:
                    certifier = _certifier(fp, effort)
                cert = certifier.orthogonality(i, j)
            if cert.target != target or not cert.verify(pres):
                raise CertificateSearchError(
                    f"no verifying certificate for r_{i} r_{j}")
            orth[(i, j)] = cert
    return IdempotentSystem(tuple(r), orth, unit_sum)


def comaximal_family(fp: ProjectorMat, ids: IdempotentSystem,
                     effort: int | None = None) -> ComaximalFamily:
    """Scaled diagonal minors with verified per-rank and global sums."""
    pres = fp.pres
    entries = []
    for k in range(fp.n + 1):
        for subset, t in diagonal_minors(fp.f, k):
            entries.append((k, subset, ids.r[k] * t))
    certifier = None
    per_rank: dict[int, MembershipCertificate] = {}
    for k in range(fp.n + 1):
        total = -ids.r[k]
        for kk, _, s in entries:
            if kk == k:
                total = total + s
        cert = certify_zero(total, pres)
        if cert is None:
            if certifier is None:
                certifier = _certifier(fp, effort)
            cert = certifier.family_sum(k)
        if cert.target != total or not cert.verify(pres):
            raise CertificateSearchError(f"no verifying rank-{k} sum certificate")
        per_rank[k] = cert
    total = Poly.const(pres.ambient, -1)
    for _, _, s in entries:
        total = total + s
    cert = certify_zero(total, pres)
    if cert is None:
        if certifier is None:
            certifier = _certifier(fp, effort)
        cert = certifier.global_sum()
    if cert.target != total or not cert.verify(pres):
        raise CertificateSearchError("no verifying global sum certificate")
    return ComaximalFamily(tuple(entries), per_rank, cert)


def minor_annihilation(fp: ProjectorMat, ids: IdempotentSystem, k: int,
                       effort: int | None = None
                       ) -> list[tuple[tuple[int, ...], tuple[int, ...],
                                       MembershipCertificate]]:
    """For every order-(k+1) minor t of F, a certificate r_k * t == 0."""
    if not 0 <= k < fp.n:
        raise ValueError("annihilation order out of range")
    pres = fp.pres
    certifier = None
    out = []
    for rows in itertools.combinations(range(fp.n), k + 1):
        for cols in itertools.combinations(range(fp.n), k + 1):
            t = det_cofactor(fp.f.submatrix(rows, cols))
            target = ids.r[k] * t
            cert = certify_zero(target, pres)
            if cert is None:
                if certifier is None:
                    certifier = _certifier(fp, effort)
                cert = certifier.minor_annihilation(k, rows, cols)
            if cert.target != target or not cert.verify(pres):
                raise CertificateSearchError(
                    f"no verifying certificate for r_{k} times minor {rows}x{cols}")
            out.append((rows, cols, cert))
    return out


def constant_rank_check(fp: ProjectorMat, k: int, mode: str = "exact",
                        effort: int | None = None) -> CheckResult:
    """Is the image of F projective of constant rank k?

    Exact mode compares the characteristic polynomial with
    (X-1)^k X^(n-k) as polynomials (over the free ring this settles the
    question, nilpotent corrections being impossible there).  The
    dynamic mode instead tries to certify every other rank idempotent
    nilpotent -- bounded, so its negative answer is UNKNOWN, never FALSE.
    """
    if not 0 <= k <= fp.n:
        raise ValueError("rank out of range")
    pres = fp.pres
    if mode == "exact":
        x = fresh_name("X", pres.ambient)
        chi = charpoly_div_free(fp.f, x)
        xv = Poly.var(chi.context, x)
        want = (xv - 1) ** k * xv ** (fp.n - k)
        return CheckResult.TRUE if chi == want else CheckResult.FALSE
    if mode != "dynamic-nilpotent":
        raise ValueError(f"unknown mode {mode!r}")
    r = _rank_coefficients(fp)
    bound = 8
    certifier = None
    for h in range(fp.n + 1):
        if h == k:
            continue
        settled = False
        for m in range(1, bound + 1):
            if certify_zero(r[h] ** m, pres) is not None:
                settled = True
                break
        if not settled:
            try:
                if certifier is None:
                    certifier = _certifier(fp, effort)
                leaf_ranks = {leaf.rank for leaf in certifier.result.leaves
                              if not leaf.trivial}
                if leaf_ranks <= {k}:
                    cert = certifier._collapse(
                        r[h], [data["rank"][h].cert
                               for data in certifier._leaf_data])
                    settled = cert.verify(pres)
            except Exception:
                settled = False
        if not settled:
            return CheckResult.UNKNOWN
    return CheckResult.TRUE


def charpoly_decomposition_check(fp: ProjectorMat) -> bool:
    """Check det(XI - F) == sum of r_i X^(n-i) (X-1)^i exactly.

    The identity holds for every square matrix; it cross-checks the two
    determinant routes against each other.
    """
    pres = fp.pres
    x = fresh_name("X", pres.ambient)
    chi = charpoly_div_free(fp.f, x)
    xv = Poly.var(chi.context, x)
    r = _rank_coefficients(fp)
    total = Poly.zero(chi.context)
    for i, ri in enumerate(r):
        total = total + ri.embed(chi.context) * xv ** (fp.n - i) * (xv - 1) ** i
    return chi == total


def localization_rank(fp: ProjectorMat, ids: IdempotentSystem, s: Poly,
                      max_exp: int = 8) -> int | None:
    """Smallest h with a certificate r_h s^m == s^m for some m <= max_exp.

    None means the bounded search was inconclusive (the localization
    need not have constant rank at all).
    """
    if max_exp < 1:
        raise ValueError("exponent bound must be at least 1")
    pres = fp.pres
    s = s.embed(pres.ambient)
    for h in range(fp.n + 1):
        for m in range(1, max_exp + 1):
            target = ids.r[h] * s ** m - s ** m
            if certify_zero(target, pres) is not None:
                return h
    return None
