"""idemcert: exact structure analysis of idempotent matrices over
finitely presented commutative rings, with independently checkable
certificates for every emitted identity."""

__version__ = "0.1.0"

from .poly import EffortBudget, EffortExceededError, Poly, parse_poly
from .presentation import (
    EqualityWitness,
    FactCertificate,
    MembershipCertificate,
    RingPresentation,
    fact_check,
    verify_membership,
)
from .matrix import CanonicalProjector, Mat, charpoly_div_free, diagonal_minors, minor
from .projector import (
    ComaximalFamily,
    IdempotentSystem,
    ProjectorMat,
    comaximal_family,
    constant_rank_check,
    fundamental_idempotents,
    minor_annihilation,
    rank_polynomial,
)

__all__ = [
    "CanonicalProjector",
    "ComaximalFamily",
    "EffortBudget",
    "EffortExceededError",
    "EqualityWitness",
    "FactCertificate",
    "IdempotentSystem",
    "Mat",
    "MembershipCertificate",
    "Poly",
    "ProjectorMat",
    "RingPresentation",
    "charpoly_div_free",
    "comaximal_family",
    "constant_rank_check",
    "diagonal_minors",
    "fact_check",
    "fundamental_idempotents",
    "minor",
    "minor_annihilation",
    "parse_poly",
    "rank_polynomial",
    "verify_membership",
]
