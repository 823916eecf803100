"""Matrices over exact polynomial entries.

Everything here stays division-free: the characteristic polynomial uses
the principal-submatrix Toeplitz recursion (Berkowitz), valid over any
commutative ring, while small determinants and minors use cofactor
expansion.  Witnessed matrices propagate entrywise equality certificates
through products, so similarity claims carry checkable evidence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .poly import ContextMismatchError, Poly, parse_poly
from .presentation import (
    CertificateError,
    EqualityWitness,
    MembershipCertificate,
    RingPresentation,
    witness_add,
    witness_mul,
    witness_through_polymap,
    witness_trans,
)


class DimensionError(ValueError):
    """Raised when matrix shapes do not line up."""


@dataclass(frozen=True)
class Mat:
    """Row-major immutable matrix of Poly entries over a shared context."""

    rows: int
    cols: int
    context: tuple[str, ...]
    entries: tuple[Poly, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError("entry count does not match shape")
        for p in self.entries:
            if p.context != self.context:
                raise ContextMismatchError("matrix entries disagree on context")

    # -- construction ---------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Poly | int | str]],
                  context: tuple[str, ...]) -> "Mat":
        r = len(rows)
        c = len(rows[0]) if rows else 0
        flat = []
        for row in rows:
            if len(row) != c:
                raise DimensionError("ragged rows")
            for item in row:
                if isinstance(item, Poly):
                    flat.append(item.embed(context))
                elif isinstance(item, int):
                    flat.append(Poly.const(context, item))
                else:
                    flat.append(parse_poly(item, context))
        return cls(r, c, context, tuple(flat))

    @classmethod
    def identity(cls, n: int, context: tuple[str, ...]) -> "Mat":
        return cls(n, n, context,
                   tuple(Poly.const(context, 1 if i == j else 0)
                         for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int, context: tuple[str, ...]) -> "Mat":
        z = Poly.zero(context)
        return cls(rows, cols, context, (z,) * (rows * cols))

    # -- access ----------------------------------------------------------

    def entry(self, i: int, j: int) -> Poly:
        return self.entries[i * self.cols + j]

    def row_list(self) -> list[list[Poly]]:
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Mat":
        ents = tuple(self.entry(i, j) for i in rows for j in cols)
        return Mat(len(rows), len(cols), self.context, ents)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def embed(self, context: tuple[str, ...]) -> "Mat":
        if context == self.context:
            return self
        return Mat(self.rows, self.cols, context,
                   tuple(p.embed(context) for p in self.entries))

    def map_entries(self, fn: Callable[[Poly], Poly]) -> "Mat":
        ents = tuple(fn(p) for p in self.entries)
        ctx = ents[0].context if ents else self.context
        return Mat(self.rows, self.cols, ctx, ents)

    # -- arithmetic -------------------------------------------------------

    def _check_same_shape(self, other: "Mat"):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError(f"shape mismatch {self.rows}x{self.cols} "
                                 f"vs {other.rows}x{other.cols}")

    def __add__(self, other: "Mat") -> "Mat":
        self._check_same_shape(other)
        return Mat(self.rows, self.cols, self.context,
                   tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "Mat") -> "Mat":
        self._check_same_shape(other)
        return Mat(self.rows, self.cols, self.context,
                   tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "Mat":
        return Mat(self.rows, self.cols, self.context,
                   tuple(-a for a in self.entries))

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} "
                                 f"by {other.rows}x{other.cols}")
        ents = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = Poly.zero(self.context)
                for c in range(self.cols):
                    acc = acc + self.entry(i, c) * other.entry(c, j)
                ents.append(acc)
        return Mat(self.rows, other.cols, self.context, tuple(ents))

    def scale(self, factor: Poly | int) -> "Mat":
        if isinstance(factor, int):
            factor = Poly.const(self.context, factor)
        return Mat(self.rows, self.cols, self.context,
                   tuple(factor * a for a in self.entries))

    def block_diag(self, other: "Mat") -> "Mat":
        rows = self.rows + other.rows
        cols = self.cols + other.cols
        z = Poly.zero(self.context)
        ents = []
        for i in range(rows):
            for j in range(cols):
                if i < self.rows and j < self.cols:
                    ents.append(self.entry(i, j))
                elif i >= self.rows and j >= self.cols:
                    ents.append(other.entry(i - self.rows, j - self.cols))
                else:
                    ents.append(z)
        return Mat(rows, cols, self.context, tuple(ents))

    def __str__(self) -> str:
        return "\n".join("[" + ", ".join(str(self.entry(i, j))
                                         for j in range(self.cols)) + "]"
                         for i in range(self.rows))


@dataclass(frozen=True)
class CanonicalProjector:
    """The block matrix with an identity block of size k and zeros elsewhere."""

    k: int
    rows: int
    cols: int

    def realize(self, context: tuple[str, ...]) -> Mat:
        if self.k > min(self.rows, self.cols):
            raise DimensionError("identity block does not fit")
        return Mat(self.rows, self.cols, context,
                   tuple(Poly.const(context, 1 if i == j and i < self.k else 0)
                         for i in range(self.rows) for j in range(self.cols)))


# -- determinants and minors ---------------------------------------------

def det_cofactor(m: Mat) -> Poly:
    """Exact determinant by cofactor expansion (sizes here are small)."""
    if not m.is_square():
        raise DimensionError("determinant of a non-square matrix")
    n = m.rows
    if n == 0:
        return Poly.const(m.context, 1)
    if n == 1:
        return m.entry(0, 0)
    total = Poly.zero(m.context)
    rest_rows = list(range(1, n))
    for j in range(n):
        cols = [c for c in range(n) if c != j]
        sub = det_cofactor(m.submatrix(rest_rows, cols))
        term = m.entry(0, j) * sub
        total = total + (term if j % 2 == 0 else -term)
    return total


def minor(m: Mat, rows: Sequence[int], cols: Sequence[int]) -> Poly:
    """Determinant of the selected submatrix; index sets strictly increasing."""
    rows = tuple(rows)
    cols = tuple(cols)
    if len(rows) != len(cols):
        raise DimensionError("minor needs index sets of equal size")
    for seq, bound in ((rows, m.rows), (cols, m.cols)):
        if any(i < 0 or i >= bound for i in seq):
            raise DimensionError(f"index out of range in {seq}")
        if any(a >= b for a, b in zip(seq, seq[1:])):
            raise DimensionError(f"index set {seq} not strictly increasing")
    return det_cofactor(m.submatrix(rows, cols))


def diagonal_minors(m: Mat, k: int) -> list[tuple[tuple[int, ...], Poly]]:
    """All order-k diagonal minors, in lexicographic order of index tuples."""
    if not m.is_square():
        raise DimensionError("diagonal minors need a square matrix")
    return [(subset, minor(m, subset, subset))
            for subset in itertools.combinations(range(m.rows), k)]


def charpoly_div_free(m: Mat, x: str) -> Poly:
    """det(x*I - m) by the division-free Toeplitz recursion.

    Returns a monic polynomial of degree n over context + (x,).  Works
    over rings with zero divisors; no fraction arithmetic anywhere.
    """
    if not m.is_square():
        raise DimensionError("characteristic polynomial of a non-square matrix")
    if x in m.context:
        raise ContextMismatchError(f"variable {x!r} already in matrix context")
    n = m.rows
    ctx = m.context
    one = Poly.const(ctx, 1)
    coeffs = [one]  # leading-first coefficient vector of det(xI - submatrix)
    for k in range(n - 1, -1, -1):
        a = m.entry(k, k)
        r_row = [m.entry(k, j) for j in range(k + 1, n)]
        c_col = [m.entry(i, k) for i in range(k + 1, n)]
        sub = m.submatrix(range(k + 1, n), range(k + 1, n))
        size = len(coeffs)  # current vector length; new length size + 1
        q = [one, -a]
        s_vec = c_col
        for _ in range(size - 1):
            dot = Poly.zero(ctx)
            for rv, sv in zip(r_row, s_vec):
                dot = dot + rv * sv
            q.append(-dot)
            if len(q) <= size:
                s_vec = [sum((sub.entry(i, j) * s_vec[j] for j in range(len(s_vec))),
                             Poly.zero(ctx)) for i in range(len(s_vec))]
        new = []
        for i in range(size + 1):
            acc = Poly.zero(ctx)
            for j in range(size):
                d = i - j
                if 0 <= d < len(q):
                    acc = acc + q[d] * coeffs[j]
            new.append(acc)
        coeffs = new
    out_ctx = ctx + (x,)
    xv = Poly.var(out_ctx, x)
    total = Poly.zero(out_ctx)
    for i, c in enumerate(coeffs):
        total = total + c.embed(out_ctx) * xv ** (n - i)
    return total


def det_identity_plus_scaled(m: Mat, x: str) -> Poly:
    """det(I + x*m) over context + (x,), via the characteristic polynomial.

    With det(X*I - m) = sum c_k X^k this equals
    sum (-1)^(n-k) c_k x^(n-k); the x^j coefficient is the sum of the
    order-j diagonal minors.
    """
    n = m.rows
    chi = charpoly_div_free(m, x)
    cs = chi.coeffs_in(x)  # c_0 .. c_n
    out_ctx = chi.context
    xv = Poly.var(out_ctx, x)
    total = Poly.zero(out_ctx)
    for k in range(n + 1):
        sign = -1 if (n - k) % 2 else 1
        total = total + sign * cs[k] * xv ** (n - k)
    return total


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "_"
    return name


def padded_charpoly_identity(f1: Mat, f2: Mat) -> bool:
    """Check X^n det(XI_m - f1) == X^m det(XI_n - f2) exactly.

    Holds whenever the two square matrices are idempotent with isomorphic
    images; a rank mismatch breaks it.
    """
    if not (f1.is_square() and f2.is_square()):
        raise DimensionError("both matrices must be square")
    if f1.context != f2.context:
        raise ContextMismatchError("matrices disagree on context")
    x = fresh_name("X", f1.context)
    m, n = f1.rows, f2.rows
    chi1 = charpoly_div_free(f1, x)
    chi2 = charpoly_div_free(f2, x)
    xv = Poly.var(chi1.context, x)
    return (xv ** n * chi1) == (xv ** m * chi2)


# -- witnessed matrices ----------------------------------------------------

@dataclass(frozen=True)
class WitMat:
    """Two matrices certified entrywise equal in a presented ring."""

    pres: RingPresentation
    lhs: Mat
    rhs: Mat
    certs: tuple[MembershipCertificate, ...]

    def __post_init__(self):
        if (self.lhs.rows, self.lhs.cols) != (self.rhs.rows, self.rhs.cols):
            raise DimensionError("witnessed sides have different shapes")
        if len(self.certs) != self.lhs.rows * self.lhs.cols:
            raise DimensionError("one certificate per entry required")

    @classmethod
    def refl(cls, pres: RingPresentation, m: Mat) -> "WitMat":
        m = m.embed(pres.ambient)
        zero = MembershipCertificate(Poly.zero(pres.ambient))
        return cls(pres, m, m, (zero,) * (m.rows * m.cols))

    @classmethod
    def from_witnesses(cls, grid: Sequence[Sequence[EqualityWitness]]) -> "WitMat":
        pres = grid[0][0].pres
        rows = len(grid)
        cols = len(grid[0])
        lhs = Mat(rows, cols, pres.ambient,
                  tuple(w.lhs for row in grid for w in row))
        rhs = Mat(rows, cols, pres.ambient,
                  tuple(w.rhs for row in grid for w in row))
        return cls(pres, lhs, rhs, tuple(w.cert for row in grid for w in row))

    def witness(self, i: int, j: int) -> EqualityWitness:
        idx = i * self.lhs.cols + j
        return EqualityWitness(self.pres, self.lhs.entry(i, j),
                               self.rhs.entry(i, j), self.certs[idx])

    def grid(self) -> list[list[EqualityWitness]]:
        return [[self.witness(i, j) for j in range(self.lhs.cols)]
                for i in range(self.lhs.rows)]

    def verify(self) -> bool:
        return all(c.verify(self.pres) for c in self.certs)


def wmat_mul(a: WitMat, b: WitMat) -> WitMat:
    if a.pres != b.pres:
        raise CertificateError("witnessed matrices over different presentations")
    if a.lhs.cols != b.lhs.rows:
        raise DimensionError("witnessed product shape mismatch")
    if a.lhs.rows * b.lhs.cols == 0:
        return WitMat(a.pres, a.lhs @ b.lhs, a.rhs @ b.rhs, ())
    grid = []
    for i in range(a.lhs.rows):
        row = []
        for j in range(b.lhs.cols):
            acc = EqualityWitness.const(a.pres, 0)
            for c in range(a.lhs.cols):
                acc = witness_add(acc, witness_mul(a.witness(i, c), b.witness(c, j)))
            row.append(acc)
        grid.append(row)
    return WitMat.from_witnesses(grid)


def wmat_add(a: WitMat, b: WitMat) -> WitMat:
    if a.lhs.rows * a.lhs.cols == 0:
        return WitMat(a.pres, a.lhs + b.lhs, a.rhs + b.rhs, ())
    grid = [[witness_add(a.witness(i, j), b.witness(i, j))
             for j in range(a.lhs.cols)] for i in range(a.lhs.rows)]
    return WitMat.from_witnesses(grid)


def wmat_trans(a: WitMat, b: WitMat) -> WitMat:
    """Chain a.lhs == a.rhs == b.lhs == b.rhs into a.lhs == b.rhs."""
    if a.lhs.rows * a.lhs.cols == 0:
        if a.rhs != b.lhs:
            raise CertificateError("witness chain does not match")
        return WitMat(a.pres, a.lhs, b.rhs, ())
    grid = [[witness_trans(a.witness(i, j), b.witness(i, j))
             for j in range(a.lhs.cols)] for i in range(a.lhs.rows)]
    return WitMat.from_witnesses(grid)


def wmat_sym(a: WitMat) -> WitMat:
    return WitMat(a.pres, a.rhs, a.lhs, tuple(c.negated() for c in a.certs))


def wmat_sub(a: WitMat, b: WitMat) -> WitMat:
    neg = WitMat(b.pres, -b.lhs, -b.rhs, tuple(c.negated() for c in b.certs))
    return wmat_add(a, neg)


def wmat_block(a: WitMat, rows: Sequence[int], cols: Sequence[int]) -> WitMat:
    return WitMat(a.pres, a.lhs.submatrix(rows, cols), a.rhs.submatrix(rows, cols),
                  tuple(a.certs[i * a.lhs.cols + j] for i in rows for j in cols))


def wmat_embed(a: WitMat, pres: RingPresentation) -> WitMat:
    amb = pres.ambient
    return WitMat(pres, a.lhs.embed(amb), a.rhs.embed(amb),
                  tuple(c.embed(amb) for c in a.certs))


def wmat_det(a: WitMat) -> EqualityWitness:
    """Push the entrywise witnesses through the determinant map."""
    n = a.lhs.rows
    if n == 0:
        return EqualityWitness.const(a.pres, 1)
    slots = tuple(f"m{i}_{j}" for i in range(n) for j in range(n))
    generic = Mat(n, n, slots, tuple(Poly.var(slots, s) for s in slots))
    det_map = det_cofactor(generic)
    args = [a.witness(i, j) for i in range(n) for j in range(n)]
    return witness_through_polymap(det_map, args)


def wmat_minor(a: WitMat, rows: Sequence[int], cols: Sequence[int]) -> EqualityWitness:
    sub = WitMat(a.pres, a.lhs.submatrix(rows, cols), a.rhs.submatrix(rows, cols),
                 tuple(a.certs[i * a.lhs.cols + j] for i in rows for j in cols))
    return wmat_det(sub)


# -- presentation-matrix transformations ------------------------------------

@dataclass(frozen=True)
class EquivWitness:
    """Invertible factors relating a base matrix to its transformed form.

    Maintains ``current = p @ base @ q``; ``p_certs``/``q_certs`` hold the
    entrywise certificates for ``p @ p_inv == I`` and ``q @ q_inv == I``
    (empty targets when the products are exact).  Dimension-changing
    transformations rebase: the log keeps the full history.
    """

    p: Mat
    p_inv: Mat
    q: Mat
    q_inv: Mat
    p_certs: tuple[MembershipCertificate, ...]
    q_certs: tuple[MembershipCertificate, ...]
    log: tuple[tuple, ...] = ()

    @classmethod
    def identity(cls, pres: RingPresentation, rows: int, cols: int,
                 log: tuple = ()) -> "EquivWitness":
        ctx = pres.ambient
        zero = MembershipCertificate(Poly.zero(ctx))
        return cls(Mat.identity(rows, ctx), Mat.identity(rows, ctx),
                   Mat.identity(cols, ctx), Mat.identity(cols, ctx),
                   (zero,) * rows**2, (zero,) * cols**2, log)

    def verify(self, pres: RingPresentation) -> bool:
        ctx = pres.ambient
        for prod, certs in ((self.p @ self.p_inv, self.p_certs),
                            (self.q @ self.q_inv, self.q_certs)):
            ident = Mat.identity(prod.rows, ctx)
            diff = prod - ident
            for entry, cert in zip(diff.entries, certs):
                if cert.target != entry or not cert.verify(pres):
                    return False
        return True


class TransformState:
    """One presentation matrix under a running chain of transformations.

    Pure in spirit: every operation returns a new state.  Row and column
    operations update the invertible factors; appending or dropping
    generators or relations rebases them.
    """

    def __init__(self, pres: RingPresentation, matrix: Mat,
                 witness: EquivWitness | None = None, base: Mat | None = None):
        self.pres = pres
        self.matrix = matrix.embed(pres.ambient)
        self.base = (base if base is not None else self.matrix)
        self.witness = witness or EquivWitness.identity(pres, matrix.rows, matrix.cols)

    # internal: apply exact row factor e (with exact inverse) --------------

    def _apply(self, e: Mat, e_inv: Mat, side: str,
               ee_certs: tuple[MembershipCertificate, ...] | None,
               record: tuple) -> "TransformState":
        w = self.witness
        pres = self.pres
        ctx = pres.ambient
        if side == "row":
            new_matrix = e @ self.matrix
            new_p, new_p_inv = e @ w.p, w.p_inv @ e_inv
            certs = composed_inverse_certs(pres, e, e_inv, w.p, w.p_inv,
                                            w.p_certs, ee_certs)
            new_w = EquivWitness(new_p, new_p_inv, w.q, w.q_inv,
                                 certs, w.q_certs, w.log + (record,))
        else:
            new_matrix = self.matrix @ e
            new_q, new_q_inv = w.q @ e, e_inv @ w.q_inv
            certs = composed_inverse_certs(pres, w.q, w.q_inv, e, e_inv,
                                            ee_certs, w.q_certs)
            new_w = EquivWitness(w.p, w.p_inv, new_q, new_q_inv,
                                 w.p_certs, certs, w.log + (record,))
        return TransformState(pres, new_matrix, new_w, self.base)

    def _rebase(self, matrix: Mat, record: tuple) -> "TransformState":
        w = EquivWitness.identity(self.pres, matrix.rows, matrix.cols,
                                  self.witness.log + (record,))
        return TransformState(self.pres, matrix, w, matrix)

    # -- row/column operations ---------------------------------------------

    def swap_rows(self, i: int, j: int) -> "TransformState":
        e = _permutation(self.matrix.rows, i, j, self.pres.ambient)
        return self._apply(e, e, "row", None, ("swap_rows", i, j))

    def swap_cols(self, i: int, j: int) -> "TransformState":
        e = _permutation(self.matrix.cols, i, j, self.pres.ambient)
        return self._apply(e, e, "col", None, ("swap_cols", i, j))

    def add_row_multiple(self, target: int, source: int, coeff: Poly) -> "TransformState":
        """row_target += coeff * row_source (left factor has coeff at (target, source))."""
        if target == source:
            raise DimensionError("row combination must use a different row")
        e = _shear(self.matrix.rows, target, source, coeff, self.pres.ambient)
        e_inv = _shear(self.matrix.rows, target, source, -coeff, self.pres.ambient)
        return self._apply(e, e_inv, "row", None,
                           ("add_row_multiple", target, source, str(coeff)))

    def add_col_multiple(self, target: int, source: int, coeff: Poly) -> "TransformState":
        """col_target += coeff * col_source (right factor has coeff at (source, target))."""
        if target == source:
            raise DimensionError("column combination must use a different column")
        e = _shear(self.matrix.cols, source, target, coeff, self.pres.ambient)
        e_inv = _shear(self.matrix.cols, source, target, -coeff, self.pres.ambient)
        return self._apply(e, e_inv, "col", None,
                           ("add_col_multiple", target, source, str(coeff)))

    def scale_row(self, i: int, unit: Poly, unit_inv: Poly,
                  cert: MembershipCertificate) -> "TransformState":
        self._check_unit(unit, unit_inv, cert)
        n = self.matrix.rows
        e = _diag_one(n, i, unit, self.pres.ambient)
        e_inv = _diag_one(n, i, unit_inv, self.pres.ambient)
        certs = _diag_unit_certs(self.pres, n, i, cert)
        return self._apply(e, e_inv, "row", certs, ("scale_row", i, str(unit)))

    def scale_col(self, j: int, unit: Poly, unit_inv: Poly,
                  cert: MembershipCertificate) -> "TransformState":
        self._check_unit(unit, unit_inv, cert)
        n = self.matrix.cols
        e = _diag_one(n, j, unit, self.pres.ambient)
        e_inv = _diag_one(n, j, unit_inv, self.pres.ambient)
        certs = _diag_unit_certs(self.pres, n, j, cert)
        return self._apply(e, e_inv, "col", certs, ("scale_col", j, str(unit)))

    def _check_unit(self, unit: Poly, unit_inv: Poly, cert: MembershipCertificate):
        expected = unit.embed(self.pres.ambient) * unit_inv.embed(self.pres.ambient) - 1
        if cert.target != expected or not cert.verify(self.pres):
            raise CertificateError("scaling requires a certified unit inverse")

    # -- dimension-changing operations ---------------------------------------

    def append_zero_col(self) -> "TransformState":
        m = self.matrix
        z = Poly.zero(self.pres.ambient)
        rows = [[m.entry(i, j) for j in range(m.cols)] + [z] for i in range(m.rows)]
        new = Mat.from_rows(rows, self.pres.ambient) if rows else Mat.zeros(
            0, m.cols + 1, self.pres.ambient)
        return self._rebase(new, ("append_zero_col",))

    def drop_zero_col(self, j: int) -> "TransformState":
        m = self.matrix
        if m.cols <= 1:
            raise DimensionError("refusing to produce an empty matrix")
        if any(not m.entry(i, j).is_zero() for i in range(m.rows)):
            raise CertificateError(f"column {j} is not exactly zero")
        keep = [c for c in range(m.cols) if c != j]
        return self._rebase(m.submatrix(range(m.rows), keep), ("drop_zero_col", j))

    def border(self, column: Sequence[Poly]) -> "TransformState":
        """G -> [[G, C], [0, 1]]: adjoin a generator with its dependency."""
        m = self.matrix
        ctx = self.pres.ambient
        if len(column) != m.rows:
            raise DimensionError("border column length mismatch")
        z = Poly.zero(ctx)
        rows = [[m.entry(i, j) for j in range(m.cols)] + [column[i].embed(ctx)]
                for i in range(m.rows)]
        rows.append([z] * m.cols + [Poly.const(ctx, 1)])
        return self._rebase(Mat.from_rows(rows, ctx), ("border",))

    def unborder(self) -> "TransformState":
        m = self.matrix
        if m.rows < 2 or m.cols < 2:
            raise DimensionError("nothing to unborder")
        if m.entry(m.rows - 1, m.cols - 1) != 1:
            raise CertificateError("corner is not 1")
        if any(not m.entry(m.rows - 1, j).is_zero() for j in range(m.cols - 1)):
            raise CertificateError("last row is not (0,...,0,1)")
        sub = m.submatrix(range(m.rows - 1), range(m.cols - 1))
        return self._rebase(sub, ("unborder",))


def _permutation(n: int, i: int, j: int, ctx: tuple[str, ...]) -> Mat:
    rows = [[1 if ({r, c} == {i, j} and r != c) or (r == c and r not in (i, j))
             or (i == j and r == c) else 0
             for c in range(n)] for r in range(n)]
    return Mat.from_rows(rows, ctx)


def _shear(n: int, i: int, j: int, coeff: Poly, ctx: tuple[str, ...]) -> Mat:
    """Identity with ``coeff`` added at position (i, j); i != j."""
    rows = [[Poly.const(ctx, 1 if r == c else 0) for c in range(n)] for r in range(n)]
    rows[i][j] = rows[i][j] + coeff.embed(ctx)
    return Mat.from_rows(rows, ctx)


def _diag_one(n: int, i: int, value: Poly, ctx: tuple[str, ...]) -> Mat:
    rows = [[Poly.const(ctx, 1 if r == c else 0) for c in range(n)] for r in range(n)]
    rows[i][i] = value.embed(ctx)
    return Mat.from_rows(rows, ctx)


def _diag_unit_certs(pres: RingPresentation, n: int, i: int,
                     cert: MembershipCertificate) -> tuple[MembershipCertificate, ...]:
    zero = MembershipCertificate(Poly.zero(pres.ambient))
    return tuple(cert if (r == c == i) else zero
                 for r in range(n) for c in range(n))


def identity_witmat(pres, prod: Mat, certs) -> WitMat:
    ident = Mat.identity(prod.rows, pres.ambient)
    if certs is None:
        diff = prod - ident
        if any(not e.is_zero() for e in diff.entries):
            raise CertificateError("factor product is not exactly the identity")
        certs = tuple(MembershipCertificate(e) for e in diff.entries)
    return WitMat(pres, prod, ident, certs)


def composed_inverse_certs(pres, a, a_inv, b, b_inv, bb_certs, aa_certs):
    """Certificates for (a@b) @ (b_inv@a_inv) == I.

    ``bb_certs`` certify b@b_inv == I and ``aa_certs`` certify
    a@a_inv == I; None means the product is exactly the identity.
    """
    wm_bb = identity_witmat(pres, b @ b_inv, bb_certs)
    wm_aa = identity_witmat(pres, a @ a_inv, aa_certs)
    # (a b)(b~ a~) = a (b b~) a~ == a I a~ = a a~ == I
    prod = wmat_mul(wmat_mul(WitMat.refl(pres, a), wm_bb), WitMat.refl(pres, a_inv))
    return wmat_trans(prod, wm_aa).certs
