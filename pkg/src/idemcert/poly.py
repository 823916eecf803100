"""Exact multivariate polynomials over arbitrary-precision integers.

A polynomial lives in a declared *context*: an ordered tuple of variable
names.  Terms are held in a canonical order (total degree descending,
ties broken lexicographically on the exponent vector, earlier context
variables taking precedence), so equality of two polynomials over the
same context is a plain data comparison.  The particular monomial order
is an artifact convention; nothing downstream depends on the choice,
only on it being fixed once and for all.

Coefficients are Python ints and are never reduced: all identities
checked elsewhere in the package are exact identities in Z[context].
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping


class ContextMismatchError(ValueError):
    """Raised when operands do not share a variable context."""


class PolyParseError(ValueError):
    """Raised for malformed polynomial text."""


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _canon_key(item):
    exp, _ = item
    return (sum(exp), exp)


class Poly:
    """An element of Z[context], kept in canonical form.

    ``terms`` maps exponent tuples (one entry per context variable) to
    nonzero integer coefficients; iteration order is canonical.
    """

    __slots__ = ("context", "terms")

    def __init__(self, context: tuple[str, ...], terms: Mapping[tuple[int, ...], int]):
        clean = {}
        n = len(context)
        for exp, coeff in terms.items():
            if coeff == 0:
                continue
            if len(exp) != n:
                raise ValueError(f"exponent vector {exp} does not match context {context}")
            clean[tuple(exp)] = clean.get(tuple(exp), 0) + coeff
        ordered = sorted(((e, c) for e, c in clean.items() if c != 0),
                         key=_canon_key, reverse=True)
        object.__setattr__(self, "context", tuple(context))
        object.__setattr__(self, "terms", dict(ordered))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls, context: tuple[str, ...]) -> "Poly":
        return cls(context, {})

    @classmethod
    def const(cls, context: tuple[str, ...], value: int) -> "Poly":
        if value == 0:
            return cls.zero(context)
        return cls(context, {(0,) * len(context): value})

    @classmethod
    def var(cls, context: tuple[str, ...], name: str) -> "Poly":
        try:
            i = context.index(name)
        except ValueError:
            raise ContextMismatchError(f"variable {name!r} not in context {context}") from None
        exp = [0] * len(context)
        exp[i] = 1
        return cls(context, {tuple(exp): 1})

    # -- basic queries -----------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self.terms)

    def const_value(self) -> int:
        if not self.is_const():
            raise ValueError("not a constant polynomial")
        return next(iter(self.terms.values()), 0)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(exp) for exp in self.terms)

    def degree_in(self, name: str) -> int:
        """Degree in one variable; -1 for the zero polynomial."""
        i = self._index(name)
        if not self.terms:
            return -1
        return max(exp[i] for exp in self.terms)

    def leading(self) -> tuple[tuple[int, ...], int]:
        """Leading (exponent, coefficient) in the canonical order."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = next(iter(self.terms))
        return exp, self.terms[exp]

    def variables(self) -> set[str]:
        """Names that actually occur with positive exponent."""
        used = set()
        for exp in self.terms:
            for name, e in zip(self.context, exp):
                if e:
                    used.add(name)
        return used

    def _index(self, name: str) -> int:
        try:
            return self.context.index(name)
        except ValueError:
            raise ContextMismatchError(f"variable {name!r} not in context {self.context}") from None

    # -- ring operations ---------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.context != self.context:
                raise ContextMismatchError(
                    f"context mismatch: {self.context} vs {other.context}")
            return other
        if isinstance(other, int):
            return Poly.const(self.context, other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for exp, coeff in other.terms.items():
            terms[exp] = terms.get(exp, 0) + coeff
        return Poly(self.context, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.context, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        charge_effort(len(self.terms) * len(other.terms))
        terms: dict[tuple[int, ...], int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, 0) + c1 * c2
        return Poly(self.context, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a natural number")
        result = Poly.const(self.context, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self.is_const() and self.const_value() == other
        if not isinstance(other, Poly):
            return NotImplemented
        return self.context == other.context and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.context, tuple(self.terms.items())))

    # -- structural operations ---------------------------------------

    def embed(self, context: tuple[str, ...]) -> "Poly":
        """Re-express in a larger (or reordered) context containing all used names."""
        if context == self.context:
            return self
        pos = {}
        for name in self.context:
            try:
                pos[name] = context.index(name)
            except ValueError:
                pos[name] = -1
        terms = {}
        for exp, coeff in self.terms.items():
            new = [0] * len(context)
            for name, e in zip(self.context, exp):
                if e == 0:
                    continue
                i = pos[name]
                if i < 0:
                    raise ContextMismatchError(
                        f"variable {name!r} missing from target context {context}")
                new[i] = e
            terms[tuple(new)] = terms.get(tuple(new), 0) + coeff
        return Poly(context, terms)

    def restrict(self, context: tuple[str, ...]) -> "Poly":
        """Drop unused context variables; fails if a dropped one occurs."""
        return self.embed(context)

    def substitute(self, bindings: Mapping[str, "Poly"]) -> "Poly":
        """Simultaneous substitution.

        Every bound name must occur in this polynomial's context; all
        images must share one context, which also supplies the unbound
        variables (these pass through unchanged).
        """
        for name in bindings:
            self._index(name)
        images = list(bindings.values())
        if images:
            target = images[0].context
            for img in images[1:]:
                if img.context != target:
                    raise ContextMismatchError("substitution images disagree on context")
        else:
            target = self.context
        table = []
        for name in self.context:
            if name in bindings:
                table.append(bindings[name])
            else:
                table.append(Poly.var(target, name))
        result = Poly.zero(target)
        for exp, coeff in self.terms.items():
            term = Poly.const(target, coeff)
            for img, e in zip(table, exp):
                if e:
                    term = term * img**e
            result = result + term
        return result

    def coeffs_in(self, name: str) -> list["Poly"]:
        """Coefficients c_0..c_d with self = sum of c_k * name**k.

        The c_k stay in the same context (with zero exponent on ``name``),
        so the reconstruction round-trips exactly.
        """
        i = self._index(name)
        d = max((exp[i] for exp in self.terms), default=0)
        buckets: list[dict] = [dict() for _ in range(d + 1)]
        for exp, coeff in self.terms.items():
            stripped = list(exp)
            k = stripped[i]
            stripped[i] = 0
            buckets[k][tuple(stripped)] = buckets[k].get(tuple(stripped), 0) + coeff
        return [Poly(self.context, b) for b in buckets]

    # -- text form ----------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in self.terms.items():
            factors = []
            for name, e in zip(self.context, exp):
                if e == 0:
                    continue
                factors.append(name if e == 1 else f"{name}^{e}")
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            parts.append(("-" if coeff < 0 else "+", body))
        sign, body = parts[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Poly({str(self)!r}, context={self.context})"


# -- parsing ----------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|([()+\-*^]))")


def _tokenize(text: str) -> Iterator[tuple[str, str]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise PolyParseError(f"unexpected character at {rest[:10]!r}")
        pos = m.end()
        if m.group(1):
            yield ("int", m.group(1))
        elif m.group(2):
            yield ("name", m.group(2))
        else:
            yield ("op", m.group(3))
    yield ("end", "")


class _Parser:
    def __init__(self, text: str, context: tuple[str, ...]):
        self.tokens = list(_tokenize(text))
        self.context = context
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expr(self) -> Poly:
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.take()
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self) -> Poly:
        node = self.unary()
        while self.peek() == ("op", "*"):
            self.take()
            node = node * self.unary()
        return node

    def unary(self) -> Poly:
        sign = 1
        while self.peek() in (("op", "-"), ("op", "+")):
            _, op = self.take()
            if op == "-":
                sign = -sign
        p = self.power()
        return p if sign == 1 else -p

    def power(self) -> Poly:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "int":
                raise PolyParseError("exponent must be a natural number")
            return base ** int(val)
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "int":
            return Poly.const(self.context, int(val))
        if kind == "name":
            if val not in self.context:
                raise PolyParseError(f"unknown variable {val!r} (context {self.context})")
            return Poly.var(self.context, val)
        if (kind, val) == ("op", "("):
            node = self.expr()
            if self.take() != ("op", ")"):
                raise PolyParseError("missing closing parenthesis")
            return node
        raise PolyParseError(f"unexpected token {val!r}")


def parse_poly(text: str, context: Iterable[str]) -> Poly:
    """Parse the canonical text form (plus parenthesized sums/products)."""
    context = tuple(context)
    for name in context:
        if not _NAME_RE.fullmatch(name):
            raise PolyParseError(f"invalid variable name {name!r}")
    parser = _Parser(text, context)
    p = parser.expr()
    if parser.peek()[0] != "end":
        raise PolyParseError(f"trailing input near {parser.peek()[1]!r}")
    return p


# -- effort accounting ------------------------------------------------

class EffortExceededError(RuntimeError):
    """Raised when a configured work bound is exhausted."""


class EffortBudget:
    """Deterministic operation counter used to bound long searches.

    Charges are proportional to term-pair products, so identical inputs
    exhaust the budget at identical points.
    """

    def __init__(self, limit: int):
        self.limit = limit
        self.spent = 0

    def charge(self, amount: int) -> None:
        self.spent += amount
        if self.spent > self.limit:
            raise EffortExceededError(
                f"effort bound exhausted ({self.spent} > {self.limit})")


_ACTIVE_BUDGET: EffortBudget | None = None


def charge_effort(amount: int) -> None:
    if _ACTIVE_BUDGET is not None:
        _ACTIVE_BUDGET.charge(amount)


class effort_limit:
    """Context manager installing a global :class:`EffortBudget`."""

    def __init__(self, limit: int | None):
        self.budget = EffortBudget(limit) if limit is not None else None
        self._saved: EffortBudget | None = None

    def __enter__(self):
        global _ACTIVE_BUDGET
        self._saved = _ACTIVE_BUDGET
        if self.budget is not None:
            _ACTIVE_BUDGET = self.budget
        return self.budget

    def __exit__(self, *exc):
        global _ACTIVE_BUDGET
        _ACTIVE_BUDGET = self._saved
        return False
