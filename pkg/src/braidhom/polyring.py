"""The graded polynomial algebra over the two-element field.

Every variable is homogeneous of x-degree 2, so a monomial of total
exponent degree d has x-degree 2d.  Coefficients live in GF(2): a
polynomial is a finite set of monomials and addition is symmetric
difference.

Monomials are packed into integers, eight bits of exponent per variable,
so that multiplying two monomials is a single integer addition.  Exponents
stay far below the field width for every computation this package runs.
"""

from __future__ import annotations

from functools import lru_cache

from .errors import UsageError
from .gf2 import F2Matrix

FIELD_BITS = 8
_MASK = (1 << FIELD_BITS) - 1


def pack_monomial(exponents) -> int:
    acc = 0
    for i, e in enumerate(exponents):
        acc |= e << (FIELD_BITS * i)
    return acc


def unpack_monomial(mono: int, nvars: int) -> tuple[int, ...]:
    return tuple((mono >> (FIELD_BITS * i)) & _MASK for i in range(nvars))


def monomial_degree(mono: int) -> int:
    deg = 0
    while mono:
        deg += mono & _MASK
        mono >>= FIELD_BITS
    return deg


class Poly:
    """A polynomial over GF(2) in ``nvars`` variables, stored as a term set."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms):
        self.nvars = nvars
        self.terms = frozenset(terms)

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars, ())

    @classmethod
    def one(cls, nvars: int) -> "Poly":
        return cls(nvars, (0,))

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        if not 0 <= index < nvars:
            raise UsageError(f"variable index {index} out of range")
        return cls(nvars, (1 << (FIELD_BITS * index),))

    @classmethod
    def from_vars(cls, nvars: int, indices) -> "Poly":
        """Sum of the listed variables (a linear form)."""
        terms = set()
        for i in indices:
            terms ^= {1 << (FIELD_BITS * i)}
        return cls(nvars, terms)

    @classmethod
    def from_exponents(cls, nvars: int, exponent_tuples) -> "Poly":
        return cls(nvars, (pack_monomial(t) for t in exponent_tuples))

    def exponent_tuples(self) -> list[tuple[int, ...]]:
        return sorted(unpack_monomial(m, self.nvars) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.nvars, self.terms))

    def __add__(self, other: "Poly") -> "Poly":
        if self.nvars != other.nvars:
            raise ValueError("mixed variable counts")
        return Poly(self.nvars, self.terms ^ other.terms)

    def __mul__(self, other: "Poly") -> "Poly":
        if self.nvars != other.nvars:
            raise ValueError("mixed variable counts")
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        if len(a) == 1:
            (t,) = a
            return Poly(self.nvars, {t + s for s in b})
        acc: set = set()
        for s in a:
            for t in b:
                m = s + t
                if m in acc:
                    acc.discard(m)
                else:
                    acc.add(m)
        return Poly(self.nvars, acc)

    def degree(self) -> int:
        """Total exponent degree of the highest term (zero polynomial: -1)."""
        if not self.terms:
            return -1
        return max(monomial_degree(t) for t in self.terms)

    def is_homogeneous(self) -> bool:
        degrees = {monomial_degree(t) for t in self.terms}
        return len(degrees) <= 1

    def x_degree(self) -> int:
        """x-degree of a homogeneous polynomial (zero polynomial: -1)."""
        if not self.terms:
            return -1
        degrees = {monomial_degree(t) for t in self.terms}
        if len(degrees) != 1:
            raise UsageError("x_degree of a non-homogeneous polynomial")
        return 2 * degrees.pop()

    def exponent_of(self, mono: int, var: int) -> int:
        return (mono >> (FIELD_BITS * var)) & _MASK

    def support(self) -> set[int]:
        out: set[int] = set()
        for t in self.terms:
            i = 0
            while t:
                if t & _MASK:
                    out.add(i)
                t >>= FIELD_BITS
                i += 1
        return out

    def substitute(self, mapping: dict[int, "Poly"]) -> "Poly":
        """Replace each variable in ``mapping`` by the given polynomial."""
        if not mapping:
            return self
        touched = 0
        for i in mapping:
            touched |= _MASK << (FIELD_BITS * i)
        result: set = set()
        cache: dict[tuple[int, int], Poly] = {}

        def power(idx: int, e: int) -> Poly:
            key = (idx, e)
            if key not in cache:
                if e == 1:
                    cache[key] = mapping[idx]
                else:
                    cache[key] = power(idx, e - 1) * mapping[idx]
            return cache[key]

        for term in self.terms:
            if not term & touched:
                result ^= {term}
                continue
            plain = term & ~touched
            factor = Poly(self.nvars, (plain,))
            t = term & touched
            i = 0
            while t:
                e = (t >> (FIELD_BITS * i)) & _MASK
                if e and (touched >> (FIELD_BITS * i)) & _MASK:
                    factor = factor * power(i, e)
                    t &= ~(_MASK << (FIELD_BITS * i))
                elif e:
                    t &= ~(_MASK << (FIELD_BITS * i))
                i += 1
            result ^= factor.terms
        return Poly(self.nvars, result)

    def rename(self, var_map: dict[int, int], new_nvars: int) -> "Poly":
        """Reindex variables into a ring with ``new_nvars`` variables."""
        terms = []
        for t in self.terms:
            acc = 0
            i = 0
            rest = t
            while rest:
                e = rest & _MASK
                if e:
                    acc |= e << (FIELD_BITS * var_map[i])
                rest >>= FIELD_BITS
                i += 1
            terms.append(acc)
        return Poly(new_nvars, terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        names = []
        for t in self.exponent_tuples()[::-1]:
            parts = [
                f"x{i}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(t) if e
            ]
            names.append("*".join(parts) if parts else "1")
        return " + ".join(names)


def _compositions(total: int, parts: int):
    """All exponent tuples of length ``parts`` summing to ``total``, lex descending."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def monomial_basis(nvars: int, xdeg: int) -> tuple[int, ...]:
    """All monomials of the given x-degree, packed, in graded-lex order.

    The order is fixed and deterministic so serialized bases are stable.
    """
    if xdeg < 0 or xdeg % 2 != 0:
        raise UsageError(f"x-degree must be even and nonnegative, got {xdeg}")
    return tuple(pack_monomial(t) for t in _compositions(xdeg // 2, nvars))


def monomial_basis_tuples(nvars: int, xdeg: int) -> tuple[tuple[int, ...], ...]:
    """The same basis as exponent tuples (for display and serialization)."""
    return tuple(
        unpack_monomial(m, nvars) for m in monomial_basis(nvars, xdeg)
    )


@lru_cache(maxsize=None)
def monomials_over(vars_subset: tuple[int, ...], nvars: int, xdeg: int):
    """Monomials of the given x-degree supported on a subset of variables.

    Packed monomials in the full-width ring, ordered compatibly with
    ``monomial_basis`` on the subset.
    """
    if xdeg < 0 or xdeg % 2 != 0:
        return ()
    out = []
    for packed in _compositions(xdeg // 2, len(vars_subset)):
        acc = 0
        for pos, e in zip(vars_subset, packed):
            acc |= e << (FIELD_BITS * pos)
        out.append(acc)
    return tuple(out)


def mult_matrix(f: Poly, nvars: int, source_xdeg: int) -> F2Matrix:
    """Matrix of multiplication by homogeneous ``f`` between monomial bases.

    Columns index ``monomial_basis(nvars, source_xdeg)``, rows index the
    basis at ``source_xdeg + x_degree(f)``.
    """
    if not f.is_homogeneous():
        raise UsageError("mult_matrix requires a homogeneous polynomial")
    source = monomial_basis(nvars, source_xdeg)
    if f.is_zero():
        return F2Matrix.zeros(0, len(source))
    target = monomial_basis(nvars, source_xdeg + f.x_degree())
    index = {m: r for r, m in enumerate(target)}
    entries = []
    for c, mono in enumerate(source):
        for t in f.terms:
            entries.append((index[mono + t], c))
    return F2Matrix.from_entries(len(target), len(source), entries)
