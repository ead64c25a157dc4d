"""Milnor-basis arithmetic for the mod-2 Steenrod algebra.

A Milnor monomial Sq(r1, r2, ...) is stored as a tuple of non-negative
exponents with trailing zeros trimmed; the empty tuple is the unit Sq0.
F2-linear combinations are frozensets of monomials, wrapped in Element
at the API boundary.  All arithmetic is exact over F2.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

Monomial = tuple[int, ...]

SQ0: Monomial = ()

DEGREE_CAP = 512


class DegreeError(ValueError):
    """Raised when an operation mixes internal degrees it must not mix."""


def trim(exponents: tuple[int, ...]) -> Monomial:
    """Drop trailing zeros so each monomial has one canonical form."""
    k = len(exponents)
    while k and exponents[k - 1] == 0:
        k -= 1
    return tuple(exponents[:k])


def degree(mono: Monomial) -> int:
    """Internal degree: sum of r_i * (2^i - 1)."""
    return sum(r * ((1 << (i + 1)) - 1) for i, r in enumerate(mono))


def _rev_padded(mono: Monomial, length: int) -> tuple[int, ...]:
    return tuple(reversed(mono + (0,) * (length - len(mono))))


def compare(a: Monomial, b: Monomial) -> int:
    """Order within one degree: a > b iff a has the smaller entry at the
    highest index where the zero-padded exponent sequences differ.

    Returns 1 if a > b, 0 if equal, -1 if a < b.  In degree 10 this gives
    Sq10 > Sq(7,1) > Sq(4,2) > Sq(1,3) > Sq(3,0,1) > Sq(0,1,1).
    """
    if degree(a) != degree(b):
        raise DegreeError(f"cannot order monomials of degrees {degree(a)} and {degree(b)}")
    length = max(len(a), len(b))
    ka, kb = _rev_padded(a, length), _rev_padded(b, length)
    if ka == kb:
        return 0
    return 1 if ka < kb else -1


def sort_key(mono: Monomial) -> tuple[int, ...]:
    """Sort key putting each degree's basis in descending order (largest first).

    Only meaningful among monomials of equal degree; shorter tuples are
    padded with zeros, which equal-degree comparison makes harmless.
    """
    return _rev_padded(mono, 8 if len(mono) <= 8 else len(mono))


@lru_cache(maxsize=None)
def basis(n: int) -> tuple[Monomial, ...]:
    """All Milnor monomials of degree n, in descending order (Sq(n) first)."""
    if n < 0:
        return ()
    if n > DEGREE_CAP:
        raise DegreeError(f"degree {n} exceeds the internal cap {DEGREE_CAP}")
    out: list[Monomial] = []

    def rec(rem: int, i: int, cur: list[int]) -> None:
        weight = (1 << i) - 1
        if weight > rem:
            if rem == 0:
                out.append(trim(tuple(cur)))
            return
        for r in range(rem // weight + 1):
            cur.append(r)
            rec(rem - r * weight, i + 1, cur)
            cur.pop()

    rec(n, 1, [])
    out.sort(key=sort_key)
    return tuple(out)


def _multinomial_odd(parts: list[int]) -> bool:
    """Mod-2 multinomial coefficient via disjointness of binary digits."""
    acc = 0
    for p in parts:
        if acc & p:
            return False
        acc |= p
    return True


@lru_cache(maxsize=None)
def multiply_mono(r: Monomial, s: Monomial) -> frozenset[Monomial]:
    """Milnor product of two basis monomials, as a set of monomials.

    Sums over Milnor matrices (x_ij) with row sums sum_j 2^j x_ij = r_i and
    column sums sum_i x_ij = s_j; a matrix contributes iff every diagonal
    multinomial is odd, and then its term has exponents t_n = sum_{i+j=n} x_ij.
    """
    if not r:
        return frozenset((s,))
    if not s:
        return frozenset((r,))
    nr, ns = len(r), len(s)
    result: set[Monomial] = set()
    # rows[i] is the chosen (x_i1, ..., x_ins); x_i0 is the row remainder.
    rows: list[tuple[int, ...]] = []

    def place_row(i: int, col_budget: tuple[int, ...]) -> None:
        if i > nr:
            finish(col_budget)
            return
        ri = r[i - 1]
        choice = [0] * ns

        def pick(j: int, rem: int) -> None:
            if j > ns:
                rows.append(tuple(choice))
                place_row(i + 1, tuple(col_budget[k] - choice[k] for k in range(ns)))
                rows.pop()
                return
            top = min(rem >> j, col_budget[j - 1])
            for x in range(top + 1):
                choice[j - 1] = x
                pick(j + 1, rem - (x << j))
            choice[j - 1] = 0

        pick(1, ri)

    def finish(col_rest: tuple[int, ...]) -> None:
        # col_rest supplies row 0: x_0j = s_j - sum_i x_ij.
        size = nr + ns
        t = [0] * (size + 1)
        ok = True
        for n in range(1, size + 1):
            parts = []
            lo = max(0, n - ns)
            for i in range(lo, min(n, nr) + 1):
                j = n - i
                if i == 0:
                    x = col_rest[j - 1]
                elif j == 0:
                    x = r[i - 1] - sum(rows[i - 1][k] << (k + 1) for k in range(ns))
                else:
                    x = rows[i - 1][j - 1]
                if x:
                    parts.append(x)
                t[n] += x
            if not _multinomial_odd(parts):
                ok = False
                break
        if ok:
            mono = trim(tuple(t[1:]))
            if mono in result:
                result.remove(mono)
            else:
                result.add(mono)

    place_row(1, s)
    return frozenset(result)


def multiply_sets(a: frozenset[Monomial], b: frozenset[Monomial]) -> frozenset[Monomial]:
    """Product of two F2 sums of monomials."""
    acc: set[Monomial] = set()
    for x in a:
        for y in b:
            acc ^= multiply_mono(x, y)
    return frozenset(acc)


@lru_cache(maxsize=None)
def coproduct(mono: Monomial) -> tuple[tuple[Monomial, Monomial], ...]:
    """All pairs (a, b) with componentwise sum a + b = mono."""
    pairs: list[tuple[Monomial, Monomial]] = [((), ())]
    for r in mono:
        pairs = [
            (left + (x,), right + (r - x,))
            for left, right in pairs
            for x in range(r + 1)
        ]
    return tuple((trim(a), trim(b)) for a, b in pairs)


def double_mono(mono: Monomial) -> Monomial:
    """Entrywise exponent doubling: Sq(r1, r2, ...) -> Sq(2r1, 2r2, ...)."""
    return tuple(2 * r for r in mono)


class DoublingContractWarning(UserWarning):
    """Doubling applied outside the single-square contract."""


@dataclass(frozen=True)
class Element:
    """A homogeneous F2-linear combination of Milnor monomials.

    The zero element has an empty term set and degree None.  Addition is
    symmetric difference; mixing degrees raises DegreeError.
    """

    terms: frozenset[Monomial]
    degree: int | None

    @staticmethod
    def zero() -> "Element":
        return Element(frozenset(), None)

    @staticmethod
    def from_monomial(mono: Monomial) -> "Element":
        return Element(frozenset((mono,)), degree(mono))

    @staticmethod
    def from_terms(terms: frozenset[Monomial] | set[Monomial]) -> "Element":
        terms = frozenset(terms)
        if not terms:
            return Element.zero()
        degs = {degree(m) for m in terms}
        if len(degs) > 1:
            raise DegreeError(f"inhomogeneous term degrees {sorted(degs)}")
        return Element(terms, degs.pop())

    @staticmethod
    def unit() -> "Element":
        return Element.from_monomial(SQ0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Element") -> "Element":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise DegreeError(f"cannot add degrees {self.degree} and {other.degree}")
        return Element.from_terms(self.terms ^ other.terms)

    def __mul__(self, other: "Element") -> "Element":
        if self.is_zero() or other.is_zero():
            return Element.zero()
        return Element.from_terms(multiply_sets(self.terms, other.terms))

    def sorted_terms(self) -> list[Monomial]:
        return sorted(self.terms, key=sort_key)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        return "+".join(mono_str(m) for m in self.sorted_terms())


def double(elem: Element) -> Element:
    """Double every exponent entry of every term.

    Matches letterwise doubling of admissible words only for elements built
    from single squares; other inputs are accepted but flagged, since the
    two notions of doubling diverge already on Sq(2,1).
    """
    if elem.is_zero():
        return elem
    if any(len(m) > 1 for m in elem.terms):
        warnings.warn(
            "doubling a monomial with more than one Milnor entry; entrywise "
            "doubling may differ from admissible-word doubling",
            DoublingContractWarning,
            stacklevel=2,
        )
    return Element.from_terms(frozenset(double_mono(m) for m in elem.terms))


def mono_str(mono: Monomial) -> str:
    if not mono:
        return "Sq0"
    if len(mono) == 1:
        return f"Sq{mono[0]}"
    return "Sq(" + ",".join(str(r) for r in mono) + ")"


_ATOM = re.compile(r"Sq\^?(?:\{)?(?:(\d+)|\((\d+(?:,\d+)*)\))(?:\})?")


class ParseError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+()":
            tokens.append(c)
            i += 1
            continue
        m = _ATOM.match(text, i)
        if not m:
            raise ParseError(f"unexpected input at {text[i:i+16]!r}")
        tokens.append(m.group(0))
        i = m.end()
    return tokens


def _parse_atom_token(tok: str) -> Monomial:
    m = _ATOM.fullmatch(tok)
    if not m:
        raise ParseError(f"bad Sq atom {tok!r}")
    if m.group(1) is not None:
        k = int(m.group(1))
        return trim((k,))
    return trim(tuple(int(x) for x in m.group(2).split(",")))


def parse_element(text: str) -> Element:
    """Parse `Sq12`, `Sq(0,4)`, sums with `+`, juxtaposition products, and
    parenthesized subexpressions.  `Sq^k` is accepted alongside `Sqk`."""
    tokens = _tokenize(text)
    pos = 0

    def parse_sum() -> Element:
        nonlocal pos
        acc = parse_product()
        while pos < len(tokens) and tokens[pos] == "+":
            pos += 1
            acc = acc + parse_product()
        return acc

    def parse_product() -> Element:
        nonlocal pos
        acc = None
        while pos < len(tokens) and tokens[pos] not in ("+", ")"):
            factor = parse_factor()
            acc = factor if acc is None else acc * factor
        if acc is None:
            raise ParseError("empty element")
        return acc

    def parse_factor() -> Element:
        nonlocal pos
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            inner = parse_sum()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ParseError("unbalanced parenthesis")
            pos += 1
            return inner
        pos += 1
        return Element.from_monomial(_parse_atom_token(tok))

    result = parse_sum()
    if pos != len(tokens):
        raise ParseError(f"trailing input near token {tokens[pos]!r}")
    return result


def parse_word(text: str) -> list[Monomial]:
    """Parse a plain product of Sq atoms (no sums, no parens) as a word."""
    tokens = _tokenize(text)
    if not tokens or any(t in "+()" for t in tokens):
        raise ParseError(f"not a plain word: {text!r}")
    return [_parse_atom_token(t) for t in tokens]


def element_str(terms: frozenset[Monomial]) -> str:
    return str(Element.from_terms(terms)) if terms else "0"
