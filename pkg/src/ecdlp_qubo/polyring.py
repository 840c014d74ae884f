"""Multilinear polynomials over 0/1 variables with integer coefficients.

A monomial is a ``frozenset`` of variable indices, so ``u*u == u`` holds by
construction and powers never appear.  Coefficients are Python integers;
reduction modulo p is an explicit operation (:meth:`Poly.normalize_mod`).
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from typing import Union

from .errors import UnassignedVariable

Monomial = frozenset
ONE = frozenset()

Assignment = Union[Sequence[int], Mapping[int, int]]


def _sort_key(mono: frozenset) -> tuple:
    return (len(mono), sorted(mono))


class Poly:
    """Sparse multilinear polynomial ``{monomial: coefficient}``.

    Instances are treated as immutable values; arithmetic returns new
    objects and zero coefficients are never stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[frozenset, int] | None = None):
        clean: dict[frozenset, int] = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    mono = frozenset(mono)
                    c = clean.get(mono, 0) + int(coeff)
                    if c:
                        clean[mono] = c
                    else:
                        clean.pop(mono, None)
        self.terms = clean

    # constructors -----------------------------------------------------

    @classmethod
    def const(cls, c: int) -> "Poly":
        return cls({ONE: c})

    @classmethod
    def var(cls, i: int, coeff: int = 1) -> "Poly":
        return cls({frozenset((i,)): coeff})

    @classmethod
    def binary(cls, indices: Sequence[int]) -> "Poly":
        """Integer whose bits are the given variables, most significant first."""
        k = len(indices)
        return cls({frozenset((v,)): 1 << (k - 1 - j) for j, v in enumerate(indices)})

    @classmethod
    def parse(cls, text: str, prefix: str = "u") -> "Poly":
        """Read a polynomial such as ``"2u_0u_1 + u_4^3 - 1"``.

        Powers collapse on ingestion, so ``u_4^3`` becomes ``u_4``.
        Implicit multiplication and ``*`` are both accepted.
        """
        src = text.replace(" ", "").replace("*", "")
        if not src:
            return cls()
        if src[0] not in "+-":
            src = "+" + src
        term_re = re.compile(r"([+-])(\d*)((?:%s_?\{?\d+\}?(?:\^\{?\d+\}?)?)*)" % re.escape(prefix))
        var_re = re.compile(r"%s_?\{?(\d+)\}?(?:\^\{?(\d+)\}?)?" % re.escape(prefix))
        out: dict[frozenset, int] = {}
        pos = 0
        while pos < len(src):
            m = term_re.match(src, pos)
            if not m or m.end() == pos or (not m.group(2) and not m.group(3)):
                raise ValueError(f"cannot parse polynomial near {src[pos:pos + 12]!r}")
            sign = -1 if m.group(1) == "-" else 1
            coeff = int(m.group(2)) if m.group(2) else 1
            mono = frozenset(int(v.group(1)) for v in var_re.finditer(m.group(3)))
            out[mono] = out.get(mono, 0) + sign * coeff
            pos = m.end()
        return cls(out)

    # arithmetic -------------------------------------------------------

    def __add__(self, other) -> "Poly":
        other = _lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for mono, c in other.terms.items():
            v = out.get(mono, 0) + c
            if v:
                out[mono] = v
            else:
                out.pop(mono, None)
        return _raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return _raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        other = _lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if isinstance(other, int):
            if other == 0:
                return Poly()
            return _raw({m: c * other for m, c in self.terms.items()})
        other = _lift(other)
        if other is NotImplemented:
            return other
        out: dict[frozenset, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = m1 | m2
                out[mono] = out.get(mono, 0) + c1 * c2
        return _raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        other = _lift(other)
        if other is NotImplemented:
            return other
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    # queries ----------------------------------------------------------

    @property
    def constant(self) -> int:
        return self.terms.get(ONE, 0)

    def variables(self) -> set[int]:
        out: set[int] = set()
        for mono in self.terms:
            out.update(mono)
        return out

    def normalize_mod(self, p: int) -> "Poly":
        """Reduce every coefficient into ``[0, p-1]`` and drop zeros."""
        if p < 2:
            raise ValueError("modulus must be >= 2")
        return _raw({m: c % p for m, c in self.terms.items() if c % p})

    def evaluate(self, asg: Assignment) -> int:
        """Exact integer value at a 0/1 assignment (sequence or mapping)."""
        total = 0
        for mono, c in self.terms.items():
            for v in mono:
                try:
                    bit = asg[v]
                except (IndexError, KeyError):
                    raise UnassignedVariable(v) from None
                if not bit:
                    break
            else:
                total += c
        return total

    def value_bounds(self) -> tuple[int, int]:
        """Sound ``(lo, hi)`` over all 0/1 assignments."""
        const = self.constant
        lo = const + sum(c for m, c in self.terms.items() if m and c < 0)
        hi = const + sum(c for m, c in self.terms.items() if m and c > 0)
        return lo, hi

    def max_degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def substitute(self, mapping: Mapping[int, "Poly | int"]) -> "Poly":
        """Replace variables by polynomials or constants."""
        out = Poly()
        for mono, c in self.terms.items():
            term = Poly.const(c)
            rest = set()
            for v in mono:
                if v in mapping:
                    term = term * mapping[v]
                else:
                    rest.add(v)
            out = out + term * _raw({frozenset(rest): 1})
        return out

    def sorted_terms(self) -> list[tuple[frozenset, int]]:
        return sorted(self.terms.items(), key=lambda t: _sort_key(t[0]))

    def render(self, prefix: str = "u") -> str:
        """Deterministic text form; terms by (degree, variable indices)."""
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            body = "*".join(f"{prefix}{v}" for v in sorted(mono))
            if not body:
                s = str(abs(c))
            elif abs(c) == 1:
                s = body
            else:
                s = f"{abs(c)}*{body}"
            parts.append(("-" if c < 0 else "+", s))
        head_sign, head = parts[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, s in parts[1:]:
            out += f" {sign} {s}"
        return out

    def __repr__(self) -> str:
        return f"Poly({self.render()})"


def _raw(terms: dict) -> Poly:
    # caller guarantees canonical keys and no zero coefficients
    p = Poly.__new__(Poly)
    p.terms = terms
    return p


def _lift(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, int):
        return Poly.const(x)
    return NotImplemented


def poly_add(f: Poly, g: Poly) -> Poly:
    return f + g


def poly_mul(f: Poly, g: Poly) -> Poly:
    return f * g


def normalize_mod(f: Poly, p: int) -> Poly:
    return f.normalize_mod(p)


def evaluate(f: Poly, asg: Assignment) -> int:
    return f.evaluate(asg)


def value_bounds(f: Poly) -> tuple[int, int]:
    return f.value_bounds()


def max_degree(f: Poly) -> int:
    return f.max_degree()


def poly_sum(items: Iterable[Poly]) -> Poly:
    out: dict[frozenset, int] = {}
    for f in items:
        for m, c in f.terms.items():
            out[m] = out.get(m, 0) + c
    return _raw({m: c for m, c in out.items() if c})
