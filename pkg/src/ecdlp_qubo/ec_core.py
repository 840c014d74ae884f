"""Exact prime-field and short Weierstrass arithmetic for small curves.

Everything here is the classical side of the attack: it computes the
precomputed multiples [2^i]P, the shifted targets, and it verifies every
candidate logarithm produced by a QUBO solver.  Points are affine with an
explicit point at infinity, and the group law is complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    CapExceeded,
    DegeneratePower,
    InvalidCurve,
    NotInSubgroup,
    PointNotOnCurve,
    ZeroInverse,
)

#: Iteration guard for :func:`point_order`.
ORDER_ITERATION_CAP = 1 << 20
#: Guard for :func:`ecdlp_bruteforce`.
BRUTEFORCE_ORDER_CAP = 1 << 24


def _is_probable_prime(p: int) -> bool:
    if p < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for p < 3.3e24
    for a in small:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldElement:
    """An element of F_p, always stored reduced into ``[0, p)``."""

    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        object.__setattr__(self, "value", self.value % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError(
                    f"moduli differ: {self.modulus} vs {other.modulus}"
                )
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value + v, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value - v, self.modulus)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(v - self.value, self.modulus)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value * v, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.modulus)

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return self * fe_inv(FieldElement(v, self.modulus))

    def __pow__(self, k: int):
        if k < 0:
            return fe_inv(self) ** (-k)
        return FieldElement(pow(self.value, k, self.modulus), self.modulus)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.modulus})"


def fe_inv(x: FieldElement) -> FieldElement:
    """Multiplicative inverse; raises :class:`ZeroInverse` for zero."""
    if x.value == 0:
        raise ZeroInverse(f"0 has no inverse modulo {x.modulus}")
    try:
        return FieldElement(pow(x.value, -1, x.modulus), x.modulus)
    except ValueError as exc:  # non-prime modulus sharing a factor
        raise ZeroInverse(str(exc)) from None


@dataclass(frozen=True)
class AffinePoint:
    """A curve point; ``x is None`` encodes the point at infinity."""

    x: int | None = None
    y: int | None = None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        if self.is_infinity:
            return "O"
        return f"({self.x}, {self.y})"


INFINITY = AffinePoint()


@dataclass(frozen=True)
class CurveParams:
    """Short Weierstrass curve y^2 = x^3 + a x + b over F_p."""

    a: int
    b: int
    p: int

    def __post_init__(self):
        if self.p < 3 or not _is_probable_prime(self.p):
            raise InvalidCurve(f"p = {self.p} is not an odd prime")
        if self.p.bit_length() > 64:
            raise InvalidCurve("moduli above 64 bits are not supported")
        object.__setattr__(self, "a", self.a % self.p)
        object.__setattr__(self, "b", self.b % self.p)
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise InvalidCurve(
                f"y^2 = x^3 + {self.a}x + {self.b} is singular over F_{self.p}"
            )

    def contains(self, pt: AffinePoint) -> bool:
        if pt.is_infinity:
            return True
        x, y, p = pt.x, pt.y, self.p
        if not (0 <= x < p and 0 <= y < p):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % p == 0

    def point(self, x: int, y: int) -> AffinePoint:
        """Build a finite point, reducing coordinates and checking membership."""
        pt = AffinePoint(x % self.p, y % self.p)
        if not self.contains(pt):
            raise PointNotOnCurve(f"({x}, {y}) is not on {self}")
        return pt

    def points(self) -> list[AffinePoint]:
        """All affine points of the curve (small p only), plus infinity last."""
        p = self.p
        roots: dict[int, list[int]] = {}
        for y in range(p):
            roots.setdefault(y * y % p, []).append(y)
        out = []
        for x in range(p):
            rhs = (x * x * x + self.a * x + self.b) % p
            out.extend(AffinePoint(x, y) for y in roots.get(rhs, ()))
        out.append(INFINITY)
        return out

    def __str__(self) -> str:
        return f"y^2 = x^3 + {self.a}x + {self.b} over F_{self.p}"


def _check(c: CurveParams, pt: AffinePoint) -> None:
    if not c.contains(pt):
        raise PointNotOnCurve(f"{pt} is not on {c}")


def point_neg(c: CurveParams, A: AffinePoint) -> AffinePoint:
    if A.is_infinity:
        return A
    return AffinePoint(A.x, (-A.y) % c.p)


def point_add(c: CurveParams, A: AffinePoint, B: AffinePoint) -> AffinePoint:
    """Complete affine group law (handles O, inverse pairs and doubling)."""
    _check(c, A)
    _check(c, B)
    return _add_unchecked(c, A, B)


def _add_unchecked(c: CurveParams, A: AffinePoint, B: AffinePoint) -> AffinePoint:
    if A.is_infinity:
        return B
    if B.is_infinity:
        return A
    p = c.p
    if A.x == B.x:
        if (A.y + B.y) % p == 0:
            return INFINITY
        lam = (3 * A.x * A.x + c.a) * pow(2 * A.y, -1, p) % p
    else:
        lam = (B.y - A.y) * pow(B.x - A.x, -1, p) % p
    x3 = (lam * lam - A.x - B.x) % p
    y3 = (lam * (A.x - x3) - A.y) % p
    return AffinePoint(x3, y3)


def scalar_mul(c: CurveParams, k: int, P: AffinePoint) -> AffinePoint:
    """[k]P by left-to-right double-and-add; negative k negates P."""
    _check(c, P)
    if k < 0:
        k, P = -k, point_neg(c, P)
    acc = INFINITY
    for bit in bin(k)[2:] if k else "":
        acc = _add_unchecked(c, acc, acc)
        if bit == "1":
            acc = _add_unchecked(c, acc, P)
    return acc


def point_order(c: CurveParams, P: AffinePoint, cap: int = ORDER_ITERATION_CAP) -> int:
    """Smallest k >= 1 with [k]P = O, by naive iteration."""
    _check(c, P)
    acc, k = P, 1
    while not acc.is_infinity:
        if k >= cap:
            raise CapExceeded(f"order of {P} exceeds iteration cap {cap}")
        acc = _add_unchecked(c, acc, P)
        k += 1
    return k


@dataclass(frozen=True)
class EcdlpInstance:
    """Find y in [1, order-1] with [y]P = Q."""

    curve: CurveParams
    P: AffinePoint
    Q: AffinePoint
    order: int = field(default=0)

    def __post_init__(self):
        _check(self.curve, self.P)
        _check(self.curve, self.Q)
        if self.P.is_infinity:
            raise ValueError("base point must be finite")
        if self.Q.is_infinity:
            raise ValueError("target point must be finite")
        if not self.order:
            object.__setattr__(self, "order", point_order(self.curve, self.P))
        elif not scalar_mul(self.curve, self.order, self.P).is_infinity:
            raise ValueError(f"{self.order} is not a multiple of ord(P)")

    @classmethod
    def from_coords(cls, p, a, b, px, py, qx, qy) -> "EcdlpInstance":
        curve = CurveParams(a, b, p)
        return cls(curve, curve.point(px, py), curve.point(qx, qy))

    @property
    def m(self) -> int:
        """Bit length of ord(P): number of scalar bits."""
        return self.order.bit_length()

    @property
    def n(self) -> int:
        """Bit length of p: bits per encoded coordinate."""
        return self.curve.p.bit_length()

    def target_shifted(self, shift: int) -> AffinePoint:
        return _add_unchecked(
            self.curve, self.Q, scalar_mul(self.curve, shift, self.P)
        )

    def in_subgroup(self) -> bool:
        try:
            ecdlp_bruteforce(self)
        except NotInSubgroup:
            return False
        return True


def precompute_powers(inst: EcdlpInstance) -> list[AffinePoint]:
    """[P, [2]P, [4]P, ..., [2^(m-1)]P]; all must be finite."""
    c = inst.curve
    out = [inst.P]
    for i in range(1, inst.m):
        nxt = _add_unchecked(c, out[-1], out[-1])
        if nxt.is_infinity:
            raise DegeneratePower(
                f"[2^{i}]P is the point at infinity (ord(P) = {inst.order})"
            )
        out.append(nxt)
    return out


def ecdlp_bruteforce(inst: EcdlpInstance) -> int:
    """The unique y in [1, order-1] with [y]P = Q, by walking the subgroup."""
    if inst.order >= BRUTEFORCE_ORDER_CAP:
        raise CapExceeded(f"order {inst.order} too large for brute force")
    c = inst.curve
    acc = inst.P
    for y in range(1, inst.order):
        if acc == inst.Q:
            return y
        acc = _add_unchecked(c, acc, inst.P)
    raise NotInSubgroup(f"{inst.Q} is not in the subgroup generated by {inst.P}")
