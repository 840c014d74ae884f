"""Compile an ECDLP instance into a QUBO and decode solver assignments.

Pipeline::

    build_system -> lift_integers -> linearize -> assemble_qubo

``build_system`` writes the scalar y in binary, y = sum 2^i u_i, and
expresses [y]P as a chain of conditional chord additions of the
precomputed points [2^i]P.  Each chain point R_k gets fresh binary
coordinates, and every addition yields one x- and one y-polynomial which
vanishes mod p exactly when the chord law holds (denominators cleared).

Two ways of avoiding the unrepresentable "both bits zero" case of the first
addition are supported:

* ``Method.FIRST``: ignore it and, if the solve fails, retry on Q + P.
* ``Method.SECOND``: select P itself when u_0 = u_1 = 0 and solve for
  Q + [shift]P with shift >= 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

from .ec_core import (
    AffinePoint,
    EcdlpInstance,
    _add_unchecked,
    precompute_powers,
    scalar_mul,
)
from .errors import ShiftedTargetAtInfinity, UnencodableChain
from .polyring import Poly, poly_sum
from .qubo import QuboInstance


class Method(enum.IntEnum):
    FIRST = 1
    SECOND = 2


# variable roles ---------------------------------------------------------


@dataclass(frozen=True)
class ScalarBit:
    bit: int

    def to_json(self) -> dict:
        return {"role": "scalar_bit", "bit": self.bit}


@dataclass(frozen=True)
class PointBit:
    point: int
    coord: str
    bit: int

    def to_json(self) -> dict:
        return {"role": "point_bit", "point": self.point, "coord": self.coord, "bit": self.bit}


@dataclass(frozen=True)
class CarryBit:
    equation: int
    bit: int

    def to_json(self) -> dict:
        return {"role": "carry_bit", "equation": self.equation, "bit": self.bit}


@dataclass(frozen=True)
class AuxProduct:
    left: int
    right: int

    def to_json(self) -> dict:
        return {"role": "aux_product", "left": self.left, "right": self.right}


VariableRole = Union[ScalarBit, PointBit, CarryBit, AuxProduct]


def role_from_json(obj: dict) -> VariableRole:
    kind = obj.get("role")
    if kind == "scalar_bit":
        return ScalarBit(int(obj["bit"]))
    if kind == "point_bit":
        if obj["coord"] not in ("x", "y"):
            raise ValueError(f"bad point coordinate {obj['coord']!r}")
        return PointBit(int(obj["point"]), obj["coord"], int(obj["bit"]))
    if kind == "carry_bit":
        return CarryBit(int(obj["equation"]), int(obj["bit"]))
    if kind == "aux_product":
        return AuxProduct(int(obj["left"]), int(obj["right"]))
    raise ValueError(f"unknown variable role {kind!r}")


ROLE_NAMES = {ScalarBit: "scalar", PointBit: "point", CarryBit: "carry", AuxProduct: "aux"}


def role_counts(varmap: Sequence[VariableRole]) -> dict[str, int]:
    counts = {name: 0 for name in ROLE_NAMES.values()}
    for role in varmap:
        counts[ROLE_NAMES[type(role)]] += 1
    counts["total"] = len(varmap)
    return counts


@dataclass(frozen=True)
class SubstitutionConstraint:
    """``aux`` stands for the product ``left * right``."""

    aux: int
    left: int
    right: int

    def penalty(self) -> Poly:
        """xy - 2xz - 2yz + 3z: zero iff z = xy, at least one otherwise."""
        x, y, z = Poly.var(self.left), Poly.var(self.right), Poly.var(self.aux)
        return x * y - 2 * x * z - 2 * y * z + 3 * z


@dataclass(frozen=True)
class EquationSystem:
    equations: tuple[Poly, ...]
    modulus: int
    varmap: tuple[VariableRole, ...]
    shift: int
    method: Method
    target: AffinePoint
    lifted: bool = False

    @property
    def num_vars(self) -> int:
        return len(self.varmap)

    def scalar_indices(self) -> list[int]:
        """Variable index of u_i at list position i."""
        out = {}
        for idx, role in enumerate(self.varmap):
            if isinstance(role, ScalarBit):
                out[role.bit] = idx
        return [out[i] for i in range(len(out))]

    def counts(self) -> dict[str, int]:
        return role_counts(self.varmap)


@dataclass
class DecodedSolution:
    y_candidate: int
    scalar_bits: list[int]
    verified: bool
    energy: int | None = None
    residues: list[int] = field(default_factory=list)


# system construction ----------------------------------------------------


def _chord(x1, y1, x2, y2):
    """Numerators and denominators of the affine chord law P1 + P2."""
    d = x2 - x1
    e = y2 - y1
    d2 = d * d
    d3 = d2 * d
    nom_x = e * e - (x1 + x2) * d2
    nom_y = (2 * x1 + x2) * e * d2 - e * e * e - y1 * d3
    return (nom_x, d2), (nom_y, d3)


def build_system(inst: EcdlpInstance, method: Method = Method.FIRST, shift: int | None = None) -> EquationSystem:
    """The 2(m-1) chord equations over F_p, coefficients in [0, p-1]."""
    method = Method(method)
    if shift is None:
        shift = 0 if method is Method.FIRST else 1
    if shift < 0:
        raise ValueError("shift must be non-negative")
    if method is Method.SECOND and shift < 1:
        raise ValueError("the second method needs shift >= 1")
    m, n, p = inst.m, inst.n, inst.curve.p
    if m < 2:
        raise ValueError(f"ord(P) = {inst.order} leaves no addition to encode")
    powers = precompute_powers(inst)
    target = inst.target_shifted(shift)
    if target.is_infinity:
        raise ShiftedTargetAtInfinity(shift, (inst.order - shift) % inst.order)

    varmap: list[VariableRole] = [ScalarBit(i) for i in range(m)]
    u = [Poly.var(i) for i in range(m)]
    chain: list[tuple[Poly, Poly]] = []
    for k in range(1, m - 1):
        coords = []
        for coord in ("x", "y"):
            base = len(varmap)
            varmap.extend(PointBit(k, coord, n - 1 - j) for j in range(n))
            coords.append(Poly.binary(range(base, base + n)))
        chain.append((coords[0], coords[1]))

    def out_point(k: int):
        # k-th addition writes R_k, the last one the target
        if k <= m - 2:
            return chain[k - 1]
        return Poly.const(target.x), Poly.const(target.y)

    equations: list[Poly] = []
    A, B = powers[0], powers[1]
    u0, u1 = u[0], u[1]
    (nx, dx), (ny, dy) = _chord(A.x, A.y, B.x, B.y)
    sel = {"x": u0 * (1 - u1) * A.x + u1 * (1 - u0) * B.x,
           "y": u0 * (1 - u1) * A.y + u1 * (1 - u0) * B.y}
    if method is Method.SECOND:
        both_zero = (1 - u0) * (1 - u1)
        sel["x"] = sel["x"] + both_zero * inst.P.x
        sel["y"] = sel["y"] + both_zero * inst.P.y
    ox, oy = out_point(1)
    equations.append(u0 * u1 * nx + dx * sel["x"] - ox * dx)
    equations.append(u0 * u1 * ny + dy * sel["y"] - oy * dy)

    for k in range(2, m):
        X, Y = chain[k - 2]
        C = powers[k]
        (nx, dx), (ny, dy) = _chord(X, Y, Poly.const(C.x), Poly.const(C.y))
        ox, oy = out_point(k)
        uk = u[k]
        equations.append(uk * nx + (1 - uk) * dx * X - ox * dx)
        equations.append(uk * ny + (1 - uk) * dy * Y - oy * dy)

    return EquationSystem(
        equations=tuple(f.normalize_mod(p) for f in equations),
        modulus=p,
        varmap=tuple(varmap),
        shift=shift,
        method=method,
        target=target,
    )


def max_carry(f: Poly, p: int) -> int:
    _, hi = f.value_bounds()
    return max(hi, 0) // p


def lift_integers(sys: EquationSystem) -> EquationSystem:
    """Replace each F = 0 (mod p) by F - p * K = 0 over the integers.

    K is a plain binary register of carry variables, least significant bit
    first, wide enough for every value F can take.
    """
    p = sys.modulus
    varmap = list(sys.varmap)
    lifted = []
    for e, f in enumerate(sys.equations):
        if any(c < 0 or c >= p for c in f.terms.values()):
            raise ValueError(f"equation {e} is not normalized modulo {p}")
        width = max_carry(f, p).bit_length()
        g = f
        for j in range(width):
            idx = len(varmap)
            varmap.append(CarryBit(e, j))
            g = g - Poly.var(idx, p << j)
        lifted.append(g)
    return replace(sys, equations=tuple(lifted), varmap=tuple(varmap), lifted=True)


def linearize(sys: EquationSystem) -> tuple[EquationSystem, list[SubstitutionConstraint]]:
    """Substitute products of two variables until every equation is linear.

    Within a monomial the two smallest indices are replaced first; one
    auxiliary variable is shared by every occurrence of the same pair.
    """
    varmap = list(sys.varmap)
    cache: dict[tuple[int, int], int] = {}
    constraints: list[SubstitutionConstraint] = []

    def aux_for(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = cache.get(key)
        if idx is None:
            idx = len(varmap)
            varmap.append(AuxProduct(*key))
            cache[key] = idx
            constraints.append(SubstitutionConstraint(idx, *key))
        return idx

    out = []
    for g in sys.equations:
        terms: dict[frozenset, int] = {}
        for mono, c in g.sorted_terms():
            vs = sorted(mono)
            while len(vs) >= 2:
                z = aux_for(vs[0], vs[1])
                vs = sorted(vs[2:] + [z])
            key = frozenset(vs)
            terms[key] = terms.get(key, 0) + c
        out.append(Poly(terms))
    return replace(sys, equations=tuple(out), varmap=tuple(varmap)), constraints


def penalty_weight(sys: EquationSystem) -> int:
    total = 1
    for g in sys.equations:
        lo, hi = g.value_bounds()
        total += max(abs(lo), abs(hi)) ** 2
    return total


def assemble_qubo(sys: EquationSystem, constraints: Sequence[SubstitutionConstraint],
                  weight: int | None = None) -> QuboInstance:
    """Sum of squared equations plus M times the substitution penalties."""
    if any(g.max_degree() > 1 for g in sys.equations):
        raise ValueError("equations must be linear before assembly")
    if weight is None:
        weight = penalty_weight(sys)
    objective = poly_sum(g * g for g in sys.equations)
    if constraints:
        objective = objective + weight * poly_sum(c.penalty() for c in constraints)
    return QuboInstance.from_poly(objective, sys.num_vars)


@dataclass
class CompiledInstance:
    """Everything produced by one pass of the pipeline."""

    inst: EcdlpInstance
    raw: EquationSystem
    system: EquationSystem
    constraints: list[SubstitutionConstraint]
    qubo: QuboInstance

    @property
    def method(self) -> Method:
        return self.system.method

    @property
    def shift(self) -> int:
        return self.system.shift

    def counts(self) -> dict[str, int]:
        return self.system.counts()

    def decode(self, bits, energy: int | None = None) -> DecodedSolution:
        return decode(bits, self.system, self.inst, energy=energy)

    def relaxation(self):
        return relaxation_for(self.system.varmap)

    def metadata(self) -> dict:
        c, P, Q = self.inst.curve, self.inst.P, self.inst.Q
        return {
            "format_version": 1,
            "p": c.p, "a": c.a, "b": c.b,
            "px": P.x, "py": P.y, "qx": Q.x, "qy": Q.y,
            "order": self.inst.order, "m": self.inst.m, "n": self.inst.n,
            "method": int(self.method), "shift": self.shift,
            "offset": self.qubo.offset,
            "variables": [r.to_json() for r in self.system.varmap],
        }


def relaxation_for(varmap: Sequence[VariableRole]):
    """Free scalar/point bits, aux bits as products, carries per equation.

    Any aux bit that disagrees with its product costs at least the penalty
    weight, more than the whole objective can gain, and products only refer
    to lower indices; so setting them in index order is optimal.  Each
    equation's carry register then only meets its own squared residue.
    """
    from .solvers import Relaxation

    free = [i for i, r in enumerate(varmap) if isinstance(r, (ScalarBit, PointBit))]
    products = [(i, r.left, r.right) for i, r in enumerate(varmap) if isinstance(r, AuxProduct)]
    carries: dict[int, list[int]] = {}
    for i, r in enumerate(varmap):
        if isinstance(r, CarryBit):
            carries.setdefault(r.equation, []).append(i)
    return Relaxation(free, [tuple(v) for _, v in sorted(carries.items())], products)


def compile_instance(inst: EcdlpInstance, method: Method = Method.FIRST, shift: int | None = None) -> CompiledInstance:
    raw = build_system(inst, method, shift)
    lin, constraints = linearize(lift_integers(raw))
    return CompiledInstance(inst, raw, lin, constraints, assemble_qubo(lin, constraints))


# truth encoding and decoding --------------------------------------------


def _scalar_candidates(inst: EcdlpInstance, sys: EquationSystem, y: int) -> list[int]:
    """Scalar register values whose chain sums to Q' for logarithm y."""
    order, m = inst.order, inst.m
    target = (y + sys.shift) % order
    out = []
    for val in range(1 << m):
        extra = 1 if sys.method is Method.SECOND and val % 4 == 0 else 0
        if (val + extra) % order == target:
            out.append(val)
    return out


def _chain_points(inst: EcdlpInstance, sys: EquationSystem, bits: Sequence[int]) -> list[AffinePoint]:
    """Classical partial sums R_1, ..., R_{m-1} for the given scalar bits."""
    c = inst.curve
    powers = precompute_powers(inst)
    u0, u1 = bits[0], bits[1]
    if u0 and u1:
        if powers[0].x == powers[1].x:
            raise UnencodableChain("first chord has equal x-coordinates")
        acc = _add_unchecked(c, powers[0], powers[1])
    elif u0:
        acc = powers[0]
    elif u1:
        acc = powers[1]
    elif sys.method is Method.SECOND:
        acc = inst.P
    else:
        raise UnencodableChain("u_0 = u_1 = 0: first partial sum would be O")
    out = [acc]
    for k in range(2, inst.m):
        if bits[k]:
            if acc.x == powers[k].x:
                raise UnencodableChain(f"chord at step {k} has equal x-coordinates")
            acc = _add_unchecked(c, acc, powers[k])
        out.append(acc)
    return out


def encode_truth(inst: EcdlpInstance, sys: EquationSystem, constraints: Sequence[SubstitutionConstraint], y: int) -> list[int]:
    """Ground-truth assignment for logarithm ``y`` built from classical arithmetic."""
    m, p = inst.m, inst.curve.p
    points = None
    reason = f"no {m}-bit scalar encodes y = {y}"
    for val in _scalar_candidates(inst, sys, y):
        scalar = [(val >> i) & 1 for i in range(m)]
        try:
            points = _chain_points(inst, sys, scalar)
            break
        except UnencodableChain as exc:
            reason = str(exc)
    if points is None:
        raise UnencodableChain(reason)
    if points[-1] != sys.target:
        raise UnencodableChain(f"y = {y} does not reach the shifted target")

    N = sys.num_vars
    asg = [0] * N
    carries: dict[int, list[tuple[int, int]]] = {}
    for idx, role in enumerate(sys.varmap):
        if isinstance(role, ScalarBit):
            asg[idx] = scalar[role.bit]
        elif isinstance(role, PointBit):
            pt = points[role.point - 1]
            value = pt.x if role.coord == "x" else pt.y
            asg[idx] = (value >> role.bit) & 1
        elif isinstance(role, CarryBit):
            carries.setdefault(role.equation, []).append((idx, role.bit))
    by_aux = {c.aux: c for c in constraints}
    for idx, role in enumerate(sys.varmap):
        if isinstance(role, AuxProduct):
            asg[idx] = asg[role.left] & asg[role.right]
        elif idx in by_aux:
            c = by_aux[idx]
            asg[idx] = asg[c.left] & asg[c.right]
    for e, regs in carries.items():
        value = sys.equations[e].evaluate(asg)
        if value % p:
            raise UnencodableChain(f"equation {e} is {value}, not divisible by {p}")
        k = value // p
        if k >= 1 << len(regs):
            raise UnencodableChain(f"carry {k} overflows equation {e}")
        for idx, bit in regs:
            asg[idx] = (k >> bit) & 1
    return asg


def decode(bits: Sequence[int], sys: EquationSystem, inst: EcdlpInstance, energy: int | None = None) -> DecodedSolution:
    """Read the logarithm off the scalar bits and verify it classically."""
    scalar = [int(bits[i]) for i in sys.scalar_indices()]
    val = sum(b << i for i, b in enumerate(scalar))
    if sys.method is Method.FIRST:
        y = (val - sys.shift) % inst.order
    else:
        extra = 1 if scalar[0] == 0 and scalar[1] == 0 else 0
        y = (val + extra - sys.shift) % inst.order
    verified = y != 0 and scalar_mul(inst.curve, y, inst.P) == inst.Q
    residues = []
    try:
        residues = [g.evaluate(bits) for g in sys.equations]
    except Exception:  # noqa: BLE001 - diagnostics only, never fatal
        residues = []
    return DecodedSolution(y, scalar, verified, energy, residues)
