"""QUBO data model, exact integer energy and the text file format.

File layout (ASCII, LF)::

    c <free text>                 zero or more comment lines
    c offset <int>                optional, restores the constant term
    p qubo 0 <N> <nDiag> <nOffdiag>
    <i> <i> <coeff>               nDiag lines, ascending i
    <i> <j> <coeff>               nOffdiag lines, i < j, lexicographic
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from typing import IO, Sequence, Union

import numpy as np

from .errors import HeaderMismatch, LengthMismatch, ParseError

PathOrFile = Union[str, "os.PathLike[str]", IO[str]]

INT64_MAX = np.iinfo(np.int64).max


@dataclass(frozen=True)
class QuboInstance:
    """f(x) = offset + sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j."""

    num_vars: int
    linear: dict[int, int] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], int] = field(default_factory=dict)
    offset: int = 0

    def __post_init__(self):
        lin = {int(i): int(c) for i, c in self.linear.items() if c}
        quad: dict[tuple[int, int], int] = {}
        for (i, j), c in self.quadratic.items():
            i, j = int(i), int(j)
            if i == j:
                lin[i] = lin.get(i, 0) + int(c)
                continue
            key = (i, j) if i < j else (j, i)
            quad[key] = quad.get(key, 0) + int(c)
        lin = {i: c for i, c in sorted(lin.items()) if c}
        quad = {k: c for k, c in sorted(quad.items()) if c}
        for i in lin:
            if not 0 <= i < self.num_vars:
                raise ValueError(f"variable {i} out of range for N = {self.num_vars}")
        for i, j in quad:
            if not (0 <= i and j < self.num_vars):
                raise ValueError(f"coupler ({i}, {j}) out of range for N = {self.num_vars}")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def from_poly(cls, poly, num_vars: int) -> "QuboInstance":
        """Collect a degree-2 multilinear :class:`~ecdlp_qubo.polyring.Poly`."""
        lin: dict[int, int] = {}
        quad: dict[tuple[int, int], int] = {}
        offset = 0
        for mono, c in poly.terms.items():
            vs = sorted(mono)
            if not vs:
                offset += c
            elif len(vs) == 1:
                lin[vs[0]] = c
            elif len(vs) == 2:
                quad[(vs[0], vs[1])] = c
            else:
                raise ValueError(f"monomial of degree {len(vs)} is not quadratic")
        return cls(num_vars, lin, quad, offset)

    @classmethod
    def from_matrix(cls, Q, offset: int = 0) -> "QuboInstance":
        """Upper-triangular (or any square) integer matrix; x^T Q x."""
        Q = np.asarray(Q)
        n = Q.shape[0]
        lin = {i: int(Q[i, i]) for i in range(n)}
        quad = {}
        for i in range(n):
            for j in range(i + 1, n):
                quad[(i, j)] = int(Q[i, j]) + int(Q[j, i])
        return cls(n, lin, quad, offset)

    def energy(self, bits: Sequence[int]) -> int:
        if len(bits) != self.num_vars:
            raise LengthMismatch(f"assignment has {len(bits)} bits, instance has {self.num_vars}")
        x = [int(b) for b in bits]
        e = self.offset
        for i, c in self.linear.items():
            if x[i]:
                e += c
        for (i, j), c in self.quadratic.items():
            if x[i] and x[j]:
                e += c
        return e

    def max_abs_coefficient(self) -> int:
        return max(
            [abs(c) for c in self.linear.values()] + [abs(c) for c in self.quadratic.values()],
            default=0,
        )

    def coefficient_range(self) -> tuple[int, int]:
        coeffs = list(self.linear.values()) + list(self.quadratic.values())
        if not coeffs:
            return (0, 0)
        return min(coeffs), max(coeffs)

    def arrays(self):
        """``(lin, indptr, indices, weights)`` for the kernels.

        The coupling graph is stored symmetrically in CSR form so that the
        local field of variable i is ``lin[i] + sum_j w_ij x_j``.
        """
        n = self.num_vars
        total = sum(abs(c) for c in self.linear.values()) + sum(abs(c) for c in self.quadratic.values())
        if total + abs(self.offset) > INT64_MAX // 4:
            raise OverflowError("coefficients too large for 64-bit kernels")
        lin = np.zeros(n, dtype=np.int64)
        for i, c in self.linear.items():
            lin[i] = c
        deg = np.zeros(n + 1, dtype=np.int64)
        for i, j in self.quadratic:
            deg[i + 1] += 1
            deg[j + 1] += 1
        indptr = np.cumsum(deg)
        fill = indptr[:-1].copy()
        indices = np.zeros(indptr[-1], dtype=np.int64)
        weights = np.zeros(indptr[-1], dtype=np.int64)
        for (i, j), c in self.quadratic.items():
            indices[fill[i]] = j
            weights[fill[i]] = c
            fill[i] += 1
            indices[fill[j]] = i
            weights[fill[j]] = c
            fill[j] += 1
        return lin, indptr, indices, weights

    def dense(self) -> np.ndarray:
        """Upper-triangular int64 matrix (offset not included)."""
        Q = np.zeros((self.num_vars, self.num_vars), dtype=np.int64)
        for i, c in self.linear.items():
            Q[i, i] = c
        for (i, j), c in self.quadratic.items():
            Q[i, j] = c
        return Q


def energy(q: QuboInstance, bits: Sequence[int]) -> int:
    return q.energy(bits)


# file format ----------------------------------------------------------


def dumps_qubo(q: QuboInstance, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    if q.offset:
        lines.append(f"c offset {q.offset}")
    lines.append(f"p qubo 0 {q.num_vars} {len(q.linear)} {len(q.quadratic)}")
    lines.extend(f"{i} {i} {c}" for i, c in q.linear.items())
    lines.extend(f"{i} {j} {c}" for (i, j), c in q.quadratic.items())
    return "\n".join(lines) + "\n"


def export_qubo(q: QuboInstance, sink: PathOrFile, comments: Sequence[str] = ()) -> None:
    text = dumps_qubo(q, comments)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


_OFFSET_RE = re.compile(r"^c offset (-?\d+)\s*$")


def loads_qubo(text: str, offset: int | None = None) -> QuboInstance:
    """Parse the text format; ``offset`` overrides any ``c offset`` line."""
    header = None
    found_offset = 0
    diag: dict[int, int] = {}
    off: dict[tuple[int, int], int] = {}
    n_diag = n_off = 0
    lineno = 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("c"):
            m = _OFFSET_RE.match(line)
            if m:
                found_offset = int(m.group(1))
            continue
        parts = line.split()
        if parts[0] == "p":
            if header is not None:
                raise ParseError("duplicate header", lineno)
            if len(parts) != 6 or parts[1] != "qubo":
                raise ParseError(f"bad header {line!r}", lineno)
            try:
                _, n, n_diag, n_off = (int(v) for v in parts[2:])
            except ValueError:
                raise ParseError(f"bad header {line!r}", lineno) from None
            if min(n, n_diag, n_off) < 0:
                raise ParseError("negative count in header", lineno)
            header = n
            continue
        if header is None:
            raise ParseError("entry before header", lineno)
        if len(parts) != 3:
            raise ParseError(f"expected '<i> <j> <coeff>', got {line!r}", lineno)
        try:
            i, j, c = (int(v) for v in parts)
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        if not (0 <= i < header and 0 <= j < header):
            raise ParseError(f"index out of range in {line!r}", lineno)
        if i == j:
            if off:
                raise ParseError("diagonal entry after off-diagonal entries", lineno)
            if diag and i <= max(diag):
                raise ParseError("diagonal entries must ascend", lineno)
            diag[i] = c
        else:
            if i > j:
                raise ParseError(f"off-diagonal entry needs i < j: {line!r}", lineno)
            if off and (i, j) <= max(off):
                raise ParseError("off-diagonal entries must be lexicographic", lineno)
            off[(i, j)] = c
    if header is None:
        raise ParseError("missing 'p qubo' header", lineno or None)
    if len(diag) != n_diag or len(off) != n_off:
        raise HeaderMismatch(
            f"header declares {n_diag} diagonal / {n_off} off-diagonal entries, "
            f"body has {len(diag)} / {len(off)}",
            lineno,
        )
    if offset is None:
        offset = found_offset
    return QuboInstance(header, diag, off, offset)


def import_qubo(source: PathOrFile, offset: int | None = None) -> QuboInstance:
    if hasattr(source, "read"):
        return loads_qubo(source.read(), offset)
    with open(source, encoding="ascii") as fh:
        return loads_qubo(fh.read(), offset)
