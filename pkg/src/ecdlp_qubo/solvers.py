"""Exhaustive ground-state enumeration and simulated annealing for QUBOs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CapExceeded
from .qubo import QuboInstance

DEFAULT_CAP = 28
DEFAULT_MAX_SOLUTIONS = 1024


@dataclass
class ExhaustiveResult:
    min_energy: int
    assignments: list[list[int]]
    count: int
    truncated: bool

    def __iter__(self):
        # allows ``energy, states = solve_exhaustive(q)``
        yield self.min_energy
        yield self.assignments


def _decode_codes(codes, n: int) -> list[list[int]]:
    return [[(int(c) >> i) & 1 for i in range(n)] for c in codes]


def solve_exhaustive(q: QuboInstance, cap: int = DEFAULT_CAP,
                     max_solutions: int = DEFAULT_MAX_SOLUTIONS,
                     backend: str | None = None) -> ExhaustiveResult:
    """Exact minimum and every attaining assignment (up to ``max_solutions``).

    When more than ``max_solutions`` argmins exist the list is truncated and
    ``truncated`` is set; ``count`` is always exact.  Which argmins survive
    truncation depends on the backend, the full set does not.
    """
    n = q.num_vars
    if n > cap:
        raise CapExceeded(f"{n} variables exceed the exhaustive cap of {cap}")
    if max_solutions < 1:
        raise ValueError("max_solutions must be positive")
    if n == 0:
        return ExhaustiveResult(q.offset, [[]], 1, False)
    backend = kernels.resolve_backend(backend)
    if backend == "numba":
        lin, indptr, indices, weights = q.arrays()
        best, codes, count = kernels.exhaustive_numba(lin, indptr, indices, weights, max_solutions)
        codes = np.sort(codes)
    else:
        best, codes, count = kernels.exhaustive_numpy(q.dense(), max_solutions)
    best = int(best) + q.offset
    return ExhaustiveResult(best, _decode_codes(codes, n), int(count), int(count) > len(codes))


@dataclass(frozen=True)
class SaParams:
    """Annealing schedule; ``t_hi=None`` scales to the largest coefficient."""

    sweeps: int = 1000
    restarts: int = 16
    t_hi: float | None = None
    t_lo: float = 0.1
    seed: int = 0
    stop_energy: int | None = None

    def __post_init__(self):
        if self.sweeps < 1 or self.restarts < 1:
            raise ValueError("sweeps and restarts must be >= 1")
        if self.t_lo <= 0 or (self.t_hi is not None and self.t_hi < self.t_lo):
            raise ValueError("need t_hi >= t_lo > 0")

    def temperatures(self, q: QuboInstance) -> np.ndarray:
        t_hi = self.t_hi
        if t_hi is None:
            t_hi = max(float(q.max_abs_coefficient()), self.t_lo)
        if self.sweeps == 1:
            return np.array([t_hi])
        return np.geomspace(t_hi, self.t_lo, self.sweeps)


MAX_GROUP = 12


@dataclass(frozen=True)
class Relaxation:
    """Split of the variables into annealed ``free`` bits and dependent ones.

    With a relaxation each annealing move flips one free bit, then sets
    each ``products`` entry ``(z, a, b)`` in order to ``x_z = x_a x_b``,
    then sets every group, in order, to its exact minimum conditioned on all
    other variables, and accepts or rejects the combined change by the
    Metropolis rule.  A sweep visits each free bit once.
    """

    free: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...] = ()
    products: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(int(i) for i in self.free))
        object.__setattr__(self, "groups", tuple(tuple(int(i) for i in g) for g in self.groups))
        object.__setattr__(self, "products", tuple(tuple(int(i) for i in t) for t in self.products))
        if not self.free:
            raise ValueError("relaxation needs at least one free variable")
        seen = set(self.free)
        if len(seen) != len(self.free):
            raise ValueError("duplicate free variable")
        for t in self.products:
            if len(t) != 3 or t[0] in seen or t[0] in t[1:]:
                raise ValueError(f"bad product definition {t}")
            seen.add(t[0])
        for g in self.groups:
            if not 1 <= len(g) <= MAX_GROUP:
                raise ValueError(f"group size must be in [1, {MAX_GROUP}], got {len(g)}")
            if seen.intersection(g) or len(set(g)) != len(g):
                raise ValueError("groups must be disjoint from each other and from the free set")
            seen.update(g)

    def covers(self, num_vars: int) -> bool:
        dependent = [t[0] for t in self.products] + [i for g in self.groups for i in g]
        return set(self.free).union(dependent) == set(range(num_vars))

    def product_array(self) -> np.ndarray:
        return np.asarray(self.products, dtype=np.int64).reshape(-1, 3)

    def tables(self, q: QuboInstance) -> list["GroupTable"]:
        return [GroupTable.build(q, g) for g in self.groups]


@dataclass
class GroupTable:
    members: np.ndarray  # (c,)
    inner: np.ndarray  # (c, c) symmetric couplings, zero diagonal
    codes: np.ndarray  # (2^c, c) every assignment, bit j of the code is member j
    codes_t: np.ndarray
    pair: np.ndarray  # (2^c,) intra-group quadratic energy per code
    weights: np.ndarray  # (c,) powers of two

    @classmethod
    def build(cls, q: QuboInstance, group) -> "GroupTable":
        c = len(group)
        inner = np.zeros((c, c), dtype=np.int64)
        for j in range(c):
            for l in range(j + 1, c):
                a, b = sorted((group[j], group[l]))
                inner[j, l] = inner[l, j] = q.quadratic.get((a, b), 0)
        codes = ((np.arange(1 << c)[:, None] >> np.arange(c)) & 1).astype(np.int64)
        pair = np.einsum("ai,ij,aj->a", codes, np.triu(inner, 1), codes)
        return cls(np.asarray(group, dtype=np.int64), inner, codes, codes.T.copy(), pair,
                   (1 << np.arange(c)).astype(np.int64))


def _flat_groups(tables: list[GroupTable]):
    gptr = np.zeros(len(tables) + 1, dtype=np.int64)
    gwptr = np.zeros(len(tables) + 1, dtype=np.int64)
    for g, t in enumerate(tables):
        gptr[g + 1] = gptr[g] + len(t.members)
        gwptr[g + 1] = gwptr[g] + t.inner.size
    gvars = np.concatenate([t.members for t in tables]) if tables else np.zeros(0, np.int64)
    gw = np.concatenate([t.inner.ravel() for t in tables]) if tables else np.zeros(0, np.int64)
    return gptr, gvars, gwptr[:-1].copy(), gw


@dataclass
class RestartTrace:
    restart: int
    initial_energy: int
    best_energy: int
    best_bits: list[int]
    accepted: int


@dataclass
class SaResult:
    best_energy: int
    best_bits: list[int]
    trace: list[RestartTrace] = field(default_factory=list)

    def __iter__(self):
        yield self.best_energy
        yield self.best_bits
        yield self.trace


def _stream(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, restart])


def _block_sizes(sweeps: int, block: int):
    s = 0
    while s < sweeps:
        yield s, min(block, sweeps - s)
        s += block


def _draw(rng: np.random.Generator, base: np.ndarray, size: int):
    perms = rng.permuted(np.tile(base, (size, 1)), axis=1)
    thresholds = rng.standard_exponential((size, base.shape[0]))
    return perms, thresholds


def _initial(rng, n, arrays, relax_tables):
    """Random start; with a relaxation the dependents start relaxed."""
    lin, indptr, indices, weights = arrays
    x = rng.integers(0, 2, n).astype(np.int64)
    if relax_tables is not None:
        W, tables, prods = relax_tables
        h = kernels.local_fields(lin, indptr, indices, weights, x)
        X, H = x[None, :].copy(), h[None, :].copy()
        kernels.relax_numpy(W, prods, tables, X, H)
        x = X[0]
    return x


def _run_chain_numba(arrays, n, restart, params, betas, block, stop, relax):
    lin, indptr, indices, weights = arrays
    rng = _stream(params.seed, restart)
    x = _initial(rng, n, arrays, relax and relax[0])
    base = np.arange(n, dtype=np.int64) if relax is None else relax[1]
    e0 = kernels.full_energy(lin, indptr, indices, weights, x)
    h = kernels.local_fields(lin, indptr, indices, weights, x)
    energy = np.array([e0], dtype=np.int64)
    best_e = energy.copy()
    best_x = x.copy()
    accepted = 0
    if e0 <= stop:
        return e0, e0, best_x, 0
    for s, size in _block_sizes(params.sweeps, block):
        perms, thr = _draw(rng, base, size)
        if relax is None:
            acc, done = kernels.anneal_block_numba(
                lin, indptr, indices, weights, x, h, energy, best_e, best_x,
                perms, thr, betas[s:s + size], stop)
        else:
            acc, done = kernels.anneal_relax_numba(
                indptr, indices, weights, *relax[2], x, h, energy, best_e, best_x,
                perms, thr, betas[s:s + size], stop)
        accepted += acc
        if done:
            break
    return e0, int(best_e[0]), best_x, accepted


def _run_numpy(q: QuboInstance, params: SaParams, betas, block, stop, relax):
    arrays = q.arrays()
    lin, indptr, indices, weights = arrays
    n = q.num_vars
    W = _symmetric(q)
    R = params.restarts
    rngs = [_stream(params.seed, r) for r in range(R)]
    x = np.stack([_initial(rng, n, arrays, relax and relax[0]) for rng in rngs])
    base = np.arange(n, dtype=np.int64) if relax is None else relax[1]
    e0 = np.array([kernels.full_energy(lin, indptr, indices, weights, xi) for xi in x], dtype=np.int64)
    h = np.stack([kernels.local_fields(lin, indptr, indices, weights, xi) for xi in x])
    energy = e0.copy()
    best_e = e0.copy()
    best_x = x.copy()
    active = e0 > stop
    accepted = np.zeros(R, dtype=np.int64)
    for s, size in _block_sizes(params.sweeps, block):
        # a stopped chain draws nothing further, exactly as in the per-chain path
        draws = [_draw(rng, base, size) if active[r] else _blank(base, size) for r, rng in enumerate(rngs)]
        perms = np.stack([d[0] for d in draws])
        thr = np.stack([d[1] for d in draws])
        if relax is None:
            accepted += kernels.anneal_block_numpy(lin, W, x, h, energy, best_e, best_x,
                                                   perms, thr, betas[s:s + size], active, stop)
        else:
            accepted += kernels.anneal_relax_numpy(W, relax[0][2], relax[0][1], x, h, energy, best_e, best_x,
                                                   perms, thr, betas[s:s + size], active, stop)
        if not active.any():
            break
    return [(int(e0[r]), int(best_e[r]), best_x[r], int(accepted[r])) for r in range(R)]


def _blank(base, size):
    return (np.tile(base, (size, 1)), np.zeros((size, base.shape[0])))


def _symmetric(q: QuboInstance) -> np.ndarray:
    W = q.dense()
    W = W + W.T
    np.fill_diagonal(W, 0)
    return W


def solve_sa(q: QuboInstance, params: SaParams | None = None, backend: str | None = None,
             workers: int = 1, block: int = 128, relaxation: Relaxation | None = None) -> SaResult:
    """Metropolis annealing with independent restarts.

    Without ``relaxation`` every move is a single-bit flip.  Restart r
    draws from ``default_rng([seed, r])``: its initial state, then per block
    of sweeps a random visiting order and exponential acceptance thresholds.
    A restart ends early once its best energy reaches
    ``params.stop_energy``.  Results are identical for any backend and
    worker count.
    """
    params = params or SaParams()
    n = q.num_vars
    if n < 1:
        raise ValueError("annealing needs at least one variable")
    backend = kernels.resolve_backend(backend)
    betas = 1.0 / params.temperatures(q)
    stop = kernels.NO_STOP if params.stop_energy is None else params.stop_energy - q.offset
    relax = None
    if relaxation is not None:
        if not relaxation.covers(n):
            raise ValueError("relaxation must cover every variable exactly once")
        tables = relaxation.tables(q)
        prods = relaxation.product_array()
        relax = ((_symmetric(q), tables, prods), np.asarray(relaxation.free, dtype=np.int64),
                 (prods,) + _flat_groups(tables))
    if backend == "numba":
        arrays = q.arrays()
        run = lambda r: _run_chain_numba(arrays, n, r, params, betas, block, stop, relax)  # noqa: E731
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(run, range(params.restarts)))
        else:
            runs = [run(r) for r in range(params.restarts)]
    else:
        runs = _run_numpy(q, params, betas, block, stop, relax)

    trace = []
    for r, (e0, be, bx, acc) in enumerate(runs):
        trace.append(RestartTrace(r, e0 + q.offset, be + q.offset, [int(b) for b in bx], acc))
    # lowest energy wins, ties to the lowest restart index
    best = min(trace, key=lambda t: (t.best_energy, t.restart))
    return SaResult(best.best_energy, list(best.best_bits), trace)


def acceptance_probability(delta: int, temperature: float) -> float:
    """Metropolis rule used by the kernels, for reference and tests."""
    if delta <= 0:
        return 1.0
    return math.exp(-delta / temperature)
