import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ecdlp_qubo import kernels
from ecdlp_qubo.errors import CapExceeded
from ecdlp_qubo.qubo import QuboInstance
from ecdlp_qubo.reduction import Method, compile_instance
from ecdlp_qubo.solvers import (
    Relaxation,
    SaParams,
    acceptance_probability,
    solve_exhaustive,
    solve_sa,
)

from .conftest import make_instance

BACKENDS = ["numba", "numpy"]
TOY = np.array([[-1, 2, 2], [0, -1, 2], [0, 0, -3]])


def brute(q: QuboInstance):
    es = {bits: q.energy(bits) for bits in itertools.product((0, 1), repeat=q.num_vars)}
    lo = min(es.values())
    return lo, sorted(list(b) for b, e in es.items() if e == lo)


@st.composite
def small_qubos(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    idx = st.integers(0, n - 1)
    c = st.integers(-6, 6)
    lin = draw(st.dictionaries(idx, c, max_size=n))
    quad = draw(st.dictionaries(st.tuples(idx, idx).filter(lambda t: t[0] != t[1]), c, max_size=2 * n))
    return QuboInstance(n, lin, quad, draw(st.integers(-3, 3)))


def trace_key(res):
    return [(t.initial_energy, t.best_energy, t.accepted, tuple(t.best_bits)) for t in res.trace]


# --- exhaustive -------------------------------------------------------------


@pytest.mark.parametrize("backend", BACKENDS)
def test_exhaustive_toy(backend):
    res = solve_exhaustive(QuboInstance.from_matrix(TOY), backend=backend)
    assert res.min_energy == -3 and res.assignments == [[0, 0, 1]]
    energy, states = res
    assert (energy, res.count, res.truncated) == (-3, 1, False)


@pytest.mark.parametrize("backend", BACKENDS)
def test_exhaustive_ties_and_truncation(backend):
    q = QuboInstance(4, {}, {}, offset=2)  # every assignment is a ground state
    res = solve_exhaustive(q, max_solutions=3, backend=backend)
    assert res.min_energy == 2 and res.count == 16 and res.truncated
    assert len(res.assignments) == 3
    full = solve_exhaustive(q, backend=backend)
    assert sorted(full.assignments) == sorted(list(b) for b in itertools.product((0, 1), repeat=4))


def test_exhaustive_cap():
    with pytest.raises(CapExceeded):
        solve_exhaustive(QuboInstance(30), cap=28)
    with pytest.raises(ValueError):
        solve_exhaustive(QuboInstance(2), max_solutions=0)


def test_exhaustive_empty():
    assert solve_exhaustive(QuboInstance(0, offset=5)).min_energy == 5


@settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_qubos())
def test_exhaustive_matches_brute_force(q):
    lo, states = brute(q)
    for backend in BACKENDS:
        res = solve_exhaustive(q, backend=backend)
        assert res.min_energy == lo
        assert res.count == len(states)
        assert sorted(res.assignments) == states


# --- annealing --------------------------------------------------------------


def test_sa_params_validation():
    with pytest.raises(ValueError):
        SaParams(sweeps=0)
    with pytest.raises(ValueError):
        SaParams(t_hi=0.01, t_lo=0.1)
    temps = SaParams(sweeps=4, t_hi=8.0, t_lo=1.0).temperatures(QuboInstance(1))
    assert np.allclose(temps, [8, 4, 2, 1])
    auto = SaParams(sweeps=2).temperatures(QuboInstance.from_matrix(TOY))
    assert auto[0] == 3.0 and auto[-1] == 0.1


def test_acceptance_probability():
    assert acceptance_probability(-4, 1.0) == 1.0
    assert acceptance_probability(0, 1e-9) == 1.0
    assert math.isclose(acceptance_probability(2, 4.0), math.exp(-0.5))


def test_threshold_rule_has_metropolis_law():
    # P(E < d*beta) for E ~ Exp(1) equals 1 - exp(-d*beta); accepting when
    # d*beta < E therefore happens with probability exp(-d/T)
    e = np.random.default_rng(0).standard_exponential(200_000)
    assert abs(np.mean(2 * 0.25 < e) - acceptance_probability(2, 4.0)) < 0.005


@pytest.mark.parametrize("backend", BACKENDS)
def test_sa_toy(backend):
    res = solve_sa(QuboInstance.from_matrix(TOY), SaParams(sweeps=50, restarts=4), backend=backend)
    assert res.best_energy == -3 and res.best_bits == [0, 0, 1]
    assert len(res.trace) == 4


def test_sa_rejects_empty():
    with pytest.raises(ValueError):
        solve_sa(QuboInstance(0))


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_qubos(max_n=12), st.integers(0, 2**32), st.integers(1, 40), st.integers(1, 4))
def test_sa_is_deterministic_across_backends_and_workers(q, seed, sweeps, restarts):
    params = SaParams(sweeps=sweeps, restarts=restarts, seed=seed)
    a = solve_sa(q, params, backend="numba", block=16)
    b = solve_sa(q, params, backend="numba", block=16, workers=3)
    c = solve_sa(q, params, backend="numpy", block=16)
    assert trace_key(a) == trace_key(b) == trace_key(c)
    assert (a.best_energy, a.best_bits) == (c.best_energy, c.best_bits)
    lo = brute(q)[0]
    assert a.best_energy >= lo
    for t in a.trace:
        assert q.energy(t.best_bits) == t.best_energy


@settings(max_examples=100, deadline=None)
@given(small_qubos(max_n=8), st.integers(0, 1000))
def test_sa_repeat_runs_agree(q, seed):
    params = SaParams(sweeps=30, restarts=2, seed=seed)
    assert trace_key(solve_sa(q, params, block=8)) == trace_key(solve_sa(q, params, block=8))


def test_sa_ties_go_to_lowest_restart():
    q = QuboInstance(2, {}, {}, 0)  # flat landscape: every restart reaches 0
    res = solve_sa(q, SaParams(sweeps=3, restarts=5, seed=9))
    assert res.best_bits == res.trace[0].best_bits


def test_sa_stop_energy():
    q = QuboInstance.from_matrix(TOY)
    for backend in BACKENDS:
        res = solve_sa(q, SaParams(sweeps=500, restarts=3, stop_energy=-3), backend=backend)
        assert res.best_energy == -3
        assert all(t.accepted < 50 for t in res.trace)


def test_backend_flag(monkeypatch):
    monkeypatch.setenv("ECDLP_QUBO_BACKEND", "numpy")
    assert kernels.default_backend() == "numpy"
    monkeypatch.setenv("ECDLP_QUBO_BACKEND", "NUMBA")
    assert kernels.default_backend() == "numba"
    monkeypatch.setenv("ECDLP_QUBO_BACKEND", "fortran")
    with pytest.raises(ValueError):
        kernels.default_backend()
    with pytest.raises(ValueError):
        kernels.resolve_backend("cuda")


# --- relaxation moves -------------------------------------------------------


def test_relaxation_validation():
    with pytest.raises(ValueError):
        Relaxation((), ((0,),))
    with pytest.raises(ValueError):
        Relaxation((0,), ((0, 1),))
    with pytest.raises(ValueError):
        Relaxation((0,), (tuple(range(1, 15)),))
    with pytest.raises(ValueError):
        Relaxation((0, 1), (), ((2, 2, 0),))
    r = Relaxation((0, 1), ((3,),), ((2, 0, 1),))
    assert r.covers(4) and not r.covers(5)
    with pytest.raises(ValueError):
        solve_sa(QuboInstance(5), relaxation=r)


def test_relaxation_group_minimum():
    # with x0 fixed, the group {1, 2} must land on its conditional minimum
    q = QuboInstance(3, {1: -1, 2: -1}, {(1, 2): 5, (0, 2): -4})
    res = solve_sa(q, SaParams(sweeps=20, restarts=3), relaxation=Relaxation((0,), ((1, 2),)))
    assert res.best_energy == -5 and res.best_bits == [1, 0, 1]


@pytest.fixture(scope="module")
def f5_compiled():
    return compile_instance(make_instance(5, 2), Method.FIRST)


@pytest.mark.parametrize("stop", [None, 0])
def test_relaxation_backends_agree(f5_compiled, stop):
    ci = f5_compiled
    params = SaParams(sweeps=60, restarts=5, seed=4, stop_energy=stop)
    a = solve_sa(ci.qubo, params, backend="numba", relaxation=ci.relaxation(), block=32)
    b = solve_sa(ci.qubo, params, backend="numpy", relaxation=ci.relaxation(), block=32)
    assert trace_key(a) == trace_key(b)
    assert a.best_energy == 0


def test_relaxed_f3_reaches_exhaustive_minimum():
    ci = compile_instance(make_instance(3, 5), Method.FIRST)
    res = solve_sa(ci.qubo, SaParams(sweeps=200, restarts=8, seed=1), relaxation=ci.relaxation())
    assert res.best_energy == solve_exhaustive(ci.qubo).min_energy == 0


@pytest.mark.parametrize("seed", [0, 42])
def test_plain_sa_equals_exhaustive_on_f3(seed):
    ci = compile_instance(make_instance(3, 5), Method.FIRST)
    res = solve_sa(ci.qubo, SaParams(restarts=32, seed=seed))
    assert res.best_energy == 0
