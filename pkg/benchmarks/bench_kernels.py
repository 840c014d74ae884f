"""Compare the numba and numpy backends on the package's hot kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--json]

Each case runs once untimed (numba compiles, caches warm up), then
``--repeat`` timed runs per backend; the best time is reported.  Both
backends must return identical results, which is checked on every run.
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import make_instance  # noqa: E402

from ecdlp_qubo.reduction import Method, compile_instance  # noqa: E402
from ecdlp_qubo.solvers import SaParams, solve_exhaustive, solve_sa  # noqa: E402


def cases():
    f3 = compile_instance(make_instance(3, 5), Method.FIRST)
    f5 = compile_instance(make_instance(5, 2), Method.FIRST)
    f11 = compile_instance(make_instance(11, 2), Method.FIRST)
    sa = SaParams(sweeps=200, restarts=8, seed=1)
    relax = SaParams(sweeps=100, restarts=8, seed=1)
    yield "exhaustive F_3 (N=26)", lambda b: solve_exhaustive(f3.qubo, backend=b).assignments
    yield "SA single-flip F_5 (N=73)", lambda b: [t.best_bits for t in solve_sa(f5.qubo, sa, backend=b).trace]
    yield "SA single-flip F_11 (N=156)", lambda b: [t.best_bits for t in solve_sa(f11.qubo, sa, backend=b).trace]
    yield "SA relaxed F_11 (N=156)", lambda b: [
        t.best_bits for t in solve_sa(f11.qubo, relax, backend=b, relaxation=f11.relaxation()).trace]


def best_time(fn, backend, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    rows = []
    for name, fn in cases():
        fn("numba")  # compile
        t_jit, r_jit = best_time(fn, "numba", args.repeat)
        t_np, r_np = best_time(fn, "numpy", args.repeat)
        if r_jit != r_np:
            raise SystemExit(f"{name}: backends disagree")
        rows.append({"case": name, "numba_s": t_jit, "numpy_s": t_np, "speedup": t_np / t_jit})

    if args.json:
        print(json.dumps(rows, indent=1))
        return
    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'numba':>9}  {'numpy':>9}  speedup")
    for r in rows:
        print(f"{r['case']:<{width}}  {r['numba_s']:>8.3f}s  {r['numpy_s']:>8.3f}s  {r['speedup']:6.1f}x")


if __name__ == "__main__":
    main()
