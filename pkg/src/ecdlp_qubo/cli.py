"""Command-line front end: ``ecdlp-qubo {gen,solve,attack,oracle,stats}``.

Exit codes: 0 success / verified, 1 unverified or not found, 2 input
error, 3 answer known classically (the shifted target is the point at
infinity, so no QUBO is written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .ec_core import EcdlpInstance, ecdlp_bruteforce, scalar_mul
from .errors import EcdlpQuboError, NotInSubgroup, ParseError, ShiftedTargetAtInfinity
from .qubo import QuboInstance, export_qubo, import_qubo
from .reduction import (
    CompiledInstance,
    Method,
    compile_instance,
    role_counts,
    role_from_json,
)
from .solvers import DEFAULT_CAP, SaParams, solve_exhaustive, solve_sa

EXIT_OK, EXIT_UNVERIFIED, EXIT_INPUT, EXIT_CLASSICAL = 0, 1, 2, 3


class InputError(Exception):
    """Bad flags or files; maps to exit code 2."""


# --------------------------------------------------------------------------
# argument parsing


def _curve_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    for name in ("p", "a", "b", "px", "py", "qx", "qy"):
        g.add_argument(f"--{name}", type=int, required=True)


def _method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", type=int, choices=(1, 2), default=1)


def _solver_flags(p: argparse.ArgumentParser, solvers, default_solver, sweeps, restarts, moves) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--solver", choices=solvers, default=default_solver)
    g.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest N solved exhaustively")
    g.add_argument("--sweeps", type=int, default=sweeps)
    g.add_argument("--restarts", type=int, default=restarts)
    g.add_argument("--t-hi", type=float, default=None, help="default: largest |coefficient|")
    g.add_argument("--t-lo", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--moves", choices=("single", "relax"), default=moves,
                   help="single-bit flips, or flips of scalar/point bits with the rest re-derived")
    g.add_argument("--backend", choices=("numba", "numpy"), default=None)
    g.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecdlp-qubo", description=__doc__.splitlines()[0])
    parser.add_argument("--json", action="store_true", help="emit one JSON object")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write the QUBO file and its sidecar")
    _curve_flags(gen)
    _method_flags(gen)
    gen.add_argument("--shift", type=int, default=None)
    gen.add_argument("--out", default="ecdlp.qubo")
    gen.add_argument("--meta", default=None, help="sidecar path (default: OUT.json)")

    solve = sub.add_parser("solve", help="solve a QUBO file and decode it with its sidecar")
    solve.add_argument("--qubo", required=True)
    solve.add_argument("--meta", required=True)
    _solver_flags(solve, ("exhaustive", "sa"), "exhaustive", 1000, 16, "single")

    attack = sub.add_parser("attack", help="generate, solve and verify, retrying shifts")
    _curve_flags(attack)
    _method_flags(attack)
    _solver_flags(attack, ("auto", "exhaustive", "sa"), "auto", 5000, 64, "relax")

    oracle = sub.add_parser("oracle", help="brute-force discrete logarithm")
    _curve_flags(oracle)

    stats = sub.add_parser("stats", help="size and coefficient statistics of a QUBO file")
    stats.add_argument("--qubo", required=True)
    stats.add_argument("--meta", default=None)

    for p in (gen, solve, attack, oracle, stats):
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                       help="emit one JSON object")
    return parser


# --------------------------------------------------------------------------
# helpers


def _instance(args) -> EcdlpInstance:
    return EcdlpInstance.from_coords(args.p, args.a, args.b, args.px, args.py, args.qx, args.qy)


def _echo(inst: EcdlpInstance) -> dict:
    c = inst.curve
    return {"p": c.p, "a": c.a, "b": c.b, "px": inst.P.x, "py": inst.P.y,
            "qx": inst.Q.x, "qy": inst.Q.y, "order": inst.order}


def _sa_params(args, stop_energy=None) -> SaParams:
    return SaParams(sweeps=args.sweeps, restarts=args.restarts, t_hi=args.t_hi,
                    t_lo=args.t_lo, seed=args.seed, stop_energy=stop_energy)


def _read_meta(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read sidecar {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"sidecar {path} line {exc.lineno}: {exc.msg}") from None
    missing = {"p", "a", "b", "px", "py", "qx", "qy", "method", "shift"} - set(meta)
    if missing:
        raise InputError(f"sidecar {path} lacks {sorted(missing)}")
    return meta


def _read_qubo(path) -> QuboInstance:
    try:
        return import_qubo(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def _compiled_from_meta(meta: dict, q: QuboInstance) -> CompiledInstance:
    inst = EcdlpInstance.from_coords(meta["p"], meta["a"], meta["b"], meta["px"], meta["py"],
                                     meta["qx"], meta["qy"])
    ci = compile_instance(inst, Method(meta["method"]), meta["shift"])
    if ci.qubo != q:
        raise InputError("QUBO file does not match the instance described by its sidecar")
    return ci


@dataclass
class Outcome:
    energy: int
    y: int | None
    verified: bool
    restarts_used: int
    bits: list[int] = field(default_factory=list)


def _pick(ci: CompiledInstance, candidates) -> Outcome | None:
    """First verified zero-energy assignment among ``(energy, bits)`` pairs."""
    first = None
    for e, bits in candidates:
        d = ci.decode(bits, energy=e)
        ok = e == 0 and d.verified
        out = Outcome(e, d.y_candidate, ok, 0, list(bits))
        if ok:
            return out
        if first is None:
            first = out
    return first


def _run_solver(ci: CompiledInstance, args, solver: str, moves: str, stop_energy=None) -> Outcome:
    q = ci.qubo
    if solver == "exhaustive":
        res = solve_exhaustive(q, cap=args.cap, backend=args.backend)
        out = _pick(ci, ((res.min_energy, b) for b in res.assignments))
        out.restarts_used = 0
        return out
    relaxation = ci.relaxation() if moves == "relax" else None
    res = solve_sa(q, _sa_params(args, stop_energy), backend=args.backend,
                   workers=args.workers, relaxation=relaxation)
    ranked = sorted(res.trace, key=lambda t: (t.best_energy, t.restart))
    out = _pick(ci, ((t.best_energy, t.best_bits) for t in ranked))
    out.restarts_used = len(res.trace)
    return out


def _emit(args, obj: dict, text: list[str]) -> None:
    if args.json:
        print(json.dumps(obj, sort_keys=True))
    else:
        print("\n".join(text))


def _breakdown_lines(counts: dict) -> list[str]:
    return [f"variables: {counts['total']} (scalar {counts['scalar']}, point {counts['point']}, "
            f"carry {counts['carry']}, aux {counts['aux']})"]


# --------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    inst = _instance(args)
    try:
        ci = compile_instance(inst, Method(args.method), args.shift)
    except ShiftedTargetAtInfinity as exc:
        _emit(args, {"command": "gen", "classical": True, "y": exc.answer, "shift": exc.shift},
              [f"classical: Q + [{exc.shift}]P = O, so y = {exc.answer}; nothing written"])
        return EXIT_CLASSICAL
    out = Path(args.out)
    meta_path = Path(args.meta) if args.meta else out.with_name(out.name + ".json")
    export_qubo(ci.qubo, out, comments=[f"ecdlp p={inst.curve.p} method={args.method} shift={ci.shift}"])
    meta_path.write_text(json.dumps(ci.metadata(), indent=1) + "\n", encoding="utf-8")
    counts = ci.counts()
    _emit(args, {"command": "gen", "classical": False, "qubo": str(out), "meta": str(meta_path),
                 "method": args.method, "shift": ci.shift, "counts": counts},
          [f"wrote {out} and {meta_path}", f"method {args.method}, shift {ci.shift}"]
          + _breakdown_lines(counts))
    return EXIT_OK


def cmd_solve(args) -> int:
    q = _read_qubo(args.qubo)
    ci = _compiled_from_meta(_read_meta(args.meta), q)
    t0 = time.perf_counter()
    out = _run_solver(ci, args, args.solver, args.moves)
    wall = time.perf_counter() - t0
    _emit(args, {"command": "solve", "solver": args.solver, "energy": out.energy, "y": out.y,
                 "verified": out.verified, "restarts_used": out.restarts_used, "wall_time": wall},
          [f"energy: {out.energy}", f"y: {out.y}", f"verified: {str(out.verified).lower()}"])
    return EXIT_OK if out.verified else EXIT_UNVERIFIED


def attack(inst: EcdlpInstance, args) -> dict:
    """The retry loop behind ``cmd_attack``; returns the report as a dict.

    The first method tries shifts 0 then 1.  The second method starts at
    shift 1 and, because its encoding cannot reach targets whose scalar is
    a multiple of four, falls back to shift 2.  A shift that sends the
    target to infinity is answered classically.
    """
    method = Method(args.method)
    shifts = (0, 1) if method is Method.FIRST else (1, 2)
    attempts = []
    report = {"command": "attack", "instance": _echo(inst), "method": int(method),
              "attempts": attempts, "y": None, "verified": False, "counts": None}
    for shift in shifts:
        t0 = time.perf_counter()
        try:
            ci = compile_instance(inst, method, shift)
        except ShiftedTargetAtInfinity as exc:
            y = exc.answer
            ok = y != 0 and scalar_mul(inst.curve, y, inst.P) == inst.Q
            attempts.append({"shift": shift, "classical": True, "solver": None, "energy": None,
                             "restarts_used": 0, "wall_time": time.perf_counter() - t0,
                             "y": y, "verified": ok})
            if ok:
                report.update(y=y, verified=True)
                break
            continue
        solver = args.solver
        if solver == "auto":
            solver = "exhaustive" if ci.qubo.num_vars <= args.cap else "sa"
        out = _run_solver(ci, args, solver, args.moves, stop_energy=0)
        report["counts"] = ci.counts()
        attempts.append({"shift": shift, "classical": False, "solver": solver, "energy": out.energy,
                         "restarts_used": out.restarts_used, "wall_time": time.perf_counter() - t0,
                         "y": out.y, "verified": out.verified, "counts": ci.counts()})
        if out.verified:
            report.update(y=out.y, verified=True)
            break
    return report


def cmd_attack(args) -> int:
    report = attack(_instance(args), args)
    lines = [f"method {report['method']}"]
    for a in report["attempts"]:
        if a["classical"]:
            lines.append(f"shift {a['shift']}: classical y = {a['y']}")
        else:
            lines.append(f"shift {a['shift']}: {a['solver']} energy {a['energy']} "
                         f"restarts {a['restarts_used']} {a['wall_time']:.2f}s "
                         f"y {a['y']} verified {str(a['verified']).lower()}")
    if report["counts"]:
        lines += _breakdown_lines(report["counts"])
    lines.append(f"y: {report['y']}" if report["verified"] else "y: not found")
    _emit(args, report, lines)
    return EXIT_OK if report["verified"] else EXIT_UNVERIFIED


def cmd_oracle(args) -> int:
    inst = _instance(args)
    try:
        y = ecdlp_bruteforce(inst)
    except NotInSubgroup as exc:
        _emit(args, {"command": "oracle", "y": None, "error": str(exc)}, [f"not found: {exc}"])
        return EXIT_UNVERIFIED
    _emit(args, {"command": "oracle", "y": y}, [str(y)])
    return EXIT_OK


def cmd_stats(args) -> int:
    q = _read_qubo(args.qubo)
    lo, hi = q.coefficient_range()
    obj = {"command": "stats", "num_vars": q.num_vars, "linear": len(q.linear),
           "quadratic": len(q.quadratic), "coef_min": lo, "coef_max": hi, "offset": q.offset,
           "roles": None}
    lines = [f"N: {q.num_vars}", f"nonzero linear: {len(q.linear)}",
             f"nonzero quadratic: {len(q.quadratic)}", f"coefficients: [{lo}, {hi}]",
             f"offset: {q.offset}"]
    if args.meta:
        meta = _read_meta(args.meta)
        try:
            roles = [role_from_json(r) for r in meta.get("variables", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"sidecar {args.meta}: bad variable entry ({exc})") from None
        if len(roles) != q.num_vars:
            raise InputError(f"sidecar lists {len(roles)} variables, QUBO has {q.num_vars}")
        obj["roles"] = role_counts(roles)
        lines += _breakdown_lines(obj["roles"])
    _emit(args, obj, lines)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "attack": cmd_attack,
            "oracle": cmd_oracle, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags already
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EcdlpQuboError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
