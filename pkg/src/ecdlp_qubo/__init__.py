"""Reduce small-curve ECDLP instances to QUBO and solve them classically."""

from .ec_core import (
    INFINITY,
    AffinePoint,
    CurveParams,
    EcdlpInstance,
    FieldElement,
    ecdlp_bruteforce,
    fe_inv,
    point_add,
    point_order,
    precompute_powers,
    scalar_mul,
)
from .polyring import Poly
from .qubo import QuboInstance, energy, export_qubo, import_qubo
from .reduction import (
    CompiledInstance,
    Method,
    assemble_qubo,
    build_system,
    compile_instance,
    decode,
    encode_truth,
    lift_integers,
    linearize,
)
from .solvers import SaParams, solve_exhaustive, solve_sa

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "AffinePoint", "CurveParams", "EcdlpInstance", "FieldElement",
    "ecdlp_bruteforce", "fe_inv", "point_add", "point_order", "precompute_powers",
    "scalar_mul", "Poly", "QuboInstance", "energy", "export_qubo", "import_qubo",
    "CompiledInstance", "Method", "assemble_qubo", "build_system", "compile_instance",
    "decode", "encode_truth", "lift_integers", "linearize", "SaParams",
    "solve_exhaustive", "solve_sa",
]
