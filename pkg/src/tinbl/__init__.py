"""Ternary instantaneous noise-based logic: reference noises, exact symbolic
states, factored per-tick evaluation, gates and correlation measurement."""

from .algebra import (
    BitValue,
    ExpansionCapError,
    ProductString,
    Superposition,
    bv_mul,
    coefficient,
    string_from_number,
    string_mul,
    superpose_add,
    superpose_mul,
)
from .gates import not_gate, not_gate_signal, truth_table, xnor_single, xor_single
from .measure import CorrelationEstimate, correlate, measure_coefficient, orthogonality_matrix
from .rns import Rns, RtwId, new_rns
from .signals import (
    UNIT,
    Prod,
    Rail,
    SignalExpr,
    Sum,
    compile_expr,
    compile_superposition,
    eval_string,
    eval_superposition,
    eval_window,
    evaluate,
)
from .universes import AmplitudeStats, UniverseKind, build_universe, expand_universe, universe_stats

__all__ = [
    "AmplitudeStats", "BitValue", "CorrelationEstimate", "ExpansionCapError", "Prod", "ProductString",
    "Rail", "Rns", "RtwId", "SignalExpr", "Sum", "Superposition", "UNIT", "UniverseKind", "build_universe",
    "bv_mul", "coefficient", "compile_expr", "compile_superposition", "correlate", "eval_string",
    "eval_superposition", "eval_window", "evaluate", "expand_universe", "measure_coefficient", "new_rns",
    "not_gate", "not_gate_signal", "orthogonality_matrix", "string_from_number", "string_mul",
    "superpose_add", "superpose_mul", "truth_table", "universe_stats", "xnor_single", "xor_single",
]
