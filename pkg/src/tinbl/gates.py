"""NOT/Annihilation/Creation gate and the single-bit XOR/XNOR gates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import BitValue, ProductString, Superposition, bv_mul
from .rns import Rns
from .signals import Prod, SignalExpr, compile_expr, compile_superposition, rail

L, H, X, V = BitValue.L, BitValue.H, BitValue.X, BitValue.V

ORDER = (L, H, X, V)

# Rows are the first input, columns the second, both in ORDER.
EXPECTED_TABLES = {
    "xor": (
        (L, H, X, V),
        (H, L, V, X),
        (X, V, L, H),
        (V, X, H, L),
    ),
    "xnor": (
        (H, L, V, X),
        (L, H, X, V),
        (V, X, H, L),
        (X, V, L, H),
    ),
}


def not_gate(i: int, y: Superposition) -> Superposition:
    """Multiply every term of ``y`` by ``R_i0 * R_i1``.

    H and L swap at position ``i``; X becomes V (annihilation) and V becomes
    X (creation). Coefficients are untouched.
    """
    return y.times_string(ProductString.single(y.m, i, X))


def not_gate_signal(i: int, y: SignalExpr) -> Prod:
    """Instantaneous NOT: the product ``R_i0 * R_i1 * y``."""
    if i < 1:
        raise ValueError(f"bit index {i} out of range")
    return Prod((rail(i, 0), rail(i, 1), y))


def xor_single(a: BitValue, b: BitValue) -> BitValue:
    """Single-bit XOR: ``A * B * L``. Works on one-bit values only."""
    return bv_mul(bv_mul(a, b), L)


def xnor_single(a: BitValue, b: BitValue) -> BitValue:
    return bv_mul(bv_mul(a, b), H)


_SINGLE = {"xor": (xor_single, L), "xnor": (xnor_single, H)}


def truth_table(gate: str) -> tuple[tuple[BitValue, ...], ...]:
    fn, _ = _SINGLE[gate]
    return tuple(tuple(fn(a, b) for b in ORDER) for a in ORDER)


def table_mismatches(gate: str) -> list[tuple[BitValue, BitValue, BitValue, BitValue]]:
    """Cells ``(a, b, got, expected)`` where the computed table differs."""
    got = truth_table(gate)
    return [
        (a, b, got[r][c], EXPECTED_TABLES[gate][r][c])
        for r, a in enumerate(ORDER)
        for c, b in enumerate(ORDER)
        if got[r][c] != EXPECTED_TABLES[gate][r][c]
    ]


@dataclass
class GateReport:
    gate: str
    inputs: str
    output: Superposition
    ticks: int
    mismatches: list[int] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.mismatches


def _compare(symbolic: SignalExpr, instantaneous: SignalExpr, rns: Rns, ticks: int) -> list[int]:
    a = compile_expr(symbolic).eval_window(0, ticks, rns)
    b = compile_expr(instantaneous).eval_window(0, ticks, rns)
    return [int(t) for t in np.flatnonzero(a != b)]


def check_not(i: int, y: Superposition, rns: Rns, ticks: int) -> GateReport:
    """Apply NOT symbolically and confirm it against the rail-product form."""
    out = not_gate(i, y)
    bad = _compare(compile_superposition(out), not_gate_signal(i, compile_superposition(y)), rns, ticks)
    return GateReport(f"not[{i}]", repr(y), out, ticks, bad)


def check_single(gate: str, a: BitValue, b: BitValue, rns: Rns, ticks: int) -> GateReport:
    """XOR/XNOR in a one-bit system, symbolic result versus ``A*B*L`` (or ``*H``)."""
    if rns.m != 1:
        raise ValueError("single-bit gates need a one-bit reference system")
    fn, ref = _SINGLE[gate]
    out = Superposition.of(ProductString.from_values([fn(a, b)]))
    sa, sb, sref = (compile_superposition(Superposition.of(ProductString.from_values([v]))) for v in (a, b, ref))
    bad = _compare(compile_superposition(out), Prod((sa, sb, sref)), rns, ticks)
    return GateReport(gate, f"{a} {b}", out, ticks, bad)
