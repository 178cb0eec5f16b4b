"""Finite-time correlation estimates.

Time averages are accumulated as exact integers and divided only for
reporting. Pass/fail compares ``|sum - target * n|`` against
``threshold * spread * sqrt(n)`` in exact rational arithmetic, where
``spread`` bounds the magnitude of one per-tick product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .algebra import ProductString, Superposition, coefficient
from .rns import Rns
from .signals import INT64_SAFE, SignalExpr, as_signal, compile_expr, string_signal

DEFAULT_THRESHOLD = 5


def _decimal(x: Fraction, places: int = 12) -> str:
    with localcontext() as ctx:
        ctx.prec = 50
        q = Decimal(x.numerator) / Decimal(x.denominator)
        return str(q.quantize(Decimal(1).scaleb(-places)).normalize())


@dataclass(frozen=True)
class CorrelationEstimate:
    """Mean of a per-tick product over ``n`` ticks.

    ``total`` and ``total_sq`` are the exact sums of the product and of its
    square. ``target`` is the value the mean should converge to, if known.
    """

    n: int
    total: int
    total_sq: int
    spread: int
    threshold: Fraction = Fraction(DEFAULT_THRESHOLD)
    target: Fraction | None = None

    @property
    def mean(self) -> Fraction:
        return Fraction(self.total, self.n)

    @property
    def tolerance(self) -> float:
        return float(self.threshold) * self.spread / math.sqrt(self.n)

    @property
    def stderr(self) -> float:
        """Empirical standard error of the mean."""
        var = Fraction(self.total_sq, self.n) - self.mean**2
        return math.sqrt(max(float(var), 0.0) / self.n)

    @property
    def error(self) -> Fraction | None:
        return None if self.target is None else self.mean - self.target

    @property
    def passed(self) -> bool | None:
        if self.target is None:
            return None
        dev = Fraction(self.total) - self.target * self.n
        return dev * dev <= self.threshold**2 * self.spread**2 * self.n

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "mean": _decimal(self.mean),
            "target": None if self.target is None else str(self.target),
            "threshold": str(self.threshold),
            "tolerance": f"{self.tolerance:.6g}",
            "pass": self.passed,
        }


def _accumulate(a, b, t0: int, n: int, rns: Rns, chunk: int | None = None) -> tuple[int, int]:
    pa, pb = compile_expr(a), compile_expr(b)
    pa.check(rns)
    pb.check(rns)
    step = chunk or min(pa.chunk_size(), pb.chunk_size())
    per_tick = pa.bound * pb.bound
    total = total_sq = 0
    for s in range(t0, t0 + n, step):
        ticks = np.arange(s, min(s + step, t0 + n))
        x = pa.eval_ticks(ticks, rns) * pb.eval_ticks(ticks, rns)
        if x.dtype != object and per_tick * per_tick * len(ticks) > INT64_SAFE:
            x = x.astype(object)
        total += int(x.sum())
        total_sq += int((x * x).sum())
    return total, total_sq


def correlate(a: SignalExpr, b: SignalExpr, n: int, rns: Rns, *, t0: int = 0,
              target=None, spread: int | None = None,
              threshold=DEFAULT_THRESHOLD, chunk: int | None = None) -> CorrelationEstimate:
    """Time average of ``a(t) * b(t)`` over ``t0 .. t0+n-1``.

    ``spread`` defaults to the product of the two expressions' amplitude bounds.
    """
    if n < 1:
        raise ValueError(f"need at least one tick, got {n}")
    pa, pb = compile_expr(a), compile_expr(b)
    if spread is None:
        spread = pa.bound * pb.bound
    total, total_sq = _accumulate(pa, pb, t0, n, rns, chunk)
    return CorrelationEstimate(
        n, total, total_sq, spread, Fraction(threshold), None if target is None else Fraction(target)
    )


@dataclass
class OrthogonalityReport:
    m: int
    n: int
    entries: list[list[CorrelationEstimate]]

    def failures(self) -> list[tuple[int, int]]:
        return [
            (p, q)
            for p, row in enumerate(self.entries)
            for q, e in enumerate(row)
            if not e.passed
        ]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def means(self) -> list[list[Fraction]]:
        return [[e.mean for e in row] for row in self.entries]

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "pass": self.passed,
            "failures": [list(f) for f in self.failures()],
            "matrix": [[e.to_json() for e in row] for row in self.entries],
        }


def orthogonality_matrix(rns: Rns, n: int, *, t0: int = 0, threshold=DEFAULT_THRESHOLD,
                         chunk: int = 1 << 16) -> OrthogonalityReport:
    """All 2M x 2M rail correlations; diagonal target 1, off-diagonal 0."""
    if n < 1:
        raise ValueError(f"need at least one tick, got {n}")
    k = rns.n_rails
    streams = np.arange(k)
    gram = np.zeros((k, k), dtype=np.int64)
    for s in range(t0, t0 + n, chunk):
        block = rns.stream_signs(streams, np.arange(s, min(s + chunk, t0 + n))).astype(np.int64)
        gram += block @ block.T
    thr = Fraction(threshold)
    entries = [
        [CorrelationEstimate(n, int(gram[p, q]), n, 1, thr, Fraction(int(p == q))) for q in range(k)]
        for p in range(k)
    ]
    return OrthogonalityReport(rns.m, n, entries)


def measure_coefficient(y: SignalExpr | Superposition, w: ProductString, n: int, rns: Rns, *,
                        t0: int = 0, target=None, threshold=DEFAULT_THRESHOLD,
                        chunk: int | None = None) -> CorrelationEstimate:
    """Estimate the coefficient of ``w`` in ``y`` as the time average of ``y * w``.

    The matched term contributes its coefficient at every tick; every other
    term contributes a zero-mean sign. For a :class:`Superposition` the
    spread is the sum of absolute coefficients and the default target is
    the exact coefficient.
    """
    if w.m != rns.m:
        raise ValueError(f"string length {w.m} does not match m={rns.m}")
    spread = None
    if isinstance(y, Superposition):
        spread = y.weight()
        if target is None:
            target = coefficient(y, w)
    return correlate(as_signal(y), string_signal(w), n, rns, t0=t0, target=target,
                     spread=spread, threshold=threshold, chunk=chunk)


def rms_error(y: Superposition, w: ProductString, n: int, seeds) -> float:
    """Root-mean-square deviation of the coefficient estimate over seeds."""
    sq = 0.0
    seeds = list(seeds)
    for seed in seeds:
        est = measure_coefficient(y, w, n, Rns(y.m, seed))
        sq += float(est.error) ** 2
    return math.sqrt(sq / len(seeds))
