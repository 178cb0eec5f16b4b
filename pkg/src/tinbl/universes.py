"""Binary, ternary (no vacuum) and total Universes.

Each Universe is a product of ``m`` per-bit sums, so the factored signal
costs O(m) nodes even though it expands to 2**m, 3**m or 4**m strings.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sps

from .algebra import DEFAULT_EXPANSION_CAP, BitValue, ExpansionCapError, Superposition, bit_sum, superpose_mul
from .rns import Rns, RtwId
from .signals import UNIT, Prod, Rail, SignalExpr, Sum, compile_expr, gc_paused


class UniverseKind(enum.Enum):
    BINARY = "binary"
    TERNARY_NV = "ternary-nv"
    TOTAL = "total"

    @property
    def bit_values(self) -> tuple[BitValue, ...]:
        """Per-bit addends, in the order they appear in each factor."""
        return _ADDENDS[self]

    @property
    def base(self) -> int:
        return len(_ADDENDS[self])


_ADDENDS = {
    UniverseKind.BINARY: (BitValue.L, BitValue.H),
    UniverseKind.TERNARY_NV: (BitValue.L, BitValue.H, BitValue.X),
    UniverseKind.TOTAL: (BitValue.L, BitValue.H, BitValue.X, BitValue.V),
}


def _kind(kind) -> UniverseKind:
    return kind if isinstance(kind, UniverseKind) else UniverseKind(kind)


def build_universe(kind, m: int) -> SignalExpr:
    """Factored Universe: ``prod_i (R_i0 + R_i1 [+ R_i0 R_i1] [+ 1])``."""
    kind = _kind(kind)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    factors = []
    with gc_paused():
        for i in range(1, m + 1):
            r0, r1 = Rail(RtwId(i, 0)), Rail(RtwId(i, 1))
            addends = {BitValue.L: r0, BitValue.H: r1, BitValue.X: Prod((r0, r1)), BitValue.V: UNIT}
            factors.append(Sum(tuple((1, addends[v]) for v in kind.bit_values)))
        return Prod(tuple(factors))


def factor_from_signs(kind, s0: int, s1: int) -> int:
    """Value of one Universe factor given the bit's two rail signs."""
    kind = _kind(kind)
    val = {BitValue.L: s0, BitValue.H: s1, BitValue.X: s0 * s1, BitValue.V: 1}
    return sum(val[v] for v in kind.bit_values)


def universe_factor_value(kind, i: int, t: int, rns: Rns) -> int:
    return factor_from_signs(kind, rns.sign(RtwId(i, 0), t), rns.sign(RtwId(i, 1), t))


def expand_universe(kind, m: int, cap: int = DEFAULT_EXPANSION_CAP) -> Superposition:
    kind = _kind(kind)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if kind.base ** m > cap:
        raise ExpansionCapError(f"{kind.value} universe at m={m} has {kind.base}**{m} terms, cap is {cap}")
    out = Superposition.one(m)
    for i in range(1, m + 1):
        out = superpose_mul(out, bit_sum(m, i, kind.bit_values), cap=cap)
    return out


@dataclass
class AmplitudeStats:
    """Tally of Universe amplitudes over a run of clock ticks.

    ``histogram`` maps exact ``|amplitude|`` to count (zero excluded; zeros
    live in ``zero_count``). ``factor_signs[i]`` counts the sign pairs of
    bit ``i+1`` ordered ``(++, +-, -+, --)`` for rails ``(R_i0, R_i1)``.
    """

    kind: UniverseKind
    m: int
    ticks: int = 0
    zero_count: int = 0
    histogram: Counter = field(default_factory=Counter)
    factor_signs: list[list[int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.factor_signs:
            self.factor_signs = [[0, 0, 0, 0] for _ in range(self.m)]

    def merge(self, other: "AmplitudeStats") -> "AmplitudeStats":
        if (self.kind, self.m) != (other.kind, other.m):
            raise ValueError("cannot merge stats of different universes")
        return AmplitudeStats(
            self.kind,
            self.m,
            self.ticks + other.ticks,
            self.zero_count + other.zero_count,
            self.histogram + other.histogram,
            [[a + b for a, b in zip(x, y)] for x, y in zip(self.factor_signs, other.factor_signs)],
        )

    @property
    def nonzero_count(self) -> int:
        return self.ticks - self.zero_count

    def sorted_histogram(self) -> list[tuple[int, int]]:
        return sorted(self.histogram.items())

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "m": self.m,
            "ticks": self.ticks,
            "zero_count": self.zero_count,
            "histogram": [[str(a), c] for a, c in self.sorted_histogram()],
            "factor_signs": self.factor_signs,
        }

    def csv_rows(self) -> list[tuple[str, int]]:
        return [("0", self.zero_count)] + [(str(a), c) for a, c in self.sorted_histogram()]


def universe_stats(kind, m: int, n: int, rns: Rns, t0: int = 0, chunk: int | None = None) -> AmplitudeStats:
    """Evaluate the factored Universe over ``n`` ticks and tally amplitudes."""
    kind = _kind(kind)
    if n < 1:
        raise ValueError(f"need at least one tick, got {n}")
    prog = compile_expr(build_universe(kind, m))
    # the program reads streams in first-use order; map back to (bit, rail)
    pos = {int(s): j for j, s in enumerate(prog.streams)}
    r0 = np.asarray([pos[2 * i] for i in range(m)])
    r1 = np.asarray([pos[2 * i + 1] for i in range(m)])

    stats = AmplitudeStats(kind, m)
    for signs, amps in prog.iter_chunks(t0, n, rns, chunk=chunk):
        part = AmplitudeStats(kind, m, ticks=len(amps))
        mags = np.abs(amps)
        nz = mags[mags != 0]
        part.zero_count = len(amps) - len(nz)
        if nz.dtype == object:
            part.histogram.update(int(v) for v in nz)
        else:
            vals, counts = np.unique(nz, return_counts=True)
            part.histogram.update({int(v): int(c) for v, c in zip(vals, counts)})
        a, b = signs[r0] > 0, signs[r1] > 0
        pairs = np.stack([a & b, a & ~b, ~a & b, ~a & ~b]).sum(axis=2).T
        part.factor_signs = pairs.tolist()
        stats = stats.merge(part)
    return stats


# Two-sided tail mass beyond 5 standard deviations of a normal.
FIVE_SIGMA_P = 5.733031437583878e-07


def nonzero_probability(kind, m: int) -> Fraction:
    """Chance that the Universe amplitude is nonzero at a random tick.

    A binary factor vanishes on half of its four sign pairs, a total factor
    on three of four, a ternary factor on none.
    """
    kind = _kind(kind)
    per_factor = {UniverseKind.BINARY: Fraction(1, 2), UniverseKind.TERNARY_NV: Fraction(1), UniverseKind.TOTAL: Fraction(1, 4)}
    return per_factor[kind] ** m


def ternary_k_pmf(m: int) -> list[Fraction]:
    """Law of k, the number of bits with both rails +1; ``|U| = 3**k``."""
    q = Fraction(1, 4)
    return [math.comb(m, k) * q**k * (1 - q) ** (m - k) for k in range(m + 1)]


def binomial_within(count: int, n: int, p: Fraction, threshold=5) -> bool:
    """``|count - n p| <= threshold * sqrt(n p (1 - p))``, decided exactly."""
    dev = Fraction(count) - n * p
    return dev * dev <= Fraction(threshold) ** 2 * n * p * (1 - p)


def ternary_k_counts(stats: AmplitudeStats) -> list[int]:
    """Histogram of |amplitude| re-keyed by the exponent k (|U| = 3**k)."""
    counts = [0] * (stats.m + 1)
    for amp, c in stats.histogram.items():
        k = _log3_exact(amp)
        if k is None or k > stats.m:
            raise ValueError(f"{amp} is not 3**k for k <= {stats.m}")
        counts[k] += c
    return counts


def _log3_exact(x: int) -> int | None:
    k = 0
    while x > 1 and x % 3 == 0:
        x //= 3
        k += 1
    return k if x == 1 else None


def chi_square_pvalue(observed: list[int], probs: list[Fraction], min_expected: float = 5.0) -> tuple[float, int]:
    """Goodness-of-fit p-value and degrees of freedom.

    Adjacent bins are pooled from the left until each holds at least
    ``min_expected`` expected counts; a short tail joins the last bin.
    """
    n = sum(observed)
    obs_bins, exp_bins = [], []
    o_acc, e_acc = 0, 0.0
    for o, p in zip(observed, probs):
        o_acc += o
        e_acc += float(p) * n
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc, e_acc = 0, 0.0
    if e_acc > 0 or o_acc:
        if exp_bins:
            obs_bins[-1] += o_acc
            exp_bins[-1] += e_acc
        else:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
    df = len(obs_bins) - 1
    if df < 1:
        return 1.0, 0
    stat = sum((o - e) ** 2 / e for o, e in zip(obs_bins, exp_bins))
    return float(sps.chi2.sf(stat, df)), df


def check_stats(stats: AmplitudeStats, threshold=5) -> list[str]:
    """Violations of the amplitude laws for ``stats.kind`` (empty if none).

    Ternary: no zeros, magnitudes are powers of 3 up to ``3**m``, and (when
    the fit has at least one degree of freedom) k follows Binomial(m, 1/4).
    Binary/total: the only nonzero magnitude is ``2**m`` / ``4**m`` and the
    nonzero fraction matches ``2**-m`` / ``4**-m`` within ``threshold`` sigma.
    """
    problems = []
    kind, m = stats.kind, stats.m
    if kind is UniverseKind.TERNARY_NV:
        if stats.zero_count:
            problems.append(f"{stats.zero_count} zero-amplitude ticks")
        try:
            counts = ternary_k_counts(stats)
        except ValueError as exc:
            problems.append(str(exc))
        else:
            p, df = chi_square_pvalue(counts, ternary_k_pmf(m))
            if df and p < FIVE_SIGMA_P:
                problems.append(f"k distribution departs from Binomial({m}, 1/4): p={p:.3g}")
        return problems
    peak = (2 if kind is UniverseKind.BINARY else 4) ** m
    extra = sorted(a for a in stats.histogram if a != peak)
    if extra:
        problems.append(f"unexpected magnitudes {extra[:5]}")
    if not binomial_within(stats.nonzero_count, stats.ticks, nonzero_probability(kind, m), threshold):
        problems.append(
            f"nonzero fraction {stats.nonzero_count}/{stats.ticks} is off {nonzero_probability(kind, m)}"
        )
    return problems
