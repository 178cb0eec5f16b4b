import math
import random
from fractions import Fraction

import pytest

from tinbl.algebra import ProductString, Superposition, coefficient, string_from_number
from tinbl.measure import (
    CorrelationEstimate,
    correlate,
    measure_coefficient,
    orthogonality_matrix,
    rms_error,
)
from tinbl.rns import Rns
from tinbl.signals import UNIT, compile_superposition, rail

N = 10**6


def test_self_correlation_exact():
    r = Rns(3, 1)
    x = rail(2, 1)
    for n in (1, 10, 1001):
        assert correlate(x, x, n, r).mean == 1
    assert correlate(UNIT, UNIT, 17, r).mean == 1


def test_distinct_rails_uncorrelated():
    est = correlate(rail(1, 0), rail(2, 1), N, Rns(3, 42), target=0)
    assert abs(est.mean) <= Fraction(5, 1000)
    assert est.passed


def test_orthogonality_matrix():
    rep = orthogonality_matrix(Rns(3, 42), N)
    k = 6
    means = rep.means()
    for p in range(k):
        assert means[p][p] == 1
        for q in range(k):
            assert means[p][q] == means[q][p]
    assert rep.passed and rep.failures() == []
    assert sum(1 for p in range(k) for q in range(k) if p != q) == 30


def test_orthogonality_matches_correlate():
    r = Rns(2, 5)
    rep = orthogonality_matrix(r, 5000, chunk=333)
    est = correlate(rail(1, 1), rail(2, 0), 5000, r)
    assert rep.entries[1][2].total == est.total


def test_eq4_coefficients():
    y = Superposition.numbers([7, 4, 1], 4)
    r = Rns(4, 2024)
    for n_ in (7, 4, 1, 0, 2):
        w = string_from_number(n_, 4)
        est = measure_coefficient(y, w, N, r)
        assert est.target == coefficient(y, w)
        assert abs(est.mean - est.target) <= Fraction(15) / 1000
        assert est.passed


def test_matched_term_only_exact():
    w = ProductString.parse("XLHV")
    y = Superposition.of(w)
    for n in (1, 3, 100):
        assert measure_coefficient(y, w, n, Rns(4, 3)).mean == 1


def test_measure_accepts_signal_expr():
    y = Superposition.from_pairs([("LH", 2), ("XV", -3)])
    r = Rns(2, 1)
    a = measure_coefficient(y, ProductString.parse("XV"), 4000, r)
    b = measure_coefficient(compile_superposition(y), ProductString.parse("XV"), 4000, r, target=-3)
    assert a.total == b.total


def test_oracle_agreement_random_states():
    rng = random.Random(6)
    for _ in range(8):
        m = rng.randint(1, 6)
        y = Superposition(m, {rng.randrange(1 << 2 * m): rng.randint(-3, 3) for _ in range(rng.randint(1, 10))})
        if not y:
            continue
        w = rng.choice([s for s, _ in y] + [ProductString(m, rng.randrange(1 << 2 * m))])
        est = measure_coefficient(y, w, N, Rns(m, rng.randrange(1 << 64)))
        assert abs(est.mean - coefficient(y, w)) <= 5 * y.weight() / math.sqrt(N)


def test_determinism():
    y = Superposition.numbers([3, 5, 6], 3)
    w = string_from_number(5, 3)
    a = measure_coefficient(y, w, 20000, Rns(3, 9))
    b = measure_coefficient(y, w, 20000, Rns(3, 9))
    assert a == b


def test_convergence_rate():
    y = Superposition.numbers([1, 2, 3], 3)
    w = string_from_number(1, 3)
    seeds = range(100)
    ratio = rms_error(y, w, 1000, seeds) / rms_error(y, w, 4000, seeds)
    assert 1.5 <= ratio <= 2.5


def test_estimate_json_and_bounds():
    est = CorrelationEstimate(n=4, total=2, total_sq=4, spread=1, target=Fraction(0))
    assert est.mean == Fraction(1, 2)
    assert est.passed  # |2| <= 5 * 1 * sqrt(4)
    j = est.to_json()
    assert j["mean"] == "0.5" and j["pass"] is True and j["n"] == 4
    assert CorrelationEstimate(4, 2, 4, 1).passed is None


def test_estimate_failure():
    est = CorrelationEstimate(n=100, total=60, total_sq=100, spread=1, target=Fraction(0))
    assert est.passed is False  # 60 > 5 * sqrt(100)


def test_length_mismatch():
    with pytest.raises(ValueError):
        measure_coefficient(Superposition.of("LH"), ProductString.parse("LHH"), 10, Rns(2, 1))
