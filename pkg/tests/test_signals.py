import itertools
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tinbl.algebra import ProductString, Superposition, string_from_number, string_mul
from tinbl.rns import Rns, RtwId
from tinbl.signals import (
    INT64_SAFE,
    UNIT,
    Prod,
    Rail,
    Sum,
    add,
    compile_expr,
    compile_superposition,
    eval_string,
    eval_string_window,
    eval_superposition,
    eval_superposition_window,
    eval_window,
    evaluate,
    expr_from_json,
    expr_to_json,
    node_count,
    prod,
    rail,
)
from tinbl.universes import build_universe, expand_universe


def naive(expr, t, rns):
    """Reference evaluator: plain recursion over scalar rail signs."""
    if isinstance(expr, Rail):
        return rns.sign(expr.rtw, t)
    if isinstance(expr, type(UNIT)):
        return 1
    if isinstance(expr, Prod):
        out = 1
        for f in expr.factors:
            out *= naive(f, t, rns)
        return out
    if isinstance(expr, Sum):
        return sum(w * naive(c, t, rns) for w, c in expr.terms)
    raise TypeError(expr)


def random_expr(rng, m, depth=3):
    roll = rng.random()
    if depth == 0 or roll < 0.25:
        return UNIT if rng.random() < 0.1 else rail(rng.randint(1, m), rng.randint(0, 1))
    kids = [random_expr(rng, m, depth - 1) for _ in range(rng.randint(0, 4))]
    if roll < 0.6:
        return Prod(tuple(kids))
    return Sum(tuple((rng.randint(-3, 3), k) for k in kids))


def random_state(rng, m, max_terms):
    k = rng.randint(0, max_terms)
    return Superposition(m, {rng.randrange(1 << (2 * m)): rng.randint(-3, 3) for _ in range(k)})


def test_unit_and_square():
    r = Rns(3, 1)
    assert list(eval_window(UNIT, 0, 50, r)) == [1] * 50
    x = rail(2, 0)
    assert list(eval_window(prod(x, x), 0, 50, r)) == [1] * 50
    assert evaluate(UNIT, 7, r) == 1


def test_binary_universe_factor_values():
    # oracle: each factor is s0 + s1 computed from scalar signs
    r = Rns(3, 5)
    u = build_universe("binary", 3)
    for t in range(200):
        expected = 1
        for i in (1, 2, 3):
            f = r.sign(RtwId(i, 0), t) + r.sign(RtwId(i, 1), t)
            assert f in (-2, 0, 2)
            expected *= f
        assert evaluate(u, t, r) == expected


def test_compiled_matches_naive_on_random_dags():
    rng = random.Random(1)
    for _ in range(60):
        m = rng.randint(1, 5)
        r = Rns(m, rng.randrange(1 << 64))
        e = random_expr(rng, m)
        got = eval_window(e, 3, 40, r)
        assert [int(v) for v in got] == [naive(e, t, r) for t in range(3, 43)]


def test_shared_subexpressions():
    a = add(rail(1, 0), rail(1, 1))
    e = prod(a, a, a)
    r = Rns(1, 9)
    assert node_count(e) == 4
    assert [int(v) for v in eval_window(e, 0, 64, r)] == [naive(e, t, r) for t in range(64)]


def test_degenerate_nodes():
    r = Rns(2, 3)
    assert list(eval_window(Prod(()), 0, 4, r)) == [1] * 4
    assert list(eval_window(Sum(()), 0, 4, r)) == [0] * 4
    zero = Sum(((1, rail(1, 0)), (-1, rail(1, 0))))
    assert list(eval_window(prod(zero, rail(2, 1)), 0, 4, r)) == [0] * 4
    assert list(eval_window(Sum(((5, rail(1, 0)),)), 0, 8, r)) == [5 * naive(rail(1, 0), t, r) for t in range(8)]


def test_big_amplitudes_stay_exact():
    # 3**45 does not fit int64; forces the object path
    m = 45
    r = Rns(m, 2)
    e = Prod(tuple(Sum(((3, UNIT),)) for _ in range(m)))
    assert not compile_expr(e).exact_int64
    assert int(evaluate(e, 0, r)) == 3**45
    big_w = Sum(((1 << 80, rail(1, 0)), (1, rail(1, 1))))
    assert [int(v) for v in eval_window(big_w, 0, 10, r)] == [naive(big_w, t, r) for t in range(10)]


def test_mixed_small_and_big_children():
    m = 40
    r = Rns(m, 8)
    u = build_universe("ternary-nv", m)
    e = add(u, prod(rail(1, 0), rail(2, 1)))
    assert [int(v) for v in eval_window(e, 0, 20, r)] == [naive(e, t, r) for t in range(20)]


def test_rail_out_of_range():
    with pytest.raises(ValueError):
        evaluate(rail(4, 0), 0, Rns(3, 1))


def test_window_independent_of_chunking_and_workers():
    r = Rns(6, 77)
    u = build_universe("ternary-nv", 6)
    ref = eval_window(u, 10, 1000, r)
    for chunk in (1, 7, 64, 999, 5000):
        assert np.array_equal(eval_window(u, 10, 1000, r, chunk=chunk), ref)
    assert np.array_equal(eval_window(u, 10, 1000, r, chunk=100, workers=4), ref)
    assert [int(v) for v in eval_window(u, 10, 1, r)] == [evaluate(u, 10, r)]


def test_window_rejects_empty():
    with pytest.raises(ValueError):
        eval_window(UNIT, 0, 0, Rns(1, 1))


def test_eval_string_examples():
    r = Rns(3, 4)
    for t in range(100):
        assert eval_string(ProductString.vacuum(3), t, r) == 1
        w6 = string_from_number(6, 3)
        expected = r.sign(RtwId(1, 0), t) * r.sign(RtwId(2, 1), t) * r.sign(RtwId(3, 1), t)
        assert eval_string(w6, t, r) == expected
    assert np.array_equal(eval_string_window(w6, 0, 100, r), [eval_string(w6, t, r) for t in range(100)])


def test_string_homomorphism():
    rng = random.Random(3)
    r = Rns(5, 12)
    for _ in range(30):
        a, b = (ProductString(5, rng.randrange(1 << 10)) for _ in range(2))
        lhs = eval_string_window(string_mul(a, b), 0, 1000, r)
        rhs = eval_string_window(a, 0, 1000, r) * eval_string_window(b, 0, 1000, r)
        assert np.array_equal(lhs, rhs)


def test_eval_superposition_examples():
    r = Rns(3, 6)
    assert eval_superposition(Superposition.zero(3), 5, r) == 0
    w = ProductString.parse("XLV")
    assert eval_superposition(Superposition.of(w), 5, r) == eval_string(w, 5, r)


def test_scalar_and_window_superposition_agree():
    rng = random.Random(5)
    r = Rns(4, 99)
    y = random_state(rng, 4, 20)
    win = eval_superposition_window(y, 0, 50, r)
    assert [int(v) for v in win] == [eval_superposition(y, t, r) for t in range(50)]


def test_expanded_vs_factored_binary_m3():
    r = Rns(3, 2023)
    a = eval_superposition_window(expand_universe("binary", 3), 0, 1000, r)
    b = eval_window(build_universe("binary", 3), 0, 1000, r)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind,max_m", [("binary", 8), ("ternary-nv", 8), ("total", 6)])
def test_expanded_vs_factored_all_kinds(kind, max_m):
    for m in range(1, max_m + 1):
        r = Rns(m, 100 + m)
        a = eval_superposition_window(expand_universe(kind, m), 0, 1000, r)
        b = eval_window(build_universe(kind, m), 0, 1000, r)
        assert np.array_equal(a, b), (kind, m)


def test_compile_superposition_differential():
    rng = random.Random(8)
    for _ in range(40):
        m = rng.randint(1, 8)
        r = Rns(m, rng.randrange(1 << 64))
        y = random_state(rng, m, 64)
        a = eval_superposition_window(y, 0, 1000, r)
        b = eval_window(compile_superposition(y), 0, 1000, r)
        assert np.array_equal(a, b)


def test_compile_superposition_examples():
    r = Rns(3, 1)
    assert list(eval_window(compile_superposition(Superposition.zero(3)), 0, 5, r)) == [0] * 5
    w = ProductString.parse("HXL")
    single = compile_superposition(Superposition.of(w))
    assert [int(v) for v in eval_window(single, 0, 20, r)] == [eval_string(w, t, r) for t in range(20)]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32), st.lists(st.tuples(st.integers(0, 4095), st.integers(-3, 3)), max_size=10))
def test_pure_products_are_signs(m, seed, raw):
    r = Rns(m, seed)
    for code, _ in raw:
        w = ProductString(m, code % (1 << (2 * m)))
        v = eval_window(compile_superposition(Superposition.of(w)), 0, 50, r)
        assert set(np.unique(v)) <= {-1, 1}


def test_json_round_trip():
    e = add(prod(rail(1, 0), rail(2, 1)), UNIT, Sum(((-7, rail(2, 0)),)))
    text = json.dumps(expr_to_json(e))
    back = expr_from_json(json.loads(text))
    r = Rns(2, 3)
    assert np.array_equal(eval_window(back, 0, 200, r), eval_window(e, 0, 200, r))
    assert {n["node"] for n in [json.loads(text)]} == {"sum"}
    with pytest.raises(ValueError):
        expr_from_json({"node": "nope"})


def test_bound_tracking():
    assert compile_expr(build_universe("ternary-nv", 4)).bound == 3**4
    assert compile_expr(build_universe("total", 3)).bound == 4**3
    assert compile_expr(build_universe("ternary-nv", 50)).bound == INT64_SAFE + 1


def test_big_product_with_mixed_children():
    m = 45
    r = Rns(m, 12)
    u = build_universe("ternary-nv", m)
    e = prod(u, rail(1, 0), Sum(((7, rail(2, 1)), (1, UNIT))), u)
    assert not compile_expr(e).exact_int64
    assert [int(v) for v in eval_window(e, 0, 30, r, chunk=7)] == [naive(e, t, r) for t in range(30)]
