"""Factored signal expressions and their per-tick evaluation.

A :class:`SignalExpr` is a DAG of rail references, the unit constant,
products and integer-weighted sums. :func:`compile_expr` flattens it into a
:class:`Program` that evaluates all nodes of equal depth and kind together,
vectorised over a block of clock ticks. Amplitudes are exact integers:
nodes whose worst-case magnitude fits comfortably in int64 run on int64
rows, the rest on Python-int (object) rows.
"""

from __future__ import annotations

import gc
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .algebra import BitValue, ProductString, Superposition
from .rns import Rns, RtwId

# Largest node bound allowed on the int64 fast path.
INT64_SAFE = 1 << 62

# Soft cap on int64 elements materialised per chunk of ticks.
_CHUNK_BUDGET = 1 << 22


@contextmanager
def gc_paused() -> Iterator[None]:
    """Suspend cyclic GC while allocating large acyclic node graphs."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


class SignalExpr:
    """Base class of expression nodes. Nodes compare by identity."""

    __slots__ = ()

    def __mul__(self, other: "SignalExpr") -> "Prod":
        return Prod((self, other))

    def __add__(self, other: "SignalExpr") -> "Sum":
        return Sum(((1, self), (1, other)))


@dataclass(frozen=True, eq=False)
class Rail(SignalExpr):
    rtw: RtwId

    def __repr__(self) -> str:
        return str(self.rtw)


@dataclass(frozen=True, eq=False)
class Unit(SignalExpr):
    def __repr__(self) -> str:
        return "1"


@dataclass(frozen=True, eq=False)
class Prod(SignalExpr):
    factors: tuple[SignalExpr, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True, eq=False)
class Sum(SignalExpr):
    terms: tuple[tuple[int, SignalExpr], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple((int(w), e) for w, e in self.terms))


UNIT = Unit()


def rail(bit_index: int, rail_: int) -> Rail:
    return Rail(RtwId(bit_index, rail_))


def prod(*factors: SignalExpr) -> Prod:
    return Prod(factors)


def add(*children: SignalExpr) -> Sum:
    return Sum(tuple((1, c) for c in children))


def children_of(node: SignalExpr) -> tuple[SignalExpr, ...]:
    if isinstance(node, Prod):
        return node.factors
    if isinstance(node, Sum):
        return tuple(c for _, c in node.terms)
    return ()


def walk(expr: SignalExpr) -> Iterable[SignalExpr]:
    """Each distinct node (by identity) exactly once, children before parents."""
    seen: set[int] = set()
    stack: list[tuple[SignalExpr, bool]] = [(expr, False)]
    while stack:
        node, done = stack.pop()
        if id(node) in seen:
            continue
        if done:
            seen.add(id(node))
            yield node
            continue
        stack.append((node, True))
        for c in children_of(node):
            if id(c) not in seen:
                stack.append((c, False))


def node_count(expr: SignalExpr) -> int:
    return sum(1 for _ in walk(expr))


def max_bit_index(expr: SignalExpr) -> int:
    return max((n.rtw.bit_index for n in walk(expr) if isinstance(n, Rail)), default=0)


# --------------------------------------------------------------------------
# compilation

_ONE, _ZERO = 0, 1  # reserved node ids
_PROD, _SUM = "prod", "sum"


@dataclass
class _Group:
    kind: str
    big: bool
    out_rows: np.ndarray
    child_rows: np.ndarray | None = None  # flat, int64 groups only
    offsets: np.ndarray | None = None
    weights: np.ndarray | None = None
    nodes: list["_BigNode"] | None = None  # object groups only


@dataclass
class _BigNode:
    """A node evaluated on Python ints.

    For products, int64 children are first multiplied in runs whose bound
    product still fits int64 (``run_offsets``), leaving far fewer big-int
    multiplications.
    """

    kind: str
    out_row: int
    small_rows: np.ndarray
    small_weights: list[int]
    run_offsets: np.ndarray | None
    big_rows: list[int]
    big_weights: list[int]

    def run(self, small: np.ndarray, big: np.ndarray, T: int) -> np.ndarray:
        if self.kind == _PROD:
            parts = []
            if len(self.small_rows):
                runs = np.multiply.reduceat(small[self.small_rows], self.run_offsets, axis=0)
                parts.append(runs.astype(object))
            if self.big_rows:
                parts.append(big[self.big_rows])
            return _tree_product(np.concatenate(parts))
        out = np.zeros(T, dtype=object)
        if len(self.small_rows):
            out = out + (small[self.small_rows].astype(object) * _column(self.small_weights)).sum(axis=0)
        if self.big_rows:
            out = out + (big[self.big_rows] * _column(self.big_weights)).sum(axis=0)
        return out


def _column(values: list[int]) -> np.ndarray:
    col = np.empty((len(values), 1), dtype=object)
    col[:, 0] = values
    return col


def _big_node(kind, out_row, children, weights, is_big, row, bounds) -> _BigNode:
    small_rows, small_w, big_rows, big_w = [], [], [], []
    weights = weights or [1] * len(children)
    for k, w in zip(children, weights):
        if is_big[k]:
            big_rows.append(row[k])
            big_w.append(w)
        else:
            small_rows.append(k)
            small_w.append(w)
    run_offsets = None
    if kind == _PROD and small_rows:
        offsets, acc = [], INT64_SAFE + 1
        for j, k in enumerate(small_rows):
            acc *= bounds[k]
            if acc > INT64_SAFE:
                offsets.append(j)
                acc = bounds[k]
        run_offsets = np.asarray(offsets, dtype=np.int64)
    return _BigNode(kind, out_row, np.asarray([row[k] for k in small_rows], dtype=np.int64),
                    small_w, run_offsets, big_rows, big_w)


class Program:
    """A compiled expression, evaluable over blocks of ticks.

    Build with :func:`compile_expr`. ``streams`` lists the rail positions the
    program reads; :meth:`run` expects their signs in that order.
    """

    def __init__(self, expr: SignalExpr) -> None:
        with gc_paused():
            self._build(expr)

    def _build(self, expr: SignalExpr) -> None:
        self.expr = expr
        kinds: list[str | None] = [None, None]
        kids: list[list[int]] = [[], []]
        wts: list[list[int]] = [[], []]
        bounds: list[int] = [1, 0]
        depth: list[int] = [0, 0]
        node_id: dict[int, int] = {}
        rail_id: dict[int, int] = {}
        streams: list[int] = []

        for node in walk(expr):
            if isinstance(node, Unit):
                node_id[id(node)] = _ONE
            elif isinstance(node, Rail):
                s = node.rtw.stream
                if s not in rail_id:
                    rail_id[s] = len(kinds)
                    streams.append(s)
                    kinds.append(None)
                    kids.append([])
                    wts.append([])
                    bounds.append(1)
                    depth.append(0)
                node_id[id(node)] = rail_id[s]
            elif isinstance(node, Prod):
                ch = []
                for f in node.factors:
                    k = node_id[id(f)]
                    if k == _ZERO:
                        ch = None
                        break
                    if k != _ONE:
                        ch.append(k)
                if ch is None:
                    node_id[id(node)] = _ZERO
                elif not ch:
                    node_id[id(node)] = _ONE
                elif len(ch) == 1:
                    node_id[id(node)] = ch[0]
                else:
                    b = 1
                    for k in ch:
                        b = min(b * bounds[k], INT64_SAFE + 1)
                    node_id[id(node)] = len(kinds)
                    kinds.append(_PROD)
                    kids.append(ch)
                    wts.append([])
                    bounds.append(b)
                    depth.append(1 + max(depth[k] for k in ch))
            elif isinstance(node, Sum):
                merged: dict[int, int] = {}
                for w, c in node.terms:
                    k = node_id[id(c)]
                    if w and k != _ZERO:
                        merged[k] = merged.get(k, 0) + w
                merged = {k: w for k, w in merged.items() if w}
                if not merged:
                    node_id[id(node)] = _ZERO
                elif len(merged) == 1 and next(iter(merged.values())) == 1:
                    node_id[id(node)] = next(iter(merged))
                else:
                    b = 0
                    for k, w in merged.items():
                        b = min(b + abs(w) * bounds[k], INT64_SAFE + 1)
                    node_id[id(node)] = len(kinds)
                    kinds.append(_SUM)
                    kids.append(list(merged))
                    wts.append(list(merged.values()))
                    bounds.append(b)
                    depth.append(1 + max(depth[k] for k in merged))
            else:
                raise TypeError(f"not a signal expression node: {node!r}")

        self.streams = np.asarray(streams, dtype=np.int64)
        self.max_bit = max((s // 2 + 1 for s in streams), default=0)
        self.n_nodes = len(kinds)

        # row assignment: constants and rails occupy the first int64 rows
        is_big = [b > INT64_SAFE for b in bounds]
        row = [0] * len(kinds)
        n_small = n_big = 0
        for i in range(len(kinds)):
            if is_big[i]:
                row[i] = n_big
                n_big += 1
            else:
                row[i] = n_small
                n_small += 1
        self._n_small, self._n_big = n_small, n_big
        self._rail_rows = np.asarray([row[rail_id[s]] for s in streams], dtype=np.int64)

        by_key: dict[tuple[int, str, bool], list[int]] = {}
        for i, k in enumerate(kinds):
            if k is not None:
                by_key.setdefault((depth[i], k, is_big[i]), []).append(i)
        groups = []
        max_gather = 0
        for (_, kind, big), members in sorted(by_key.items(), key=lambda kv: kv[0][0]):
            out_rows = np.asarray([row[i] for i in members], dtype=np.int64)
            if big:
                nodes = [_big_node(kind, row[i], kids[i], wts[i], is_big, row, bounds) for i in members]
                groups.append(_Group(kind, True, out_rows, nodes=nodes))
                continue
            flat = [row[k] for i in members for k in kids[i]]
            sizes = [len(kids[i]) for i in members]
            offsets = np.zeros(len(members), dtype=np.int64)
            np.cumsum(sizes[:-1], out=offsets[1:])
            weights = None
            if kind == _SUM:
                w = [x for i in members for x in wts[i]]
                if any(x != 1 for x in w):
                    weights = np.asarray(w, dtype=np.int64)
            max_gather = max(max_gather, len(flat))
            groups.append(_Group(kind, False, out_rows, np.asarray(flat, dtype=np.int64), offsets, weights))
        self._groups = groups
        self._max_gather = max_gather

        root = node_id[id(expr)]
        self._root = (is_big[root], row[root])
        self.bound = bounds[root]  # saturated at INT64_SAFE + 1

    @property
    def exact_int64(self) -> bool:
        """True when every amplitude fits the int64 path."""
        return not self._root[0]

    def chunk_size(self) -> int:
        per_tick = self._n_small + self._max_gather + 4 * self._n_big
        return max(1, _CHUNK_BUDGET // max(1, per_tick))

    def check(self, rns: Rns) -> None:
        if self.max_bit > rns.m:
            raise ValueError(f"expression uses bit {self.max_bit} but rns has m={rns.m}")

    def run(self, signs: np.ndarray) -> np.ndarray:
        """Evaluate on a sign block of shape ``(len(streams), T)``.

        Returns a length-T array: int64 if :attr:`exact_int64`, else object.
        """
        signs = np.asarray(signs)
        T = signs.shape[1] if signs.ndim == 2 else 1
        small = np.empty((self._n_small, T), dtype=np.int64)
        small[_ONE] = 1
        small[_ZERO] = 0
        if len(self._rail_rows):
            small[self._rail_rows] = signs.reshape(len(self._rail_rows), T)
        big = np.empty((self._n_big, T), dtype=object) if self._n_big else None

        for g in self._groups:
            if not g.big:
                vals = small[g.child_rows]
                if g.weights is not None:
                    vals *= g.weights[:, None]
                reduce = np.add.reduceat if g.kind == _SUM else np.multiply.reduceat
                small[g.out_rows] = reduce(vals, g.offsets, axis=0)
                continue
            for node in g.nodes:
                big[node.out_row] = node.run(small, big, T)

        is_big, r = self._root
        return big[r].copy() if is_big else small[r].copy()

    def eval_ticks(self, ticks, rns: Rns) -> np.ndarray:
        self.check(rns)
        ticks = np.asarray(ticks, dtype=np.int64)
        return self.run(rns.stream_signs(self.streams, ticks))

    def evaluate(self, t: int, rns: Rns) -> int:
        return int(self.eval_ticks([t], rns)[0])

    def eval_window(self, t0: int, n: int, rns: Rns, chunk: int | None = None, workers: int = 1) -> np.ndarray:
        if n < 1:
            raise ValueError(f"window needs n >= 1, got {n}")
        if t0 < 0:
            raise ValueError(f"clock index must be non-negative, got {t0}")
        self.check(rns)
        step = chunk or self.chunk_size()
        starts = range(t0, t0 + n, step)

        def one(s: int) -> np.ndarray:
            return self.run(rns.stream_signs(self.streams, np.arange(s, min(s + step, t0 + n))))

        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(one, starts))
        else:
            parts = [one(s) for s in starts]
        return np.concatenate(parts)

    def iter_chunks(self, t0: int, n: int, rns: Rns, chunk: int | None = None):
        """Yield ``(signs, amplitudes)`` per chunk, for callers that need both."""
        self.check(rns)
        step = chunk or self.chunk_size()
        for s in range(t0, t0 + n, step):
            signs = rns.stream_signs(self.streams, np.arange(s, min(s + step, t0 + n)))
            yield signs, self.run(signs)


def _tree_product(vals: np.ndarray) -> np.ndarray:
    # pairwise product keeps big-int operands balanced
    while len(vals) > 1:
        half = len(vals) // 2
        head = vals[:half] * vals[half:2 * half]
        vals = np.concatenate([head, vals[2 * half:]]) if len(vals) % 2 else head
    return vals[0]


def compile_expr(expr: SignalExpr | Program) -> Program:
    return expr if isinstance(expr, Program) else Program(expr)


def evaluate(expr: SignalExpr | Program, t: int, rns: Rns) -> int:
    """Exact amplitude of ``expr`` at clock tick ``t``."""
    return compile_expr(expr).evaluate(t, rns)


def eval_window(expr: SignalExpr | Program, t0: int, n: int, rns: Rns,
                chunk: int | None = None, workers: int = 1) -> np.ndarray:
    """Amplitudes for ticks ``t0 .. t0+n-1``; independent of ``chunk`` and ``workers``."""
    return compile_expr(expr).eval_window(t0, n, rns, chunk=chunk, workers=workers)


# --------------------------------------------------------------------------
# symbolic states evaluated directly (no compilation)

def _string_rows(w: ProductString) -> list[int]:
    rows = []
    for i, v in enumerate(w.values, start=1):
        if v in (BitValue.L, BitValue.X):
            rows.append(2 * (i - 1))
        if v in (BitValue.H, BitValue.X):
            rows.append(2 * (i - 1) + 1)
    return rows


def eval_string(w: ProductString, t: int, rns: Rns) -> int:
    if w.m != rns.m:
        raise ValueError(f"string length {w.m} does not match m={rns.m}")
    s = 1
    for r in _string_rows(w):
        s *= rns.sign(RtwId.from_stream(r), t)
    return s


def eval_superposition(y: Superposition, t: int, rns: Rns) -> int:
    return sum(c * eval_string(w, t, rns) for w, c in y)


def eval_string_window(w: ProductString, t0: int, n: int, rns: Rns) -> np.ndarray:
    if w.m != rns.m:
        raise ValueError(f"string length {w.m} does not match m={rns.m}")
    rows = _string_rows(w)
    if not rows:
        return np.ones(n, dtype=np.int64)
    block = rns.stream_signs(rows, np.arange(t0, t0 + n))
    return np.prod(block, axis=0, dtype=np.int64)


def eval_superposition_window(y: Superposition, t0: int, n: int, rns: Rns) -> np.ndarray:
    """Term-by-term evaluation over a window, straight from the symbolic form."""
    if y.m != rns.m:
        raise ValueError(f"state has m={y.m} but rns has m={rns.m}")
    exact = y.weight() <= INT64_SAFE
    out = np.zeros(n, dtype=np.int64 if exact else object)
    if not y:
        return out
    block = rns.window(t0, n)
    for w, c in y:
        rows = _string_rows(w)
        sig = np.prod(block[rows], axis=0, dtype=np.int64) if rows else np.ones(n, dtype=np.int64)
        out += sig * c if exact else sig.astype(object) * c
    return out


def string_signal(w: ProductString, rails: dict[int, Rail] | None = None) -> SignalExpr:
    """Pure product of rails for one string; the all-V string is :data:`UNIT`."""
    rails = {} if rails is None else rails
    rows = _string_rows(w)
    if not rows:
        return UNIT
    return Prod(tuple(rails.setdefault(r, Rail(RtwId.from_stream(r))) for r in rows))


def compile_superposition(y: Superposition) -> SignalExpr:
    """Sum of products with the same per-tick value as ``y``."""
    rails: dict[int, Rail] = {}
    return Sum(tuple((c, string_signal(w, rails)) for w, c in y))


# --------------------------------------------------------------------------
# JSON tree form: {"node": "rail"|"unit"|"prod"|"sum", ...}

def expr_to_json(expr: SignalExpr) -> dict:
    if isinstance(expr, Rail):
        return {"node": "rail", "bit": expr.rtw.bit_index, "rail": expr.rtw.rail}
    if isinstance(expr, Unit):
        return {"node": "unit"}
    if isinstance(expr, Prod):
        return {"node": "prod", "factors": [expr_to_json(f) for f in expr.factors]}
    if isinstance(expr, Sum):
        return {"node": "sum", "terms": [[str(w), expr_to_json(c)] for w, c in expr.terms]}
    raise TypeError(f"not a signal expression node: {expr!r}")


def expr_from_json(obj: dict) -> SignalExpr:
    tag = obj.get("node")
    if tag == "rail":
        return rail(int(obj["bit"]), int(obj["rail"]))
    if tag == "unit":
        return UNIT
    if tag == "prod":
        return Prod(tuple(expr_from_json(f) for f in obj["factors"]))
    if tag == "sum":
        return Sum(tuple((int(w), expr_from_json(c)) for w, c in obj["terms"]))
    raise ValueError(f"unknown expression node tag {tag!r}")


def as_signal(y: SignalExpr | Superposition) -> SignalExpr:
    if isinstance(y, Superposition):
        return compile_superposition(y)
    if isinstance(y, SignalExpr):
        return y
    raise TypeError(f"cannot interpret {type(y).__name__} as a signal")
