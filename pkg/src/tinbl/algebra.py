"""Exact symbolic layer: bit values, product strings and superpositions.

Each bit value is a 2-bit code (V=0, L=1, H=2, X=3). Bit-wise multiplication
of reference noises (R*R = 1) then becomes XOR of codes, and a whole product
string packs into one integer whose XOR is the string product. Position 1
occupies the most significant code, so integer order is the canonical
lexicographic order with V < L < H < X.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping

DEFAULT_EXPANSION_CAP = 1 << 20


class ExpansionCapError(ValueError):
    """A symbolic expansion would produce more terms than allowed."""


class BitValue(enum.IntEnum):
    V = 0  # vacuum: constant amplitude 1, bit absent
    L = 1  # R_i0
    H = 2  # R_i1
    X = 3  # R_i0 * R_i1, uncertain

    def __mul__(self, other):
        if isinstance(other, BitValue):
            return BitValue(self.value ^ other.value)
        return NotImplemented

    __rmul__ = __mul__

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, ch: str) -> "BitValue":
        try:
            return cls[ch.upper()]
        except KeyError:
            raise ValueError(f"unknown bit value {ch!r}; expected one of L, H, X, V") from None


def bv_mul(a: BitValue, b: BitValue) -> BitValue:
    return BitValue(int(a) ^ int(b))


class ProductString:
    """A length-``m`` string of bit values, stored packed as an int.

    >>> str(ProductString.from_number(6, 3))
    'LHH'
    """

    __slots__ = ("m", "code")

    def __init__(self, m: int, code: int) -> None:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        if not 0 <= code < 1 << (2 * m):
            raise ValueError(f"code {code} does not fit {m} positions")
        self.m = m
        self.code = code

    @classmethod
    def from_values(cls, values: Iterable[BitValue | str]) -> "ProductString":
        code = 0
        m = 0
        for v in values:
            if isinstance(v, str):
                v = BitValue.parse(v)
            code = (code << 2) | int(BitValue(v))
            m += 1
        return cls(m, code)

    @classmethod
    def parse(cls, text: str, m: int | None = None) -> "ProductString":
        s = cls.from_values(text.strip())
        if m is not None and s.m != m:
            raise ValueError(f"string {text!r} has length {s.m}, expected {m}")
        return s

    @classmethod
    def vacuum(cls, m: int) -> "ProductString":
        return cls(m, 0)

    @classmethod
    def single(cls, m: int, i: int, value: BitValue) -> "ProductString":
        """All-V string except ``value`` at position ``i``."""
        return cls(m, int(value) << _shift(m, i))

    @classmethod
    def from_number(cls, n: int, m: int) -> "ProductString":
        return string_from_number(n, m)

    def __getitem__(self, i: int) -> BitValue:
        """Value at 1-based position ``i``."""
        return BitValue((self.code >> _shift(self.m, i)) & 3)

    @property
    def values(self) -> tuple[BitValue, ...]:
        return tuple(self[i] for i in range(1, self.m + 1))

    def replace(self, i: int, value: BitValue) -> "ProductString":
        sh = _shift(self.m, i)
        return ProductString(self.m, (self.code & ~(3 << sh)) | (int(value) << sh))

    def __mul__(self, other: "ProductString") -> "ProductString":
        return string_mul(self, other)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ProductString) and self.m == other.m and self.code == other.code

    def __lt__(self, other: "ProductString") -> bool:
        return (self.m, self.code) < (other.m, other.code)

    def __hash__(self) -> int:
        return hash((self.m, self.code))

    def __str__(self) -> str:
        return "".join(v.name for v in self.values)

    def __repr__(self) -> str:
        return f"ProductString({str(self)!r})"


def _shift(m: int, i: int) -> int:
    if not 1 <= i <= m:
        raise IndexError(f"bit index {i} out of range 1..{m}")
    return 2 * (m - i)


def string_mul(a: ProductString, b: ProductString) -> ProductString:
    if a.m != b.m:
        raise ValueError(f"length mismatch: {a.m} vs {b.m}")
    return ProductString(a.m, a.code ^ b.code)


def string_from_number(n: int, m: int) -> ProductString:
    """Binary encoding of ``n``: bit k (k=1 least significant) is H if set, else L."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0 <= n < 1 << m:
        raise ValueError(f"{n} is not representable with {m} bits")
    code = 0
    for k in range(1, m + 1):  # position 1 is the least significant bit
        code = (code << 2) | (BitValue.H if (n >> (k - 1)) & 1 else BitValue.L)
    return ProductString(m, code)


class Superposition:
    """Integer-weighted sum of product strings, kept canonical.

    Zero coefficients are never stored; the empty superposition is the
    additive zero. Iteration yields ``(ProductString, coefficient)`` pairs
    in canonical order.
    """

    __slots__ = ("m", "_terms")

    def __init__(self, m: int, terms: Mapping[int, int] | None = None) -> None:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = m
        limit = 1 << (2 * m)
        clean = {}
        for code, c in (terms or {}).items():
            if not 0 <= code < limit:
                raise ValueError(f"code {code} does not fit {m} positions")
            if c:
                clean[code] = int(c)
        self._terms = clean

    @classmethod
    def _raw(cls, m: int, terms: dict[int, int]) -> "Superposition":
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj.m = m
        obj._terms = terms
        return obj

    @classmethod
    def zero(cls, m: int) -> "Superposition":
        return cls._raw(m, {})

    @classmethod
    def one(cls, m: int) -> "Superposition":
        return cls._raw(m, {0: 1})

    @classmethod
    def of(cls, *strings: ProductString | str, m: int | None = None) -> "Superposition":
        """Sum of the given strings, each with coefficient 1."""
        return cls.from_pairs(((s, 1) for s in strings), m=m)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[ProductString | str, int]], m: int | None = None) -> "Superposition":
        terms: dict[int, int] = {}
        for s, c in pairs:
            if isinstance(s, str):
                s = ProductString.parse(s)
            if m is None:
                m = s.m
            elif s.m != m:
                raise ValueError(f"length mismatch: {s} in a {m}-bit state")
            terms[s.code] = terms.get(s.code, 0) + int(c)
        if m is None:
            raise ValueError("cannot infer m from an empty term list")
        return cls(m, terms)

    @classmethod
    def numbers(cls, ns: Iterable[int], m: int) -> "Superposition":
        return cls.of(*(string_from_number(n, m) for n in ns), m=m)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self) -> Iterator[tuple[ProductString, int]]:
        for code in sorted(self._terms):
            yield ProductString(self.m, code), self._terms[code]

    def codes(self) -> dict[int, int]:
        return dict(self._terms)

    def coefficient(self, w: ProductString) -> int:
        return coefficient(self, w)

    def canonical(self) -> "Superposition":
        return Superposition(self.m, self._terms)

    def weight(self) -> int:
        """Sum of absolute coefficients."""
        return sum(abs(c) for c in self._terms.values())

    def pairs(self) -> list[tuple[str, int]]:
        return [(str(s), c) for s, c in self]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Superposition) and self.m == other.m and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.m, frozenset(self._terms.items())))

    def __add__(self, other: "Superposition") -> "Superposition":
        return superpose_add(self, other)

    def __sub__(self, other: "Superposition") -> "Superposition":
        return superpose_add(self, other.scale(-1))

    def __neg__(self) -> "Superposition":
        return self.scale(-1)

    def __mul__(self, other):
        if isinstance(other, Superposition):
            return superpose_mul(self, other)
        if isinstance(other, ProductString):
            return self.times_string(other)
        if isinstance(other, int):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        return NotImplemented

    def scale(self, k: int) -> "Superposition":
        if k == 0:
            return Superposition.zero(self.m)
        return Superposition._raw(self.m, {w: c * k for w, c in self._terms.items()})

    def times_string(self, w: ProductString) -> "Superposition":
        """Multiply every term by the single string ``w``.

        String multiplication by a fixed string is a bijection, so no terms
        merge and coefficients carry over unchanged.
        """
        if w.m != self.m:
            raise ValueError(f"length mismatch: {w.m} vs {self.m}")
        return Superposition._raw(self.m, {code ^ w.code: c for code, c in self._terms.items()})

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*{s}" for s, c in self) or "0"
        return f"Superposition(m={self.m}: {body})"


def superpose_add(a: Superposition, b: Superposition) -> Superposition:
    if a.m != b.m:
        raise ValueError(f"length mismatch: {a.m} vs {b.m}")
    out = dict(a._terms)
    for w, c in b._terms.items():
        s = out.get(w, 0) + c
        if s:
            out[w] = s
        else:
            out.pop(w, None)
    return Superposition._raw(a.m, out)


def superpose_mul(a: Superposition, b: Superposition, cap: int = DEFAULT_EXPANSION_CAP) -> Superposition:
    """Distribute ``a * b`` into a canonical superposition.

    Raises:
        ExpansionCapError: if the result could hold more than ``cap`` terms
            (bounded by ``min(len(a) * len(b), 4**m)``).
    """
    if a.m != b.m:
        raise ValueError(f"length mismatch: {a.m} vs {b.m}")
    bound = min(len(a) * len(b), 1 << (2 * a.m))
    if bound > cap:
        raise ExpansionCapError(f"product may have {bound} terms, cap is {cap}")
    out: dict[int, int] = {}
    for u, cu in a._terms.items():
        for v, cv in b._terms.items():
            w = u ^ v
            out[w] = out.get(w, 0) + cu * cv
    return Superposition._raw(a.m, {w: c for w, c in out.items() if c})


def coefficient(y: Superposition, w: ProductString) -> int:
    if w.m != y.m:
        raise ValueError(f"length mismatch: {w.m} vs {y.m}")
    return y._terms.get(w.code, 0)


def bit_sum(m: int, i: int, values: Iterable[BitValue]) -> Superposition:
    """Sum of single-position strings, e.g. ``L_i + H_i`` for one Universe factor."""
    return Superposition.of(*(ProductString.single(m, i, v) for v in values), m=m)
