"""Reference Noise System: 2M clocked random telegraph waves.

Every rail is a SplitMix64 sequence addressed by clock index, so any
``(rail, t)`` sample can be drawn without generating the ones before it.
The scalar path (plain Python ints) and the block path (numpy uint64) use
the same constants and must agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

# SplitMix64 increment; successive clock ticks step the state by this.
TICK_GAMMA = 0x9E3779B97F4A7C15
# Separates the per-stream starting states.
STREAM_GAMMA = 0xD1B54A32D192ED03
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64, which is exactly what we want.
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(MIX_1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(MIX_2)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True, order=True)
class RtwId:
    """One reference rail: ``bit_index`` is 1-based significance, ``rail`` 0 (L) or 1 (H)."""

    bit_index: int
    rail: int

    def __post_init__(self) -> None:
        if self.rail not in (0, 1):
            raise ValueError(f"rail must be 0 or 1, got {self.rail!r}")
        if self.bit_index < 1:
            raise ValueError(f"bit_index is 1-based, got {self.bit_index!r}")

    @property
    def stream(self) -> int:
        """Position of this rail in the ``rail_signs`` ordering."""
        return 2 * (self.bit_index - 1) + self.rail

    @classmethod
    def from_stream(cls, stream: int) -> "RtwId":
        return cls(stream // 2 + 1, stream % 2)

    def __str__(self) -> str:
        return f"R{self.bit_index}{self.rail}"


class Rns:
    """Seeded, randomly addressable bank of ``2 * m`` RTW sign streams.

    The physical scheme calls for a true random source; this is a
    deterministic stand-in so that runs replay exactly. Instances are
    immutable and all queries are pure.

    Args:
        m: number of noise-bits (>= 1).
        seed: 64-bit unsigned seed.
    """

    __slots__ = ("_m", "_seed", "_base")

    def __init__(self, m: int, seed: int) -> None:
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ValueError(f"m must be a positive integer, got {m!r}")
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed!r}")
        self._m = int(m)
        self._seed = int(seed)
        self._base = mix64(self._seed)

    @property
    def m(self) -> int:
        return self._m

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def n_rails(self) -> int:
        return 2 * self._m

    def __repr__(self) -> str:
        return f"Rns(m={self._m}, seed={self._seed})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Rns) and (self._m, self._seed) == (other._m, other._seed)

    def __hash__(self) -> int:
        return hash((self._m, self._seed))

    def check(self, rtw: RtwId) -> None:
        if rtw.bit_index > self._m:
            raise ValueError(f"{rtw} is out of range for m={self._m}")

    def _stream_key(self, stream: int) -> int:
        return mix64(self._base ^ (((stream + 1) * STREAM_GAMMA) & MASK64))

    def sign(self, rtw: RtwId, t: int) -> int:
        """Amplitude (+1 or -1) of rail ``rtw`` during clock period ``t``."""
        self.check(rtw)
        if not isinstance(t, (int, np.integer)):
            raise TypeError(f"clock index must be an integer, got {t!r}")
        if t < 0:
            raise ValueError(f"clock index must be non-negative, got {t}")
        z = mix64(self._stream_key(rtw.stream) + (t + 1) * TICK_GAMMA)
        return -1 if z >> 63 else 1

    def rail_signs(self, t: int) -> np.ndarray:
        """All 2M signs at tick ``t`` ordered R10, R11, R20, R21, ..."""
        return self.stream_signs(np.arange(self.n_rails), np.array([t]))[:, 0]

    def stream_keys(self, streams: np.ndarray) -> np.ndarray:
        streams = np.asarray(streams, dtype=np.uint64)
        return _mix64_array(np.uint64(self._base) ^ ((streams + np.uint64(1)) * np.uint64(STREAM_GAMMA)))

    def stream_signs(self, streams, ticks) -> np.ndarray:
        """Block of signs, shape ``(len(streams), len(ticks))``, dtype int8.

        ``streams`` are rail positions (``RtwId.stream``); ``ticks`` are
        clock indices. Equal to calling :meth:`sign` elementwise.
        """
        ticks = np.asarray(ticks)
        if ticks.size and not np.issubdtype(ticks.dtype, np.integer):
            raise TypeError(f"clock indices must be integers, got dtype {ticks.dtype}")
        streams = np.asarray(streams, dtype=np.int64)
        ticks = ticks.astype(np.int64)
        if streams.size and (streams.min() < 0 or streams.max() >= self.n_rails):
            raise ValueError(f"stream index out of range for m={self._m}")
        if ticks.size and ticks.min() < 0:
            raise ValueError("clock index must be non-negative")
        keys = self.stream_keys(streams)
        steps = (ticks.astype(np.uint64) + np.uint64(1)) * np.uint64(TICK_GAMMA)
        z = _mix64_array(keys[:, None] + steps[None, :])
        top = (z >> np.uint64(63)).astype(np.int8)
        return 1 - 2 * top

    def window(self, t0: int, n: int) -> np.ndarray:
        """All rails over ticks ``t0 .. t0+n-1``, shape ``(2M, n)``."""
        return self.stream_signs(np.arange(self.n_rails), np.arange(t0, t0 + n))


def new_rns(m: int, seed: int) -> Rns:
    return Rns(m, seed)
