"""String sets over a shared byte arena, plus the independent oracles.

A :class:`StringSet` stores zero-terminated strings in one read-only ``uint8``
arena and an ``int64`` order array of handles (arena offsets). Sorters permute
only the order array. The oracles here (``oracle_sort``, ``lcp_array_oracle``,
``metrics``, ``verify``) share no code with the sorters they check.

LCP arrays are plain ``int64`` arrays; entry 0 is undefined and stored as 0.
"""
from __future__ import annotations

from collections import Counter
from functools import cmp_to_key
from dataclasses import dataclass

import numpy as np

from ._jit import jit

__all__ = [
    "StringSet",
    "MetricsReport",
    "VerifyReport",
    "EmbeddedZeroByte",
    "NotSorted",
    "build_from_lines",
    "build_suffixes",
    "from_strings",
    "lcp",
    "lcp_array_oracle",
    "metrics",
    "distinguishing_prefix_bruteforce",
    "oracle_sort",
    "verify",
]


class EmbeddedZeroByte(ValueError):
    """Input contained the terminator byte 0x00."""

    def __init__(self, offset: int):
        super().__init__(f"embedded 0x00 byte at offset {offset}")
        self.offset = offset


class NotSorted(ValueError):
    """A descending adjacent pair was found."""

    def __init__(self, index: int):
        super().__init__(f"strings at positions {index - 1} and {index} are descending")
        self.index = index


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


@dataclass
class StringSet:
    arena: np.ndarray
    handles: np.ndarray

    def __post_init__(self):
        self.arena = _readonly(self.arena)
        self.handles = np.ascontiguousarray(self.handles, dtype=np.int64)

    @property
    def n(self) -> int:
        return int(self.handles.shape[0])

    def __len__(self) -> int:
        return self.n

    @property
    def total_chars(self) -> int:
        """N: sum of string lengths including terminators."""
        return int(_total_length(self.arena, self.handles))

    def string(self, i: int) -> bytes:
        """Body of the string at order position i."""
        start = int(self.handles[i])
        end = start + int(_body_length(self.arena, start))
        return self.arena[start:end].tobytes()

    def strings(self) -> list[bytes]:
        raw = self.arena.tobytes()
        find = raw.index
        return [raw[h:find(b"\0", h)] for h in self.handles.tolist()]

    def with_order(self, handles: np.ndarray) -> "StringSet":
        """Same arena, different order array (no copy of the arena)."""
        return StringSet(self.arena, handles)

    def copy(self) -> "StringSet":
        return StringSet(self.arena, self.handles.copy())


@dataclass
class MetricsReport:
    n: int
    N: int
    D: int
    L: int
    maxlcp: int
    avg_len: float


@dataclass
class VerifyReport:
    ok: bool
    kind: str = ""
    index: int = -1
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


@jit
def _body_length(arena, start):
    i = 0
    while arena[start + i] != 0:
        i += 1
    return i


@jit
def _total_length(arena, handles):
    total = 0
    for k in range(handles.shape[0]):
        s = handles[k]
        i = 0
        while arena[s + i] != 0:
            i += 1
        total += i + 1
    return total


@jit
def _pair_lcp(arena, a, b):
    i = 0
    while arena[a + i] == arena[b + i] and arena[a + i] != 0:
        i += 1
    return i


@jit
def _adjacent_scan(arena, handles, out):
    """Fill adjacent LCPs; return index of the first descending pair or -1."""
    for i in range(1, handles.shape[0]):
        a = handles[i - 1]
        b = handles[i]
        k = 0
        while arena[a + k] == arena[b + k] and arena[a + k] != 0:
            k += 1
        if arena[a + k] > arena[b + k]:
            return i
        out[i] = k
    return -1


def _split_lines(buf: np.ndarray) -> np.ndarray:
    """Turn LF / CR+LF delimited records into a zero-terminated arena."""
    if buf.size == 0:
        return np.zeros(0, dtype=np.uint8)
    nl = buf == 10
    keep = np.ones(buf.size, dtype=bool)
    keep[:-1] &= ~((buf[:-1] == 13) & nl[1:])
    arena = buf[keep].copy()
    arena[arena == 10] = 0
    if arena[-1] != 0:
        arena = np.append(arena, np.uint8(0))
    return arena


def _starts_of(arena: np.ndarray) -> np.ndarray:
    if arena.size == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.flatnonzero(arena == 0)
    starts = np.empty(ends.size, dtype=np.int64)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    return starts


def _check_no_zero(buf: np.ndarray) -> None:
    zeros = np.flatnonzero(buf == 0)
    if zeros.size:
        raise EmbeddedZeroByte(int(zeros[0]))


def build_from_lines(data: bytes) -> StringSet:
    """One string per LF-delimited record (a trailing CR is stripped)."""
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    _check_no_zero(buf)
    arena = _split_lines(buf)
    return StringSet(arena, _starts_of(arena))


def build_suffixes(text: bytes) -> StringSet:
    """All suffixes of ``text`` as overlapping strings over ``text + b"\\0"``."""
    buf = np.frombuffer(bytes(text), dtype=np.uint8)
    _check_no_zero(buf)
    arena = np.zeros(buf.size + 1, dtype=np.uint8)
    arena[:-1] = buf
    return StringSet(arena, np.arange(buf.size, dtype=np.int64))


def from_strings(items: list[bytes]) -> StringSet:
    """Convenience constructor for tests: zero-join the given bodies."""
    for k, s in enumerate(items):
        if b"\0" in s:
            raise EmbeddedZeroByte(sum(len(t) + 1 for t in items[:k]) + s.index(b"\0"))
    arena = np.frombuffer(b"".join(s + b"\0" for s in items), dtype=np.uint8)
    return StringSet(arena, _starts_of(arena))


def lcp(S: StringSet, a: int, b: int) -> int:
    """LCP of the strings at handles ``a`` and ``b`` (body length if equal)."""
    return int(_pair_lcp(S.arena, int(a), int(b)))


_MATERIALIZE_LIMIT = 1 << 26


def oracle_sort(S: StringSet) -> np.ndarray:
    """Naive comparison sort on string values; stable on equal strings."""
    if S.n == 0:
        return S.handles[:0].copy()
    if S.total_chars <= _MATERIALIZE_LIMIT:
        keys = S.strings()
        idx = sorted(range(S.n), key=keys.__getitem__)
    else:
        # heavily overlapping sets (long suffixes): compare in place
        arena, hs = S.arena, S.handles

        def cmp(i: int, j: int) -> int:
            a, b = int(hs[i]), int(hs[j])
            k = _pair_lcp(arena, a, b)
            return int(arena[a + k]) - int(arena[b + k])

        idx = sorted(range(S.n), key=cmp_to_key(cmp))
    return S.handles[np.asarray(idx, dtype=np.int64)]


def lcp_array_oracle(S: StringSet) -> np.ndarray:
    """Adjacent LCPs of an already sorted set; raises NotSorted otherwise."""
    out = np.zeros(S.n, dtype=np.int64)
    bad = _adjacent_scan(S.arena, S.handles, out)
    if bad >= 0:
        raise NotSorted(int(bad))
    return out


def metrics(S: StringSet, H: np.ndarray) -> MetricsReport:
    """D, L and friends for a sorted set with LCP array H."""
    n = S.n
    N = S.total_chars
    if n == 0:
        return MetricsReport(0, 0, 0, 0, 0, 0.0)
    h = np.asarray(H, dtype=np.int64).copy()
    h[0] = 0
    padded = np.concatenate([h, [0]])
    D = int(np.sum(np.maximum(padded[:-1], padded[1:]) + 1))
    L = int(h[1:].sum())
    return MetricsReport(n, N, D, L, int(h.max()), N / n)


def distinguishing_prefix_bruteforce(strings: list[bytes]) -> int:
    """Count characters inspected when comparing each sorted string to its neighbours.

    For string i this is one more than its longest match with either neighbour,
    found by walking characters; a string without neighbours costs one
    character.
    """
    def inspected(s: bytes, t: bytes) -> int:
        k = 0
        while k < len(s) and k < len(t) and s[k] == t[k]:
            k += 1
        return k + 1

    total = 0
    for i, s in enumerate(strings):
        best = 1
        if i > 0:
            best = max(best, inspected(s, strings[i - 1]))
        if i + 1 < len(strings):
            best = max(best, inspected(s, strings[i + 1]))
        total += best
    return total


def verify(result: StringSet, original: np.ndarray, H: np.ndarray | None = None) -> VerifyReport:
    """Check permutation, non-descending order, and (optionally) the LCP array."""
    got = np.asarray(result.handles, dtype=np.int64)
    want = np.asarray(original, dtype=np.int64)
    if got.shape != want.shape or not np.array_equal(np.sort(got), np.sort(want)):
        return _permutation_failure(got, want)
    scratch = np.zeros(got.size, dtype=np.int64)
    bad = _adjacent_scan(result.arena, got, scratch)
    if bad >= 0:
        return VerifyReport(False, "order", int(bad), f"descending pair at {bad}")
    if H is not None:
        h = np.asarray(H, dtype=np.int64)
        if h.shape != got.shape:
            return VerifyReport(False, "lcp", -1, f"LCP array length {h.size} != {got.size}")
        diff = np.flatnonzero(h[1:] != scratch[1:])
        if diff.size:
            i = int(diff[0]) + 1
            return VerifyReport(False, "lcp", i, f"lcp[{i}]={h[i]} expected {scratch[i]}")
    return VerifyReport(True)


def _permutation_failure(got: np.ndarray, want: np.ndarray) -> VerifyReport:
    budget = Counter(want.tolist())
    for i, x in enumerate(got.tolist()):
        if budget[x] <= 0:
            return VerifyReport(False, "permutation", i, f"handle {x} at {i} not in original multiset")
        budget[x] -= 1
    return VerifyReport(False, "permutation", got.size, "result is missing handles")
