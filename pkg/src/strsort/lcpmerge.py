"""LCP-aware merging: pairwise compare, binary and K-way merge, mergesorts,
and LCP insertion sort.

Every routine produces the LCP array of its output alongside the order. LCP
values are absolute depths. Character comparisons are counted as ternary tests:
each test of a character-scanning loop counts once, and the exit test together
with the final ordering decision counts once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from ._kernels import ACC, AUX, BAD, CMP, new_stats, str_lcp
from .seqsort import SortStats
from .strset import StringSet

__all__ = [
    "MergeStream",
    "MergeResult",
    "lcp_compare",
    "binary_lcp_merge",
    "binary_lcp_mergesort",
    "kway_lcp_merge",
    "kway_lcp_mergesort",
    "lcp_insertion_sort",
    "pad_pow2",
]


@dataclass
class MergeStream:
    """A sorted run: handles, adjacent LCPs (entry 0 unused) and optional cached chars."""

    handles: np.ndarray
    lcp: np.ndarray
    cached: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.handles.shape[0])


@dataclass
class MergeResult:
    handles: np.ndarray
    lcp: np.ndarray
    cached: np.ndarray | None = None


def pad_pow2(k: int) -> int:
    p = 1
    while p < k:
        p *= 2
    return p


# ---------------------------------------------------------------- pairwise compare


@jit
def _compare_kernel(arena, sa, ha, sb, hb, stats):
    """Return (a_wins, h') for strings sharing a common lower bound p."""
    if ha == hb:
        hp = ha
        ca = arena[sa + hp]
        cb = arena[sb + hp]
        cmp = 1
        while ca == cb and ca != 0:
            hp += 1
            ca = arena[sa + hp]
            cb = arena[sb + hp]
            cmp += 1
        stats[CMP] += cmp
        stats[ACC] += 2 * cmp
        return ca <= cb, hp
    if ha < hb:
        return False, ha
    return True, hb


def lcp_compare(arena: np.ndarray, a: tuple[int, int, int], b: tuple[int, int, int],
                stats: SortStats | None = None) -> tuple[int, int, int, int]:
    """Compare ``a = (idx, handle, h_a)`` with ``b`` where h_* = LCP(p, s_*).

    Returns ``(x, h_x, y, h')``: the smaller entry's index and LCP, the larger
    entry's index, and LCP(s_a, s_b).
    """
    raw = new_stats()
    a_wins, hp = _compare_kernel(arena, int(a[1]), int(a[2]), int(b[1]), int(b[2]), raw)
    if stats is not None:
        stats.absorb(raw)
    if a_wins:
        return a[0], int(a[2]), b[0], int(hp)
    return b[0], int(b[2]), a[0], int(hp)


# ---------------------------------------------------------------- binary merge


@jit
def binary_merge_kernel(arena, s1, H1, lo1, hi1, s2, H2, lo2, hi2, out, hout, o, hbar, stats):
    i = lo1
    j = lo2
    k = o
    h1 = hbar
    h2 = hbar
    cmp = 0
    while i < hi1 and j < hi2:
        a = s1[i]
        b = s2[j]
        if h1 == h2:
            hp = h1
            ca = arena[a + hp]
            cb = arena[b + hp]
            cmp += 1
            while ca == cb and ca != 0:
                hp += 1
                ca = arena[a + hp]
                cb = arena[b + hp]
                cmp += 1
            if ca <= cb:
                out[k] = a
                hout[k] = h1
                i += 1
                if i < hi1:
                    h1 = H1[i]
                h2 = hp
            else:
                out[k] = b
                hout[k] = h2
                j += 1
                if j < hi2:
                    h2 = H2[j]
                h1 = hp
        elif h1 > h2:
            out[k] = a
            hout[k] = h1
            i += 1
            if i < hi1:
                h1 = H1[i]
        else:
            out[k] = b
            hout[k] = h2
            j += 1
            if j < hi2:
                h2 = H2[j]
        k += 1
    while i < hi1:
        out[k] = s1[i]
        hout[k] = h1
        i += 1
        if i < hi1:
            h1 = H1[i]
        k += 1
    while j < hi2:
        out[k] = s2[j]
        hout[k] = h2
        j += 1
        if j < hi2:
            h2 = H2[j]
        k += 1
    stats[CMP] += cmp
    stats[ACC] += 2 * cmp


@jit
def binary_mergesort_kernel(arena, arr, H, lo, hi, hbar, stats):
    """Bottom-up LCP mergesort of arr[lo:hi]; fills H[lo+1:hi]."""
    n = hi - lo
    if n < 2:
        return
    a = arr[lo:hi].copy()
    ha = np.zeros(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)
    hb = np.zeros(n, dtype=np.int64)
    width = 1
    while width < n:
        for start in range(0, n, 2 * width):
            mid = min(start + width, n)
            end = min(start + 2 * width, n)
            binary_merge_kernel(arena, a, ha, start, mid, a, ha, mid, end, b, hb, start, hbar, stats)
        a, b = b, a
        ha, hb = hb, ha
        width *= 2
    for i in range(n):
        arr[lo + i] = a[i]
    for i in range(1, n):
        H[lo + i] = ha[i]
    stats[AUX] = max(stats[AUX], 32 * n)


def binary_lcp_merge(arena: np.ndarray, A: MergeStream, B: MergeStream,
                     stats: SortStats | None = None) -> MergeResult:
    """Merge two sorted runs with their LCP arrays."""
    n = len(A) + len(B)
    out = np.empty(n, dtype=np.int64)
    hout = np.zeros(n, dtype=np.int64)
    raw = new_stats()
    binary_merge_kernel(arena, np.ascontiguousarray(A.handles, np.int64), np.ascontiguousarray(A.lcp, np.int64),
                        0, len(A), np.ascontiguousarray(B.handles, np.int64),
                        np.ascontiguousarray(B.lcp, np.int64), 0, len(B), out, hout, 0, 0, raw)
    if n:
        hout[0] = 0
    if stats is not None:
        stats.absorb(raw)
    return MergeResult(out, hout)


def binary_lcp_mergesort(S: StringSet, stats: SortStats | None = None) -> MergeResult:
    """Sort with binary LCP mergesort; S itself is not modified."""
    arr = S.handles.copy()
    H = np.zeros(S.n, dtype=np.int64)
    raw = new_stats()
    binary_mergesort_kernel(S.arena, arr, H, 0, S.n, 0, raw)
    if stats is not None:
        stats.absorb(raw)
    return MergeResult(arr, H)


# ---------------------------------------------------------------- K-way merge


@jit
def _play(arena, hs, cur, end, x, hx, cx, y, hy, cy, use_cache, stats):
    """One tournament game. Returns (winner, h, c, loser, h', c')."""
    if cur[y - 1] >= end[y - 1]:
        return x, hx, cx, y, hy, cy
    if cur[x - 1] >= end[x - 1]:
        return y, hy, cy, x, hx, cx
    if hx > hy:
        return x, hx, cx, y, hy, cy
    if hx < hy:
        return y, hy, cy, x, hx, cx
    sx = hs[cur[x - 1]]
    sy = hs[cur[y - 1]]
    hp = hx
    cmp = 1
    if use_cache and (cx != cy or cx == 0):
        a = cx
        b = cy
    else:
        if use_cache:
            hp += 1
        a = arena[sx + hp]
        b = arena[sy + hp]
        stats[ACC] += 2
        if use_cache:
            cmp += 1
        while a == b and a != 0:
            hp += 1
            a = arena[sx + hp]
            b = arena[sy + hp]
            stats[ACC] += 2
            cmp += 1
    stats[CMP] += cmp
    if a < b or (a == b and x < y):
        return x, hx, cx, y, hp, b
    return y, hy, cy, x, hp, a


@jit
def kway_kernel(arena, hs, lcps, ccs, cur, end, K, hbar, use_cache, out, hout, cout, o0,
                stats, idle, check_every, debug):
    """Merge K (a power of two) runs hs[cur[k]:end[k]] into out[o0:].

    ``cur`` is advanced in place. Returns the number of strings written; this
    is short of the total only if ``idle[0] > 0`` was seen at a multiple of
    ``check_every`` outputs, in which case the remaining input is described by
    ``cur``/``end``.
    """
    total = 0
    for k in range(K):
        total += end[k] - cur[k]
    if total == 0:
        return 0
    y = np.zeros(K + 1, dtype=np.int64)
    hn = np.zeros(K + 1, dtype=np.int64)
    cn = np.zeros(K + 1, dtype=np.uint8)
    for kk in range(1, K):
        x = kk
        hx = hbar
        cx = np.uint8(0)
        if use_cache and cur[kk - 1] < end[kk - 1]:
            cx = arena[hs[cur[kk - 1]] + hbar]
            stats[ACC] += 1
        v = K + kk
        while v % 2 == 0 and v > 2:
            v //= 2
            x, hx, cx, y[v], hn[v], cn[v] = _play(arena, hs, cur, end, x, hx, cx, y[v], hn[v], cn[v],
                                                  use_cache, stats)
        v = (v + 1) // 2
        y[v] = x
        hn[v] = hx
        cn[v] = cx
    w = K
    hw = hbar
    cw = np.uint8(0)
    if use_cache and cur[K - 1] < end[K - 1]:
        cw = arena[hs[cur[K - 1]] + hbar]
        stats[ACC] += 1
    j = 0
    cmp = 0
    acc = 0
    while j < total:
        x = w
        hx = hw
        cx = cw
        v = K + w
        # the game of _play, written out: numba keeps the tree in registers this way
        while v > 2:
            v = (v + 1) // 2
            yy = y[v]
            hy = hn[v]
            if cur[yy - 1] >= end[yy - 1]:
                continue
            if cur[x - 1] < end[x - 1] and hx > hy:
                continue
            if cur[x - 1] >= end[x - 1] or hx < hy:
                y[v] = x
                hn[v] = hx
                cy = cn[v]
                cn[v] = cx
                x = yy
                hx = hy
                cx = cy
                continue
            hp = hx
            cmp += 1
            cy = cn[v]
            if use_cache and (cx != cy or cx == 0):
                a = cx
                b = cy
            else:
                sx = hs[cur[x - 1]]
                sy = hs[cur[yy - 1]]
                if use_cache:
                    hp += 1
                    cmp += 1
                a = arena[sx + hp]
                b = arena[sy + hp]
                acc += 2
                while a == b and a != 0:
                    hp += 1
                    a = arena[sx + hp]
                    b = arena[sy + hp]
                    acc += 2
                    cmp += 1
            if a < b or (a == b and x < yy):
                hn[v] = hp
                cn[v] = b
            else:
                y[v] = x
                hn[v] = hp
                cn[v] = a
                x = yy
                hx = hy
                cx = cy
        w = x
        s = hs[cur[w - 1]]
        out[o0 + j] = s
        hout[o0 + j] = hx
        if use_cache:
            cout[o0 + j] = cx
        if debug:
            v = K + w
            while v > 2:
                v = (v + 1) // 2
                yv = y[v]
                if cur[yv - 1] < end[yv - 1] and str_lcp(arena, s, hs[cur[yv - 1]], 0) != hn[v]:
                    stats[BAD] += 1
        j += 1
        cur[w - 1] += 1
        if cur[w - 1] < end[w - 1]:
            hw = lcps[cur[w - 1]]
            if use_cache:
                cw = ccs[cur[w - 1]]
        if check_every > 0 and j % check_every == 0 and idle[0] > 0 and total - j >= check_every:
            break
    stats[CMP] += cmp
    stats[ACC] += acc
    return j


def _concat_streams(streams: list[MergeStream], K: int, want_cache: bool):
    sizes = [len(s) for s in streams]
    total = sum(sizes)
    hs = np.empty(total, dtype=np.int64)
    lcps = np.zeros(total, dtype=np.int64)
    ccs = np.zeros(total if want_cache else 1, dtype=np.uint8)
    cur = np.zeros(K, dtype=np.int64)
    end = np.zeros(K, dtype=np.int64)
    pos = 0
    for k, s in enumerate(streams):
        m = sizes[k]
        hs[pos:pos + m] = s.handles
        lcps[pos:pos + m] = s.lcp
        if want_cache:
            if s.cached is None:
                raise ValueError("use_cached_char requires cached characters on every stream")
            ccs[pos:pos + m] = s.cached
        cur[k] = pos
        end[k] = pos + m
        pos += m
    cur[len(streams):] = total
    end[len(streams):] = total
    return hs, lcps, ccs, cur, end, total


def kway_lcp_merge(arena: np.ndarray, streams: list[MergeStream], hbar: int = 0,
                   use_cached_char: bool = False, stats: SortStats | None = None,
                   debug: bool = False) -> MergeResult:
    """Merge K sorted runs with an LCP-aware tournament (loser) tree.

    ``hbar`` is a prefix length shared by all input strings. With
    ``use_cached_char`` every stream must carry ``cached[i] = s_i[lcp[i]]``;
    games then consult the cache before touching string memory. In debug
    mode the stored LCPs along every winner path are rechecked and mismatches
    counted (raised as AssertionError).
    """
    K = pad_pow2(max(1, len(streams)))
    hs, lcps, ccs, cur, end, total = _concat_streams(streams, K, use_cached_char)
    out = np.empty(total, dtype=np.int64)
    hout = np.zeros(total, dtype=np.int64)
    cout = np.zeros(total if use_cached_char else 1, dtype=np.uint8)
    raw = new_stats()
    kway_kernel(arena, hs, lcps, ccs, cur, end, K, hbar, use_cached_char, out, hout, cout, 0,
                raw, np.zeros(1, np.int64), 0, debug)
    if debug and raw[BAD]:
        raise AssertionError(f"tournament path invariant violated {raw[BAD]} times")
    if total:
        hout[0] = 0
        if use_cached_char:
            cout[0] = arena[out[0]]
    if stats is not None:
        stats.absorb(raw)
    return MergeResult(out, hout, cout if use_cached_char else None)


@jit
def kway_mergesort_kernel(arena, arr, H, lo, hi, K, stats):
    n = hi - lo
    if n < 2:
        return
    a = arr[lo:hi].copy()
    ha = np.zeros(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)
    hb = np.zeros(n, dtype=np.int64)
    for start in range(0, n, K):
        binary_mergesort_kernel(arena, a, ha, start, min(start + K, n), 0, stats)
    cur = np.zeros(K, dtype=np.int64)
    end = np.zeros(K, dtype=np.int64)
    dummy = np.zeros(1, dtype=np.uint8)
    idle = np.zeros(1, dtype=np.int64)
    run = K
    while run < n:
        for gs in range(0, n, run * K):
            ge = min(gs + run * K, n)
            if ge - gs <= run:
                for i in range(gs, ge):
                    b[i] = a[i]
                    hb[i] = ha[i]
                continue
            for k in range(K):
                cur[k] = min(gs + k * run, ge)
                end[k] = min(gs + (k + 1) * run, ge)
            kway_kernel(arena, a, ha, dummy, cur, end, K, 0, False, b, hb, dummy, gs,
                        stats, idle, 0, False)
        a, b = b, a
        ha, hb = hb, ha
        run *= K
    for i in range(n):
        arr[lo + i] = a[i]
    for i in range(1, n):
        H[lo + i] = ha[i]
    stats[AUX] = max(stats[AUX], 32 * n)


def kway_lcp_mergesort(S: StringSet, K: int = 4, stats: SortStats | None = None) -> MergeResult:
    """K-way LCP mergesort; runs of at most K strings are sorted by binary LCP mergesort."""
    if K < 2 or K & (K - 1):
        raise ValueError("K must be a power of two >= 2")
    arr = S.handles.copy()
    H = np.zeros(S.n, dtype=np.int64)
    raw = new_stats()
    kway_mergesort_kernel(S.arena, arr, H, 0, S.n, K, raw)
    if stats is not None:
        stats.absorb(raw)
    return MergeResult(arr, H)


# ---------------------------------------------------------------- LCP insertion sort


@jit
def lcp_insertion_kernel(arena, arr, H, lo, hi, hbar, stats):
    """Insertion sort of arr[lo:hi] (common prefix hbar) writing H[lo+1:hi].

    Stored LCPs let most candidates be passed without touching characters:
    only when the stored LCP equals the running LCP of the inserted string are
    characters compared.
    """
    n = hi - lo
    cmp = 0
    for j in range(n):
        x = arr[lo + j]
        i = j
        hp = hbar
        if j > 0:
            H[lo + j] = hbar
        while i > 0:
            hi_ = H[lo + i]
            if hi_ < hp:
                break
            if hi_ == hp:
                p = hp
                sp = arr[lo + i - 1]
                cx = arena[x + hp]
                cs = arena[sp + hp]
                cmp += 1
                while cx == cs and cx != 0:
                    hp += 1
                    cx = arena[x + hp]
                    cs = arena[sp + hp]
                    cmp += 1
                if cx >= cs:
                    H[lo + i] = hp
                    hp = p
                    break
            arr[lo + i] = arr[lo + i - 1]
            if i + 1 < n:
                H[lo + i + 1] = H[lo + i]
            i -= 1
        arr[lo + i] = x
        if i + 1 < n:
            H[lo + i + 1] = hp
    stats[CMP] += cmp
    stats[ACC] += 2 * cmp


def lcp_insertion_sort(S: StringSet, begin: int = 0, end: int | None = None, hbar: int = 0,
                       stats: SortStats | None = None) -> np.ndarray:
    """Sort a region in place and return its LCP array (entry 0 holds hbar)."""
    end = S.n if end is None else end
    H = np.zeros(S.n, dtype=np.int64)
    raw = new_stats()
    lcp_insertion_kernel(S.arena, S.handles, H, begin, end, hbar, raw)
    if stats is not None:
        stats.absorb(raw)
    out = H[begin:end].copy()
    if out.size:
        out[0] = hbar
    return out
