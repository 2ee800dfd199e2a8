"""Sequential string sorters: insertion sort, multikey quicksort, radix sorts.

All sorters work in place on a slice ``[begin, end)`` of a string set's order
array whose strings share a known prefix of ``depth`` characters. Recursion is
driven by explicit frame stacks, never the call stack.

Counters are always collected (they are a handful of integer adds inside the
compiled loops) into a :class:`SortStats`:

* ``char_cmp`` counts ternary comparisons (character or key-word),
* ``string_access`` counts fetches from string memory (one per character
  read, or one per 8-character key load for the caching sorters),
* ``bytes_aux`` is the peak auxiliary memory of the last sort.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from ._kernels import ACC, AUX, CMP, T_I, key_body_len, key_has_term, key_lcp, load_key, new_stats
from .strset import StringSet

__all__ = [
    "SortStats",
    "RADIX_VARIANTS",
    "insertion_sort",
    "multikey_quicksort",
    "caching_mkqs",
    "radix_sort",
]

RADIX_VARIANTS = ("CE0", "CE1", "CE2", "CI2", "CI3_16")
_CE0, _CE1, _CE2, _CI2, _CI3 = range(5)
_RADIX16_MIN = 1 << 16
FRAME_BYTES = 32


@dataclass
class SortStats:
    char_cmp: int = 0
    string_access: int = 0
    bytes_aux: int = 0

    def reset(self) -> None:
        self.char_cmp = self.string_access = self.bytes_aux = 0

    def absorb(self, raw: np.ndarray) -> None:
        """Add a kernel stats vector (bytes_aux is a peak, so take the max)."""
        self.char_cmp += int(raw[CMP])
        self.string_access += int(raw[ACC])
        self.bytes_aux = max(self.bytes_aux, int(raw[AUX]))

    def merge(self, other: "SortStats") -> None:
        self.char_cmp += other.char_cmp
        self.string_access += other.string_access
        self.bytes_aux = max(self.bytes_aux, other.bytes_aux)


def _bounds(S: StringSet, begin: int, end: int | None) -> tuple[int, int]:
    end = S.n if end is None else end
    if not 0 <= begin <= end <= S.n:
        raise IndexError(f"region [{begin}, {end}) outside order array of length {S.n}")
    return begin, end


# ---------------------------------------------------------------- insertion


@jit
def insertion_kernel(arena, arr, lo, hi, h, stats):
    cmp = 0
    for i in range(lo + 1, hi):
        x = arr[i]
        j = i
        while j > lo:
            j -= 1
            sj = arr[j]
            p = h
            a = arena[sj + p]
            b = arena[x + p]
            cmp += 1
            while a == b and a != 0:
                p += 1
                a = arena[sj + p]
                b = arena[x + p]
                cmp += 1
            if a <= b:
                j += 1
                break
            arr[j + 1] = sj
        arr[j] = x
    stats[CMP] += cmp
    stats[ACC] += 2 * cmp


def insertion_sort(S: StringSet, begin: int = 0, end: int | None = None, depth: int = 0,
                   stats: SortStats | None = None) -> None:
    """Stable string insertion sort comparing characters from ``depth``."""
    lo, hi = _bounds(S, begin, end)
    raw = new_stats()
    insertion_kernel(S.arena, S.handles, lo, hi, depth, raw)
    if stats is not None:
        stats.absorb(raw)


# ---------------------------------------------------------------- multikey quicksort


@jit
def _med3_char(arena, arr, lo, hi, h):
    mid = lo + (hi - lo) // 2
    a = arena[arr[lo] + h]
    b = arena[arr[mid] + h]
    c = arena[arr[hi - 1] + h]
    if a == b or b == c:
        return mid
    if a < b:
        if b < c:
            return mid
        return hi - 1 if a < c else lo
    if b > c:
        return mid
    return lo if a < c else hi - 1


@jit
def _swap(arr, i, j):
    t = arr[i]
    arr[i] = arr[j]
    arr[j] = t


@jit
def _vecswap(arr, i, j, n):
    for k in range(n):
        _swap(arr, i + k, j + k)


@jit
def mkqs_kernel(arena, arr, lo0, hi0, h0, stats):
    if hi0 - lo0 < 2:
        return
    st = np.empty(((hi0 - lo0) // 2 + 2, 3), dtype=np.int64)
    st[0, 0] = lo0
    st[0, 1] = hi0
    st[0, 2] = h0
    sp = 1
    peak = 1
    cmp = 0
    while sp > 0:
        sp -= 1
        lo = st[sp, 0]
        hi = st[sp, 1]
        h = st[sp, 2]
        if hi - lo < T_I:
            insertion_kernel(arena, arr, lo, hi, h, stats)
            continue
        _swap(arr, lo, _med3_char(arena, arr, lo, hi, h))
        cmp += 3
        x = np.int64(arena[arr[lo] + h])
        a = lo + 1
        b = lo + 1
        c = hi - 1
        d = hi - 1
        while True:
            while b <= c:
                r = np.int64(arena[arr[b] + h]) - x
                cmp += 1
                if r > 0:
                    break
                if r == 0:
                    _swap(arr, a, b)
                    a += 1
                b += 1
            while b <= c:
                r = np.int64(arena[arr[c] + h]) - x
                cmp += 1
                if r < 0:
                    break
                if r == 0:
                    _swap(arr, c, d)
                    d -= 1
                c -= 1
            if b > c:
                break
            _swap(arr, b, c)
            b += 1
            c -= 1
        p = min(a - lo, b - a)
        _vecswap(arr, lo, b - p, p)
        q = min(d - c, hi - 1 - d)
        _vecswap(arr, b, hi - q, q)
        nl = b - a
        ng = d - c
        if nl > 1:
            st[sp, 0] = lo
            st[sp, 1] = lo + nl
            st[sp, 2] = h
            sp += 1
        if ng > 1:
            st[sp, 0] = hi - ng
            st[sp, 1] = hi
            st[sp, 2] = h
            sp += 1
        if x != 0 and hi - ng - (lo + nl) > 1:
            st[sp, 0] = lo + nl
            st[sp, 1] = hi - ng
            st[sp, 2] = h + 1
            sp += 1
        peak = max(peak, sp)
    stats[CMP] += cmp
    stats[ACC] += cmp
    stats[AUX] = max(stats[AUX], peak * 24)


def multikey_quicksort(S: StringSet, begin: int = 0, end: int | None = None, depth: int = 0,
                       stats: SortStats | None = None) -> None:
    """Ternary-split quicksort on the character at the current depth."""
    lo, hi = _bounds(S, begin, end)
    raw = new_stats()
    mkqs_kernel(S.arena, S.handles, lo, hi, depth, raw)
    if stats is not None:
        stats.absorb(raw)


# ---------------------------------------------------------------- caching multikey quicksort


@jit
def _swap2(arr, cache, i, j):
    t = arr[i]
    arr[i] = arr[j]
    arr[j] = t
    k = cache[i]
    cache[i] = cache[j]
    cache[j] = k


@jit
def _med3_key(cache, lo, hi):
    mid = lo + (hi - lo) // 2
    a = cache[lo]
    b = cache[mid]
    c = cache[hi - 1]
    if a == b or b == c:
        return mid
    if a < b:
        if b < c:
            return mid
        return hi - 1 if a < c else lo
    if b > c:
        return mid
    return lo if a < c else hi - 1


@jit
def cmkqs_kernel(arena, arr, cache, H, lo0, hi0, h0, fetch0, emit, stats):
    """Caching multikey quicksort on [lo0, hi0) at depth h0.

    ``cache`` is aligned with ``arr`` and holds 8-character key words. Keys are
    loaded from the strings only for the whole region when ``fetch0`` is set
    and afterwards only for equality partitions, at depth + 8. With ``emit``
    the LCP entries H[lo0+1:hi0] are written (absolute depths).
    """
    if hi0 - lo0 < 1:
        return
    st = np.empty(((hi0 - lo0) // 2 + 2, 4), dtype=np.int64)
    st[0, 0] = lo0
    st[0, 1] = hi0
    st[0, 2] = h0
    st[0, 3] = fetch0
    sp = 1
    peak = 1
    cmp = 0
    acc = 0
    while sp > 0:
        sp -= 1
        lo = st[sp, 0]
        hi = st[sp, 1]
        h = st[sp, 2]
        if st[sp, 3] != 0:
            for i in range(lo, hi):
                cache[i] = load_key(arena, arr[i] + h)
            acc += hi - lo
        if hi - lo < T_I:
            # insertion sort on the cached words, then settle runs of equal words
            for i in range(lo + 1, hi):
                k = cache[i]
                s = arr[i]
                j = i
                while j > lo:
                    cmp += 1
                    if cache[j - 1] <= k:
                        break
                    cache[j] = cache[j - 1]
                    arr[j] = arr[j - 1]
                    j -= 1
                cache[j] = k
                arr[j] = s
            i = lo
            while i < hi:
                j = i + 1
                while j < hi and cache[j] == cache[i]:
                    j += 1
                if emit and i > lo:
                    H[i] = h + key_lcp(cache[i - 1], cache[i])
                if j - i > 1:
                    if key_has_term(cache[i]):
                        if emit:
                            body = h + key_body_len(cache[i])
                            for t in range(i + 1, j):
                                H[t] = body
                    else:
                        st[sp, 0] = i
                        st[sp, 1] = j
                        st[sp, 2] = h + 8
                        st[sp, 3] = 1
                        sp += 1
                i = j
            peak = max(peak, sp)
            continue
        _swap2(arr, cache, lo, _med3_key(cache, lo, hi))
        cmp += 3
        pv = cache[lo]
        a = lo + 1
        b = lo + 1
        c = hi - 1
        d = hi - 1
        while True:
            while b <= c:
                kb = cache[b]
                cmp += 1
                if kb > pv:
                    break
                if kb == pv:
                    _swap2(arr, cache, a, b)
                    a += 1
                b += 1
            while b <= c:
                kc = cache[c]
                cmp += 1
                if kc < pv:
                    break
                if kc == pv:
                    _swap2(arr, cache, c, d)
                    d -= 1
                c -= 1
            if b > c:
                break
            _swap2(arr, cache, b, c)
            b += 1
            c -= 1
        p = min(a - lo, b - a)
        for t in range(p):
            _swap2(arr, cache, lo + t, b - p + t)
        q = min(d - c, hi - 1 - d)
        for t in range(q):
            _swap2(arr, cache, b + t, hi - q + t)
        nl = b - a
        ng = d - c
        elo = lo + nl
        ehi = hi - ng
        if emit:
            if nl > 0:
                m = cache[lo]
                for t in range(lo + 1, elo):
                    if cache[t] > m:
                        m = cache[t]
                H[elo] = h + key_lcp(m, pv)
            if ng > 0:
                m = cache[ehi]
                for t in range(ehi + 1, hi):
                    if cache[t] < m:
                        m = cache[t]
                H[ehi] = h + key_lcp(pv, m)
        if nl > 1:
            st[sp, 0] = lo
            st[sp, 1] = elo
            st[sp, 2] = h
            st[sp, 3] = 0
            sp += 1
        if ng > 1:
            st[sp, 0] = ehi
            st[sp, 1] = hi
            st[sp, 2] = h
            st[sp, 3] = 0
            sp += 1
        if key_has_term(pv):
            if emit:
                body = h + key_body_len(pv)
                for t in range(elo + 1, ehi):
                    H[t] = body
        elif ehi - elo > 1:
            st[sp, 0] = elo
            st[sp, 1] = ehi
            st[sp, 2] = h + 8
            st[sp, 3] = 1
            sp += 1
        peak = max(peak, sp)
    stats[CMP] += cmp
    stats[ACC] += acc
    stats[AUX] = max(stats[AUX], 8 * (hi0 - lo0) + 32 * peak)


def caching_mkqs(S: StringSet, begin: int = 0, end: int | None = None, depth: int = 0,
                 stats: SortStats | None = None, lcp_out: np.ndarray | None = None) -> None:
    """Multikey quicksort over cached 8-character key words.

    If ``lcp_out`` (length n, aligned with the order array) is given, its
    entries ``begin+1 .. end-1`` receive the LCPs of adjacent sorted strings.
    """
    lo, hi = _bounds(S, begin, end)
    raw = new_stats()
    cache = np.empty(S.n, dtype=np.uint64)
    emit = lcp_out is not None
    H = lcp_out if emit else np.zeros(1, dtype=np.int64)
    cmkqs_kernel(S.arena, S.handles, cache, H, lo, hi, depth, 1, emit, raw)
    if stats is not None:
        stats.absorb(raw)


# ---------------------------------------------------------------- radix sorts


@jit
def _radix8_step(arena, arr, tmp, o8, lo, hi, h, variant, cnt, bkt, stats):
    n = hi - lo
    cnt[:] = 0
    if variant == 0:  # CE0: read characters twice, no oracle
        for i in range(lo, hi):
            cnt[arena[arr[i] + h]] += 1
        stats[ACC] += 2 * n
    elif variant == 1:  # CE1: fused cache + count
        for i in range(lo, hi):
            c = arena[arr[i] + h]
            o8[i] = c
            cnt[c] += 1
        stats[ACC] += n
    else:  # CE2 / CI2: fissioned cache pass, then count pass
        for i in range(lo, hi):
            o8[i] = arena[arr[i] + h]
        for i in range(lo, hi):
            cnt[o8[i]] += 1
        stats[ACC] += n
    if variant <= 2:
        s = 0
        for k in range(256):
            bkt[k] = s
            s += cnt[k]
        if variant == 0:
            for i in range(lo, hi):
                c = arena[arr[i] + h]
                tmp[lo + bkt[c]] = arr[i]
                bkt[c] += 1
        else:
            for i in range(lo, hi):
                c = o8[i]
                tmp[lo + bkt[c]] = arr[i]
                bkt[c] += 1
        for i in range(lo, hi):
            arr[i] = tmp[i]
        return
    # CI2: inclusive prefix sums and permutation-cycle walking
    s = 0
    for k in range(256):
        s += cnt[k]
        bkt[k] = s
    last = 255
    while cnt[last] == 0:
        last -= 1
    ell = cnt[last]
    i = 0
    while i < n - ell:
        sv = arr[lo + i]
        ov = o8[lo + i]
        while True:
            bkt[ov] -= 1
            j = bkt[ov]
            if j <= i:
                break
            t = arr[lo + j]
            arr[lo + j] = sv
            sv = t
            tc = o8[lo + j]
            o8[lo + j] = ov
            ov = tc
        arr[lo + i] = sv
        i += cnt[ov]


@jit
def _radix16_step(arena, arr, o16, lo, hi, h, cnt, bkt, stats):
    n = hi - lo
    cnt[:] = 0
    for i in range(lo, hi):
        s = arr[i]
        c0 = np.int64(arena[s + h])
        key = c0 << 8
        if c0 != 0:
            key |= np.int64(arena[s + h + 1])
        o16[i] = key
    for i in range(lo, hi):
        cnt[o16[i]] += 1
    stats[ACC] += 2 * n
    s = 0
    for k in range(65536):
        s += cnt[k]
        bkt[k] = s
    last = 65535
    while cnt[last] == 0:
        last -= 1
    ell = cnt[last]
    i = 0
    while i < n - ell:
        sv = arr[lo + i]
        ov = np.int64(o16[lo + i])
        while True:
            bkt[ov] -= 1
            j = bkt[ov]
            if j <= i:
                break
            t = arr[lo + j]
            arr[lo + j] = sv
            sv = t
            tc = np.int64(o16[lo + j])
            o16[lo + j] = ov
            ov = tc
        arr[lo + i] = sv
        i += cnt[ov]


@jit
def radix_frames_kernel(arena, arr, tmp, o8, o16, frames, sp, variant, stats, idle):
    """Run radix-sort frames (lo, hi, depth, level) until done.

    Returns the remaining stack height: nonzero only when ``idle[0] > 0`` was
    observed with at least two frames pending, so the caller can hand work to
    idle workers and resume.
    """
    cnt = np.zeros(256, dtype=np.int64)
    bkt = np.zeros(256, dtype=np.int64)
    big = 65536 if variant == 4 else 1
    cnt16 = np.zeros(big, dtype=np.int64)
    bkt16 = np.zeros(big, dtype=np.int64)
    peak = sp
    done = 0
    while sp > 0:
        if idle[0] > 0 and sp > 1 and done > 0:
            break
        done += 1
        sp -= 1
        lo = frames[sp, 0]
        hi = frames[sp, 1]
        h = frames[sp, 2]
        lvl = frames[sp, 3]
        if hi - lo < T_I:
            insertion_kernel(arena, arr, lo, hi, h, stats)
            continue
        if variant == 4 and hi - lo >= 65536:
            _radix16_step(arena, arr, o16, lo, hi, h, cnt16, bkt16, stats)
            pos = lo + cnt16[0]
            for k in range(256, 65536):
                m = cnt16[k]
                if m > 1 and (k & 255) != 0:
                    frames[sp, 0] = pos
                    frames[sp, 1] = pos + m
                    frames[sp, 2] = h + 2
                    frames[sp, 3] = lvl + 1
                    sp += 1
                pos += m
        else:
            _radix8_step(arena, arr, tmp, o8, lo, hi, h, min(variant, 3), cnt, bkt, stats)
            pos = lo + cnt[0]
            for k in range(1, 256):
                m = cnt[k]
                if m > 1:
                    frames[sp, 0] = pos
                    frames[sp, 1] = pos + m
                    frames[sp, 2] = h + 1
                    frames[sp, 3] = lvl + 1
                    sp += 1
                pos += m
        peak = max(peak, sp)
    aux = 2 * 256 * 8 + FRAME_BYTES * peak
    if variant == 4:
        aux += 2 * 65536 * 8
    stats[AUX] = max(stats[AUX], aux)
    return sp


def radix_aux_arrays(n: int, variant: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shadow, 1-byte and 2-byte oracle arrays sized for ``n`` (dummies if unused)."""
    tmp = np.empty(n if variant <= _CE2 else 1, dtype=np.int64)
    o8 = np.empty(n if variant != _CE0 else 1, dtype=np.uint8)
    o16 = np.empty(n if variant == _CI3 else 1, dtype=np.uint16)
    return tmp, o8, o16


def new_frames(n: int, width: int = 4) -> np.ndarray:
    # pending frames are disjoint regions of >= 2 strings
    return np.empty((n // 2 + 2, width), dtype=np.int64)


def radix_sort(S: StringSet, variant: str = "CI2", begin: int = 0, end: int | None = None,
               depth: int = 0, stats: SortStats | None = None) -> None:
    """MSD radix sort; ``variant`` is one of CE0, CE1, CE2, CI2, CI3_16."""
    try:
        v = RADIX_VARIANTS.index(variant)
    except ValueError:
        raise ValueError(f"unknown radix variant {variant!r}") from None
    lo, hi = _bounds(S, begin, end)
    raw = new_stats()
    if hi - lo > 1:
        tmp, o8, o16 = radix_aux_arrays(S.n, v)
        frames = new_frames(hi - lo)
        frames[0] = (lo, hi, depth, 0)
        radix_frames_kernel(S.arena, S.handles, tmp, o8, o16, frames, 1, v, raw, np.zeros(1, np.int64))
        m = hi - lo
        raw[AUX] += (8 * m if v <= _CE2 else 0) + (m if v != _CE0 else 0) + (2 * m if v == _CI3 else 0)
    if stats is not None:
        stats.absorb(raw)
