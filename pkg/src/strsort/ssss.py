"""Super scalar string sample sort.

Strings are classified by their next eight characters, packed into a 64-bit
key word, against ``v = 2**d - 1`` splitter words held in an implicit binary
search tree (level order, one-based). Each step distributes a region into
``2v + 1`` buckets: even bucket ``2i`` holds keys strictly between splitters
``x[i-1]`` and ``x[i]``, odd bucket ``2i + 1`` holds keys equal to ``x[i]``.

Splitter positions come in two numberings. *Level order* is the heap layout
of the tree array; *pre order* here is the rank of the splitter in sorted
order, i.e. the index into the splitter array ``x``. A bit rotation converts
between the two (see :func:`level_to_pre`).

Three classification variants are provided:

``E``
    descend and stop early on equality with a tree node;
``UI``
    always descend all ``d`` levels, then test equality against ``x``;
``UIC``
    like ``UI`` but without ``x``: the equality splitter is re-read from the
    tree via the pre-to-level mapping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from ._kernels import (ACC, AUX, BAD, T_I, W, fill_cached_chars, key_body_len, key_has_term,
                       key_lcp, load_key, new_stats, str_lcp)
from .lcpmerge import lcp_insertion_kernel
from .seqsort import SortStats, cmkqs_kernel, insertion_kernel, new_frames
from .strset import StringSet

__all__ = [
    "VARIANTS",
    "SplitterTree",
    "BucketLayout",
    "SortResult",
    "SampleTooSmall",
    "IndexOutOfRange",
    "pack_key",
    "splitter_lcp",
    "level_to_pre",
    "pre_to_level",
    "level_of_pre",
    "pre_of_level",
    "select_splitters",
    "build_tree",
    "classify",
    "s5_step",
    "seq_s5",
]

VARIANTS = ("E", "UI", "UIC")
DEFAULT_LEVELS = 10
DEFAULT_INTERLEAVE = 4
DEFAULT_SAMPLE_THRESHOLD = 1 << 20
DEFAULT_SEED = 0x5EED5EED
OVERSAMPLING = 2
FRAME_WIDTH = 5  # lo, hi, depth, where (0: original, 1: shadow), level


class SampleTooSmall(ValueError):
    pass


class IndexOutOfRange(ValueError):
    pass


@dataclass
class SplitterTree:
    levels: int
    t: np.ndarray  # one-based level order, t[0] unused
    x: np.ndarray  # splitters in sorted (pre) order
    lcps: np.ndarray  # v + 1 entries: 0, lcp(x0, x1), ..., lcp(x[v-2], x[v-1]), 0
    term: np.ndarray  # splitter contains a terminator

    @property
    def v(self) -> int:
        return int(self.x.shape[0])


@dataclass
class BucketLayout:
    counts: np.ndarray
    offsets: np.ndarray  # exclusive prefix sums, region-relative
    advance: np.ndarray  # depth added for the bucket's recursion
    done: np.ndarray  # bucket needs no further sorting (all equal strings)


@dataclass
class SortResult:
    order: np.ndarray
    lcp: np.ndarray | None = None
    cached: np.ndarray | None = None


# ---------------------------------------------------------------- keys and index maps


def pack_key(S: StringSet, handle: int, depth: int) -> int:
    """Characters ``depth .. depth+7`` of a string as a big-endian word."""
    return int(load_key(S.arena, int(handle) + int(depth)))


def splitter_lcp(a: int, b: int) -> int:
    """Equal leading characters of two key words (8 when equal)."""
    return int(key_lcp(np.uint64(a), np.uint64(b)))


@jit
def _bit_length(v):
    k = 0
    while v > 0:
        v >>= 1
        k += 1
    return k


@jit
def level_to_pre_k(l, d):
    # l = 0..01 r (k significant bits): pre = r 1 0..0
    k = _bit_length(l)
    r = l - (1 << (k - 1))
    return (r << (d - k + 1)) | (1 << (d - k))


@jit
def pre_to_level_k(p, d):
    # p = q 1 0..0 (tz trailing zeros): level = 0..01 q
    tz = 0
    while (p >> tz) & 1 == 0:
        tz += 1
    return (1 << (d - tz - 1)) | (p >> (tz + 1))


def _check_index(i: int, d: int) -> None:
    if d < 1 or not 1 <= i <= (1 << d) - 1:
        raise IndexOutOfRange(f"index {i} outside [1, {(1 << max(d, 0)) - 1}] for d={d}")


def level_to_pre(i: int, d: int) -> int:
    """One-based level-order index -> one-based sorted (pre) order index."""
    _check_index(i, d)
    return int(level_to_pre_k(i, d))


def pre_to_level(i: int, d: int) -> int:
    """Inverse of :func:`level_to_pre`."""
    _check_index(i, d)
    return int(pre_to_level_k(i, d))


# names used by the classification description: level_of_pre takes a level-order
# index and yields the pre-order one, pre_of_level goes back
level_of_pre = level_to_pre
pre_of_level = pre_to_level


# ---------------------------------------------------------------- splitters and tree


@jit
def select_splitters_kernel(sample, v, out):
    m = sample.shape[0]
    st = np.empty((2 * v + 4, 5), dtype=np.int64)
    st[0, 0] = 0
    st[0, 1] = m
    st[0, 2] = 0
    st[0, 3] = v
    st[0, 4] = 0
    bounds = np.empty(2 * v + 4, dtype=np.uint64)
    bounds[0] = sample[m // 2]
    sp = 1
    while sp > 0:
        sp -= 1
        a = st[sp, 0]
        b = st[sp, 1]
        slo = st[sp, 2]
        shi = st[sp, 3]
        bound = bounds[sp]
        if slo >= shi:
            continue
        if a >= b:
            for s in range(slo, shi):
                out[s] = bound
            continue
        mid = a + (b - a) // 2
        xm = sample[mid]
        ms = (slo + shi) // 2
        out[ms] = xm
        lb = mid
        while lb > a and sample[lb - 1] == xm:
            lb -= 1
        ra = mid + 1
        while ra < b and sample[ra] == xm:
            ra += 1
        st[sp, 0] = ra
        st[sp, 1] = b
        st[sp, 2] = ms + 1
        st[sp, 3] = shi
        bounds[sp] = xm
        sp += 1
        st[sp, 0] = a
        st[sp, 1] = lb
        st[sp, 2] = slo
        st[sp, 3] = ms
        bounds[sp] = xm
        sp += 1


def select_splitters(sample: np.ndarray, v: int) -> np.ndarray:
    """Pick v splitters from a sorted sample by middle selection skipping equals.

    When a sub-range of the sample runs out before its slots do, the
    remaining slots repeat the neighbouring splitter.
    """
    sample = np.ascontiguousarray(sample, dtype=np.uint64)
    if v < 1 or sample.shape[0] < v:
        raise SampleTooSmall(f"need at least {v} samples, got {sample.shape[0]}")
    out = np.empty(v, dtype=np.uint64)
    select_splitters_kernel(sample, v, out)
    return out


@jit
def build_tree_kernel(x, d, t, lcps, term):
    v = x.shape[0]
    for lv in range(1, v + 1):
        t[lv] = x[level_to_pre_k(lv, d) - 1]
    lcps[0] = 0
    lcps[v] = 0
    for i in range(1, v):
        lcps[i] = key_lcp(x[i - 1], x[i])
    for i in range(v):
        term[i] = key_has_term(x[i])


def build_tree(splitters: np.ndarray) -> SplitterTree:
    x = np.ascontiguousarray(splitters, dtype=np.uint64)
    v = x.shape[0]
    d = v.bit_length()
    if v != (1 << d) - 1:
        raise ValueError(f"splitter count {v} is not of the form 2**d - 1")
    t = np.zeros(v + 1, dtype=np.uint64)
    lcps = np.zeros(v + 1, dtype=np.int64)
    term = np.zeros(v, dtype=np.bool_)
    build_tree_kernel(x, d, t, lcps, term)
    return SplitterTree(d, t, x, lcps, term)


# ---------------------------------------------------------------- classification


@jit
def _classify_one_e(c, t, d):
    v = (1 << d) - 1
    lv = 1
    for _ in range(d):
        tv = t[lv]
        if c == tv:
            p = level_to_pre_k(lv, d) - 1
            # duplicated splitters: equality bucket of the leftmost copy
            while p > 0 and t[pre_to_level_k(p, d)] == c:
                p -= 1
            return 2 * p + 1
        lv = 2 * lv + np.int64(c > tv)
    return 2 * (lv - (v + 1))


@jit
def classify_kernel(keys, lo, hi, t, x, d, variant, y, out):
    v = (1 << d) - 1
    if variant == 0:
        for i in range(lo, hi):
            out[i] = _classify_one_e(keys[i], t, d)
        return
    idx = np.empty(y, dtype=np.int64)
    i = lo
    while i < hi:
        m = min(y, hi - i)
        for u in range(m):
            idx[u] = 1
        for _ in range(d):
            for u in range(m):
                iu = idx[u]
                idx[u] = 2 * iu + np.int64(keys[i + u] > t[iu])
        for u in range(m):
            b = idx[u] - (v + 1)
            bk = 2 * b
            if b < v:
                if variant == 1:
                    xs = x[b]
                else:
                    xs = t[pre_to_level_k(b + 1, d)]
                if xs == keys[i + u]:
                    bk += 1
            out[i + u] = bk
        i += m


def classify(keys: np.ndarray, tree: SplitterTree, variant: str = "UIC",
             interleave: int = DEFAULT_INTERLEAVE) -> np.ndarray:
    """Bucket index in ``[0, 2v]`` for every key word."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    out = np.empty(keys.shape[0], dtype=np.int64)
    classify_kernel(keys, 0, keys.shape[0], tree.t, tree.x, tree.levels, VARIANTS.index(variant),
                    max(1, int(interleave)), out)
    return out


# ---------------------------------------------------------------- one distribution step


@jit
def _mix(state, value):
    z = state ^ np.uint64(value)
    for _ in range(3):
        z ^= z << np.uint64(13)
        z ^= z >> np.uint64(7)
        z ^= z << np.uint64(17)
    if z == np.uint64(0):
        z = np.uint64(0x2545F4914F6CDD1D)
    return z


@jit
def sample_tree_kernel(arena, src, lo, hi, h, d, seed, stats):
    """Draw a region-local pseudo-random sample and build the splitter tree."""
    v = (1 << d) - 1
    ns = OVERSAMPLING * v + OVERSAMPLING - 1
    z = _mix(np.uint64(seed), lo)
    z = _mix(z, hi)
    z = _mix(z, h)
    n = np.uint64(hi - lo)
    sample = np.empty(ns, dtype=np.uint64)
    for k in range(ns):
        z ^= z << np.uint64(13)
        z ^= z >> np.uint64(7)
        z ^= z << np.uint64(17)
        sample[k] = load_key(arena, src[lo + np.int64(z % n)] + h)
    stats[ACC] += ns
    sample.sort()
    x = np.empty(v, dtype=np.uint64)
    select_splitters_kernel(sample, v, x)
    t = np.zeros(v + 1, dtype=np.uint64)
    lcps = np.zeros(v + 1, dtype=np.int64)
    term = np.zeros(v, dtype=np.bool_)
    build_tree_kernel(x, d, t, lcps, term)
    return t, x, lcps, term


@jit
def classify_count_kernel(arena, src, keys, oracle, lo, hi, h, t, x, d, variant, y,
                          cnt, bmin, bmax, emit, stats):
    """Load keys, classify into the oracle array, then count (separate passes)."""
    for i in range(lo, hi):
        keys[i] = load_key(arena, src[i] + h)
    stats[ACC] += hi - lo
    classify_kernel(keys, lo, hi, t, x, d, variant, y, oracle)
    for i in range(lo, hi):
        cnt[oracle[i]] += 1
    if emit:
        for i in range(lo, hi):
            b = oracle[i]
            k = keys[i]
            if k < bmin[b]:
                bmin[b] = k
            if k > bmax[b]:
                bmax[b] = k


@jit
def distribute_kernel(src, dst, oracle, lo, hi, offs):
    """Stable scatter: offs[b] is the next absolute write position of bucket b."""
    for i in range(lo, hi):
        b = oracle[i]
        dst[offs[b]] = src[i]
        offs[b] += 1


@jit
def children_kernel(arena, A, B, H, lo, h, where_dst, cnt, bmin, bmax, x, lcps, term, emit,
                    frames, sp, level, min_push):
    """Handle the buckets of a finished distribution step.

    Writes boundary LCPs between consecutive non-empty buckets, finishes
    buckets that need no recursion (copying them home if they sit in the
    shadow array), and pushes the others as frames. Buckets of at least
    ``min_push`` strings are instead left out and reported by a negative
    ``frames`` row (used by the parallel driver); returns the new stack
    height.
    """
    k = cnt.shape[0]
    pos = lo
    prev = -1
    for b in range(k):
        m = cnt[b]
        if m == 0:
            continue
        odd = b % 2 == 1
        if emit and prev >= 0:
            hi_prev = x[prev // 2] if prev % 2 == 1 else bmax[prev]
            lo_cur = x[b // 2] if odd else bmin[b]
            H[pos] = h + key_lcp(hi_prev, lo_cur)
        prev = b
        done = m == 1
        if odd and term[b // 2]:
            done = True
            if emit:
                body = h + key_body_len(x[b // 2])
                for i in range(pos + 1, pos + m):
                    H[i] = body
        if done:
            if where_dst == 1:
                for i in range(pos, pos + m):
                    A[i] = B[i]
        else:
            frames[sp, 0] = pos
            frames[sp, 1] = pos + m
            frames[sp, 2] = h + (W if odd else lcps[b // 2])
            frames[sp, 3] = where_dst
            frames[sp, 4] = level + 1
            if m >= min_push:
                frames[sp, 4] = -(level + 1)
            sp += 1
        pos += m
    return sp


@jit
def s5_step_kernel(arena, A, B, H, keys, oracle, lo, hi, h, where, d, variant, y, emit, seed,
                   frames, sp, level, stats):
    src = A if where == 0 else B
    dst = B if where == 0 else A
    t, x, lcps, term = sample_tree_kernel(arena, src, lo, hi, h, d, seed, stats)
    v = x.shape[0]
    k = 2 * v + 1
    cnt = np.zeros(k, dtype=np.int64)
    bmin = np.full(k if emit else 1, np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    bmax = np.zeros(k if emit else 1, dtype=np.uint64)
    classify_count_kernel(arena, src, keys, oracle, lo, hi, h, t, x, d, variant, y, cnt, bmin, bmax,
                          emit, stats)
    offs = np.empty(k, dtype=np.int64)
    s = lo
    for b in range(k):
        offs[b] = s
        s += cnt[b]
    distribute_kernel(src, dst, oracle, lo, hi, offs)
    return children_kernel(arena, A, B, H, lo, h, 1 - where, cnt, bmin, bmax, x, lcps, term, emit,
                           frames, sp, level, hi - lo + 1)


@jit
def s5_frames_kernel(arena, A, B, H, keys, oracle, frames, sp, d, variant, y, t_m, emit, seed,
                     stats, idle, debug):
    """Sort all frames on the stack (see module docs for the size ladder).

    Returns early, with at least two frames left, when ``idle[0] > 0``.
    """
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
        where = frames[sp, 3]
        level = abs(frames[sp, 4])
        src = A if where == 0 else B
        if debug:
            for i in range(lo + 1, hi):
                if str_lcp(arena, src[lo], src[i], 0) < h:
                    stats[BAD] += 1
        if hi - lo < T_I:
            if emit:
                lcp_insertion_kernel(arena, src, H, lo, hi, h, stats)
            else:
                insertion_kernel(arena, src, lo, hi, h, stats)
        elif hi - lo < t_m:
            cmkqs_kernel(arena, src, keys, H, lo, hi, h, 1, emit, stats)
        else:
            sp = s5_step_kernel(arena, A, B, H, keys, oracle, lo, hi, h, where, d, variant, y, emit,
                                seed, frames, sp, level, stats)
            peak = max(peak, sp)
            continue
        if where == 1:
            for i in range(lo, hi):
                A[i] = B[i]
    stats[AUX] = max(stats[AUX], 40 * peak)
    return sp


def s5_step(S: StringSet, begin: int = 0, end: int | None = None, depth: int = 0, *,
            levels: int = DEFAULT_LEVELS, variant: str = "UIC", interleave: int = DEFAULT_INTERLEAVE,
            seed: int = DEFAULT_SEED, shadow: np.ndarray | None = None,
            stats: SortStats | None = None) -> tuple[BucketLayout, np.ndarray, SplitterTree]:
    """One sample-sort distribution of ``S.handles[begin:end]`` into ``shadow``.

    Returns the bucket layout, the shadow array (same length as the order
    array, region permuted into bucket order) and the splitter tree used.
    """
    end = S.n if end is None else end
    if end - begin < 1:
        raise ValueError("empty region")
    raw = new_stats()
    src = S.handles
    dst = np.zeros_like(src) if shadow is None else shadow
    t, x, lcps, term = sample_tree_kernel(S.arena, src, begin, end, depth, levels, seed, raw)
    v = x.shape[0]
    k = 2 * v + 1
    keys = np.empty(S.n, dtype=np.uint64)
    oracle = np.empty(S.n, dtype=np.uint16)
    cnt = np.zeros(k, dtype=np.int64)
    dummy = np.zeros(1, dtype=np.uint64)
    classify_count_kernel(S.arena, src, keys, oracle, begin, end, depth, t, x, levels,
                          VARIANTS.index(variant), interleave, cnt, dummy, dummy, False, raw)
    offsets = np.concatenate([[0], np.cumsum(cnt)[:-1]]).astype(np.int64)
    distribute_kernel(src, dst, oracle, begin, end, offsets + begin)
    advance = np.empty(k, dtype=np.int64)
    advance[0::2] = lcps
    advance[1::2] = W
    done = np.zeros(k, dtype=np.bool_)
    done[1::2] = term
    if stats is not None:
        stats.absorb(raw)
    return BucketLayout(cnt, offsets, advance, done), dst, SplitterTree(levels, t, x, lcps, term)


# ---------------------------------------------------------------- sequential driver


def _finish_lcp(S: StringSet, H: np.ndarray, emit_cached_char: bool) -> np.ndarray | None:
    if S.n:
        H[0] = 0
    if not emit_cached_char:
        return None
    cached = np.empty(S.n, dtype=np.uint8)
    fill_cached_chars(S.arena, S.handles, H, cached)
    return cached


def seq_s5(S: StringSet, emit_lcp: bool = False, emit_cached_char: bool = False, *,
           variant: str = "UIC", levels: int = DEFAULT_LEVELS, interleave: int = DEFAULT_INTERLEAVE,
           sample_threshold: int = DEFAULT_SAMPLE_THRESHOLD, seed: int = DEFAULT_SEED,
           stats: SortStats | None = None, debug: bool = False) -> SortResult:
    """Sort ``S.handles`` in place.

    Regions of at least ``sample_threshold`` strings take a sample-sort step;
    smaller ones go to caching multikey quicksort, and those under 32 strings
    to (LCP) insertion sort. ``emit_cached_char`` implies ``emit_lcp``.
    With ``debug`` every frame rechecks its claimed common prefix.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    emit = emit_lcp or emit_cached_char
    n = S.n
    raw = new_stats()
    H = np.zeros(n if emit else 1, dtype=np.int64)
    if n > 1:
        B = np.empty(n, dtype=np.int64)
        keys = np.empty(n, dtype=np.uint64)
        oracle = np.empty(n, dtype=np.uint16)
        frames = new_frames(n, FRAME_WIDTH)
        frames[0] = (0, n, 0, 0, 0)
        s5_frames_kernel(S.arena, S.handles, B, H, keys, oracle, frames, 1, levels,
                         VARIANTS.index(variant), interleave, max(int(sample_threshold), T_I), emit,
                         seed, raw, np.zeros(1, np.int64), debug)
        raw[AUX] += 8 * n + 8 * n + 2 * n
    if debug and raw[BAD]:
        raise AssertionError(f"{raw[BAD]} strings violated their region's claimed common prefix")
    if stats is not None:
        stats.absorb(raw)
    if not emit:
        return SortResult(S.handles)
    cached = _finish_lcp(S, H, emit_cached_char)
    return SortResult(S.handles, H, cached)
