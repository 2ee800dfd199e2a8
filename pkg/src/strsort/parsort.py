"""Shared-memory parallel sorters and merging on a job queue.

Workers are Python threads; the compiled kernels release the GIL, so the
threads run them concurrently. A :class:`JobQueue` hands out jobs and keeps a
counter of idle workers. Kernels that walk an explicit recursion stack read
that counter between frames and return early when someone is waiting; the
job then publishes its oldest (largest) pending level as new jobs and resumes.

Every job owns a disjoint slice of the order, shadow, key and LCP arrays.
The only shared mutable state is the queue, the idle counter and per-step
count arrays written in worker-private rows.
"""
from __future__ import annotations

import heapq
import math
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from ._kernels import ACC, AUX, BAD, CMP, T_I, fill_cached_chars, key_has_term, load_key, new_stats, str_lcp
from .lcpmerge import MergeResult, MergeStream, binary_merge_kernel, kway_kernel, pad_pow2
from .seqsort import SortStats, cmkqs_kernel, mkqs_kernel, new_frames, radix_frames_kernel
from .ssss import (DEFAULT_INTERLEAVE, DEFAULT_LEVELS, DEFAULT_SAMPLE_THRESHOLD, DEFAULT_SEED,
                   FRAME_WIDTH, VARIANTS, SortResult, children_kernel, classify_count_kernel,
                   distribute_kernel, s5_frames_kernel, sample_tree_kernel)
from .strset import StringSet

__all__ = [
    "JobQueue",
    "Job",
    "MergeJob",
    "PartitionPlan",
    "STRATEGIES",
    "DEFAULT_BLOCK",
    "DEFAULT_OVERPARTITION",
    "parallel_s5",
    "parallel_mkqs",
    "parallel_radix",
    "plan_merge_split",
    "parallel_kway_lcp_merge",
    "partitioned_sort",
]

STRATEGIES = ("binary", "multiway", "lcp")
DEFAULT_BLOCK = 1 << 17
DEFAULT_OVERPARTITION = 8
CHECK_EVERY = 4096
# regions below this never take a fully parallel step, whatever n / p is
_MIN_PARALLEL = 1024


# ---------------------------------------------------------------- job queue


class Job:
    """Unit of work. Subclasses implement :meth:`run`."""

    _ran = False

    def __call__(self, q: "JobQueue", wid: int) -> None:
        if self._ran:
            raise RuntimeError(f"{type(self).__name__} executed twice")
        self._ran = True
        self.run(q, wid)

    def run(self, q: "JobQueue", wid: int) -> None:
        raise NotImplementedError


class _FnJob(Job):
    def __init__(self, fn):
        self.fn = fn

    def run(self, q, wid):
        self.fn(q, wid)


class JobQueue:
    """FIFO job queue served by ``threads`` workers.

    ``idle`` is a one-element int64 array holding the number of workers
    currently waiting for a job. Kernels read it without locking; a stale
    value only delays or hastens a round of sharing.
    """

    def __init__(self, threads: int):
        if threads < 1:
            raise ValueError("need at least one worker")
        self.threads = int(threads)
        self.idle = np.zeros(1, dtype=np.int64)
        self._jobs: deque = deque()
        self._cv = threading.Condition()
        self._pending = 0
        self._error: BaseException | None = None
        self.enqueued = 0
        self.executed = 0
        self.shared = 0
        self.resplits = 0
        self.waits = [0] * self.threads
        self.jobs_run = [0] * self.threads
        self.worker_stats = [new_stats() for _ in range(self.threads)]

    def enqueue(self, job) -> None:
        if not isinstance(job, Job):
            job = _FnJob(job)
        with self._cv:
            self._jobs.append(job)
            self._pending += 1
            self.enqueued += 1
            self._cv.notify()

    def share(self, job) -> None:
        """Enqueue work split off a running job (counted separately)."""
        with self._cv:
            self.shared += 1
        self.enqueue(job)

    def run(self, jobs=()) -> None:
        """Enqueue ``jobs`` and work until the queue drains; re-raise job errors."""
        for j in jobs:
            self.enqueue(j)
        if self.threads == 1:
            self._worker(0)
        else:
            ts = [threading.Thread(target=self._worker, args=(w,), daemon=True)
                  for w in range(self.threads)]
            for t in ts:
                t.start()
            for t in ts:
                t.join()
        if self._error is not None:
            raise self._error

    def _worker(self, wid: int) -> None:
        cv = self._cv
        while True:
            with cv:
                while not self._jobs and self._pending > 0 and self._error is None:
                    self.idle[0] += 1
                    self.waits[wid] += 1
                    cv.wait()
                    self.idle[0] -= 1
                if self._error is not None or not self._jobs:
                    cv.notify_all()
                    return
                job = self._jobs.popleft()
            try:
                job(self, wid)
            except BaseException as e:  # surfaced by run()
                with cv:
                    self._error = e
                    cv.notify_all()
                return
            with cv:
                self._pending -= 1
                self.executed += 1
                self.jobs_run[wid] += 1
                if self._pending == 0:
                    cv.notify_all()

    def stats(self) -> SortStats:
        out = SortStats()
        for raw in self.worker_stats:
            out.absorb(raw)
        return out


def _share_lowest_level(q: JobQueue, frames: np.ndarray, sp: int, level_col: int, make) -> int:
    """Publish the bottom (oldest, largest) stack level; return the new height.

    Stack levels grow from bottom to top, so the lowest level is a prefix. At
    least one frame stays with the caller.
    """
    lv = abs(frames[0, level_col])
    c = 1
    while c < sp - 1 and abs(frames[c, level_col]) == lv:
        c += 1
    parts = min(c, q.threads)
    for chunk in np.array_split(np.arange(c), parts):
        if chunk.size:
            q.share(make(frames[chunk[0]:chunk[-1] + 1].copy()))
    frames[:sp - c] = frames[c:sp]
    return sp - c


def _queue_for(p: int, queue: JobQueue | None) -> JobQueue:
    # callers may pass their own queue to inspect its counters afterwards
    if queue is None:
        return JobQueue(p)
    if queue.threads != p:
        raise ValueError(f"queue has {queue.threads} workers, p={p}")
    return queue


def _absorb(stats: SortStats | None, q: JobQueue, extra_aux: int = 0) -> None:
    if stats is None:
        return
    s = q.stats()
    s.bytes_aux += extra_aux
    stats.merge(s)


def _group_frames(rows: np.ndarray, chunk: int) -> list[np.ndarray]:
    """Split frame rows into consecutive groups of about ``chunk`` strings."""
    groups, start, acc = [], 0, 0
    for i in range(rows.shape[0]):
        acc += int(rows[i, 1] - rows[i, 0])
        if acc >= chunk:
            groups.append(rows[start:i + 1])
            start, acc = i + 1, 0
    if start < rows.shape[0]:
        groups.append(rows[start:])
    return groups


def _thread_share(p: int, m: int, n: int) -> int:
    return max(1, min(p, math.ceil(p * m / max(n, 1))))


def _stripes(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(lo, hi, parts + 1).astype(np.int64)
    return [(int(edges[j]), int(edges[j + 1])) for j in range(parts)]


def _interleaved_offsets(cnt: np.ndarray, lo: int) -> np.ndarray:
    """Row j, bucket b -> first output slot: buckets outer, workers inner."""
    flat = cnt.T.ravel()
    ex = np.cumsum(flat) - flat
    return np.ascontiguousarray((ex + lo).reshape(cnt.shape[1], cnt.shape[0]).T)


class _Barrier:
    """Counts arrivals of a fixed number of sibling jobs."""

    def __init__(self, parties: int):
        self.left = parties
        self.lock = threading.Lock()

    def arrive(self) -> bool:
        with self.lock:
            self.left -= 1
            return self.left == 0


# ---------------------------------------------------------------- parallel S5


class _S5Run:
    def __init__(self, S, p, emit, variant, levels, interleave, t_m, seed, debug):
        n = S.n
        self.arena = S.arena
        self.A = S.handles
        self.B = np.empty(n, dtype=np.int64)
        self.H = np.zeros(n if emit else 1, dtype=np.int64)
        self.keys = np.empty(n, dtype=np.uint64)
        self.oracle = np.empty(n, dtype=np.uint16)
        self.n, self.p, self.emit = n, p, emit
        self.variant, self.d, self.y = VARIANTS.index(variant), levels, interleave
        self.t_m, self.seed, self.debug = t_m, seed, debug
        self.min_push = max(math.ceil(n / p), _MIN_PARALLEL)
        self.chunk = max(n // (4 * p), 1)


class _S5Small(Job):
    """Sequential S5 on a set of frames, sharing work when others idle."""

    def __init__(self, run: _S5Run, rows: np.ndarray):
        self.r = run
        self.rows = rows

    def run(self, q, wid):
        r = self.r
        m = int((self.rows[:, 1] - self.rows[:, 0]).sum())
        frames = new_frames(m + 4 * self.rows.shape[0], FRAME_WIDTH)
        sp = self.rows.shape[0]
        frames[:sp] = self.rows
        frames[:sp, 4] = np.abs(frames[:sp, 4])
        while sp > 0:
            sp = s5_frames_kernel(r.arena, r.A, r.B, r.H, r.keys, r.oracle, frames, sp, r.d, r.variant,
                                  r.y, r.t_m, r.emit, r.seed, q.worker_stats[wid], q.idle, r.debug)
            if sp > 0:
                sp = _share_lowest_level(q, frames, sp, 4, lambda rows: _S5Small(r, rows))


class _S5Step:
    """One fully parallel distribution step of region [lo, hi)."""

    def __init__(self, run: _S5Run, lo, hi, h, where, level):
        self.r = run
        self.lo, self.hi, self.h, self.where, self.level = lo, hi, h, where, level
        self.pp = _thread_share(run.p, hi - lo, run.n)

    def job(self) -> Job:
        return _FnJob(self.sample)

    def sample(self, q, wid):
        r = self.r
        src = r.A if self.where == 0 else r.B
        self.t, self.x, self.lcps, self.term = sample_tree_kernel(
            r.arena, src, self.lo, self.hi, self.h, r.d, r.seed, q.worker_stats[wid])
        k = 2 * self.x.shape[0] + 1
        kb = k if r.emit else 1
        self.cnt = np.zeros((self.pp, k), dtype=np.int64)
        self.bmin = np.full((self.pp, kb), np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        self.bmax = np.zeros((self.pp, kb), dtype=np.uint64)
        self.stripes = _stripes(self.lo, self.hi, self.pp)
        self.barrier = _Barrier(self.pp)
        for j in range(self.pp):
            q.enqueue(_FnJob(lambda q_, w_, j=j: self.count(q_, w_, j)))

    def count(self, q, wid, j):
        r = self.r
        a, b = self.stripes[j]
        src = r.A if self.where == 0 else r.B
        classify_count_kernel(r.arena, src, r.keys, r.oracle, a, b, self.h, self.t, self.x, r.d,
                              r.variant, r.y, self.cnt[j], self.bmin[j], self.bmax[j], r.emit,
                              q.worker_stats[wid])
        if self.barrier.arrive():
            self.offs = _interleaved_offsets(self.cnt, self.lo)
            self.barrier = _Barrier(self.pp)
            for jj in range(self.pp):
                q.enqueue(_FnJob(lambda q_, w_, jj=jj: self.distribute(q_, w_, jj)))

    def distribute(self, q, wid, j):
        r = self.r
        a, b = self.stripes[j]
        src, dst = (r.A, r.B) if self.where == 0 else (r.B, r.A)
        distribute_kernel(src, dst, r.oracle, a, b, self.offs[j])
        if self.barrier.arrive():
            self.finish(q)

    def finish(self, q):
        r = self.r
        tot = self.cnt.sum(axis=0)
        bmin = self.bmin.min(axis=0)
        bmax = self.bmax.max(axis=0)
        frames = np.empty((tot.shape[0], FRAME_WIDTH), dtype=np.int64)
        sp = children_kernel(r.arena, r.A, r.B, r.H, self.lo, self.h, 1 - self.where, tot, bmin, bmax,
                             self.x, self.lcps, self.term, r.emit, frames, 0, self.level, r.min_push)
        frames = frames[:sp]
        big = frames[:, 4] < 0
        for row in frames[big]:
            lo, hi, h, where, lv = (int(v) for v in row)
            q.enqueue(_S5Step(r, lo, hi, h, where, -lv).job())
        for rows in _group_frames(frames[~big], r.chunk):
            q.enqueue(_S5Small(r, rows.copy()))


def parallel_s5(S: StringSet, p: int, emit_lcp: bool = False, emit_cached_char: bool = False, *,
                variant: str = "UIC", levels: int = DEFAULT_LEVELS, interleave: int = DEFAULT_INTERLEAVE,
                sample_threshold: int = DEFAULT_SAMPLE_THRESHOLD, seed: int = DEFAULT_SEED,
                stats: SortStats | None = None, debug: bool = False,
                queue: JobQueue | None = None) -> SortResult:
    """Parallel super scalar string sample sort of ``S.handles`` in place.

    Regions holding at least n/p strings (and at least 1024) are distributed
    by all p' = ceil(p * size / n) workers together; the rest run the
    sequential ladder inside small-sort jobs. With ``p == 1`` the run is the
    sequential sorter.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    emit = emit_lcp or emit_cached_char
    n = S.n
    r = _S5Run(S, p, emit, variant, levels, interleave, max(int(sample_threshold), T_I), seed, debug)
    q = _queue_for(p, queue)
    if n > 1:
        if p > 1 and n >= r.min_push:
            q.run([_S5Step(r, 0, n, 0, 0, 0).job()])
        else:
            q.run([_S5Small(r, np.array([[0, n, 0, 0, 0]], dtype=np.int64))])
    bad = sum(int(s[BAD]) for s in q.worker_stats)
    if debug and bad:
        raise AssertionError(f"{bad} strings violated their region's claimed common prefix")
    _absorb(stats, q, 18 * n)
    if not emit:
        return SortResult(S.handles)
    if n:
        r.H[0] = 0
    cached = None
    if emit_cached_char:
        cached = np.empty(n, dtype=np.uint8)
        fill_cached_chars(S.arena, S.handles, r.H, cached)
    return SortResult(S.handles, r.H, cached)


# ---------------------------------------------------------------- parallel caching multikey quicksort


@jit
def partition_block_kernel(arena, in_h, in_k, i, stop, h, refetch, pivot, out_h, out_k, fill, cap, stats):
    """Three-way classify in_*[i:stop] into out rows 0 (<), 1 (=), 2 (>).

    Stops early when an output block fills up; returns the next input index.
    """
    cmp = 0
    acc = 0
    while i < stop:
        s = in_h[i]
        if refetch:
            k = load_key(arena, s + h)
            acc += 1
        else:
            k = in_k[i]
        c = 0 if k < pivot else (1 if k == pivot else 2)
        cmp += 1
        f = fill[c]
        out_h[c, f] = s
        out_k[c, f] = k
        fill[c] = f + 1
        i += 1
        if f + 1 == cap:
            break
    stats[CMP] += cmp
    stats[ACC] += acc
    return i


class _MkqsRun:
    def __init__(self, S, p, block):
        n = S.n
        self.arena = S.arena
        self.A = S.handles
        self.keys = np.empty(n, dtype=np.uint64)
        self.H = np.zeros(1, dtype=np.int64)
        self.n, self.p, self.block = n, p, block
        self.min_par = max(math.ceil(n / p), _MIN_PARALLEL)
        self.partial_blocks = 0


def _block_item(blocks, idx):
    for hs, ks in blocks:
        if idx < hs.shape[0]:
            return hs, ks, idx
        idx -= hs.shape[0]
    raise IndexError(idx)


def _med3(a, b, c):
    if a == b or b == c:
        return b
    if a < b:
        return b if b < c else (c if a < c else a)
    return b if b > c else (a if a < c else c)


class _MkqsLeaf(Job):
    """Compact a block set into its final slot and run caching mkqs there."""

    def __init__(self, run, blocks, size, h, out_lo, refetch):
        self.r, self.blocks, self.size, self.h, self.out_lo, self.refetch = run, blocks, size, h, out_lo, refetch

    def run(self, q, wid):
        r = self.r
        pos = self.out_lo
        for hs, ks in self.blocks:
            m = hs.shape[0]
            r.A[pos:pos + m] = hs
            if not self.refetch:
                r.keys[pos:pos + m] = ks
            pos += m
        cmkqs_kernel(r.arena, r.A, r.keys, r.H, self.out_lo, self.out_lo + self.size, self.h,
                     int(self.refetch), False, q.worker_stats[wid])


class _MkqsStep:
    """Block-wise parallel three-way partition of a block set on the key at depth h."""

    def __init__(self, run, blocks, size, h, out_lo, refetch):
        self.r, self.blocks, self.size, self.h, self.out_lo, self.refetch = run, blocks, size, h, out_lo, refetch
        self.pp = _thread_share(run.p, size, run.n)
        self.next = 0
        self.lock = threading.Lock()
        self.out = ([], [], [])
        self.barrier = _Barrier(self.pp)

    def start(self, q, wid):
        r = self.r
        ks = []
        for idx in (0, self.size // 2, self.size - 1):
            hs_, ks_, i = _block_item(self.blocks, idx)
            ks.append(int(load_key(r.arena, hs_[i] + self.h)) if self.refetch else int(ks_[i]))
        if self.refetch:
            q.worker_stats[wid][ACC] += 3
        self.pivot = np.uint64(_med3(*ks))
        for _ in range(self.pp):
            q.enqueue(_FnJob(self.partition))

    def partition(self, q, wid):
        r = self.r
        cap = r.block
        out_h = np.empty((3, cap), dtype=np.int64)
        out_k = np.empty((3, cap), dtype=np.uint64)
        fill = np.zeros(3, dtype=np.int64)
        mine = ([], [], [])
        while True:
            with self.lock:
                b = self.next
                self.next += 1
            if b >= len(self.blocks):
                break
            hs, ks = self.blocks[b]
            i, m = 0, hs.shape[0]
            while i < m:
                i = partition_block_kernel(r.arena, hs, ks, i, m, self.h, self.refetch, self.pivot,
                                           out_h, out_k, fill, cap, q.worker_stats[wid])
                for c in range(3):
                    if fill[c] == cap:
                        mine[c].append((out_h[c].copy(), out_k[c].copy()))
                        fill[c] = 0
        for c in range(3):
            if fill[c]:
                f = int(fill[c])
                mine[c].append((out_h[c, :f].copy(), out_k[c, :f].copy()))
        with self.lock:
            for c in range(3):
                self.out[c].extend(mine[c])
            r.partial_blocks = max(r.partial_blocks, int((fill > 0).sum()))
        if self.barrier.arrive():
            self.finish(q)

    def finish(self, q):
        r = self.r
        pos = self.out_lo
        for c in range(3):
            blocks = self.out[c]
            size = sum(hs.shape[0] for hs, _ in blocks)
            if size == 0:
                continue
            if c == 1:
                if key_has_term(self.pivot):
                    for hs, _ in blocks:  # all equal strings: already final
                        r.A[pos:pos + hs.shape[0]] = hs
                        pos += hs.shape[0]
                    continue
                h, refetch = self.h + 8, True
            else:
                h, refetch = self.h, False
            if size >= r.min_par:
                st = _MkqsStep(r, blocks, size, h, pos, refetch)
                q.enqueue(_FnJob(st.start))
            else:
                q.enqueue(_MkqsLeaf(r, blocks, size, h, pos, refetch))
            pos += size


def parallel_mkqs(S: StringSet, p: int, block: int = DEFAULT_BLOCK,
                  stats: SortStats | None = None, queue: JobQueue | None = None) -> SortResult:
    """Parallel caching multikey quicksort of ``S.handles`` in place.

    Large sets are partitioned in parallel block by block (``block`` handles
    plus their 8-character keys per block). Keys are reloaded only for the
    equal part, at depth + 8. Sets under n/p strings are copied into their
    final slot and finished by sequential caching multikey quicksort.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if block < 1:
        raise ValueError("block must be >= 1")
    n = S.n
    r = _MkqsRun(S, p, int(block))
    q = _queue_for(p, queue)
    if n > 1:
        if p > 1 and n >= r.min_par:
            blocks = [(S.handles[a:a + block].copy(), r.keys[a:a + block]) for a in range(0, n, block)]
            st = _MkqsStep(r, blocks, n, 0, 0, True)
            q.run([_FnJob(st.start)])
        else:
            q.run([_MkqsLeaf(r, [(S.handles.copy(), r.keys)], n, 0, 0, True)])
    _absorb(stats, q, 16 * n)
    return SortResult(S.handles)


# ---------------------------------------------------------------- parallel radix sort


@jit
def radix_count_kernel(arena, src, okey, lo, hi, h, wide, cnt, stats):
    for i in range(lo, hi):
        s = src[i]
        c0 = np.int64(arena[s + h])
        key = c0
        if wide:
            key = c0 << 8
            if c0 != 0:
                key |= np.int64(arena[s + h + 1])
        okey[i] = key
        cnt[key] += 1
    stats[ACC] += (hi - lo) * (2 if wide else 1)


@jit
def radix_children_kernel(A, B, lo, h, where_dst, cnt, wide, frames, min_push):
    """Finish terminal buckets, list the rest as (lo, hi, depth, where, big)."""
    pos = lo
    sp = 0
    step = 2 if wide else 1
    for k in range(cnt.shape[0]):
        m = cnt[k]
        if m == 0:
            continue
        term = (k & 255) == 0 if wide else k == 0
        if m == 1 or term:
            if where_dst == 1:
                for i in range(pos, pos + m):
                    A[i] = B[i]
        else:
            frames[sp, 0] = pos
            frames[sp, 1] = pos + m
            frames[sp, 2] = h + step
            frames[sp, 3] = where_dst
            frames[sp, 4] = 1 if m >= min_push else 0
            sp += 1
        pos += m
    return sp


class _RadixRun:
    def __init__(self, S, p, bits):
        n = S.n
        self.arena = S.arena
        self.A = S.handles
        self.B = np.empty(n, dtype=np.int64)
        self.okey = np.empty(n, dtype=np.uint16)
        self.o8 = np.empty(n, dtype=np.uint8)
        self.dummy8 = np.empty(1, dtype=np.int64)
        self.dummy16 = np.empty(1, dtype=np.uint16)
        self.n, self.p, self.wide = n, p, bits == 16
        self.min_par = max(math.ceil(n / p), _MIN_PARALLEL)
        self.chunk = max(n // (4 * p), 1)


class _RadixSmall(Job):
    """In-place 8-bit radix sort of frames (lo, hi, depth, level)."""

    def __init__(self, run, rows, home=False):
        self.r, self.rows, self.home = run, rows, home

    def run(self, q, wid):
        r = self.r
        rows = self.rows
        if not self.home:
            for lo, hi, _, where, _ in rows:
                if where == 1:
                    r.A[lo:hi] = r.B[lo:hi]
            rows = rows[:, [0, 1, 2, 4]].copy()
            rows[:, 3] = 0
        m = int((rows[:, 1] - rows[:, 0]).sum())
        frames = new_frames(m + 4 * rows.shape[0])
        sp = rows.shape[0]
        frames[:sp] = rows
        while sp > 0:
            sp = radix_frames_kernel(r.arena, r.A, r.dummy8, r.o8, r.dummy16, frames, sp, 3,
                                     q.worker_stats[wid], q.idle)
            if sp > 0:
                sp = _share_lowest_level(q, frames, sp, 3, lambda fr: _RadixSmall(r, fr, True))


class _RadixStep:
    def __init__(self, run, lo, hi, h, where):
        self.r, self.lo, self.hi, self.h, self.where = run, lo, hi, h, where
        self.pp = _thread_share(run.p, hi - lo, run.n)
        self.stripes = _stripes(lo, hi, self.pp)
        self.cnt = np.zeros((self.pp, 65536 if run.wide else 256), dtype=np.int64)
        self.barrier = _Barrier(self.pp)

    def jobs(self) -> list[Job]:
        return [_FnJob(lambda q, w, j=j: self.count(q, w, j)) for j in range(self.pp)]

    def count(self, q, wid, j):
        r = self.r
        a, b = self.stripes[j]
        src = r.A if self.where == 0 else r.B
        radix_count_kernel(r.arena, src, r.okey, a, b, self.h, r.wide, self.cnt[j], q.worker_stats[wid])
        if self.barrier.arrive():
            self.offs = _interleaved_offsets(self.cnt, self.lo)
            self.barrier = _Barrier(self.pp)
            for jj in range(self.pp):
                q.enqueue(_FnJob(lambda q_, w_, jj=jj: self.distribute(q_, w_, jj)))

    def distribute(self, q, wid, j):
        r = self.r
        a, b = self.stripes[j]
        src, dst = (r.A, r.B) if self.where == 0 else (r.B, r.A)
        distribute_kernel(src, dst, r.okey, a, b, self.offs[j])
        if self.barrier.arrive():
            self.finish(q)

    def finish(self, q):
        r = self.r
        tot = self.cnt.sum(axis=0)
        frames = np.empty((tot.shape[0], 5), dtype=np.int64)
        sp = radix_children_kernel(r.A, r.B, self.lo, self.h, 1 - self.where, tot, r.wide, frames, r.min_par)
        frames = frames[:sp]
        big = frames[:, 4] == 1
        for lo, hi, h, where, _ in frames[big]:
            for job in _RadixStep(r, int(lo), int(hi), int(h), int(where)).jobs():
                q.enqueue(job)
        rest = frames[~big].copy()
        rest[:, 4] = 0
        for rows in _group_frames(rest, r.chunk):
            q.enqueue(_RadixSmall(r, rows))


def parallel_radix(S: StringSet, p: int, bits: int = 8, stats: SortStats | None = None,
                   queue: JobQueue | None = None) -> SortResult:
    """Parallel MSD radix sort of ``S.handles`` in place.

    Sets of at least n/p strings are counted and distributed into a shadow
    array by all their workers, using one (``bits=8``) or two (``bits=16``)
    characters per step. Smaller sets are finished by in-place 8-bit radix
    sort. Strings that ended are never recursed on.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    n = S.n
    r = _RadixRun(S, p, bits)
    q = _queue_for(p, queue)
    if n > 1:
        if n >= T_I:
            q.run(_RadixStep(r, 0, n, 0, 0).jobs())
        else:
            q.run([_RadixSmall(r, np.array([[0, n, 0, 0]], dtype=np.int64), True)])
    _absorb(stats, q, 19 * n)
    return SortResult(S.handles)


# ---------------------------------------------------------------- merge splitting


@dataclass
class MergeJob:
    """Per-stream ``[begin, end)`` ranges (stream-relative) and their shared prefix."""

    ranges: np.ndarray
    hbar: int
    offset: int = 0

    @property
    def size(self) -> int:
        return int((self.ranges[:, 1] - self.ranges[:, 0]).sum())


@dataclass
class PartitionPlan:
    strategy: str
    jobs: list[MergeJob]
    total: int


@jit
def _str_cmp(arena, a, b):
    k = str_lcp(arena, a, b, 0)
    return np.int64(arena[a + k]) - np.int64(arena[b + k])


@jit
def lower_bound_kernel(arena, hs, lo, hi, pivot):
    """First i in [lo, hi) with hs[i] >= pivot (sorted run)."""
    while lo < hi:
        mid = (lo + hi) // 2
        if _str_cmp(arena, hs[mid], pivot) < 0:
            lo = mid + 1
        else:
            hi = mid
    return lo


@jit
def lcp_split_kernel(arena, hs, lcps, cur, end, hoff, target, bounds, hbars, single):
    """Cut the runs hs[cur[k]:end[k]] (sharing ``hoff`` characters) into jobs.

    Repeatedly takes the smallest ``w``-character block among the stream
    heads and collects, in every stream, the run of strings starting with
    that block; the LCP arrays tell where a run ends. Consecutive blocks are
    packed into jobs of about total/target strings. ``w`` starts at 8 and
    shrinks while the jobs started so far project past twice the target.
    Fills ``bounds[j, k]`` (end of job j in stream k), ``hbars[j]`` and
    ``single[j]`` (1: one block, 2: one block of equal strings, 0: packed).
    Returns the job count.
    """
    K = cur.shape[0]
    pos = cur.copy()
    total = 0
    for k in range(K):
        total += end[k] - cur[k]
    cap = max(1, (total + target - 1) // target)
    w = 8
    blocks = 0
    jobs = 0
    open_size = 0
    open_h = 0
    open_single = 0
    done = 0
    while done < total:
        best = np.uint64(0)
        have = False
        for k in range(K):
            if pos[k] < end[k]:
                key = load_key(arena, hs[pos[k]] + hoff) >> np.uint64(8 * (8 - w))
                if not have or key < best:
                    best = key
                    have = True
        # body length of the block inside the window
        blen = 0
        while blen < w and ((best >> np.uint64(8 * (w - 1 - blen))) & np.uint64(255)) != 0:
            blen += 1
        size = 0
        for k in range(K):
            p = pos[k]
            if p >= end[k]:
                continue
            key = load_key(arena, hs[p] + hoff) >> np.uint64(8 * (8 - w))
            if key != best:
                continue
            q = p + 1
            while q < end[k]:
                lc = lcps[q]
                if lc >= hoff + w:
                    q += 1
                elif lc == hoff + blen and blen < w and arena[hs[q] + lc] == 0:
                    q += 1
                else:
                    break
            size += q - p
            pos[k] = q
        blocks += 1
        bh = hoff + blen
        if open_size > 0 and open_size + size <= cap:
            open_size += size
            open_h = hoff
            open_single = 0
        else:
            if open_size > 0:
                jobs += 1
            open_size = size
            open_h = bh
            open_single = 2 if blen < w else 1
        for k in range(K):
            bounds[jobs, k] = pos[k]
        hbars[jobs] = open_h
        single[jobs] = open_single
        done += size
        if w > 1 and blocks * total > 2 * target * done:
            w -= 1
    return jobs + 1 if total > 0 else 0


def _lcp_split(arena, hs, lcps, cur, end, hoff, target, depth_left=64):
    """Recursive lcp splitting; returns [(starts, ends, hbar)] in global coordinates."""
    K = cur.shape[0]
    total = int((end - cur).sum())
    if total == 0:
        return []
    target = max(1, int(target))
    cap = max(1, -(-total // target))
    rows = 2 * target + 4
    bounds = np.empty((rows, K), dtype=np.int64)
    hbars = np.empty(rows, dtype=np.int64)
    single = np.empty(rows, dtype=np.int64)
    J = lcp_split_kernel(arena, hs, lcps, cur, end, hoff, target, bounds, hbars, single)
    out = []
    prev = cur.copy()
    for j in range(J):
        e = bounds[j].copy()
        size = int((e - prev).sum())
        h = int(hbars[j])
        nonempty = int(((e - prev) > 0).sum())
        if single[j] == 1 and size > cap and nonempty > 1 and depth_left > 0:
            out.extend(_lcp_split(arena, hs, lcps, prev.copy(), e, h, -(-size // cap), depth_left - 1))
        else:
            out.append((prev.copy(), e, h))
        prev = e
    return out


def _binary_split(arena, hs, cur, end, hoff, target):
    jobs = [(cur.copy(), end.copy(), hoff)]
    heap = [(-int((end - cur).sum()), 0)]
    done = []
    while heap and len(jobs) + len(done) < target:
        neg, idx = heapq.heappop(heap)
        if neg > -2:
            break
        s, e, h = jobs[idx]
        k_star = int(np.argmax(e - s))
        mid = int(s[k_star] + (e[k_star] - s[k_star]) // 2)
        pivot = hs[mid]
        cut = s.copy()
        for k in range(s.shape[0]):
            cut[k] = mid if k == k_star else lower_bound_kernel(arena, hs, s[k], e[k], pivot)
        jobs[idx] = (s, cut, h)
        jobs.append((cut, e, h))
        heapq.heappush(heap, (-int((cut - s).sum()), idx))
        heapq.heappush(heap, (-int((e - cut).sum()), len(jobs) - 1))
    jobs.sort(key=lambda j: tuple(j[0]))
    return [j for j in jobs if (j[1] - j[0]).sum() > 0]


def _multiway_split(arena, hs, cur, end, hoff, target, seed):
    total = int((end - cur).sum())
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, total, size=max(target - 1, 0))
    sizes = end - cur
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    k_of = np.searchsorted(np.cumsum(sizes), picks, side="right")
    sample = np.array([hs[cur[k] + (i - starts[k])] for i, k in zip(picks, k_of)], dtype=np.int64)
    if sample.size > 1:
        mkqs_kernel(arena, sample, 0, sample.size, 0, new_stats())
    splitters = []
    for s in sample:
        if not splitters or _str_cmp(arena, splitters[-1], s) != 0:
            splitters.append(int(s))
    cuts = [cur.copy()]
    for s in splitters:
        cuts.append(np.array([lower_bound_kernel(arena, hs, cur[k], end[k], s)
                              for k in range(cur.shape[0])], dtype=np.int64))
    cuts.append(end.copy())
    jobs = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if (b - a).sum() > 0:
            jobs.append((a, b, hoff))
    return jobs


def _split(arena, hs, lcps, cur, end, strategy, target, hoff=0, seed=DEFAULT_SEED):
    if strategy == "binary":
        return _binary_split(arena, hs, cur, end, hoff, target)
    if strategy == "multiway":
        return _multiway_split(arena, hs, cur, end, hoff, target, seed)
    if strategy == "lcp":
        return _lcp_split(arena, hs, lcps, cur, end, hoff, target)
    raise ValueError(f"unknown strategy {strategy!r}")


def _concat(streams: list[MergeStream], want_cache: bool):
    K = len(streams)
    sizes = np.array([len(s) for s in streams], dtype=np.int64)
    total = int(sizes.sum())
    begin = np.zeros(K, dtype=np.int64)
    begin[1:] = np.cumsum(sizes)[:-1]
    hs = np.concatenate([np.asarray(s.handles, np.int64) for s in streams]) if K else np.zeros(0, np.int64)
    lcps = np.concatenate([np.asarray(s.lcp, np.int64) for s in streams]) if K else np.zeros(0, np.int64)
    if want_cache:
        if any(s.cached is None for s in streams):
            raise ValueError("use_cached_char requires cached characters on every stream")
        ccs = np.concatenate([np.asarray(s.cached, np.uint8) for s in streams])
    else:
        ccs = np.zeros(1, dtype=np.uint8)
    return hs, lcps, ccs, begin, begin + sizes, total


def plan_merge_split(arena: np.ndarray, streams: list[MergeStream], strategy: str = "lcp",
                     target_jobs: int = DEFAULT_OVERPARTITION, seed: int = DEFAULT_SEED) -> PartitionPlan:
    """Cut a K-way merge into independent jobs whose outputs concatenate.

    ``binary`` halves the largest job around the median string of its
    largest stream; ``multiway`` samples ``target_jobs - 1`` splitter strings
    and binary-searches every stream; ``lcp`` scans the LCP arrays for runs
    sharing a common w-character block (see :func:`lcp_split_kernel`).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    hs, lcps, _, begin, end, total = _concat(streams, False)
    if len(streams) <= 1 or total == 0:
        ranges = np.stack([np.zeros(len(streams), np.int64), end - begin], axis=1)
        return PartitionPlan(strategy, [MergeJob(ranges, 0, 0)] if total else [], total)
    raw = _split(arena, hs, lcps, begin.copy(), end.copy(), strategy, max(1, int(target_jobs)), 0, seed)
    jobs, off = [], 0
    for s, e, h in raw:
        job = MergeJob(np.stack([s - begin, e - begin], axis=1), int(h), off)
        off += job.size
        jobs.append(job)
    return PartitionPlan(strategy, jobs, total)


# ---------------------------------------------------------------- parallel K-way merge


@jit
def fix_boundaries_kernel(arena, out, hout, cout, offs, use_cache):
    for t in range(offs.shape[0]):
        o = offs[t]
        if o <= 0 or o >= out.shape[0]:
            continue
        h = str_lcp(arena, out[o - 1], out[o], 0)
        hout[o] = h
        if use_cache:
            cout[o] = arena[out[o] + h]


class _MergeRun:
    def __init__(self, arena, hs, lcps, ccs, total, K, use_cache, check_every, p):
        self.arena, self.hs, self.lcps, self.ccs = arena, hs, lcps, ccs
        self.K, self.use_cache, self.check_every, self.p = K, use_cache, check_every, p
        self.out = np.empty(total, dtype=np.int64)
        self.hout = np.zeros(total, dtype=np.int64)
        self.cout = np.zeros(total if use_cache else 1, dtype=np.uint8)
        self.offsets: list[int] = []
        self.lock = threading.Lock()
        self.resplits = 0
        self.bad = 0


class _MergeJobRun(Job):
    def __init__(self, run: _MergeRun, s, e, hbar, o0):
        self.r = run
        self.s, self.e, self.hbar, self.o0 = s, e, hbar, o0

    def run(self, q, wid):
        r = self.r
        with r.lock:
            r.offsets.append(self.o0)
        sizes = self.e - self.s
        live = np.flatnonzero(sizes > 0)
        stats = q.worker_stats[wid]
        if live.size == 1:
            k = int(live[0])
            a, b = int(self.s[k]), int(self.e[k])
            r.out[self.o0:self.o0 + b - a] = r.hs[a:b]
            r.hout[self.o0 + 1:self.o0 + b - a] = r.lcps[a + 1:b]
            if r.use_cache:
                r.cout[self.o0 + 1:self.o0 + b - a] = r.ccs[a + 1:b]
            return
        if live.size == 2 and not r.use_cache:
            k1, k2 = int(live[0]), int(live[1])
            binary_merge_kernel(r.arena, r.hs, r.lcps, self.s[k1], self.e[k1], r.hs, r.lcps, self.s[k2],
                                self.e[k2], r.out, r.hout, self.o0, self.hbar, stats)
            return
        cur = self.s.copy()
        end = self.e.copy()
        if r.K > cur.shape[0]:
            pad = np.full(r.K - cur.shape[0], r.hs.shape[0], dtype=np.int64)
            cur = np.concatenate([cur, pad])
            end = np.concatenate([end, pad])
        total = int(sizes.sum())
        done = kway_kernel(r.arena, r.hs, r.lcps, r.ccs, cur, end, r.K, self.hbar, r.use_cache, r.out,
                           r.hout, r.cout, self.o0, stats, q.idle,
                           r.check_every if r.p > 1 else 0, False)
        if done < total:
            nk = self.s.shape[0]
            parts = _lcp_split(r.arena, r.hs, r.lcps, cur[:nk].copy(), end[:nk].copy(), self.hbar,
                               q.threads + 1)
            o = self.o0 + done
            with r.lock:
                r.resplits += 1
            q.resplits += 1
            for s, e, h in parts:
                q.share(_MergeJobRun(r, s, e, h, o))
                o += int((e - s).sum())


def parallel_kway_lcp_merge(arena: np.ndarray, streams: list[MergeStream], p: int, strategy: str = "lcp",
                            f: int = DEFAULT_OVERPARTITION, use_cached_char: bool = False,
                            check_every: int = CHECK_EVERY, stats: SortStats | None = None,
                            seed: int = DEFAULT_SEED, queue: JobQueue | None = None) -> MergeResult:
    """Merge sorted runs in parallel; result equals the sequential K-way merge.

    The merge is cut into about ``f * p`` jobs by ``strategy``. Jobs touching
    one stream are copies, jobs touching two use the binary LCP merge, the
    rest run the tournament tree and every ``check_every`` outputs look for
    idle workers, handing them the unmerged remainder re-cut by the lcp
    rule. LCPs (and cached characters) at job boundaries are recomputed at
    the end.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    hs, lcps, ccs, begin, end, total = _concat(streams, use_cached_char)
    K = pad_pow2(max(1, len(streams)))
    r = _MergeRun(arena, hs, lcps, ccs, total, K, use_cached_char, int(check_every), p)
    q = _queue_for(p, queue)
    if total:
        if p == 1 or len(streams) <= 1:
            parts = [(begin.copy(), end.copy(), 0)]
        else:
            parts = _split(arena, hs, lcps, begin.copy(), end.copy(), strategy, f * p, 0, seed)
        jobs, o = [], 0
        for s, e, h in parts:
            jobs.append(_MergeJobRun(r, s, e, h, o))
            o += int((e - s).sum())
        q.run(jobs)
        fix_boundaries_kernel(arena, r.out, r.hout, r.cout, np.array(r.offsets, dtype=np.int64),
                              use_cached_char)
        r.hout[0] = 0
        if use_cached_char:
            r.cout[0] = arena[r.out[0]]
    _absorb(stats, q, 17 * total)
    return MergeResult(r.out, r.hout, r.cout if use_cached_char else None)


# ---------------------------------------------------------------- partitioned sort


def partitioned_sort(S: StringSet, p: int, K: int = 4, strategy: str = "lcp",
                     stats: SortStats | None = None, **s5_opts) -> SortResult:
    """Sort K contiguous parts concurrently, then merge them in parallel.

    Each part gets ``max(1, p // K)`` workers and produces LCPs and cached
    characters, which the merge uses. ``S.handles`` is overwritten with the
    result.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if p < 1:
        raise ValueError("p must be >= 1")
    parts = [S.with_order(part.copy()) for part in np.array_split(S.handles, K)]
    per = max(1, p // K)
    part_stats = [SortStats() for _ in parts]

    def sort_part(i):
        return parallel_s5(parts[i], per, emit_lcp=True, emit_cached_char=True, stats=part_stats[i],
                           **s5_opts)

    with ThreadPoolExecutor(max_workers=max(1, min(K, p))) as ex:
        results = list(ex.map(sort_part, range(K)))
    streams = [MergeStream(res.order, res.lcp, res.cached) for res in results]
    merged = parallel_kway_lcp_merge(S.arena, streams, p, strategy, use_cached_char=True, stats=stats)
    S.handles[:] = merged.handles
    if stats is not None:
        for s in part_stats:
            stats.merge(s)
    return SortResult(S.handles, merged.lcp, merged.cached)
