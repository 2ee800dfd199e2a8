"""Acceptance run: one PASS/FAIL/WARN line per criterion.

Lines are printed as each test finishes and repeated in the terminal summary
under "acceptance".
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import gen_random, gen_random2, record, suite, text_suffixes, unique_random, url_like
from strsort import lcpmerge, parsort, seqsort, ssss
from strsort.benchcli import load_input, parse_result_line
from strsort.lcpmerge import MergeStream
from strsort.seqsort import SortStats
from strsort.ssss import VARIANTS, build_tree, classify, level_to_pre, pre_to_level, select_splitters
from strsort._kernels import fill_cached_chars
from strsort.strset import from_strings, lcp_array_oracle, metrics, oracle_sort, verify

QUADRATIC_CAP = 10_000
P_ACC = 4


def _inplace(f):
    def g(S):
        f(S)
        return S.handles, None
    return g


def _merged(f):
    def g(S):
        r = f(S)
        return r.handles, r.lcp
    return g


def _lcp_ins(S):
    H = lcpmerge.lcp_insertion_sort(S)
    return S.handles, H


def _with_lcp(f):
    def g(S):
        r = f(S)
        return r.order, r.lcp
    return g


def _pmerge(strategy, p=P_ACC, K=4):
    """Sort K contiguous runs sequentially, then merge them in parallel."""
    def g(S):
        streams = []
        for part in np.array_split(S.handles, K):
            T = S.with_order(part.copy())
            r = ssss.seq_s5(T, emit_lcp=True, emit_cached_char=True)
            streams.append(MergeStream(r.order, r.lcp, r.cached))
        m = parsort.parallel_kway_lcp_merge(S.arena, streams, p, strategy, use_cached_char=True)
        return m.handles, m.lcp
    return g


SORTERS = {
    "insertion": _inplace(lambda S: seqsort.insertion_sort(S)),
    "mkqs": _inplace(lambda S: seqsort.multikey_quicksort(S)),
    "caching-mkqs": _inplace(lambda S: seqsort.caching_mkqs(S)),
    **{f"radix-{v}": _inplace(lambda S, v=v: seqsort.radix_sort(S, v)) for v in seqsort.RADIX_VARIANTS},
    **{f"seq-s5-{v}": _with_lcp(lambda S, v=v: ssss.seq_s5(S, emit_lcp=True, variant=v)) for v in VARIANTS},
    "lcp-mergesort": _merged(lcpmerge.binary_lcp_mergesort),
    "lcp-mergesort-k4": _merged(lambda S: lcpmerge.kway_lcp_mergesort(S, 4)),
    "lcp-mergesort-k16": _merged(lambda S: lcpmerge.kway_lcp_mergesort(S, 16)),
    "lcp-insertion": _lcp_ins,
    "ps5": _with_lcp(lambda S: parsort.parallel_s5(S, P_ACC, emit_lcp=True)),
    "pmkqs": _inplace(lambda S: parsort.parallel_mkqs(S, P_ACC)),
    "pradix-8": _inplace(lambda S: parsort.parallel_radix(S, P_ACC, 8)),
    "pradix-16": _inplace(lambda S: parsort.parallel_radix(S, P_ACC, 16)),
    **{f"pmerge-{s}": _pmerge(s) for s in parsort.STRATEGIES},
    "partitioned-sort": _with_lcp(lambda S: parsort.partitioned_sort(S, P_ACC, 4)),
}
QUADRATIC = {"insertion", "lcp-insertion"}


@pytest.fixture(scope="module")
def instances():
    return suite(big=True)


def _sorted_with_lcp(S):
    T = S.with_order(oracle_sort(S))
    return T, lcp_array_oracle(T)


def test_criterion_01_correctness_suite(instances):
    t0 = time.perf_counter()
    fails, runs = [], 0
    for name, f in SORTERS.items():
        for label, S in instances:
            if name in QUADRATIC and S.n > QUADRATIC_CAP:
                continue
            T = S.copy()
            order, _ = f(T)
            runs += 1
            rep = verify(S.with_order(order), S.handles)
            if not rep:
                fails.append(f"{name}/{label}: {rep.kind}@{rep.index}")
    dt = time.perf_counter() - t0
    status = "PASS" if not fails and dt < 600 else "FAIL"
    record(1, status, f"{runs} sorter/input runs, {len(fails)} failures, {dt:.1f}s "
                      f"(quadratic sorters capped at n<={QUADRATIC_CAP}) {fails[:3]}")
    assert not fails and dt < 600


def test_criterion_02_distinguishing_prefix_bounds():
    rng = np.random.default_rng(2)
    bad = 0
    for i in range(1000):
        n = int(rng.integers(0, 200))
        k = int(rng.integers(1, 5))
        lens = rng.integers(0, 12, size=n)
        items = [bytes(rng.integers(97, 97 + k, size=m).astype(np.uint8)) for m in lens]
        T, H = _sorted_with_lcp(from_strings(items))
        m = metrics(T, H)
        bad += not (m.n + m.L <= m.D <= 2 * m.L + m.n)
    T, H = _sorted_with_lcp(from_strings([b"a", b"ab", b"b", b"bb"]))
    w = metrics(T, H)
    ok = bad == 0 and w.D == 8 == 2 * w.L + w.n
    record(2, "PASS" if ok else "FAIL", f"1000 instances, {bad} violations; witness D={w.D}, 2L+n={2 * w.L + w.n}")
    assert ok


def test_criterion_03_level_preorder_bijection():
    bad = 0
    for d in range(1, 13):
        v = (1 << d) - 1
        pre = [level_to_pre(i, d) for i in range(1, v + 1)]
        bad += sorted(pre) != list(range(1, v + 1))
        bad += any(pre_to_level(p, d) != i for i, p in enumerate(pre, 1))
    witness = level_to_pre(0b0101, 4)
    ok = bad == 0 and witness == 0b0110 and pre_to_level(0b0110, 4) == 0b0101
    record(3, "PASS" if ok else "FAIL", f"depths 1..12 exhaustive, {bad} mismatches; 0101 -> {witness:04b}")
    assert ok


def _bound_instances():
    rng = np.random.default_rng(4)
    gens = (gen_random, gen_random2, url_like, text_suffixes)
    for i in range(100):
        n = int(np.exp(rng.uniform(np.log(2), np.log(100_000))))
        yield f"{gens[i % 4].__name__}-{n}", gens[i % 4](n, i)
    yield "all-equal", from_strings([b"abcdefghij" * 4] * 1000)


def _pow_ceil(n, K):
    d, x = 0, 1
    while x < n:
        x *= K
        d += 1
    return d


def test_criterion_04_comparison_bounds():
    rng = np.random.default_rng(5)
    viol = {"binary": 0, "kway-merge": 0, "kway-sort": 0, "insertion": 0}
    count = 0
    for label, S in _bound_instances():
        count += 1
        n = S.n
        T, H = _sorted_with_lcp(S)
        m = metrics(T, H)

        st = SortStats()
        lcpmerge.binary_lcp_mergesort(S, st)
        viol["binary"] += st.char_cmp > m.L + n * math.ceil(math.log2(max(n, 1)))

        K = int(2 ** rng.integers(1, 5))
        part = rng.integers(0, K, size=n)
        streams, L_in = [], 0
        for k in range(K):
            sub, Hs = _sorted_with_lcp(S.with_order(S.handles[part == k]))
            streams.append(MergeStream(sub.handles.copy(), Hs))
            L_in += int(Hs[1:].sum())
        st = SortStats()
        lcpmerge.kway_lcp_merge(S.arena, streams, stats=st)
        viol["kway-merge"] += st.char_cmp > (m.L - L_in) + n * math.log2(K) + K

        K = (2, 4, 16)[count % 3]
        st = SortStats()
        lcpmerge.kway_lcp_mergesort(S, K, st)
        viol["kway-sort"] += st.char_cmp > m.L + n * _pow_ceil(n, K) * math.log2(K) + (n - 1) * K / (K - 1)

        if n <= 3000:
            U = S.copy()
            st = SortStats()
            lcpmerge.lcp_insertion_sort(U, stats=st)
            viol["insertion"] += st.char_cmp > m.L + n * (n - 1) // 2
    ok = not any(viol.values())
    record(4, "PASS" if ok else "FAIL", f"{count} instances (n<=1e5, incl. all-equal; insertion n<=3000), "
                                        f"violations {viol}")
    assert ok


def test_criterion_05_caching_mkqs_accesses(instances):
    worst, bad = 0.0, []
    for label, S in instances:
        T = S.copy()
        st = SortStats()
        seqsort.caching_mkqs(T, stats=st)
        m = metrics(T, lcp_array_oracle(T))
        limit = m.D // 8 + m.n
        if st.string_access > limit:
            bad.append(label)
        if limit:
            worst = max(worst, st.string_access / limit)
    record(5, "PASS" if not bad else "FAIL", f"{len(instances)} instances, max accesses/bound = {worst:.3f} {bad}")
    assert not bad


def _runs_of(S, K, seed):
    rng = np.random.default_rng(seed)
    part = rng.integers(0, K, size=S.n)
    out = []
    for k in range(K):
        sub, Hs = _sorted_with_lcp(S.with_order(S.handles[part == k]))
        c = np.empty(sub.n, dtype=np.uint8)
        fill_cached_chars(sub.arena, sub.handles, Hs, c)
        out.append(MergeStream(sub.handles.copy(), Hs, c))
    return out


LCP_PATHS = {
    **{f"seq-s5-{v}": SORTERS[f"seq-s5-{v}"] for v in VARIANTS},
    "ps5": SORTERS["ps5"],
    "lcp-mergesort": SORTERS["lcp-mergesort"],
    "lcp-mergesort-k4": SORTERS["lcp-mergesort-k4"],
    "lcp-mergesort-k16": SORTERS["lcp-mergesort-k16"],
    "lcp-insertion": SORTERS["lcp-insertion"],
    "kway-merge": lambda S: (lambda r: (r.handles, r.lcp))(lcpmerge.kway_lcp_merge(S.arena, _runs_of(S, 8, 1))),
    "kway-merge-cached": lambda S: (lambda r: (r.handles, r.lcp))(
        lcpmerge.kway_lcp_merge(S.arena, _runs_of(S, 5, 2), use_cached_char=True)),
    **{f"pmerge-{s}": SORTERS[f"pmerge-{s}"] for s in parsort.STRATEGIES},
    "partitioned-sort": SORTERS["partitioned-sort"],
}


def test_criterion_06_lcp_equivalence(instances):
    bad, runs = [], 0
    for name, f in LCP_PATHS.items():
        for label, S in instances:
            if name == "lcp-insertion" and S.n > QUADRATIC_CAP:
                continue
            order, H = f(S.copy())
            runs += 1
            T = S.with_order(order)
            want = lcp_array_oracle(T)
            got = np.asarray(H, dtype=np.int64).copy()
            if got.size:
                got[0] = 0
            if not np.array_equal(got, want):
                bad.append(f"{name}/{label}")
    record(6, "PASS" if not bad else "FAIL", f"{runs} LCP-emitting runs, {len(bad)} mismatches {bad[:3]}")
    assert not bad


def test_criterion_07_classifier_variants():
    rng = np.random.default_rng(7)
    bad, cases = 0, 0
    for v in (1, 3, 1023):
        for dup in (False, True):
            pool = rng.integers(0, 1 << 63, size=2 * v + 1, dtype=np.uint64)
            if dup:
                pool = pool % np.uint64(max(2, v // 4))
            x = select_splitters(np.sort(pool), v)
            tree = build_tree(x)
            hi = pool.max() + np.uint64(2)
            keys = rng.integers(0, 1 << 63, size=100_000, dtype=np.uint64) % hi
            keys[::10] = x[rng.integers(0, v, size=keys[::10].size)]
            outs = [classify(keys, tree, var) for var in VARIANTS]
            cases += 1
            bad += not all(np.array_equal(outs[0], o) for o in outs[1:])
    record(7, "PASS" if not bad else "FAIL", f"{cases} trees (v in 1,3,1023; with and without duplicate "
                                             f"splitters), 10^5 keys each, {bad} disagreements")
    assert not bad


def test_criterion_08_parallel_equals_sequential():
    inputs = [("random", gen_random(100_000, 8)), ("random2", gen_random2(100_000, 8)),
              ("urls", url_like(20_000, 8)), ("suffixes", text_suffixes(30_000, 8))]
    unique = unique_random(50_000, 8)

    def streams_of(S):
        return _runs_of(S, 8, 3)

    pairs = {
        "ps5": (lambda S, p: parsort.parallel_s5(S, p).order, lambda S: ssss.seq_s5(S).order),
        "pmkqs": (lambda S, p: parsort.parallel_mkqs(S, p).order,
                  lambda S: (seqsort.caching_mkqs(S), S.handles)[1]),
        "pradix-8": (lambda S, p: parsort.parallel_radix(S, p, 8).order,
                     lambda S: (seqsort.radix_sort(S, "CI2"), S.handles)[1]),
        "pradix-16": (lambda S, p: parsort.parallel_radix(S, p, 16).order,
                      lambda S: (seqsort.radix_sort(S, "CI3_16"), S.handles)[1]),
        **{f"pmerge-{s}": ((lambda S, p, s=s: parsort.parallel_kway_lcp_merge(S.arena, streams_of(S), p, s).handles),
                           lambda S: lcpmerge.kway_lcp_merge(S.arena, streams_of(S)).handles)
           for s in parsort.STRATEGIES},
        "partitioned-sort": (lambda S, p: parsort.partitioned_sort(S, p, 4).order, lambda S: ssss.seq_s5(S).order),
    }
    bad, runs = [], 0
    for name, (par, seq) in pairs.items():
        for label, S in inputs:
            want = S.with_order(seq(S.copy())).strings()
            for p in (1, 2, 4, 8):
                runs += 1
                if S.with_order(par(S.copy(), p)).strings() != want:
                    bad.append(f"{name}/{label}/p={p}")
        want = seq(unique.copy()).copy()
        for p in (1, 2, 4, 8):
            runs += 1
            if not np.array_equal(par(unique.copy(), p), want):
                bad.append(f"{name}/unique/p={p}")
    record(8, "PASS" if not bad else "FAIL", f"{runs} parallel runs vs sequential, {len(bad)} differ {bad[:3]}")
    assert not bad


def test_criterion_09_speedup_sanity():
    cores = os.cpu_count() or 1
    if cores < 4:
        record(9, "WARN", f"only {cores} CPU core(s) visible; the 4-core speedup check needs >= 4 cores")
        return
    S = load_input("random", size="100MiB", seed=9)
    times = {}
    for p in (1, 4):
        T = S.copy()
        parsort.parallel_s5(T.with_order(T.handles[:4096].copy()), p)  # warm-up
        t0 = time.perf_counter()
        parsort.parallel_s5(T, p)
        times[p] = time.perf_counter() - t0
    ratio = times[4] / times[1]
    status = "PASS" if ratio <= 0.6 else "WARN"
    record(9, status, f"n={S.n}, p=1 {times[1]:.2f}s, p=4 {times[4]:.2f}s, ratio {ratio:.2f} (target <= 0.6)")


def test_criterion_10_result_lines(tmp_path):
    src = tmp_path / "words.txt"
    rng = np.random.default_rng(10)
    src.write_bytes(b"".join(b"w%05d/%d\n" % (rng.integers(0, 3000), rng.integers(0, 9)) for _ in range(4000)))
    runs = [("seq-s5-uic", "random", "20000", "lines"), ("pmkqs", "random2", "20000", "lines"),
            ("lcp-mergesort-k4", f"file:{src}", "3000", "lines"), ("partsort-lcp", "random", "64KiB", "lines"),
            ("radix-ci2", "random2", "5000", "suffixes")]
    bad = []
    for algo, inp, size, mode in runs:
        res = subprocess.run([sys.executable, "-m", "strsort", "--algo", algo, "--input", inp, "--size", size,
                              "--mode", mode, "--reps", "2", "--threads", "2", "--seed", "3", "--verify",
                              "--stats"], capture_output=True, text=True, timeout=600)
        lines = [ln for ln in res.stdout.splitlines() if ln.startswith("RESULT ")]
        if res.returncode != 0 or len(lines) != 1:
            bad.append(f"{algo}: exit {res.returncode}")
            continue
        row = parse_result_line(lines[0])
        T, H = _sorted_with_lcp(load_input(inp, mode, size, 3))
        m = metrics(T, H)
        if (row["n"], row["N"], row["D"], row["L"]) != (m.n, m.N, m.D, m.L) or row["verified"] != 1:
            bad.append(f"{algo}: {row} vs {m}")
    record(10, "PASS" if not bad else "FAIL", f"{len(runs)} CLI runs parsed, n/N/D/L recomputed; {bad}")
    assert not bad
