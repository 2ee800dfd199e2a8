import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import gen_random, gen_random2, text_suffixes, url_like
from strsort.seqsort import SortStats, insertion_sort
from strsort.ssss import (VARIANTS, IndexOutOfRange, SampleTooSmall, build_tree, classify, level_of_pre,
                          level_to_pre, pack_key, pre_of_level, pre_to_level, s5_step, select_splitters,
                          seq_s5, splitter_lcp)
from strsort.strset import from_strings, lcp_array_oracle, oracle_sort, verify

WORDS = st.lists(st.binary(min_size=0, max_size=14).map(lambda b: b.replace(b"\0", b"\1")), max_size=80)


def key_of(b: bytes) -> int:
    return int.from_bytes(b[:8].ljust(8, b"\0"), "big")


def bucket_oracle(keys, x):
    """Even bucket 2i for x[i-1] < c < x[i], odd 2i+1 for the leftmost x[i] == c."""
    x = np.asarray(x, dtype=np.uint64)
    i = np.searchsorted(x, keys, side="left")
    hit = (i < x.size) & (x[np.minimum(i, x.size - 1)] == keys)
    return np.where(hit, 2 * i + 1, 2 * i)


def inorder_ranks(d):
    """Rank (1-based) of each level-order node in an explicitly walked perfect tree."""
    v = (1 << d) - 1
    rank, stack, node, r = {}, [], 1, 0
    while stack or node <= v:
        while node <= v:
            stack.append(node)
            node *= 2
        node = stack.pop()
        r += 1
        rank[node] = r
        node = 2 * node + 1
    return rank


def test_pack_key_examples():
    S = from_strings([b"a", b"b", b"abc"])
    h = S.handles
    assert pack_key(S, h[0], 0) < pack_key(S, h[1], 0)
    assert pack_key(S, h[2], 1) >> 56 == ord("b")
    assert pack_key(S, h[0], 0) == ord("a") << 56


@given(st.lists(st.binary(max_size=12).map(lambda b: b.replace(b"\0", b"\1")), min_size=2, max_size=2),
       st.integers(0, 3))
def test_pack_key_order(pair, depth):
    S = from_strings(pair)
    a, b = (p[depth:] if depth <= len(p) else b"" for p in pair)
    ka = pack_key(S, S.handles[0], min(depth, len(pair[0])))
    kb = pack_key(S, S.handles[1], min(depth, len(pair[1])))
    assert (ka < kb) == (a[:8] < b[:8])
    assert (ka == kb) == (a[:8] == b[:8])


def test_splitter_lcp_examples():
    assert splitter_lcp(5, 5) == 8
    assert splitter_lcp(1 << 56, 2 << 56) == 0


@given(st.binary(min_size=8, max_size=8), st.binary(min_size=8, max_size=8))
def test_splitter_lcp_matches_chars(a, b):
    k = 0
    while k < 8 and a[k] == b[k]:
        k += 1
    assert splitter_lcp(key_of(a), key_of(b)) == k


def test_level_pre_witness():
    assert level_to_pre(0b0101, 4) == 0b0110
    assert pre_to_level(0b0110, 4) == 0b0101
    assert level_of_pre(0b0101, 4) == 0b0110 and pre_of_level(0b0110, 4) == 0b0101


@pytest.mark.parametrize("d", range(1, 13))
def test_level_pre_against_tree_walk(d):
    rank = inorder_ranks(d)
    for lv in range(1, 1 << d):
        p = level_to_pre(lv, d)
        assert p == rank[lv]
        assert pre_to_level(p, d) == lv
    assert level_to_pre(1, d) == 1 << (d - 1)


def test_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        level_to_pre(0, 3)
    with pytest.raises(IndexOutOfRange):
        pre_to_level(8, 3)


def test_select_splitters_distinct_picks_odd_positions():
    sample = np.arange(100, 115, dtype=np.uint64)
    assert select_splitters(sample, 7).tolist() == sample[1::2].tolist()


def test_select_splitters_skips_equal():
    assert select_splitters(np.array([1, 1, 2, 3, 3], np.uint64), 3).tolist() == [1, 2, 3]


def test_select_splitters_all_equal():
    assert select_splitters(np.full(15, 9, np.uint64), 7).tolist() == [9] * 7


def test_select_splitters_too_small():
    with pytest.raises(SampleTooSmall):
        select_splitters(np.arange(3, dtype=np.uint64), 7)


def test_build_tree_heap_order():
    x = np.arange(10, 10 + 31, dtype=np.uint64)
    tree = build_tree(x)
    rank = inorder_ranks(5)
    for lv in range(1, 32):
        assert tree.t[lv] == x[rank[lv] - 1]
    assert tree.lcps[0] == 0 and tree.lcps[-1] == 0


def test_classify_three_way():
    m = key_of(b"m")
    tree = build_tree(np.array([m], np.uint64))
    keys = np.array([key_of(b"a"), m, key_of(b"z")], np.uint64)
    for v in VARIANTS:
        assert classify(keys, tree, v).tolist() == [0, 1, 2]


@pytest.mark.parametrize("d", [1, 2, 10])
@pytest.mark.parametrize("dups", [False, True])
def test_classify_matches_oracle(d, dups):
    rng = np.random.default_rng(d)
    v = (1 << d) - 1
    pool = rng.integers(0, 1 << 62, size=2 * v + 1, dtype=np.uint64)
    if dups:
        pool = pool % np.uint64(max(2, v // 3))
    x = select_splitters(np.sort(pool), v)
    tree = build_tree(x)
    keys = np.concatenate([rng.integers(0, 1 << 62, size=20_000, dtype=np.uint64) % (pool.max() + np.uint64(2)),
                           x])
    want = bucket_oracle(keys, x)
    for var in VARIANTS:
        for y in (1, 4, 7):
            assert np.array_equal(classify(keys, tree, var, y), want)


def test_s5_step_single_bucket_low():
    S = from_strings([b"a%03d" % i for i in range(200)] + [b"zzzz"])
    lay, shadow, tree = s5_step(S, 0, 200, 0, levels=3)
    # all keys sit strictly between splitters or equal to them; buckets cover the region
    assert lay.counts.sum() == 200
    assert np.array_equal(np.sort(shadow[:200]), np.sort(S.handles[:200]))


def test_s5_step_identical_long_strings():
    S = from_strings([b"x" * 20] * 100)
    lay, shadow, tree = s5_step(S, levels=2)
    nz = np.flatnonzero(lay.counts)
    assert nz.size == 1 and nz[0] % 2 == 1
    assert lay.advance[nz[0]] == 8 and not lay.done[nz[0]]


def test_s5_step_then_insertion_gives_oracle():
    S = gen_random(10_000, 5)
    orig = S.handles.copy()
    lay, shadow, tree = s5_step(S, levels=4)
    T = S.with_order(shadow.copy())
    for b in range(lay.counts.size):
        lo = int(lay.offsets[b])
        insertion_sort(T, lo, lo + int(lay.counts[b]))
    assert verify(T, orig)
    assert T.strings() == S.with_order(oracle_sort(S)).strings()


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("levels", [2, 10])
def test_seq_s5_with_lcp(variant, levels):
    for S in (gen_random(100_000, 3), gen_random2(30_000, 4), url_like(20_000, 1), text_suffixes(20_000, 2)):
        orig = S.handles.copy()
        r = seq_s5(S, emit_lcp=True, emit_cached_char=True, variant=variant, levels=levels,
                   sample_threshold=1 << 12, debug=True)
        assert verify(S, orig, r.lcp)
        want = np.array([S.arena[h + lc] for h, lc in zip(S.handles, r.lcp)], dtype=np.uint8)
        assert np.array_equal(r.cached, want)


def test_seq_s5_tiny_is_insertion():
    S = gen_random(31, 2)
    T = S.copy()
    seq_s5(S)
    insertion_sort(T)
    assert np.array_equal(S.handles, T.handles)


def test_seq_s5_stats_and_unknown_variant():
    st_ = SortStats()
    seq_s5(gen_random(5000, 1), stats=st_, sample_threshold=1024)
    assert st_.char_cmp > 0 and st_.string_access > 0 and st_.bytes_aux > 0
    with pytest.raises(ValueError):
        seq_s5(gen_random(10, 1), variant="X")


@given(WORDS, st.sampled_from(VARIANTS))
def test_property_seq_s5(items, variant):
    S = from_strings(items)
    r = seq_s5(S, emit_lcp=True, variant=variant, levels=2, sample_threshold=32)
    assert S.strings() == sorted(items)
    assert np.array_equal(r.lcp[1:], lcp_array_oracle(S)[1:])


@given(st.lists(st.integers(0, 40), min_size=1, max_size=300), st.integers(1, 5))
def test_property_classify_contract(vals, d):
    v = (1 << d) - 1
    sample = np.sort(np.array(vals * (2 * v + 1), dtype=np.uint64)[: 2 * v + 1])
    x = select_splitters(sample, v)
    tree = build_tree(x)
    keys = np.arange(0, 45, dtype=np.uint64)
    want = bucket_oracle(keys, x)
    for var in VARIANTS:
        got = classify(keys, tree, var)
        assert np.array_equal(got, want)
