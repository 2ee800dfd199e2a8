import numpy as np
import pytest
from hypothesis import given, strategies as st

from strsort.benchcli import gen_random, gen_random2
from strsort.strset import (EmbeddedZeroByte, NotSorted, StringSet, build_from_lines, build_suffixes,
                            distinguishing_prefix_bruteforce, from_strings, lcp, lcp_array_oracle, metrics,
                            oracle_sort, verify)

bodies = st.lists(st.binary(min_size=0, max_size=12).map(lambda b: b.replace(b"\0", b"\1")), max_size=60)
small_alpha = st.lists(st.text(alphabet="ab", max_size=8).map(str.encode), max_size=40)


def sorted_set(items):
    return from_strings(sorted(items))


def test_lines_basic():
    S = build_from_lines(b"b\na\n")
    assert S.n == 2
    assert S.strings() == [b"b", b"a"]


def test_lines_crlf_and_trailing_record():
    S = build_from_lines(b"x\r\ny\nlast")
    assert S.strings() == [b"x", b"y", b"last"]


def test_lines_empty():
    assert build_from_lines(b"").n == 0


def test_embedded_zero():
    with pytest.raises(EmbeddedZeroByte) as e:
        build_from_lines(b"abc\0def")
    assert e.value.offset == 3


def test_suffixes():
    S = build_suffixes(b"ab")
    assert S.strings() == [b"ab", b"b"]
    assert S.arena.tobytes() == b"ab\0"
    assert build_suffixes(b"").n == 0


def test_suffix_oracle_order():
    S = build_suffixes(b"aaa")
    assert S.with_order(oracle_sort(S)).strings() == [b"a", b"aa", b"aaa"]


def test_arena_read_only():
    S = from_strings([b"a"])
    with pytest.raises(ValueError):
        S.arena[0] = 1


def test_lcp_examples(abab):
    S = from_strings([b"a", b"ab", b"abc", b"abc"])
    h = S.handles
    assert lcp(S, h[0], h[1]) == 1
    assert lcp(S, h[2], h[3]) == 3
    assert lcp_array_oracle(abab)[1:].tolist() == [1, 0, 1]


def test_lcp_array_oracle():
    assert lcp_array_oracle(from_strings([b"a", b"aa", b"ab"]))[1:].tolist() == [1, 1]
    assert lcp_array_oracle(from_strings([b"x"])).size == 1
    with pytest.raises(NotSorted):
        lcp_array_oracle(from_strings([b"b", b"a"]))


def test_metrics_witness(abab):
    m = metrics(abab, lcp_array_oracle(abab))
    assert (m.D, m.L) == (8, 2)
    assert m.D == 2 * m.L + m.n


def test_metrics_distinct_single_chars():
    S = from_strings([bytes([c]) for c in range(65, 91)])
    m = metrics(S, lcp_array_oracle(S))
    assert m.L == 0 and m.D == S.n


# frozen from the brute-force character-counting pass and pairwise LCPs on the
# naively sorted bodies
FROZEN_METRICS = {
    ("random", 1000, 7): (10767, 2035, 905),
    ("random2", 500, 3): (5192, 3720, 2801),
}


@pytest.mark.parametrize("key", sorted(FROZEN_METRICS))
def test_metrics_frozen(key):
    gen = gen_random if key[0] == "random" else gen_random2
    S = gen(key[1], key[2])
    S = S.with_order(oracle_sort(S))
    m = metrics(S, lcp_array_oracle(S))
    assert (m.N, m.D, m.L) == FROZEN_METRICS[key]
    assert m.D == distinguishing_prefix_bruteforce(S.strings())


def test_oracle_sort_examples():
    S = from_strings([b"b", b"a", b"c"])
    assert S.with_order(oracle_sort(S)).strings() == [b"a", b"b", b"c"]
    assert oracle_sort(from_strings([])).size == 0


def test_oracle_matches_sorted_values():
    S = gen_random(10_000, 3)
    assert S.with_order(oracle_sort(S)).strings() == sorted(S.strings())


def test_verify_pass_and_failures():
    S = gen_random(200, 1)
    orig = S.handles.copy()
    T = S.with_order(oracle_sort(S))
    H = lcp_array_oracle(T)
    assert verify(T, orig, H)

    dup = T.handles.copy()
    dup[7] = dup[6]
    r = verify(S.with_order(dup), orig)
    assert not r and r.kind == "permutation" and r.index == 7

    bad = H.copy()
    bad[5] += 1
    r = verify(T, orig, bad)
    assert not r and r.kind == "lcp" and r.index == 5

    rev = T.handles[::-1].copy()
    r = verify(S.with_order(rev), orig)
    assert not r and r.kind == "order"


@given(bodies)
def test_lcp_symmetric_and_self(items):
    S = from_strings(items)
    h = S.handles
    for i in range(len(items)):
        assert lcp(S, h[i], h[i]) == len(items[i])
        j = (i * 7 + 3) % len(items)
        assert lcp(S, h[i], h[j]) == lcp(S, h[j], h[i])


@given(small_alpha)
def test_d_between_l_bounds_and_bruteforce_d(items):
    S = sorted_set(items)
    m = metrics(S, lcp_array_oracle(S))
    assert m.n + m.L <= m.D <= 2 * m.L + m.n
    assert m.D == distinguishing_prefix_bruteforce(sorted(items))


@given(bodies)
def test_oracle_sort_is_sorted_permutation(items):
    S = from_strings(items)
    T = S.with_order(oracle_sort(S))
    assert verify(T, S.handles, lcp_array_oracle(T))
    assert T.strings() == sorted(items)


@given(st.lists(st.binary(max_size=10).map(lambda b: b.replace(b"\0", b"").replace(b"\n", b"").replace(b"\r", b"")),
                max_size=30))
def test_lines_roundtrip(items):
    S = build_from_lines(b"".join(s + b"\n" for s in items))
    assert S.strings() == items
