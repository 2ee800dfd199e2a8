"""Small kernels shared by several sorters: key packing, word LCPs, string LCPs."""
from __future__ import annotations

import numpy as np

from ._jit import jit

W = 8  # characters per packed key word
T_I = 32  # insertion-sort threshold for small regions

_U0 = np.uint64(0)
_U8 = np.uint64(8)
_UFF = np.uint64(0xFF)

# columns of the int64 stats vector handed to every kernel
CMP, ACC, AUX, BAD = 0, 1, 2, 3
NSTATS = 4


@jit
def load_key(arena, pos):
    """Pack up to 8 characters from ``arena[pos:]`` big-endian, zero padded."""
    key = _U0
    k = 0
    while k < 8:
        c = arena[pos + k]
        key = (key << _U8) | np.uint64(c)
        k += 1
        if c == 0:
            break
    if k < 8:
        key = key << np.uint64(8 * (8 - k))
    return key


@jit
def key_lcp(a, b):
    """Number of equal leading characters of two key words (8 if equal)."""
    x = a ^ b
    if x == _U0:
        return 8
    n = 0
    while ((x >> np.uint64(56 - 8 * n)) & _UFF) == _U0:
        n += 1
    return n


@jit
def key_has_term(key):
    # after a zero byte everything is zero, so the last byte decides
    return (key & _UFF) == _U0


@jit
def key_body_len(key):
    """Characters before the first zero byte of a key word."""
    n = 0
    while n < 8 and ((key >> np.uint64(56 - 8 * n)) & _UFF) != _U0:
        n += 1
    return n


@jit
def str_lcp(arena, a, b, start):
    i = start
    while arena[a + i] == arena[b + i] and arena[a + i] != 0:
        i += 1
    return i


@jit
def str_less(arena, a, b):
    """True iff string a < string b."""
    i = 0
    while arena[a + i] == arena[b + i] and arena[a + i] != 0:
        i += 1
    return arena[a + i] < arena[b + i]


@jit
def str_leq(arena, a, b):
    i = 0
    while arena[a + i] == arena[b + i] and arena[a + i] != 0:
        i += 1
    return arena[a + i] <= arena[b + i]


@jit
def fill_cached_chars(arena, order, lcp, out):
    """out[i] = s_i[h_i], the first character after the shared prefix."""
    for i in range(order.shape[0]):
        out[i] = arena[order[i] + lcp[i]]


def new_stats() -> np.ndarray:
    return np.zeros(NSTATS, dtype=np.int64)
