"""Shared inputs and the acceptance-line collector."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from strsort.benchcli import gen_random, gen_random2
from strsort.strset import StringSet, build_suffixes, from_strings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, status: str, detail: str) -> str:
    line = f"criterion {criterion:2d}: {status:4s} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------- generators


def url_like(n: int, seed: int = 0) -> StringSet:
    """Synthetic URL-ish lines with long shared prefixes (a test fixture only)."""
    rng = np.random.default_rng(seed)
    hosts = [b"http://www.example.com/", b"http://www.example.org/wiki/", b"https://docs.example.net/a/b/",
             b"http://www.example.com/shop/item/"]
    words = [b"index", b"page", b"article", b"category", b"view", b"id", b"list"]
    out = []
    for _ in range(n):
        h = hosts[rng.integers(len(hosts))]
        path = b"/".join(words[rng.integers(len(words))] for _ in range(rng.integers(1, 4)))
        out.append(h + path + b"?q=%d" % rng.integers(0, 5000))
    return from_strings(out)


def text_suffixes(n: int, seed: int = 0, alphabet: bytes = b"acgt") -> StringSet:
    rng = np.random.default_rng(seed)
    a = np.frombuffer(alphabet, dtype=np.uint8)
    return build_suffixes(a[rng.integers(0, a.size, size=n)].tobytes())


def unique_random(n: int, seed: int = 0) -> StringSet:
    S = gen_random(int(n * 1.2) + 10, seed)
    seen, keep = set(), []
    for s in S.strings():
        if s not in seen:
            seen.add(s)
            keep.append(s)
        if len(keep) == n:
            break
    return from_strings(keep)


def adversarial() -> dict[str, StringSet]:
    rng = np.random.default_rng(11)
    prefixes = [b"a" * k for k in range(1, 301)]
    rng.shuffle(prefixes)
    return {
        "all-equal": from_strings([b"abcdefghij" * 4] * 1000),
        "all-prefixes": from_strings(prefixes),
        "empty": from_strings([]),
        "n1": from_strings([b"solo"]),
        "empty-strings": from_strings([b""] * 500 + [b"x"] * 3),
        "long-equal-64": from_strings([b"q" * 64] * 300),
    }


def suite(big: bool = True) -> list[tuple[str, StringSet]]:
    """Correctness-suite instances; ``big`` adds the 10^5 and 10^6 sets."""
    out = [(f"random-{n}", gen_random(n, n)) for n in (0, 1, 2, 31, 32, 33, 1000)]
    out += [("random2-1000", gen_random2(1000, 5)), ("suffixes-3000", text_suffixes(3000, 2)),
            ("urls-2000", url_like(2000, 3))]
    out += sorted(adversarial().items())
    if big:
        out += [("random-100000", gen_random(100_000, 1)), ("random2-100000", gen_random2(100_000, 2)),
                ("suffixes-100000", text_suffixes(100_000, 4)), ("urls-50000", url_like(50_000, 5)),
                ("random-1000000", gen_random(1_000_000, 6)), ("random2-1000000", gen_random2(1_000_000, 7))]
    return out


@pytest.fixture
def abab() -> StringSet:
    return from_strings([b"a", b"ab", b"b", b"bb"])
