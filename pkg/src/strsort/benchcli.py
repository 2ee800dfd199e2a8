"""Benchmark harness.

Generates or loads a string set, runs one registered sorter a number of
times, and prints a single machine-readable line::

    RESULT algo=seq-s5-uic input=random n=100000 N=1050321 D=... time_ms=...

Only the sort itself is timed. Before every repetition the order array is
rebuilt from the arena, so no repetition sees the output of the previous one.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import re
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import lcpmerge, parsort, seqsort, ssss
from ._jit import BACKEND
from .seqsort import SortStats
from .strset import (NotSorted, StringSet, build_from_lines, build_suffixes, lcp_array_oracle, metrics,
                     oracle_sort, verify)

__all__ = [
    "BenchConfig",
    "ResultRow",
    "RESULT_KEYS",
    "UnknownAlgorithm",
    "InputLoadError",
    "VerificationFailed",
    "gen_random",
    "gen_random2",
    "parse_size",
    "load_input",
    "register_algorithm",
    "unregister_algorithm",
    "list_algorithms",
    "run",
    "format_result",
    "parse_result_line",
    "main",
]

log = logging.getLogger("strsort.bench")

RESULT_KEYS = ("algo", "input", "n", "N", "D", "L", "time_ms", "threads", "reps", "char_cmp",
               "string_access", "peak_aux_bytes", "verified")


class UnknownAlgorithm(KeyError):
    pass


class InputLoadError(ValueError):
    pass


class VerificationFailed(RuntimeError):
    pass


# ---------------------------------------------------------------- generators


def _gen(n: int, seed: int, lo: int, hi: int) -> StringSet:
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    lens = rng.integers(0, 20, size=n)
    body = int(lens.sum())
    arena = np.zeros(body + n, dtype=np.uint8)
    starts = np.zeros(n, dtype=np.int64)
    if n:
        starts[1:] = np.cumsum(lens + 1)[:-1]
    mask = np.ones(body + n, dtype=bool)
    mask[starts + lens] = False
    arena[mask] = rng.integers(lo, hi, size=body).astype(np.uint8)
    return StringSet(arena, starts)


def gen_random(n: int, seed: int = 0) -> StringSet:
    """n strings, body length uniform in [0, 20), characters uniform in [33, 127)."""
    return _gen(n, seed, 33, 127)


def gen_random2(n: int, seed: int = 0) -> StringSet:
    """Like :func:`gen_random` over the two characters '0' and '1'."""
    return _gen(n, seed, 48, 50)


_GENERATORS = {"random": (gen_random, 33, 127), "random2": (gen_random2, 48, 50)}

# ---------------------------------------------------------------- sizes and inputs

_SIZE_RE = re.compile(r"^\s*(\d+)\s*(Ki|Mi|Gi|K|M|G)?\s*(B)?\s*$")
_UNITS = {None: 1, "Ki": 1 << 10, "Mi": 1 << 20, "Gi": 1 << 30, "K": 1 << 10, "M": 1 << 20, "G": 1 << 30}


def parse_size(text: str) -> tuple[int, bool]:
    """``"100000"`` -> (100000, False); ``"64MiB"`` -> (67108864, True).

    Units are binary. A trailing ``B`` makes the value a byte cap, otherwise
    it is a string count.
    """
    m = _SIZE_RE.match(str(text))
    if not m:
        raise ValueError(f"bad size {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2)], m.group(3) is not None


def _cap_by_bytes(S: StringSet, limit: int) -> StringSet:
    lens = np.diff(np.append(S.handles, S.arena.size))  # generated sets are contiguous
    keep = int(np.searchsorted(np.cumsum(lens), limit, side="right"))
    return StringSet(S.arena[:int(lens[:keep].sum())], S.handles[:keep])


def load_input(source: str, mode: str = "lines", size: str | int | None = None, seed: int = 0) -> StringSet:
    """Build the input set from a generator name or ``file:PATH``."""
    if mode not in ("lines", "suffixes"):
        raise InputLoadError(f"unknown mode {mode!r}")
    try:
        amount, as_bytes = parse_size(size) if size is not None else (None, False)
    except ValueError as e:
        raise InputLoadError(str(e)) from None
    if source in _GENERATORS:
        gen, lo, hi = _GENERATORS[source]
        if mode == "suffixes":
            length = 100_000 if amount is None else amount
            rng = np.random.default_rng(seed)
            return build_suffixes(rng.integers(lo, hi, size=length).astype(np.uint8).tobytes())
        if amount is None:
            return gen(100_000, seed)
        if not as_bytes:
            return gen(amount, seed)
        S = gen(int(amount / 10.5 * 1.1) + 16, seed)
        return _cap_by_bytes(S, amount)
    if not source.startswith("file:"):
        raise InputLoadError(f"unknown input {source!r} (random, random2 or file:PATH)")
    path = Path(source[5:])
    try:
        data = path.read_bytes()
    except OSError as e:
        raise InputLoadError(f"cannot read {path}: {e}") from None
    try:
        if mode == "suffixes":
            if amount is not None:
                data = data[:amount]
            return build_suffixes(data)
        if amount is not None and as_bytes:
            data = data[:amount]
            cut = data.rfind(b"\n")
            data = data[:cut + 1] if cut >= 0 else data
        S = build_from_lines(data)
    except ValueError as e:
        raise InputLoadError(str(e)) from None
    if amount is not None and not as_bytes and amount < S.n:
        S = StringSet(S.arena, S.handles[:amount])
    return S


# ---------------------------------------------------------------- registry


@dataclass
class BenchConfig:
    algo: str
    input: str = "random"
    mode: str = "lines"
    size: str | None = "100000"
    reps: int = 3
    threads: int = 1
    parts: int = 4
    seed: int = 0
    verify: bool = False
    emit_lcp: bool = False
    count_stats: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.parts < 1:
            raise ValueError("parts must be >= 1")


@dataclass
class ResultRow:
    algo: str
    input: str
    n: int
    N: int
    D: int
    L: int
    time_ms: float
    threads: int
    reps: int
    char_cmp: int | None
    string_access: int | None
    peak_aux_bytes: int | None
    verified: int
    times_ms: list[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict[str, object]:
        return {k: getattr(self, k) for k in RESULT_KEYS}


# sorter signature: (S, cfg, stats) -> (order, lcp or None); may sort S.handles in place
Sorter = Callable[[StringSet, BenchConfig, SortStats], tuple[np.ndarray, "np.ndarray | None"]]


@dataclass
class Algorithm:
    id: str
    module: str
    description: str
    fn: Sorter


_REGISTRY: dict[str, Algorithm] = {}


def register_algorithm(algo_id: str, module: str, description: str, fn: Sorter) -> None:
    _REGISTRY[algo_id] = Algorithm(algo_id, module, description, fn)


def unregister_algorithm(algo_id: str) -> None:
    _REGISTRY.pop(algo_id, None)


def list_algorithms() -> list[Algorithm]:
    return [_REGISTRY[k] for k in sorted(_REGISTRY)]


def _inplace(f):
    def run_(S, cfg, stats):
        f(S, stats)
        return S.handles, None
    return run_


def _merged(f):
    def run_(S, cfg, stats):
        r = f(S, stats)
        return r.handles, r.lcp
    return run_


def _s5(variant):
    def run_(S, cfg, stats):
        r = ssss.seq_s5(S, emit_lcp=cfg.emit_lcp, variant=variant, stats=stats)
        return r.order, r.lcp
    return run_


def _lcp_insertion(S, cfg, stats):
    H = lcpmerge.lcp_insertion_sort(S, stats=stats)
    return S.handles, H


def _ps5(S, cfg, stats):
    r = parsort.parallel_s5(S, cfg.threads, emit_lcp=cfg.emit_lcp, stats=stats)
    return r.order, r.lcp


def _partsort(strategy):
    def run_(S, cfg, stats):
        r = parsort.partitioned_sort(S, cfg.threads, cfg.parts, strategy=strategy, stats=stats)
        return r.order, r.lcp
    return run_


def _oracle(S, cfg, stats):
    S.handles[:] = oracle_sort(S)
    return S.handles, None


def _register_defaults() -> None:
    reg = register_algorithm
    reg("oracle", "strset", "naive comparison sort on string values (reference)", _oracle)
    reg("insertion", "seqsort", "string insertion sort", _inplace(lambda S, st: seqsort.insertion_sort(S, stats=st)))
    reg("mkqs", "seqsort", "multikey quicksort, one character per partition",
        _inplace(lambda S, st: seqsort.multikey_quicksort(S, stats=st)))
    reg("cmkqs", "seqsort", "caching multikey quicksort on 8-character keys",
        _inplace(lambda S, st: seqsort.caching_mkqs(S, stats=st)))
    for v in seqsort.RADIX_VARIANTS:
        reg(f"radix-{v.lower().replace('_', '-')}", "seqsort", f"MSD radix sort, variant {v}",
            _inplace(lambda S, st, v=v: seqsort.radix_sort(S, v, stats=st)))
    for v in ssss.VARIANTS:
        reg(f"seq-s5-{v.lower()}", "ssss", f"sequential string sample sort, classifier {v}", _s5(v))
    reg("lcp-mergesort", "lcpmerge", "binary LCP mergesort",
        _merged(lambda S, st: lcpmerge.binary_lcp_mergesort(S, st)))
    reg("lcp-mergesort-k4", "lcpmerge", "4-way LCP mergesort with tournament tree",
        _merged(lambda S, st: lcpmerge.kway_lcp_mergesort(S, 4, st)))
    reg("lcp-mergesort-k16", "lcpmerge", "16-way LCP mergesort with tournament tree",
        _merged(lambda S, st: lcpmerge.kway_lcp_mergesort(S, 16, st)))
    reg("lcp-insertion", "lcpmerge", "insertion sort driven by stored LCPs", _lcp_insertion)
    reg("ps5", "parsort", "parallel string sample sort with work sharing", _ps5)
    reg("pmkqs", "parsort", "parallel block-wise caching multikey quicksort",
        lambda S, cfg, st: (parsort.parallel_mkqs(S, cfg.threads, stats=st).order, None))
    reg("pradix-8", "parsort", "parallel MSD radix sort, 8-bit top steps",
        lambda S, cfg, st: (parsort.parallel_radix(S, cfg.threads, 8, stats=st).order, None))
    reg("pradix-16", "parsort", "parallel MSD radix sort, 16-bit top steps",
        lambda S, cfg, st: (parsort.parallel_radix(S, cfg.threads, 16, stats=st).order, None))
    for strat in parsort.STRATEGIES:
        reg(f"partsort-{strat}", "parsort",
            f"sort --parts pieces with parallel sample sort, then parallel K-way merge ({strat} split)",
            _partsort(strat))


_register_defaults()


# ---------------------------------------------------------------- running


def _reference_metrics(S: StringSet, order: np.ndarray):
    T = S.with_order(order)
    try:
        H = lcp_array_oracle(T)
    except NotSorted:
        T = S.with_order(oracle_sort(S))
        H = lcp_array_oracle(T)
    return metrics(T, H)


def run(cfg: BenchConfig, S: StringSet | None = None) -> ResultRow:
    """Run a configuration and return its result row (the caller prints it)."""
    if cfg.algo not in _REGISTRY:
        raise UnknownAlgorithm(cfg.algo)
    algo = _REGISTRY[cfg.algo]
    if S is None:
        S = load_input(cfg.input, cfg.mode, cfg.size, cfg.seed)
    base = S.handles.copy()
    # untimed warm-up on a small prefix so compilation or cache loading is not measured
    warm = StringSet(S.arena, base[:min(base.size, 256)].copy())
    algo.fn(warm, cfg, SortStats())
    times: list[float] = []
    verified = 0
    order = base
    stats = SortStats()
    for rep in range(cfg.reps):
        T = StringSet(S.arena, base.copy())
        stats = SortStats()
        t0 = time.perf_counter()
        order, H = algo.fn(T, cfg, stats)
        dt = (time.perf_counter() - t0) * 1000.0
        times.append(dt)
        log.debug("rep %d: %s %.3f ms", rep, cfg.algo, dt)
        if cfg.verify:
            report = verify(S.with_order(order), base, H if cfg.emit_lcp else None)
            if not report:
                raise VerificationFailed(f"{cfg.algo}: {report.kind} failure at {report.index}: {report.message}")
            verified = 1
    m = _reference_metrics(S, order)
    median = statistics.median(times)
    log.debug("median of %s = %.3f ms", [round(t, 3) for t in times], median)
    counted = cfg.count_stats
    return ResultRow(cfg.algo, cfg.input, m.n, m.N, m.D, m.L, round(median, 3), cfg.threads, cfg.reps,
                     stats.char_cmp if counted else None, stats.string_access if counted else None,
                     stats.bytes_aux if counted else None, verified, times)


def format_result(row: ResultRow) -> str:
    parts = []
    for k, v in row.as_dict().items():
        v = "na" if v is None else v
        parts.append(f"{k}={str(v).replace(' ', '_')}")
    return "RESULT " + " ".join(parts)


def parse_result_line(line: str) -> dict[str, object]:
    """Inverse of :func:`format_result`; integers and floats are converted back."""
    if not line.startswith("RESULT "):
        raise ValueError("not a RESULT line")
    out: dict[str, object] = {}
    for tok in line[len("RESULT "):].split():
        k, _, v = tok.partition("=")
        if not _:
            raise ValueError(f"token without '=': {tok!r}")
        for conv in (int, float):
            try:
                out[k] = conv(v)
                break
            except ValueError:
                continue
        else:
            out[k] = None if v == "na" else v
    return out


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strsort-bench", description="Run one string sorter and print a RESULT line.")
    ap.add_argument("--algo", help="algorithm id (see --list)")
    ap.add_argument("--input", default="random", help="random, random2 or file:PATH")
    ap.add_argument("--mode", choices=("lines", "suffixes"), default="lines")
    ap.add_argument("--size", default="100000", help="string count, or bytes with a B suffix (Ki/Mi/Gi allowed)")
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--parts", type=int, default=4, help="pieces for the partsort-* pipelines")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verify", action="store_true", help="check every repetition's output")
    ap.add_argument("--lcp", action="store_true", help="ask sorters that can for an LCP array (verified too)")
    ap.add_argument("--stats", action="store_true", help="report comparison, access and memory counters")
    ap.add_argument("--list", action="store_true", help="list algorithm ids and exit")
    ap.add_argument("--debug", action="store_true", help="log per-repetition times to stderr")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    if args.list:
        for a in list_algorithms():
            print(f"{a.id:20s} {a.module:9s} {a.description}")
        return 0
    if not args.algo:
        print("error: --algo is required (or --list)", file=sys.stderr)
        return 2
    try:
        cfg = BenchConfig(args.algo, args.input, args.mode, args.size, args.reps, args.threads, args.parts,
                          args.seed, args.verify, args.lcp, args.stats)
        print(f"# {cfg.algo} on {cfg.input} ({cfg.mode}), backend={BACKEND}", flush=True)
        row = run(cfg)
    except UnknownAlgorithm as e:
        print(f"error: unknown algorithm {e.args[0]!r} (see --list)", file=sys.stderr)
        return 2
    except (InputLoadError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except VerificationFailed as e:
        print(f"error: verification failed: {e}", file=sys.stderr)
        return 1
    print(format_result(row), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
