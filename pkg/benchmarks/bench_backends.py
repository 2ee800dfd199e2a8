"""Compare the compiled (numba) and pure-Python kernel backends.

The backend is fixed at import time by STRSORT_DISABLE_JIT, so each backend
runs in its own interpreter through the benchmark CLI. Example:

    python3 benchmarks/bench_backends.py --size 20000 --algos mkqs,seq-s5-uic
"""
import argparse
import os
import subprocess
import sys

from strsort.benchcli import parse_result_line

DEFAULT_ALGOS = "mkqs,cmkqs,radix-ci2,seq-s5-uic,lcp-mergesort-k4,ps5"


def run_once(algo, size, reps, threads, disable_jit):
    env = dict(os.environ, STRSORT_DISABLE_JIT="1" if disable_jit else "0")
    cmd = [sys.executable, "-m", "strsort", "--algo", algo, "--size", str(size), "--reps", str(reps),
           "--threads", str(threads), "--verify"]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if res.returncode != 0:
        raise RuntimeError(f"{algo} failed ({res.returncode}): {res.stderr.strip()}")
    return parse_result_line(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--algos", default=DEFAULT_ALGOS)
    ap.add_argument("--size", type=int, default=20000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    print(f"{'algo':18s} {'numba ms':>10s} {'python ms':>11s} {'speedup':>8s}")
    for algo in args.algos.split(","):
        fast = run_once(algo, args.size, args.reps, args.threads, False)
        slow = run_once(algo, args.size, args.reps, args.threads, True)
        ratio = slow["time_ms"] / max(fast["time_ms"], 1e-6)
        print(f"{algo:18s} {fast['time_ms']:10.2f} {slow['time_ms']:11.2f} {ratio:7.1f}x", flush=True)


if __name__ == "__main__":
    main()
