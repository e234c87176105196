"""Compare the numba and pure-numpy max-plus kernels.

Kernel timings run both implementations in one process.  ``--end-to-end``
also times a scenario in subprocesses with ``KPZLAB_BACKEND`` set to each
value, which is what a user actually switches.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --end-to-end --replications 40
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
import timeit

import numpy as np

from kpzlab import _kernels


def make_block(lines: int, points: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    b = np.cumsum(rng.standard_normal((lines, points)), axis=1)
    b[:, 0] = 0.0
    return b


def cases(block: np.ndarray, starts: int):
    n = block.shape[1]
    w = np.zeros(n)
    origin = np.arange(n, dtype=np.int64)
    st = np.linspace(0, n - 1, starts).astype(np.int64)
    return {
        "sweep": lambda impl: impl.sweep(block, w),
        "sweep_argmax": lambda impl: impl.sweep_argmax(block, w, origin),
        "sweep_pointers": lambda impl: impl.sweep_pointers(block, w),
        "sweep_many": lambda impl: impl.sweep_many(block, st),
    }


def best_of(fn, repeat: int) -> float:
    fn()  # warm-up (compiles the numba path)
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def kernel_table(args) -> None:
    block = make_block(args.lines, args.points, args.seed)
    impls = [_kernels.numpy_impl] + ([_kernels.numba_impl] if _kernels.numba_impl else [])
    print(f"block {args.lines} x {args.points}, {args.starts} starts for sweep_many")
    print(f"{'kernel':16s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}  agree")
    for name, call in cases(block, args.starts).items():
        res = [call(impl) for impl in impls]
        times = [best_of(lambda impl=impl: call(impl), args.repeat) * 1e3 for impl in impls]
        if len(impls) == 2:
            print(f"{name:16s} {times[0]:12.3f} {times[1]:12.3f} {times[0] / times[1]:8.1f}x"
                  f"  {same(res[0], res[1])}")
        else:
            print(f"{name:16s} {times[0]:12.3f} {'n/a':>12s} {'':>9s}  numba not installed")


def end_to_end(args) -> None:
    print(f"\nend to end: kpzlab experiment {args.scenario} --replications {args.replications}")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, KPZLAB_BACKEND=backend)
        with tempfile.TemporaryDirectory() as out:
            cmd = [sys.executable, "-m", "kpzlab", "experiment", args.scenario,
                   "--replications", str(args.replications), "--out", out]
            t0 = time.perf_counter()
            r = subprocess.run(cmd, env=env, capture_output=True, text=True, check=False)
            dt = time.perf_counter() - t0
        status = "ok" if r.returncode in (0, 1) else f"exit {r.returncode}: {r.stderr.strip()}"
        print(f"  KPZLAB_BACKEND={backend:6s} {dt:8.2f}s  {status}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lines", type=int, default=100)
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--starts", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--end-to-end", action="store_true")
    ap.add_argument("--scenario", default="stationarity")
    ap.add_argument("--replications", type=int, default=40)
    args = ap.parse_args(argv)
    print(f"active backend in this process: {_kernels.BACKEND}")
    kernel_table(args)
    if args.end_to_end:
        end_to_end(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
