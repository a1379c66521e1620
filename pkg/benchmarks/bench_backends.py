#!/usr/bin/env python3
"""Compare the compiled and pure-numpy window kernels on identical inputs.

Runs the same batch of randomized extrapolation windows through each
available backend, reports wall time per window, and verifies that both
backends produce bit-identical models.

    python3 benchmarks/bench_backends.py --windows 40 --fft-size 2048
"""

import argparse
import sys
import time

import numpy as np

from fsedeclip import kernels
from fsedeclip.core import LOST, SUPPORT, FseParams
from fsedeclip.engine import generate_window_model, window_center


def make_windows(count: int, n: int, max_lost: int, seed: int):
    rng = np.random.default_rng(seed)
    windows = []
    center = window_center(n)
    for _ in range(count):
        samples = rng.standard_normal(n)
        labels = np.full(n, SUPPORT, dtype=np.int8)
        lost = {center}
        while len(lost) < int(rng.integers(1, max_lost + 1)):
            lost.add(int(rng.integers(0, n)))
        labels[sorted(lost)] = LOST
        windows.append((samples, labels))
    return windows


def run_backend(backend: str, windows, params: FseParams):
    kernels.set_backend(backend)
    try:
        kernels.warmup()
        results = []
        t0 = time.perf_counter()
        for samples, labels in windows:
            model, g = generate_window_model(samples, labels, params)
            results.append((model, g))
        elapsed = time.perf_counter() - t0
    finally:
        kernels.set_backend(None)
    return elapsed, results


def identical(a, b) -> bool:
    for (ma, ga), (mb, gb) in zip(a, b):
        if ga != gb or ma.iterations_used != mb.iterations_used:
            return False
        if ma.coeffs.keys() != mb.coeffs.keys():
            return False
        if any(ma.coeffs[k] != mb.coeffs[k] for k in ma.coeffs):
            return False
    return True


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--windows", type=int, default=40)
    parser.add_argument("--fft-size", type=int, default=2048)
    parser.add_argument("--support", type=int, default=1000)
    parser.add_argument("--max-iter", type=int, default=300)
    parser.add_argument("--max-lost", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    params = FseParams(
        support=args.support, fft_size=args.fft_size, max_iter=args.max_iter
    )
    windows = make_windows(args.windows, args.fft_size, args.max_lost, args.seed)
    backends = kernels.available_backends()
    print(
        f"{args.windows} windows, fft_size {args.fft_size}, "
        f"max_iter {args.max_iter}, backends: {', '.join(backends)}"
    )

    timings = {}
    outputs = {}
    for backend in backends:
        elapsed, results = run_backend(backend, windows, params)
        timings[backend] = elapsed
        outputs[backend] = results
        print(
            f"  {backend:>6}: {elapsed:8.3f} s total, "
            f"{1000.0 * elapsed / args.windows:8.2f} ms/window"
        )

    if len(backends) == 2:
        speedup = timings["numpy"] / timings["numba"]
        print(f"  speedup: {speedup:.2f}x (numba over numpy)")
        if identical(outputs["numba"], outputs["numpy"]):
            print("  outputs: bit-identical across backends")
        else:
            print("  outputs: MISMATCH between backends")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
