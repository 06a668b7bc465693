#!/usr/bin/env python3
"""Benchmark the compiled CRF kernels against the pure-numpy fallback.

Runs forward-backward and Viterbi on random instances at several sequence
lengths and prints median wall time per call plus speedup. Usage:

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""
import argparse
import statistics
import time

from basner.numerics import Rng
from basner.kernels import _pykernels

try:
    from basner.kernels import _ckernels
except ImportError:
    _ckernels = None


def make_instance(rng, T, L):
    return (rng.uniform_array((T, L), -3.0, 3.0),
            rng.uniform_array((L, L), -3.0, 3.0),
            rng.uniform_array((L,), -3.0, 3.0),
            rng.uniform_array((L,), -3.0, 3.0))


def bench(fn, instances, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for inst in instances:
            fn(*inst)
        times.append((time.perf_counter() - t0) / len(instances))
    return statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repeats per configuration")
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels unavailable; nothing to compare")
        return

    rng = Rng(1234)
    configs = [(10, 4), (10, 17), (50, 17), (200, 17)]
    header = f"{'T':>5} {'L':>3} {'kernel':>16} {'numpy (us)':>12} " \
             f"{'compiled (us)':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for T, L in configs:
        instances = [make_instance(rng, T, L) for _ in range(8)]
        for name, pyfn, cfn in (
                ("forward_backward", _pykernels.forward_backward,
                 _ckernels.forward_backward),
                ("viterbi", _pykernels.viterbi, _ckernels.viterbi)):
            t_py = bench(pyfn, instances, args.repeats)
            t_c = bench(cfn, instances, args.repeats)
            print(f"{T:>5} {L:>3} {name:>16} {t_py * 1e6:>12.1f} "
                  f"{t_c * 1e6:>14.1f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
