"""Compare the compiled and pure-Python product-chain backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from livsic import kernels

CASES = [
    ("prefix L=65536 d=2", "chain_prefix", (65536, 2, 2)),
    ("prefix B=64 L=60 d=2", "chain_prefix", (64, 60, 2, 2)),
    ("log-norms B=512 L=60 d=2", "chain_log_norms", (512, 60, 2, 2)),
    ("log-norms B=64 L=1000 d=3", "chain_log_norms", (64, 1000, 3, 3)),
]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    found = kernels.backends()
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(sorted(found))} (selected: {kernels.BACKEND})")
    print(f"{'case':28s}" + "".join(f"{name:>12s}" for name in sorted(found)) + "     speedup")
    for label, fn, shape in CASES:
        mats = np.eye(shape[-1]) + 0.3 * rng.standard_normal(shape)
        times = {}
        for name in sorted(found):
            call = getattr(kernels, fn)
            times[name] = min(timeit.repeat(lambda: call(mats, impl=name), number=1, repeat=args.repeat))
        row = f"{label:28s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in sorted(found))
        if "compiled" in times:
            row += f"  {times['python'] / times['compiled']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
