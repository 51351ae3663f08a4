"""Compiled vs pure-Python kernel timings.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from opporelay import _kernels_py as py
from opporelay.core import sample_gamma, sample_xi

try:
    from opporelay import _kernels as cy
except ImportError:
    cy = None

CASES = [
    ("phase1_prefix_bits n=1200 m=12", "phase1_prefix_bits", lambda: (sample_gamma(1200, 12, 1, 0), 0.1)),
    ("phase2_prefix_bits n=1200 m=12", "phase2_prefix_bits", lambda: (sample_xi(1200, 12, 1, 0), 0.1)),
    ("genie_full n=8 m=3", "genie_full", lambda: (np.ascontiguousarray(sample_gamma(8, 3, 1, 0)), 0.1)),
    ("genie_grouped n=12 m=3", "genie_grouped", lambda: (np.ascontiguousarray(sample_gamma(12, 3, 1, 0)), 0.1)),
]


def best_of(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    loops, _ = t.autorange()
    return min(t.repeat(repeat, loops)) / loops


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    print(f"{'case':34s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for label, name, make in CASES:
        inputs = make()
        t_py = best_of(getattr(py, name), inputs, args.repeat)
        if cy is None:
            print(f"{label:34s} {t_py * 1e6:10.1f}us {'n/a':>12s} {'':>8s}")
            continue
        t_cy = best_of(getattr(cy, name), inputs, args.repeat)
        print(f"{label:34s} {t_py * 1e6:10.1f}us {t_cy * 1e6:10.1f}us {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
