"""Compare the compiled LCS kernel against the pure-Python fallback.

Run: python3 benchmarks/bench_accel.py [n_pairs] [seq_len]
"""

import random
import sys
import time

from crb._accel import BACKEND, lcs_length
from crb._accel._lcs_py import lcs_length as lcs_py


def bench(fn, pairs):
    start = time.perf_counter()
    total = 0
    for a, b in pairs:
        total += fn(a, b)
    return time.perf_counter() - start, total


def main():
    n_pairs = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    seq_len = int(sys.argv[2]) if len(sys.argv) > 2 else 400
    rng = random.Random(0)
    pairs = [
        (
            [rng.randrange(50) for _ in range(seq_len)],
            [rng.randrange(50) for _ in range(seq_len)],
        )
        for _ in range(n_pairs)
    ]
    t_active, total_a = bench(lcs_length, pairs)
    t_py, total_p = bench(lcs_py, pairs)
    assert total_a == total_p
    print(f"pairs={n_pairs} len={seq_len} active_backend={BACKEND}")
    print(f"active : {t_active:.3f}s")
    print(f"python : {t_py:.3f}s")
    if BACKEND == "cython":
        print(f"speedup: {t_py / t_active:.1f}x")


if __name__ == "__main__":
    main()
