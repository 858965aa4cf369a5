"""Time the compiled lattice loops against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N time for each backend and the speedup.
"""

from __future__ import annotations

import argparse
import timeit

from bardina import _pykernels as py

try:
    from bardina import _ckernels as cy
except ImportError:
    cy = None

CASES = [
    ("ball_sum_inv_sq d=3 R=60", "ball_sum_inv_sq", (1.0, 3600.0, 3)),
    ("ball_sum_inv_sq d=2 R=400", "ball_sum_inv_sq", (1.0, 160000.0, 2)),
    ("exp_ball_sum d=3 R=30", "exp_ball_sum", (2.0, 900.0, 3)),
    ("ewald_real_sum d=3 R=12", "ewald_real_sum", (0.25, 3.14159, 144.0, 3)),
    ("count_wedge s=400 window", "count_wedge", (160000 * 0.25, 160000 * 0.3025)),
]


def best(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args()
    if cy is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':<28}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, name, args in CASES:
        tp = best(getattr(py, name), args, ns.repeat)
        if cy is None:
            print(f"{label:<28}{tp:>12.4f}{'-':>12}{'-':>10}")
            continue
        tc = best(getattr(cy, name), args, ns.repeat)
        ref, got = getattr(py, name)(*args), getattr(cy, name)(*args)
        assert abs(ref - got) <= 1e-12 * max(1.0, abs(ref)), (label, ref, got)
        print(f"{label:<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
