"""NumPy versions of the lattice loops (used when the extension is not built)."""

from __future__ import annotations

import math

import numpy as np


def _isqrt_floor(x: float) -> int:
    if x < 0:
        return -1
    return math.isqrt(int(math.floor(x)))


def _shells(R2: float, d: int):
    """Yield ``|k|²`` arrays of the lattice points inside the ball, one k₁-slab at a time."""
    R = _isqrt_floor(R2)
    k = np.arange(-R, R + 1, dtype=np.int64)
    if d == 2:
        for k1 in range(-R, R + 1):
            q = k1 * k1 + k * k
            yield q[(q <= R2) & (q > 0)].astype(float)
    else:
        q23 = (k[:, None] ** 2 + k[None, :] ** 2).ravel()
        q23 = q23[q23 <= R2]
        for k1 in range(-R, R + 1):
            q = k1 * k1 + q23
            yield q[(q <= R2) & (q > 0)].astype(float)


def ball_sum_inv_sq(m2: float, R2: float, d: int) -> float:
    total = 0.0
    for q in _shells(R2, d):
        a = q + m2
        total += float(np.sum(1.0 / (a * a)))
    return total


def exp_ball_sum(beta: float, R2: float, d: int) -> float:
    total = 0.0
    for q in _shells(R2, d):
        total += float(np.sum(np.exp(-beta * np.sqrt(q))))
    return total


def ewald_real_sum(m2: float, t0: float, R2: float, d: int) -> float:
    total = 0.0
    for q in _shells(R2, d):
        a = q + m2
        total += float(np.sum(np.exp(-t0 * a) * (1.0 + t0 * a) / (a * a)))
    return total


def count_wedge(lo: float, hi: float) -> int:
    amax = _isqrt_floor(hi)
    if amax < 1:
        return 0
    a = np.arange(1, amax + 1, dtype=np.int64)[:, None]
    b = np.arange(-amax, amax + 1, dtype=np.int64)[None, :]
    q = a * a + b * b
    return int(np.count_nonzero((np.abs(b) <= a) & (q >= lo) & (q <= hi)))
