# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice loops; mirrors :mod:`bardina._pykernels` exactly."""

from libc.math cimport exp, sqrt, floor


cdef inline long _isqrt_floor(double x):
    cdef long r
    if x < 0:
        return -1
    r = <long>floor(sqrt(x))
    while r * r > x:
        r -= 1
    while (r + 1) * (r + 1) <= x:
        r += 1
    return r


def ball_sum_inv_sq(double m2, double R2, int d):
    """Σ_{0 < |k|² <= R2} (|k|² + m2)^-2 over ℤ^d."""
    cdef long R = _isqrt_floor(R2)
    cdef long k1, k2, k3, lim2, lim3
    cdef double q, a, row, total = 0.0
    for k1 in range(-R, R + 1):
        row = 0.0
        if d == 2:
            lim2 = _isqrt_floor(R2 - k1 * k1)
            for k2 in range(-lim2, lim2 + 1):
                q = k1 * k1 + k2 * k2
                if q > 0:
                    a = q + m2
                    row += 1.0 / (a * a)
        else:
            lim2 = _isqrt_floor(R2 - k1 * k1)
            for k2 in range(-lim2, lim2 + 1):
                lim3 = _isqrt_floor(R2 - k1 * k1 - k2 * k2)
                for k3 in range(-lim3, lim3 + 1):
                    q = k1 * k1 + k2 * k2 + k3 * k3
                    if q > 0:
                        a = q + m2
                        row += 1.0 / (a * a)
        total += row
    return total


def exp_ball_sum(double beta, double R2, int d):
    """Σ_{0 < |k|² <= R2} exp(-β|k|) over ℤ^d."""
    cdef long R = _isqrt_floor(R2)
    cdef long k1, k2, k3, lim2, lim3
    cdef double q, row, total = 0.0
    for k1 in range(-R, R + 1):
        row = 0.0
        lim2 = _isqrt_floor(R2 - k1 * k1)
        for k2 in range(-lim2, lim2 + 1):
            if d == 2:
                q = k1 * k1 + k2 * k2
                if q > 0:
                    row += exp(-beta * sqrt(q))
            else:
                lim3 = _isqrt_floor(R2 - k1 * k1 - k2 * k2)
                for k3 in range(-lim3, lim3 + 1):
                    q = k1 * k1 + k2 * k2 + k3 * k3
                    if q > 0:
                        row += exp(-beta * sqrt(q))
        total += row
    return total


def ewald_real_sum(double m2, double t0, double R2, int d):
    """Σ_{0 < |k|² <= R2} e^{-t0 a} (1 + t0 a) / a², a = |k|² + m2."""
    cdef long R = _isqrt_floor(R2)
    cdef long k1, k2, k3, lim2, lim3
    cdef double q, a, row, total = 0.0
    for k1 in range(-R, R + 1):
        row = 0.0
        lim2 = _isqrt_floor(R2 - k1 * k1)
        for k2 in range(-lim2, lim2 + 1):
            if d == 2:
                q = k1 * k1 + k2 * k2
                if q > 0:
                    a = q + m2
                    row += exp(-t0 * a) * (1.0 + t0 * a) / (a * a)
            else:
                lim3 = _isqrt_floor(R2 - k1 * k1 - k2 * k2)
                for k3 in range(-lim3, lim3 + 1):
                    q = k1 * k1 + k2 * k2 + k3 * k3
                    if q > 0:
                        a = q + m2
                        row += exp(-t0 * a) * (1.0 + t0 * a) / (a * a)
        total += row
    return total


def count_wedge(double lo, double hi):
    """#{(a, b) ∈ ℤ² : a > 0, |b| <= a, lo <= a² + b² <= hi}."""
    cdef long amax = _isqrt_floor(hi)
    cdef long a, b, q
    cdef long long n = 0
    for a in range(1, amax + 1):
        for b in range(-a, a + 1):
            q = a * a + b * b
            if q >= lo and q <= hi:
                n += 1
    return n
