"""Closed-form attractor-dimension upper bounds, the q(n) trace curve and the two-sided report."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kolmogorov import KolmogorovFlow, RegionParams, lambda3, lower_bound_dimension

C_UPPER_3D = 1 / (12 * math.pi)
C_UPPER_2D = 1 / (16 * math.pi)
C_UPPER_2D_VORT = 1 / (8 * math.pi)
C_TRACE = 1 / math.sqrt(6 * math.pi)  # √(2/3) pointwise constant times 1/(2√π) Sobolev constant
C_TRACE_AVG = 1 / (2 * math.sqrt(3 * math.pi))

CONSTANTS = {
    "upper_3d": C_UPPER_3D,
    "upper_2d": C_UPPER_2D,
    "upper_2d_vorticity": C_UPPER_2D_VORT,
    "trace_instantaneous": C_TRACE,
    "trace_averaged": C_TRACE_AVG,
}


def _positive(**kw) -> None:
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def upper_bound_3d(g_norm_sq: float, alpha: float, gamma: float) -> float:
    """``‖g‖² / (12π α^{5/2} γ⁴)``; takes the squared forcing norm."""
    _positive(alpha=alpha, gamma=gamma)
    return C_UPPER_3D * g_norm_sq / (alpha**2.5 * gamma**4)


def upper_bound_2d(g_norm_sq: float, alpha: float, gamma: float) -> float:
    _positive(alpha=alpha, gamma=gamma)
    return C_UPPER_2D * g_norm_sq / (alpha**2 * gamma**4)


def upper_bound_2d_vorticity(rot_g_norm_sq: float, alpha: float, gamma: float) -> float:
    _positive(alpha=alpha, gamma=gamma)
    return C_UPPER_2D_VORT * rot_g_norm_sq / (alpha * gamma**4)


def trace_coefficient(grad_avg: float, alpha: float) -> float:
    """K in ``q(n) = -γn + K n^{1/2}`` for a measured gradient average."""
    return C_TRACE * alpha**-0.75 * grad_avg


def trace_coefficient_averaged(g_norm: float, alpha: float, gamma: float) -> float:
    """K after replacing the gradient average by ``‖g‖/(γ√(2α))``."""
    return C_TRACE_AVG * alpha**-1.25 * g_norm / gamma


def q_of_n(n, grad_avg: float, gamma: float, alpha: float):
    n = np.asarray(n, float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    out = -gamma * n + trace_coefficient(grad_avg, alpha) * np.sqrt(n)
    return float(out) if out.ndim == 0 else out


def q_of_n_averaged(n, g_norm: float, gamma: float, alpha: float):
    n = np.asarray(n, float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    out = -gamma * n + trace_coefficient_averaged(g_norm, alpha, gamma) * np.sqrt(n)
    return float(out) if out.ndim == 0 else out


def n_star(K: float, gamma: float) -> int:
    """Smallest n >= 1 with ``-γn + K√n <= 0``: ``ceil((K/γ)²)``, and 1 when K = 0."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    _positive(gamma=gamma)
    x = (K / gamma) ** 2
    n = max(1, math.ceil(x))
    # guard against (K/γ)² landing a rounding error off an integer
    while n > 1 and -gamma * (n - 1) + K * math.sqrt(n - 1) <= 0:
        n -= 1
    while -gamma * n + K * math.sqrt(n) > 0:
        n += 1
    return n


@dataclass
class BoundReport:
    s: int
    alpha: float
    gamma: float
    c1: float
    upper_3d: float
    upper_2d: float
    upper_2d_vorticity: float
    q_curve: list
    n_star: int
    count: int
    g_norm_sq: float
    c6: float
    ratio: float
    verified_unstable: int
    sampled: int

    def __post_init__(self):
        if min(self.upper_3d, self.upper_2d, self.upper_2d_vorticity) < 0:
            raise ValueError("bounds must be nonnegative")

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["q_curve"] = [[int(n), float(q)] for n, q in self.q_curve]
        out["constants"] = dict(CONSTANTS)
        out["c6_over_upper_constant"] = self.c6 / C_UPPER_3D
        return out


def consistency_report(
    alpha: float,
    gamma: float,
    rp: RegionParams = RegionParams(),
    c1: float | None = None,
    max_samples: int | None = 16,
    n_q: int = 8,
) -> BoundReport:
    """Upper and lower dimension bounds for the same Kolmogorov forcing g_s.

    The 2D entries use the 2D analogue of g_s (same profile and amplitude on 𝕋²).
    """
    if alpha > 1 / 16:
        raise ValueError("consistency report needs alpha <= 1/16")
    lb = lower_bound_dimension(alpha, gamma, rp, c1, max_samples=max_samples)
    up3 = upper_bound_3d(lb.g_norm_sq, alpha, gamma)
    flow2 = KolmogorovFlow(lb.s, lambda3(lb.s, gamma, alpha, lb.c1), gamma, alpha, d=2)
    up2 = upper_bound_2d(flow2.forcing_norm_sq(), alpha, gamma)
    up2v = upper_bound_2d_vorticity(flow2.rot_forcing_norm_sq(), alpha, gamma)
    K = trace_coefficient_averaged(math.sqrt(lb.g_norm_sq), alpha, gamma)
    ns = n_star(K, gamma)
    grid = np.unique(np.geomspace(1, max(2 * ns, 2), n_q).round().astype(int))
    q = q_of_n_averaged(grid, math.sqrt(lb.g_norm_sq), gamma, alpha)
    return BoundReport(
        s=lb.s,
        alpha=alpha,
        gamma=gamma,
        c1=lb.c1,
        upper_3d=up3,
        upper_2d=up2,
        upper_2d_vorticity=up2v,
        q_curve=list(zip(grid.tolist(), np.atleast_1d(q).tolist())),
        n_star=ns,
        count=lb.count,
        g_norm_sq=lb.g_norm_sq,
        c6=lb.c6,
        ratio=up3 / lb.count if lb.count else math.inf,
        verified_unstable=lb.verified_unstable,
        sampled=lb.sampled,
    )


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
