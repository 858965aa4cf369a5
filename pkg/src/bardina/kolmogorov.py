"""Linear instability of Kolmogorov flows and the unstable-mode count.

The 2D problem lives on a family of Fourier modes ``k_n = (t', s n + r)``:
the vorticity operator couples nearest neighbours only, so its restriction is
tridiagonal.  Oblique 3D modes ``(a, b)`` reduce to a 2D family with
``t' = √(a²+b²)`` and damping ``γ √(a²+b²)/a``.

Sign convention: the linear dynamics is ``∂_t ω = -L ω``; an eigenvalue ``μ``
of ``L`` with ``Re μ < 0`` is a growing mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import kernels

INV_SQRT3 = 1 / math.sqrt(3)
MAX_TRUNCATION = 512


class SolverFailure(RuntimeError):
    pass


class StableFamily(RuntimeError):
    """No instability threshold exists in the scanned amplitude range."""


@dataclass(frozen=True)
class KolmogorovFlow:
    """Forcing ``γλ sin(s x₃) e₁`` with steady state ``λ sin(s x₃) e₁``."""

    s: int
    lam: float
    gamma: float
    alpha: float
    d: int = 2

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"s must be a positive integer, got {self.s}")
        if self.lam < 0:
            raise ValueError("amplitude must be nonnegative")
        if not (self.gamma > 0 and self.alpha > 0):
            raise ValueError("gamma and alpha must be positive")
        if self.d not in (2, 3):
            raise ValueError("d must be 2 or 3")

    @property
    def filtered_amplitude(self) -> float:
        return self.lam / (1 + self.alpha * self.s**2)

    def forcing_norm_sq(self) -> float:
        """``‖g_s‖²_{L²(𝕋^d)} = (γλ)² (2π)^d / 2``."""
        return (self.gamma * self.lam) ** 2 * (2 * math.pi) ** self.d / 2

    def rot_forcing_norm_sq(self) -> float:
        return self.s**2 * self.forcing_norm_sq()

    def with_(self, **kw) -> KolmogorovFlow:
        return replace(self, **kw)


@dataclass(frozen=True)
class RegionParams:
    delta: float = 0.5
    c2: float = 0.05
    c3: float = 0.5
    c4: float = 0.55

    def __post_init__(self):
        errors = region_param_errors(self.delta, self.c2, self.c3, self.c4)
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def c5(self) -> float:
        """Asymptotic density constant ``(π/4) c₂ (c₄² - c₃²)`` quoted for the count."""
        return math.pi / 4 * self.c2 * (self.c4**2 - self.c3**2)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "c2": self.c2, "c3": self.c3, "c4": self.c4}


def region_param_errors(delta, c2, c3, c4) -> list[str]:
    out = []
    if not 0 < delta < INV_SQRT3:
        out.append(f"delta={delta} must lie in (0, 1/sqrt(3))")
    if not c2 > 0:
        out.append(f"c2={c2} must be positive")
    if not 0 < c3 <= c4:
        out.append(f"need 0 < c3 <= c4, got c3={c3}, c4={c4}")
    return out


@dataclass(frozen=True)
class CouplingMatrix:
    matrix: np.ndarray
    t_prime: float
    r: int
    m: np.ndarray  # x₃-wavenumbers s n + r of the family, n = -N..N

    @property
    def N(self) -> int:
        return (len(self.m) - 1) // 2


@dataclass(frozen=True)
class EigenResult:
    mu: complex
    vector: np.ndarray
    N: int
    converged: bool
    flow: KolmogorovFlow
    t_prime: float
    r: int

    @property
    def unstable(self) -> bool:
        return self.mu.real < 0

    @property
    def growth_rate(self) -> float:
        return -self.mu.real


# 2D family operator ------------------------------------------------------


def _family(s: int, r: int, N: int) -> np.ndarray:
    return s * np.arange(-N, N + 1) + r


def coupling_coefficients(f: KolmogorovFlow, t_prime: float, m: np.ndarray) -> np.ndarray:
    k2 = t_prime**2 + m.astype(float) ** 2
    if np.any(k2 == 0):
        raise ValueError("mode family contains k = 0")
    pre = t_prime * f.lam / (2 * (1 + f.alpha * f.s**2))
    return pre * (k2 - f.s**2) / (k2 * (1 + f.alpha * k2))


def build_tridiagonal(f: KolmogorovFlow, t_prime: float, r: int, N: int) -> CouplingMatrix:
    """Restriction of the linearized vorticity operator to ``{(t', s n + r) : |n| <= N}``."""
    if N < 2:
        raise ValueError("truncation N must be >= 2")
    m = _family(f.s, r, N)
    c = coupling_coefficients(f, t_prime, m)
    size = 2 * N + 1
    M = np.zeros((size, size))
    M[np.diag_indices(size)] = f.gamma
    i = np.arange(size - 1)
    M[i + 1, i] = c[:-1]
    M[i, i + 1] = -c[1:]
    return CouplingMatrix(M, float(t_prime), int(r), m)


def _leading(M: np.ndarray) -> tuple[complex, np.ndarray]:
    w, v = np.linalg.eig(M)
    # ties (conjugate pairs) broken by the sign of the imaginary part for determinism
    j = min(range(len(w)), key=lambda i: (round(w[i].real, 12), -w[i].imag))
    vec = v[:, j]
    vec = vec / vec[np.argmax(np.abs(vec))]
    return complex(w[j]), vec


def most_unstable_eigenvalue(
    f: KolmogorovFlow, t_prime: float, r: int, N0: int = 8, rtol: float = 1e-10
) -> EigenResult:
    """Eigenvalue of minimal real part, doubling the truncation until it settles."""
    N = N0
    mu_prev, _ = _leading(build_tridiagonal(f, t_prime, r, N).matrix)
    while N < MAX_TRUNCATION:
        N *= 2
        mu, vec = _leading(build_tridiagonal(f, t_prime, r, N).matrix)
        if abs(mu - mu_prev) <= rtol * max(abs(mu), 1e-300):
            return EigenResult(mu, vec, N, True, f, float(t_prime), int(r))
        mu_prev = mu
    raise SolverFailure(f"eigenvalue did not converge by N={MAX_TRUNCATION} (t'={t_prime}, r={r})")


def growth_threshold(f: KolmogorovFlow, t_prime: float, r: int, N: int = 32) -> float:
    """Closed-form threshold ``γ / ρ`` from the spectrum of the λ = 1 coupling."""
    T1 = build_tridiagonal(f.with_(lam=1.0), t_prime, r, N).matrix - f.gamma * np.eye(2 * N + 1)
    rho = np.max(np.linalg.eigvals(T1).real)
    if rho <= 0:
        raise StableFamily(f"family (t'={t_prime}, r={r}) has no growing mode")
    return f.gamma / rho


@dataclass(frozen=True)
class CriticalLambda:
    lam_star: float
    c1_hat: float
    s: int
    t_prime: float
    r: int


def _bisect_lambda(is_unstable, lo=1e-8, hi=1e8, rtol=1e-6) -> float:
    if is_unstable(lo):
        return lo
    if not is_unstable(hi):
        raise StableFamily(f"no instability for amplitudes in [{lo:g}, {hi:g}]")
    # geometric bisection until the bracket is relatively tight
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if is_unstable(mid):
            hi = mid
        else:
            lo = mid
    return hi


def critical_lambda(f: KolmogorovFlow, t_prime: float, r: int, rtol: float = 1e-6, N: int = 32) -> CriticalLambda:
    """Smallest amplitude with a growing mode in the family; ``f.lam`` is ignored."""

    def unstable(lam):
        mu, _ = _leading(build_tridiagonal(f.with_(lam=lam), t_prime, r, N).matrix)
        return mu.real < 0

    lam = _bisect_lambda(unstable, rtol=rtol)
    c1 = lam * f.s / (f.gamma * (1 + f.alpha * f.s**2) ** 2)
    return CriticalLambda(lam, c1, f.s, float(t_prime), int(r))


def lambda2(s: int, gamma: float, alpha: float, c1: float) -> float:
    """Sufficient amplitude ``c₁ γ (1+αs²)² / s`` for 2D instability on the region."""
    return c1 * gamma * (1 + alpha * s**2) ** 2 / s


def lambda3(s: int, gamma: float, alpha: float, c1: float) -> float:
    return math.sqrt(2) * lambda2(s, gamma, alpha, c1)


# dense oracle --------------------------------------------------------------


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    t1: np.ndarray  # x₁-wavenumber of each basis element
    m: np.ndarray  # x₃-wavenumber of each basis element

    def block(self, t_prime: float, r: int, s: int) -> DenseOperator:
        """Rows/columns of the residue class ``m ≡ r (mod s)`` at x₁-wavenumber ``t_prime``."""
        sel = np.flatnonzero((self.t1 == t_prime) & ((self.m - r) % s == 0))
        sel = sel[np.argsort(self.m[sel])]
        return DenseOperator(self.matrix[np.ix_(sel, sel)], self.t1[sel], self.m[sel])


def _shift_matrix(m: np.ndarray, coeffs: dict[int, complex]) -> np.ndarray:
    """Multiplication by ``Σ_q c_q e^{i q x₃}`` on a basis of x₃-wavenumbers ``m``."""
    pos = {int(v): i for i, v in enumerate(m)}
    out = np.zeros((len(m), len(m)), complex)
    for j, mj in enumerate(m):
        for q, cq in coeffs.items():
            i = pos.get(int(mj) + q)
            if i is not None:
                out[i, j] += cq
    return out


def dense_operator_oracle(f: KolmogorovFlow, t_prime: float, cutoff: int, both_signs: bool = False) -> DenseOperator:
    """Brute-force assembly of the vorticity operator on ``{e^{i(±t' x₁ + m x₃)} : |m| <= cutoff}``.

    Each factor (the two inverse elliptic operators and the Jacobian
    ``J(a, b) = ∂₁a ∂₃b - ∂₃a ∂₁b``) is applied in Fourier space; the base
    flow only has x₃-wavenumbers ±s so products are exact shift matrices.
    """
    if cutoff < f.s + 3:
        raise ValueError("cutoff must be at least s + 3")
    signs = (1, -1) if (both_signs and t_prime != 0) else (1,)
    blocks, t1s, ms = [], [], []
    for sg in signs:
        tp = sg * t_prime
        m = np.arange(-cutoff, cutoff + 1)
        if tp == 0:
            m = m[m != 0]
        k2 = tp**2 + m.astype(float) ** 2
        filt = 1 / (1 + f.alpha * k2)
        psi = 1 / (-k2 - f.alpha * k2**2)  # (Δ - αΔ²)^{-1}
        D1 = np.diag(np.full(len(m), 1j * tp))
        D3 = np.diag(1j * m.astype(complex))
        # base vorticity ω_s = -λ s cos(s x₃): coefficients -λ s / 2 at ±s
        ws = -f.lam * f.s / 2
        s2 = float(f.s**2)
        psi_s = ws / (-s2 - f.alpha * s2**2)
        wbar_s = ws / (1 + f.alpha * s2)
        d3 = lambda c: {f.s: 1j * f.s * c, -f.s: -1j * f.s * c}  # noqa: E731
        mult_d3psi_s = _shift_matrix(m, d3(psi_s))
        mult_d3wbar_s = _shift_matrix(m, d3(wbar_s))
        # base fields carry no x₁ dependence, so their ∂₁ factors vanish identically
        F, P = np.diag(filt), np.diag(psi)
        L = (
            -mult_d3psi_s @ D1 @ F  # J(ψ_s, ω̄)
            + mult_d3wbar_s @ D1 @ P  # J(ψ, ω̄_s)
            + f.gamma * np.eye(len(m))
        )
        blocks.append(L)
        t1s.append(np.full(len(m), tp, float))
        ms.append(m)
    size = sum(len(b) for b in blocks)
    out = np.zeros((size, size), complex)
    o = 0
    for b in blocks:
        out[o : o + len(b), o : o + len(b)] = b
        o += len(b)
    return DenseOperator(out, np.concatenate(t1s), np.concatenate(ms))


# Squire reduction and lift -----------------------------------------------


def squire_reduce(a: int, b: int, gamma: float) -> tuple[float, float]:
    if a <= 0:
        raise ValueError("Squire reduction needs a > 0")
    ahat = math.hypot(a, b)
    return ahat, gamma * (ahat / a)  # ratio first: exactly γ when b = 0


def _family_ops(f: KolmogorovFlow, horiz_sq: float, m: np.ndarray):
    """Multiplication by ū₀, ū₀' and the filter on an x₃-family (truncated)."""
    A = f.filtered_amplitude
    s = f.s
    n = len(m)
    S = np.zeros((n, n), complex)
    C = np.zeros((n, n), complex)
    i = np.arange(n - 1)
    # family members differ by s, so sin/cos shift the index by one
    S[i + 1, i] = A / 2j
    S[i, i + 1] = -A / 2j
    C[i + 1, i] = A * s / 2
    C[i, i + 1] = A * s / 2
    filt = np.diag(1 / (1 + f.alpha * (horiz_sq + m.astype(float) ** 2)))
    return S, C, filt


def linearized_3d_matrix(f: KolmogorovFlow, a: int, b: int, r: int, N: int) -> np.ndarray:
    """Leray-projected 3D linearization ``L₃`` on ``e^{i(a x₁ + b x₂ + m x₃)}``, components stacked.

    ``L₃ w = Π[γ w + ū₀ ∂₁ w̄ + w̄₃ ū₀' e₁]``.
    """
    m = _family(f.s, r, N)
    n = len(m)
    S, C, F = _family_ops(f, a * a + b * b, m)
    Z = np.zeros((n, n))
    I = np.eye(n)
    adv = 1j * a * S @ F
    raw = np.block(
        [
            [f.gamma * I + adv, Z, C @ F],
            [Z, f.gamma * I + adv, Z],
            [Z, Z, f.gamma * I + adv],
        ]
    )
    kv = np.array([np.full(n, a, float), np.full(n, b, float), m.astype(float)])
    k2 = np.sum(kv**2, axis=0)
    proj = np.zeros((3 * n, 3 * n))
    for i in range(3):
        for j in range(3):
            proj[i * n : (i + 1) * n, j * n : (j + 1) * n] = np.diag((i == j) - kv[i] * kv[j] / k2)
    return proj @ raw


@dataclass(frozen=True)
class LiftedMode:
    a: int
    b: int
    r: int
    mu: complex  # eigenvalue of L₃
    w: np.ndarray  # shape (3, 2N+1): Fourier coefficients of w₁, w₂, w₃ over the family
    q: np.ndarray
    m: np.ndarray
    residual: float
    divergence: float
    condition: float

    @property
    def unstable(self) -> bool:
        return self.mu.real < 0


def velocity_from_vorticity(t_prime: float, m: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """2D ``(w₁, w₃)`` with ``∂₁w₃ - ∂₃w₁ = ω`` and zero divergence, per mode."""
    k2 = t_prime**2 + m.astype(float) ** 2
    psi = omega / k2  # streamfunction of -Δψ = ω
    return np.array([1j * m * psi, -1j * t_prime * psi])


def squire_lift(mode2d: EigenResult, a: int, b: int, f: KolmogorovFlow, cond_limit: float = 1e12) -> LiftedMode:
    """Lift an unstable 2D family mode (at ``t' = √(a²+b²)``, damping ``γ̂``) to ℤ³.

    ``f`` carries the physical damping γ.
    """
    ahat, ghat = squire_reduce(a, b, f.gamma)
    if abs(mode2d.t_prime - ahat) > 1e-12 * ahat:
        raise ValueError(f"2D mode computed at t'={mode2d.t_prime}, expected {ahat}")
    if abs(mode2d.flow.gamma - ghat) > 1e-12 * ghat:
        raise ValueError("2D mode must be computed with the reduced damping")
    r = mode2d.r
    N = mode2d.N
    m = _family(f.s, r, N)
    mu2 = mode2d.mu
    mu3 = mu2 * a / ahat
    w1h, w3 = velocity_from_vorticity(ahat, m, mode2d.vector)
    S, C, F = _family_ops(f, ahat**2, m)
    # 2D pressure from the divergence of the eigen-equation N(ŵ) + ∇q̂ = 0 (reduced damping)
    N1 = ghat * w1h + 1j * ahat * S @ F @ w1h + C @ F @ w3 - mu2 * w1h
    N3 = ghat * w3 + 1j * ahat * S @ F @ w3 - mu2 * w3
    k2 = ahat**2 + m.astype(float) ** 2
    qhat = 1j * (ahat * N1 + m * N3) / k2
    q = qhat * a / ahat
    A = (mu3 - f.gamma) * np.eye(len(m)) - 1j * a * S @ F
    cond = float(np.linalg.cond(A))
    if cond > cond_limit:
        raise SolverFailure(f"Squire lift operator is ill-conditioned (cond={cond:.3e})")
    w2 = np.linalg.solve(A, 1j * b * q)
    w1 = (ahat * w1h - b * w2) / a
    w = np.array([w1, w2, w3])
    L3 = linearized_3d_matrix(f, a, b, r, N)
    flat = w.reshape(-1)
    res = np.linalg.norm(L3 @ flat - mu3 * flat) / np.linalg.norm(flat)
    div = np.max(np.abs(1j * a * w1 + 1j * b * w2 + 1j * m * w3)) / np.max(np.abs(flat))
    return LiftedMode(a, b, r, complex(mu3), w, q, m, float(res), float(div), cond)


def unstable_3d_mode(f: KolmogorovFlow, a: int, b: int, r: int) -> LiftedMode:
    """Squire-reduce ``(a, b, r)`` at the amplitude of ``f``, solve in 2D, lift back."""
    ahat, ghat = squire_reduce(a, b, f.gamma)
    mode2d = most_unstable_eigenvalue(f.with_(gamma=ghat, d=2), ahat, r)
    return squire_lift(mode2d, a, b, f.with_(d=3))


# region, rectangle, counting --------------------------------------------


def region_A_contains(t_prime: float, r: int, s: int, delta: float) -> bool:
    t2 = t_prime * t_prime
    return bool(
        t2 + r * r < s * s / 3
        and t2 + (r - s) ** 2 > s * s
        and t2 + (r + s) ** 2 > s * s
        and t_prime >= delta * s
    )


def _rect_bounds(s: int, rp: RegionParams) -> tuple[int, float, float]:
    # relative slack keeps boundary lattice points (e.g. â = c₃ s exactly) inside
    rmax = int(math.floor(rp.c2 * s * (1 + 1e-12)))
    return rmax, rp.c3 * s, rp.c4 * s


def rectangle_in_region(s: int, rp: RegionParams, n_t: int = 64) -> bool:
    """Check ``D ⊂ A(δ)`` at every integer ``r`` and a dense set of ``t'`` incl. both edges.

    ``A(δ)`` is defined by quadratic inequalities in ``t'`` so checking the edges
    and the interior sample set is exhaustive for the corners that matter.
    """
    rmax, tlo, thi = _rect_bounds(s, rp)
    ts = np.linspace(tlo, thi, n_t)
    return all(region_A_contains(float(t), r, s, rp.delta) for r in range(-rmax, rmax + 1) for t in ts)


def count_unstable_3d(s: int, rp: RegionParams, validate: bool = True) -> int:
    """Exact number of ``(a, b, r)`` with ``c₃s <= √(a²+b²) <= c₄s``, ``|r| <= c₂s``, ``a >= |b|``, ``a > 0``."""
    if validate and not rectangle_in_region(s, rp):
        raise ValueError(f"rectangle D is not inside A(delta) for s={s}")
    rmax, tlo, thi = _rect_bounds(s, rp)
    pairs = kernels.count_wedge(tlo * tlo * (1 - 1e-12), thi * thi * (1 + 1e-12))
    return pairs * (2 * rmax + 1)


def enumerate_triples(s: int, rp: RegionParams):
    rmax, tlo, thi = _rect_bounds(s, rp)
    lo, hi = tlo * tlo * (1 - 1e-12), thi * thi * (1 + 1e-12)
    for a in range(1, int(thi) + 2):
        for b in range(-a, a + 1):
            q = a * a + b * b
            if lo <= q <= hi:
                for r in range(-rmax, rmax + 1):
                    yield a, b, r


@lru_cache(maxsize=None)
def empirical_c1(s: int = 32, rp: RegionParams = RegionParams(), safety: float = 2.0, n_t: int = 21) -> float:
    """``safety × sup_D ĉ₁`` at wavenumber ``s`` with ``α = 1/s²``, γ = 1."""
    return safety * sup_c1_hat(s, rp, n_t)


def sup_c1_hat(s: int, rp: RegionParams, n_t: int = 21, alpha: float | None = None) -> float:
    alpha = 1 / s**2 if alpha is None else alpha
    rmax, tlo, thi = _rect_bounds(s, rp)
    f = KolmogorovFlow(s, 1.0, 1.0, alpha)
    best = 0.0
    for t in np.linspace(tlo, thi, n_t):
        for r in range(-rmax, rmax + 1):
            lam = growth_threshold(f, float(t), r)
            best = max(best, lam * s / (1 + alpha * s**2) ** 2)
    return best


@dataclass
class BoundContribution:
    s: int
    alpha: float
    gamma: float
    lam: float
    c1: float
    count: int
    g_norm_sq: float
    c6: float
    c8: float
    c5: float
    sampled: int
    verified_unstable: int
    max_lift_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def lower_bound_dimension(
    alpha: float,
    gamma: float,
    rp: RegionParams = RegionParams(),
    c1: float | None = None,
    max_samples: int | None = 32,
    rng: np.random.Generator | None = None,
) -> BoundContribution:
    """Count the unstable triples at ``s = round(α^{-1/2})`` and verify a sample of them.

    ``max_samples=None`` verifies every triple.
    """
    s = int(round(alpha**-0.5))
    if s < 4:
        raise ValueError(f"alpha={alpha} too large: s={s} < 4")
    c1 = empirical_c1(rp=rp) if c1 is None else c1
    lam = lambda3(s, gamma, alpha, c1)
    flow = KolmogorovFlow(s, lam, gamma, alpha, d=3)
    gsq = flow.forcing_norm_sq()
    count = count_unstable_3d(s, rp)
    triples = list(enumerate_triples(s, rp))
    if max_samples is not None and len(triples) > max_samples:
        rng = np.random.default_rng(0) if rng is None else rng
        idx = np.sort(rng.choice(len(triples), size=max_samples, replace=False))
        triples = [triples[i] for i in idx]
    ok, worst = 0, 0.0
    for a, b, r in triples:
        lift = unstable_3d_mode(flow, a, b, r)
        ok += lift.unstable
        worst = max(worst, lift.residual)
    return BoundContribution(
        s=s,
        alpha=alpha,
        gamma=gamma,
        lam=lam,
        c1=c1,
        count=count,
        g_norm_sq=gsq,
        c6=count * alpha**2.5 * gamma**4 / gsq,
        c8=gsq / (gamma**4 * alpha),
        c5=rp.c5,
        sampled=len(triples),
        verified_unstable=ok,
        max_lift_residual=worst,
    )
