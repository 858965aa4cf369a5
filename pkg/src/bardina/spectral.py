"""Fourier-lattice fields on the 2π-periodic torus and the Bardina operators.

A field is stored as the full box of coefficients ``k ∈ [-M, M]^d`` with the
convention ``f(x) = Σ_k f̂(k) exp(i k·x)``, so that
``‖f‖²_{L²} = (2π)^d Σ_k |f̂(k)|²``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import fft

from . import serialize

FLAG_TOL = 1e-12
FLAGS = ("zero_mean", "real_valued", "divergence_free")


class LatticeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TorusLattice:
    d: int
    M: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.M < 1:
            raise ValueError(f"mode cutoff must be >= 1, got {self.M}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.M + 1,) * self.d

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavevectors, shape ``(d, 2M+1, ..., 2M+1)``."""
        k = np.arange(-self.M, self.M + 1)
        return np.array(np.meshgrid(*([k] * self.d), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.wavenumbers.astype(float) ** 2, axis=0)

    @property
    def grid_size(self) -> int:
        # n > 3M keeps every product of two retained modes alias-free on |k|∞ <= M.
        return fft.next_fast_len(3 * self.M + 1)

    @property
    def volume(self) -> float:
        return (2 * np.pi) ** self.d

    @property
    def origin(self) -> tuple[int, ...]:
        return (self.M,) * self.d


def _flip(coeffs: np.ndarray) -> np.ndarray:
    """Map ``c(k) -> c(-k)`` on the trailing d axes."""
    d = coeffs.ndim - 1
    return coeffs[(slice(None),) + (slice(None, None, -1),) * d]


@dataclass(frozen=True)
class SpectralField:
    """Vector (or scalar, one component) field on a :class:`TorusLattice`."""

    lattice: TorusLattice
    coeffs: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != self.lattice.d + 1 or c.shape[1:] != self.lattice.shape:
            raise ValueError(
                f"coefficient array of shape {c.shape} does not fit lattice {self.lattice}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        bad = set(self.flags) - set(FLAGS)
        if bad:
            raise ValueError(f"unknown flags {sorted(bad)}")
        object.__setattr__(self, "flags", frozenset(self.flags))

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, lattice: TorusLattice, ncomp: int | None = None) -> SpectralField:
        ncomp = lattice.d if ncomp is None else ncomp
        return cls(lattice, np.zeros((ncomp,) + lattice.shape, complex), frozenset(FLAGS))

    @classmethod
    def from_physical(cls, lattice: TorusLattice, values: np.ndarray, flags=()) -> SpectralField:
        """Project grid samples ``values[c, j1, ..., jd]`` (any grid size n > 2M) onto the box."""
        return cls(lattice, _from_grid(np.asarray(values), lattice), frozenset(flags))

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def d(self) -> int:
        return self.lattice.d

    def with_coeffs(self, coeffs: np.ndarray, flags=None) -> SpectralField:
        return replace(self, coeffs=coeffs, flags=self.flags if flags is None else frozenset(flags))

    def __add__(self, other: SpectralField) -> SpectralField:
        _same_lattice(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs, self.flags & other.flags)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _same_lattice(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs, self.flags & other.flags)

    def __mul__(self, scalar: float) -> SpectralField:
        flags = self.flags if np.isrealobj(scalar) else self.flags - {"real_valued"}
        return self.with_coeffs(self.coeffs * scalar, flags)

    __rmul__ = __mul__

    # diagnostics --------------------------------------------------------

    def mean_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs[(slice(None),) + self.lattice.origin])))

    def reality_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(_flip(self.coeffs)))))

    def divergence_defect(self) -> float:
        """``max_k |k·û(k)| / max(‖û(k)‖, 1)`` -- relative on large modes, absolute on tiny ones."""
        if self.ncomp != self.d:
            return 0.0
        kdot = np.abs(np.einsum("i...,i...->...", self.lattice.wavenumbers, self.coeffs))
        norm = np.sqrt(np.sum(np.abs(self.coeffs) ** 2, axis=0))
        return float(np.max(kdot / np.maximum(norm, 1.0)))

    def flag_defects(self) -> dict[str, float]:
        return {
            "zero_mean": self.mean_defect(),
            "real_valued": self.reality_defect(),
            "divergence_free": self.divergence_defect(),
        }

    def check_flags(self, tol: float = FLAG_TOL) -> None:
        defects = self.flag_defects()
        broken = {f: defects[f] for f in self.flags if defects[f] > tol}
        if broken:
            raise AssertionError(f"flags violated: {broken}")

    def symmetrized(self) -> SpectralField:
        """Enforce conjugate symmetry (and zero mean if flagged) exactly."""
        c = 0.5 * (self.coeffs + np.conj(_flip(self.coeffs)))
        if "zero_mean" in self.flags:
            c = c.copy()
            c[(slice(None),) + self.lattice.origin] = 0.0
        return self.with_coeffs(c, self.flags | {"real_valued"})

    # physical space -----------------------------------------------------

    def to_physical(self, n: int | None = None) -> np.ndarray:
        """Real grid samples on an ``n^d`` grid (default: the dealiasing grid)."""
        lat = self.lattice
        n = lat.grid_size if n is None else n
        if n <= 2 * lat.M:
            raise ValueError(f"grid size {n} cannot represent modes up to {lat.M}")
        return _to_grid(self.coeffs, lat, n).real

    def l2_norm_sq(self) -> float:
        return float(self.lattice.volume * np.sum(np.abs(self.coeffs) ** 2))

    def grad_norm_sq(self) -> float:
        return float(self.lattice.volume * np.sum(self.lattice.k2 * np.abs(self.coeffs) ** 2))

    # serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        comps = [
            [[float(z.real), float(z.imag)] for z in comp.ravel(order="C")]
            for comp in self.coeffs
        ]
        return {
            "d": self.d,
            "M": self.lattice.M,
            "flags": sorted(self.flags),
            "components": comps,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> SpectralField:
        lat = TorusLattice(int(data["d"]), int(data["M"]))
        comps = [
            (np.array(c, float)[:, 0] + 1j * np.array(c, float)[:, 1]).reshape(lat.shape)
            for c in data["components"]
        ]
        out = cls(lat, np.array(comps), frozenset(data["flags"]))
        out.check_flags()
        return out


def _same_lattice(*fields: SpectralField) -> None:
    lat = fields[0].lattice
    for f in fields[1:]:
        if f.lattice != lat:
            raise LatticeMismatch(f"lattice mismatch: {lat} vs {f.lattice}")


def _to_grid(coeffs: np.ndarray, lat: TorusLattice, n: int) -> np.ndarray:
    idx = np.arange(-lat.M, lat.M + 1) % n
    big = np.zeros((coeffs.shape[0],) + (n,) * lat.d, complex)
    big[(slice(None),) + np.ix_(*([idx] * lat.d))] = coeffs
    return fft.ifftn(big, axes=tuple(range(1, lat.d + 1))) * n**lat.d


def _from_grid(values: np.ndarray, lat: TorusLattice) -> np.ndarray:
    n = values.shape[1]
    spec = fft.fftn(values, axes=tuple(range(1, lat.d + 1))) / n**lat.d
    idx = np.arange(-lat.M, lat.M + 1) % n
    return spec[(slice(None),) + np.ix_(*([idx] * lat.d))]


# operators ---------------------------------------------------------------


def leray_project(f: SpectralField) -> SpectralField:
    if f.ncomp != f.d:
        raise ValueError("projection needs a d-component vector field")
    if f.mean_defect() > FLAG_TOL:
        raise ValueError("projection is only defined here for zero-mean fields")
    lat = f.lattice
    k = lat.wavenumbers
    k2 = np.where(lat.k2 == 0, 1.0, lat.k2)
    kdot = np.einsum("i...,i...->...", k, f.coeffs)
    out = f.coeffs - k * (kdot / k2)
    out[(slice(None),) + lat.origin] = 0.0
    return f.with_coeffs(out, f.flags | {"zero_mean", "divergence_free"})


def helmholtz_filter(f: SpectralField, alpha: float) -> SpectralField:
    """Apply ``(1 - αΔ)^{-1}``; ``alpha = 0`` is accepted and gives the identity."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return f.with_coeffs(f.coeffs / (1.0 + alpha * f.lattice.k2))


def helmholtz_unfilter(f: SpectralField, alpha: float) -> SpectralField:
    """Apply ``(1 - αΔ)``: recovers u from the filtered velocity."""
    return f.with_coeffs(f.coeffs * (1.0 + alpha * f.lattice.k2))


def gradient_coeffs(f: SpectralField) -> np.ndarray:
    """``∂_i f_j`` as an array of shape ``(d, ncomp, *box)``."""
    k = f.lattice.wavenumbers
    return 1j * k[:, None] * f.coeffs[None, :]


def divergence(f: SpectralField) -> SpectralField:
    c = 1j * np.einsum("i...,i...->...", f.lattice.wavenumbers, f.coeffs)
    return f.with_coeffs(c[None], f.flags - {"divergence_free"})


def curl(f: SpectralField) -> SpectralField:
    """Vorticity: a vector field in 3D, the scalar ``∂₁f₂ - ∂₂f₁`` in 2D."""
    if f.ncomp != f.d:
        raise ValueError("curl needs a d-component vector field")
    ik = 1j * f.lattice.wavenumbers
    u = f.coeffs
    if f.d == 2:
        c = (ik[0] * u[1] - ik[1] * u[0])[None]
        return f.with_coeffs(c, f.flags - {"divergence_free"})
    c = np.array(
        [
            ik[1] * u[2] - ik[2] * u[1],
            ik[2] * u[0] - ik[0] * u[2],
            ik[0] * u[1] - ik[1] * u[0],
        ]
    )
    return f.with_coeffs(c, f.flags | {"divergence_free"})


def advect(u: SpectralField, v: SpectralField) -> SpectralField:
    """Galerkin-exact ``(u·∇)v`` truncated to the box (zero-padded product)."""
    _same_lattice(u, v)
    lat = u.lattice
    n = lat.grid_size
    up = _to_grid(u.coeffs, lat, n).real
    grad = gradient_coeffs(v).reshape((lat.d * v.ncomp,) + lat.shape)
    gp = _to_grid(grad, lat, n).real.reshape((lat.d, v.ncomp) + (n,) * lat.d)
    prod = np.einsum("i...,ij...->j...", up, gp)
    out = _from_grid(prod, lat)
    flags = {"real_valued"} if ("real_valued" in u.flags and "real_valued" in v.flags) else set()
    res = v.with_coeffs(out, flags)
    return res.symmetrized() if flags else res


def bardina_nonlinearity(ubar: SpectralField, vbar: SpectralField, alpha: float) -> SpectralField:
    """``B(ū, v̄) = A_α Π((ū·∇)v̄)``."""
    _same_lattice(ubar, vbar)
    prod = advect(ubar, vbar)
    prod = prod.with_coeffs(_zero_origin(prod), prod.flags | {"zero_mean"})
    return helmholtz_filter(leray_project(prod), alpha)


def _zero_origin(f: SpectralField) -> np.ndarray:
    # the mean of (u·∇)v is the integral of a divergence; it is zero up to rounding
    c = f.coeffs.copy()
    c[(slice(None),) + f.lattice.origin] = 0.0
    return c


def l2_inner(u: SpectralField, v: SpectralField) -> float:
    _same_lattice(u, v)
    return float(u.lattice.volume * np.sum(u.coeffs * np.conj(v.coeffs)).real)


def alpha_inner(u: SpectralField, v: SpectralField, alpha: float) -> float:
    """``(u, v) + α(∇u, ∇v)``."""
    _same_lattice(u, v)
    w = 1.0 + alpha * u.lattice.k2
    return float(u.lattice.volume * np.sum(w * u.coeffs * np.conj(v.coeffs)).real)


def alpha_norm_sq(u: SpectralField, alpha: float) -> float:
    return alpha_inner(u, u, alpha)


# random fields and fixtures --------------------------------------------


def random_field(
    lattice: TorusLattice,
    rng: np.random.Generator,
    ncomp: int | None = None,
    decay: float = 2.0,
    scale: float = 1.0,
    solenoidal: bool = True,
    kmax: float | None = None,
) -> SpectralField:
    """Real zero-mean Gaussian field with variance ``∝ (1+|k|²)^{-decay}``."""
    ncomp = lattice.d if ncomp is None else ncomp
    shape = (ncomp,) + lattice.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= (1.0 + lattice.k2) ** (-decay / 2)
    if kmax is not None:
        c[:, np.sqrt(lattice.k2) > kmax] = 0.0
    f = SpectralField(lattice, c * scale, frozenset({"zero_mean"})).symmetrized()
    if solenoidal and ncomp == lattice.d:
        f = leray_project(f)
    return f


def shear_field(lattice: TorusLattice, s: int, amplitude: float, axis: int | None = None) -> SpectralField:
    """``amplitude · sin(s x_last) e_1`` -- the Kolmogorov profile."""
    axis = lattice.d - 1 if axis is None else axis
    if s > lattice.M:
        raise ValueError(f"wavenumber {s} exceeds lattice cutoff {lattice.M}")
    c = np.zeros((lattice.d,) + lattice.shape, complex)
    plus = list(lattice.origin)
    minus = list(lattice.origin)
    plus[axis] += s
    minus[axis] -= s
    # sin(s x) = (e^{isx} - e^{-isx}) / 2i
    c[(0,) + tuple(plus)] = amplitude / 2j
    c[(0,) + tuple(minus)] = -amplitude / 2j
    return SpectralField(lattice, c, frozenset(FLAGS))


def dumps_field(f: SpectralField) -> str:
    return serialize.dumps(f.to_json_dict())


def loads_field(text: str) -> SpectralField:
    return SpectralField.from_json_dict(json.loads(text))
