"""Spectral Euler--Bardina solver with attractor-dimension bound tooling on periodic boxes."""

__version__ = "0.1.0"

from .spectral import SpectralField, TorusLattice  # noqa: E402
from .dynamics import PhysicsParams, simulate  # noqa: E402
from .kolmogorov import KolmogorovFlow, RegionParams  # noqa: E402

__all__ = ["__version__", "SpectralField", "TorusLattice", "PhysicsParams", "simulate", "KolmogorovFlow", "RegionParams"]
