"""Spectral concentration by kernels: spectra, kernels, noise, head mass and LDPC tooling."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArgumentError, ConfigError, ConstructionError, DomainMismatch, KdqiError, NormalizationError,
    SearchError, UnitarityError,
)
from .spectral import IndexDomain, Spectrum, HeadSet, fourier, head_set, head_mass  # noqa: E402
from .noise import NoiseModel  # noqa: E402

__all__ = [
    "__version__", "ArgumentError", "ConfigError", "ConstructionError", "DomainMismatch", "KdqiError",
    "NormalizationError", "SearchError", "UnitarityError", "IndexDomain", "Spectrum", "HeadSet", "fourier",
    "head_set", "head_mass", "NoiseModel",
]
