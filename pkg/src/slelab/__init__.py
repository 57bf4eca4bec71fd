"""Simulation and verification tools for SLE multifractal spectra."""
from .exponents import DomainError

__version__ = "0.1.0"

__all__ = ["DomainError", "__version__"]
