"""Bandlimit-controlled sinusoidal networks with certified spectral expansion."""

__version__ = "0.1.0"

from .bessel import bessel_bound, bessel_j

__all__ = [
    "__version__",
    "bessel_j",
    "bessel_bound",
]
