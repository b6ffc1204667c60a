"""Dimension-weighted fast multipole compression of kernel matrices on anisotropic data."""

__version__ = "0.1.0"
