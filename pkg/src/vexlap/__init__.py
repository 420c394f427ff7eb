"""Variable-exponent nonlocal variational solver."""

__version__ = "0.1.0"
