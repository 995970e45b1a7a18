"""Periodic random band matrices with dependent entries.

Samplers for Curie-Weiss, correlated-Gaussian and independent (Wigner)
triangular schemes, periodic band masking and scaling, spectral statistics
against the semicircle distribution, exact moment-method combinatorics, and
a reproducible command-line experiment harness.
"""

__version__ = "0.1.0"

from . import bandmatrix, ensembles, oracle, spectra

__all__ = ["bandmatrix", "ensembles", "oracle", "spectra", "__version__"]
