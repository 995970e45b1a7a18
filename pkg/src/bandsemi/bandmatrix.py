"""Periodic band structure: relevance, masking, and the scaled matrix.

An index pair (i, j) of an n x n matrix is *relevant* for bandwidth b when it
lies on one of the b cyclic diagonals centered on the main diagonal, i.e.

    |i - j| <= (b - 1) / 2   or   |i - j| >= n - (b - 1) / 2,

with the full matrix (b = n) as a special case.  Admissible bandwidths are
b = n or odd b < n.  Every row then holds exactly b relevant positions, n * b
in total.  The scaled matrix divides the masked entries by sqrt(b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BandSpec:
    """Dimension n and bandwidth b of a periodic band matrix.

    b must equal n, or be odd and smaller than n.  Even b < n is rejected
    outright instead of being rounded.
    """

    n: int
    b: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got n={self.n}")
        if self.b < 1:
            raise ValueError(f"bandwidth must be positive, got b={self.b}")
        if self.b > self.n:
            raise ValueError(f"bandwidth b={self.b} exceeds dimension n={self.n}")
        if self.b < self.n and self.b % 2 == 0:
            raise ValueError(
                f"bandwidth b={self.b} below n={self.n} must be odd; "
                "only b = n may be even"
            )

    @property
    def half_width(self) -> int:
        """(b - 1) // 2: number of cyclic off-diagonals on each side."""
        return (self.b - 1) // 2


@dataclass(frozen=True)
class ScaledBandMatrix:
    """Masked and 1/sqrt(b)-scaled symmetric matrix together with its spec."""

    spec: BandSpec
    values: np.ndarray
    scale_applied: bool = True


def is_relevant(i: int, j: int, spec: BandSpec) -> bool:
    """Whether the 1-based index pair (i, j) lies inside the cyclic band."""
    n, b = spec.n, spec.b
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"index pair ({i}, {j}) out of range for n={n}")
    if b == n:
        return True
    d = abs(i - j)
    h = spec.half_width
    return d <= h or d >= n - h


def count_relevant(spec: BandSpec) -> int:
    """Number of relevant index pairs in [n]^2; equals n * b."""
    return spec.n * spec.b


def band_mask(spec: BandSpec) -> np.ndarray:
    """Boolean n x n array, True exactly at the relevant positions."""
    n = spec.n
    if spec.b == n:
        return np.ones((n, n), dtype=bool)
    d = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    h = spec.half_width
    return (d <= h) | (d >= n - h)


def apply_band_mask(sample, spec: BandSpec) -> np.ndarray:
    """Copy of the sample entries with all non-relevant positions set to 0.

    `sample` is a SchemeSample or a raw symmetric array of matching
    dimension.  Idempotent, and preserves symmetry.
    """
    entries = np.asarray(getattr(sample, "entries", sample), dtype=float)
    if entries.shape != (spec.n, spec.n):
        raise ValueError(
            f"sample has shape {entries.shape}, expected ({spec.n}, {spec.n})"
        )
    return np.where(band_mask(spec), entries, 0.0)


def build_X(sample, spec: BandSpec) -> ScaledBandMatrix:
    """Assemble the scaled periodic band matrix: masked entries / sqrt(b)."""
    masked = apply_band_mask(sample, spec)
    return ScaledBandMatrix(spec=spec, values=masked / np.sqrt(spec.b))
