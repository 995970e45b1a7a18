"""Spectral statistics: eigendecomposition, ESD moments, semicircle reference.

The empirical spectral distribution (ESD) of a symmetric n x n matrix puts
mass 1/n on each eigenvalue; its k-th moment is tr(M^k)/n.  The reference
limit is the semicircle distribution with density sqrt(4 - x^2) / (2 pi) on
[-2, 2], whose even moments are Catalan numbers and odd moments vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SYMMETRY_ATOL = 1e-12
FROBENIUS_RTOL = 1e-8
RESIDUAL_RTOL = 1e-8
CATALAN_MAX = 30


class NumericalFailure(RuntimeError):
    """A numerical routine failed its accuracy contract."""


@dataclass(frozen=True)
class SpectralSample:
    """Sorted spectrum of a symmetric matrix."""

    n: int
    eigenvalues: np.ndarray  # ascending


def _require_symmetric(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_ATOL:
        raise ValueError("matrix is not symmetric within 1e-12")
    return m


def eigensystem(matrix: np.ndarray) -> tuple[SpectralSample, np.ndarray]:
    """Full symmetric eigendecomposition, eigenvalues ascending.

    Returns (SpectralSample, Q) with columns of Q the eigenvectors.  Checks
    that sum(lambda^2) reproduces the squared Frobenius norm to relative
    1e-8.  Non-convergence of the underlying LAPACK driver raises.
    """
    m = _require_symmetric(matrix)
    try:
        w, q = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed to converge: {exc}") from exc
    frob2 = float(np.sum(m * m))
    lam2 = float(np.sum(w * w))
    if abs(lam2 - frob2) > FROBENIUS_RTOL * max(frob2, 1e-300):
        raise NumericalFailure(
            f"spectrum inconsistent with Frobenius norm: {lam2} vs {frob2}"
        )
    return SpectralSample(n=m.shape[0], eigenvalues=w), q


def eigenvalues(matrix: np.ndarray, spot_check: bool = True) -> SpectralSample:
    """Spectrum of a symmetric matrix (ascending).

    With `spot_check`, the residual ||M v - lambda v|| is verified on 10
    deterministically chosen eigenpairs against 1e-8 * ||M||_2.
    """
    sample, q = eigensystem(matrix)
    if spot_check and sample.n:
        m = np.asarray(matrix, dtype=float)
        w = sample.eigenvalues
        norm = max(abs(float(w[0])), abs(float(w[-1])), 1e-300)
        picks = np.random.default_rng(0).choice(
            sample.n, size=min(10, sample.n), replace=False
        )
        vecs = q[:, picks]
        resid = m @ vecs - vecs * w[picks]
        worst = float(np.max(np.linalg.norm(resid, axis=0)))
        if worst > RESIDUAL_RTOL * norm:
            raise NumericalFailure(
                f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_RTOL} * ||M||"
            )
    return sample


def esd_moment(s: SpectralSample, k: int) -> float:
    """k-th moment of the ESD: mean of lambda^k."""
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    if k == 0:
        return 1.0
    return float(np.mean(s.eigenvalues ** k))


def catalan(m: int) -> int:
    """m-th Catalan number binom(2m, m) / (m + 1), exactly."""
    if m < 0:
        raise ValueError(f"Catalan index must be nonnegative, got {m}")
    if m > CATALAN_MAX:
        raise ValueError(f"Catalan index {m} beyond supported range {CATALAN_MAX}")
    return math.comb(2 * m, m) // (m + 1)


def semicircle_moment(k: int) -> float:
    """k-th moment of the semicircle distribution: Catalan(k/2) for even k, else 0."""
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    if k % 2:
        return 0.0
    return float(catalan(k // 2))


def semicircle_density(x):
    """Density sqrt(4 - x^2) / (2 pi) on [-2, 2]; scalar or array input."""
    arr = np.asarray(x, dtype=float)
    inside = np.abs(arr) <= 2.0
    val = np.where(inside, np.sqrt(np.clip(4.0 - arr * arr, 0.0, None)) / (2.0 * np.pi), 0.0)
    return float(val) if np.isscalar(x) or arr.ndim == 0 else val


def semicircle_cdf(x):
    """Distribution function of the semicircle law; scalar or array input."""
    arr = np.asarray(x, dtype=float)
    clipped = np.clip(arr, -2.0, 2.0)
    val = (
        0.5
        + clipped * np.sqrt(np.clip(4.0 - clipped * clipped, 0.0, None)) / (4.0 * np.pi)
        + np.arcsin(clipped / 2.0) / np.pi
    )
    val = np.where(arr <= -2.0, 0.0, np.where(arr >= 2.0, 1.0, val))
    return float(val) if np.isscalar(x) or arr.ndim == 0 else val


class SemicircleRef:
    """Reference semicircle distribution: density, cdf and moments."""

    density = staticmethod(semicircle_density)
    cdf = staticmethod(semicircle_cdf)
    moment = staticmethod(semicircle_moment)


SEMICIRCLE = SemicircleRef()


def kolmogorov_distance(s: SpectralSample) -> float:
    """Exact sup_x |F_n(x) - F(x)| between the ESD and the semicircle cdf.

    The supremum of the step-function difference is attained at an
    eigenvalue, from the left or from the right.
    """
    if s.n == 0:
        raise ValueError("empty spectrum")
    f = semicircle_cdf(s.eigenvalues)
    i = np.arange(1, s.n + 1, dtype=float)
    upper = np.abs(f - i / s.n)
    lower = np.abs(f - (i - 1.0) / s.n)
    return float(max(upper.max(), lower.max()))
