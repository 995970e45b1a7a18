"""Spectral statistics against independent oracles.

Oracles used here: cofactor-expansion determinant (8x8), explicit matrix
powers for trace moments, adaptive quadrature of the semicircle density,
and bisection inversion of the semicircle cdf.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from bandsemi.spectra import (
    SpectralSample,
    catalan,
    eigensystem,
    eigenvalues,
    esd_moment,
    kolmogorov_distance,
    semicircle_cdf,
    semicircle_density,
    semicircle_moment,
)


def cofactor_det(m: np.ndarray) -> float:
    """Brute-force determinant by first-row cofactor expansion."""
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * float(m[0, j]) * cofactor_det(minor)
    return total


def semicircle_quantile(p: float) -> float:
    lo, hi = -2.0, 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if semicircle_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


class TestEigenvalues:
    def test_swap_matrix(self):
        s = eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(s.eigenvalues, [-1.0, 1.0])

    def test_diagonal_matrix(self):
        d = np.diag([3.0, -1.0, 2.0])
        s = eigenvalues(d)
        assert np.allclose(s.eigenvalues, [-1.0, 2.0, 3.0])

    def test_trace_and_determinant_against_cofactor_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((8, 8))
        m = (a + a.T) / 2.0
        s = eigenvalues(m)
        assert abs(s.eigenvalues.sum() - np.trace(m)) <= 1e-10
        det_oracle = cofactor_det(m)
        det_spectral = float(np.prod(s.eigenvalues))
        assert abs(det_spectral - det_oracle) <= 1e-8 * max(abs(det_oracle), 1.0)

    def test_rejects_non_symmetric(self):
        with pytest.raises(ValueError):
            eigenvalues(np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_sorted_ascending(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((40, 40))
        s = eigenvalues((a + a.T) / 2.0)
        assert (np.diff(s.eigenvalues) >= 0).all()

    @pytest.mark.parametrize("n", [64, 256, 512])
    def test_eigenvector_orthogonality(self, n):
        rng = np.random.default_rng(n)
        a = rng.standard_normal((n, n))
        _, q = eigensystem((a + a.T) / 2.0)
        assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-8

    @pytest.mark.parametrize("n", [16, 64, 256])
    def test_trace_identities(self, n):
        rng = np.random.default_rng(100 + n)
        a = rng.standard_normal((n, n))
        m = (a + a.T) / 2.0
        s = eigenvalues(m)
        tr = float(np.trace(m))
        frob2 = float((m * m).sum())
        assert abs(esd_moment(s, 1) * n - tr) <= 1e-8 * max(abs(tr), 1.0)
        assert abs(esd_moment(s, 2) * n - frob2) <= 1e-8 * frob2


class TestEsdMoment:
    def test_zeroth_moment(self):
        s = SpectralSample(3, np.array([-1.0, 0.0, 2.0]))
        assert esd_moment(s, 0) == 1.0

    def test_pm_one(self):
        s = SpectralSample(2, np.array([-1.0, 1.0]))
        assert esd_moment(s, 2) == 1.0

    def test_fourth_moment_against_matrix_power(self):
        rng = np.random.default_rng(21)
        a = rng.standard_normal((6, 6))
        m = (a + a.T) / 2.0
        s = eigenvalues(m)
        oracle = float(np.trace(m @ m @ m @ m)) / 6.0
        assert abs(esd_moment(s, 4) - oracle) <= 1e-8 * abs(oracle)

    def test_negative_order_rejected(self):
        s = SpectralSample(1, np.array([1.0]))
        with pytest.raises(ValueError):
            esd_moment(s, -1)


class TestCatalan:
    def test_small_values(self):
        assert [catalan(m) for m in range(5)] == [1, 1, 2, 5, 14]

    def test_bounds(self):
        with pytest.raises(ValueError):
            catalan(-1)
        with pytest.raises(ValueError):
            catalan(31)

    def test_exact_integer_at_cap(self):
        assert catalan(30) == math.comb(60, 30) // 31


class TestSemicircle:
    def test_moments(self):
        assert semicircle_moment(1) == 0.0
        assert semicircle_moment(2) == 1.0
        assert semicircle_moment(6) == 5.0

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
    def test_moments_against_quadrature(self, k):
        oracle, _ = quad(lambda x: x**k * semicircle_density(x), -2.0, 2.0)
        assert abs(semicircle_moment(k) - oracle) <= 1e-8

    def test_density_integrates_to_one(self):
        total, _ = quad(semicircle_density, -2.0, 2.0)
        assert abs(total - 1.0) <= 1e-10

    def test_cdf_endpoints_and_center(self):
        assert semicircle_cdf(0.0) == 0.5
        assert semicircle_cdf(2.0) == 1.0
        assert semicircle_cdf(-2.0) == 0.0
        assert semicircle_cdf(-5.0) == 0.0
        assert semicircle_cdf(5.0) == 1.0

    def test_cdf_at_one_against_quadrature(self):
        oracle, _ = quad(semicircle_density, -2.0, 1.0)
        assert abs(semicircle_cdf(1.0) - oracle) <= 1e-10

    def test_cdf_monotone_and_matches_quadrature_on_grid(self):
        grid = np.linspace(-2.2, 2.2, 10_000)
        values = semicircle_cdf(grid)
        assert (np.diff(values) >= 0).all()
        # quadrature oracle on a subgrid (adaptive quad per point is costly)
        for x in np.linspace(-2.2, 2.2, 89):
            oracle, _ = quad(semicircle_density, -2.0, float(x))
            assert abs(semicircle_cdf(float(x)) - oracle) <= 1e-8


class TestKolmogorovDistance:
    def test_single_zero_eigenvalue(self):
        s = SpectralSample(1, np.array([0.0]))
        assert kolmogorov_distance(s) == 0.5

    @pytest.mark.parametrize("n", [4, 9, 25])
    def test_quantile_spectrum_attains_half_spacing(self, n):
        lam = np.array([semicircle_quantile((i - 0.5) / n) for i in range(1, n + 1)])
        s = SpectralSample(n, lam)
        assert abs(kolmogorov_distance(s) - 1.0 / (2 * n)) <= 1e-9

    def test_bounded_by_one(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            lam = np.sort(rng.standard_normal(rng.integers(1, 30)) * 3)
            s = SpectralSample(lam.size, lam)
            assert 0.0 <= kolmogorov_distance(s) <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kolmogorov_distance(SpectralSample(0, np.array([])))
