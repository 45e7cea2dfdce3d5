from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from dilute_wigner.ensemble import EnsembleSpec, EntryDistribution, SparseSymmetricMatrix, sample_matrix
from dilute_wigner.errors import ConvergenceError, InvalidParameterError, ResourceLimitError
from dilute_wigner.spectral import (
    catalan_moment,
    dense_spectrum,
    empirical_moments,
    esd_ks_distance,
    lanczos_extremes,
    moments_from_eigenvalues,
    monte_carlo_moments,
    semicircle_cdf,
    semicircle_pdf,
    semicircle_quantile,
    spectral_norm,
    summarize,
    trace_moments_matvec,
)

RAD = EntryDistribution.rademacher()
GAUSS = EntryDistribution.gaussian()

SWAP = SparseSymmetricMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])


class TestSpectralNorm:
    def test_swap(self):
        assert spectral_norm(SWAP) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        m = SparseSymmetricMatrix.from_dense(np.diag([3.0, -5.0]))
        assert spectral_norm(m) == pytest.approx(5.0, rel=1e-12)

    def test_zero_and_empty(self):
        assert spectral_norm(SparseSymmetricMatrix.from_dense(np.zeros((3, 3)))) == 0.0

    def test_one_by_one(self):
        assert spectral_norm(SparseSymmetricMatrix.from_dense([[-2.5]])) == pytest.approx(2.5)

    @pytest.mark.parametrize("n", [64, 256])
    def test_dense_oracle(self, n):
        worst = 0.0
        for i in range(10):
            dist = RAD if i % 2 else GAUSS
            m = sample_matrix(EnsembleSpec(n, [2, 5, 20, n][i % 4], dist, 1000 + i))
            eig = np.linalg.eigvalsh(m.to_dense())
            want = max(abs(eig[0]), abs(eig[-1]))
            got = spectral_norm(m, tol=1e-12, seed=i)
            worst = max(worst, abs(got - want) / want)
        assert worst <= 1e-8

    def test_seeded_start_is_deterministic(self):
        m = sample_matrix(EnsembleSpec(300, 6, GAUSS, 5))
        assert lanczos_extremes(m, seed=3) == lanczos_extremes(m, seed=3)

    def test_extremes_match_dense(self):
        m = sample_matrix(EnsembleSpec(200, 8, GAUSS, 2))
        lo, hi, iters = lanczos_extremes(m, tol=1e-12)
        eig = np.linalg.eigvalsh(m.to_dense())
        assert lo == pytest.approx(eig[0], rel=1e-8) and hi == pytest.approx(eig[-1], rel=1e-8)
        assert iters > 0

    def test_non_convergence(self):
        m = sample_matrix(EnsembleSpec(400, 30, GAUSS, 1))
        with pytest.raises(ConvergenceError) as info:
            lanczos_extremes(m, tol=1e-15, max_iter=3, krylov_dim=3)
        assert info.value.iterations <= 3 + 3
        assert math.isfinite(info.value.last_value)

    def test_bad_tol(self):
        with pytest.raises(InvalidParameterError):
            spectral_norm(SWAP, tol=0)


class TestDenseSpectrum:
    def test_trivial(self):
        assert dense_spectrum(SparseSymmetricMatrix.from_dense(np.zeros((3, 3)))).tolist() == [0, 0, 0]
        assert dense_spectrum(SWAP) == pytest.approx([-1, 1])

    def test_trace_identity(self):
        m = sample_matrix(EnsembleSpec(128, 128, RAD, 6))
        eig = dense_spectrum(m)
        trace = float(m.values[m.rows == m.cols].sum())
        assert abs(eig.sum() - trace) <= 1e-9 * 128 * np.abs(m.values).max()
        assert np.all(np.diff(eig) >= 0)

    def test_limit(self):
        m = SparseSymmetricMatrix.from_dense(np.eye(5))
        with pytest.raises(ResourceLimitError):
            dense_spectrum(m, dense_limit=4)

    def test_summary(self):
        spec = EnsembleSpec(60, 6, GAUSS, 3)
        m = sample_matrix(spec)
        s = summarize(m, spec, with_eigenvalues=True)
        assert s.lambda_max == max(abs(s.eigenvalues[0]), abs(s.eigenvalues[-1]))
        assert summarize(m, spec).lambda_max == pytest.approx(s.lambda_max, rel=1e-9)


class TestSemicircle:
    def test_pdf_values(self):
        assert semicircle_pdf(0.0) == pytest.approx(1 / math.pi)
        assert semicircle_pdf(1.0) == pytest.approx(math.sqrt(3) / (2 * math.pi))
        assert semicircle_pdf(2.0) == 0 and semicircle_pdf(-2.0) == 0 and semicircle_pdf(3.0) == 0

    def test_cdf_values(self):
        assert semicircle_cdf(0.0) == pytest.approx(0.5)
        assert semicircle_cdf(-2.0) == 0 and semicircle_cdf(2.0) == 1
        assert semicircle_cdf(-7.0) == 0 and semicircle_cdf(9.0) == 1

    def test_cdf_is_integral_of_pdf(self):
        for x in (-1.7, -0.3, 0.9, 1.99):
            val, _ = integrate.quad(semicircle_pdf, -2, x, epsabs=1e-13)
            assert semicircle_cdf(x) == pytest.approx(val, abs=1e-10)

    def test_normalization(self):
        val, _ = integrate.quad(semicircle_pdf, -2, 2, epsabs=1e-13, epsrel=1e-13)
        assert abs(val - 1) <= 1e-10

    @pytest.mark.parametrize("k", range(0, 9))
    def test_moments_are_catalan(self, k):
        val, _ = integrate.quad(lambda x: x ** (2 * k) * semicircle_pdf(x), -2, 2, epsabs=1e-13, epsrel=1e-13)
        assert abs(val - catalan_moment(k)) <= 1e-8

    def test_quantile_inverts_cdf(self):
        u = np.linspace(0.001, 0.999, 50)
        assert np.allclose(semicircle_cdf(semicircle_quantile(u)), u, atol=1e-12)

    def test_catalan_moment(self):
        assert [catalan_moment(k) for k in (0, 1, 4)] == [1, 1, 14]


class TestKS:
    def test_point_mass(self):
        assert esd_ks_distance(np.zeros(10)) == pytest.approx(0.5)

    def test_quantile_construction(self):
        n = 1000
        eig = semicircle_quantile((np.arange(1, n + 1) - 0.5) / n)
        assert esd_ks_distance(eig) <= 1 / n + 1e-9

    def test_range(self):
        assert esd_ks_distance([10.0, 11.0]) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            esd_ks_distance([])


class TestMoments:
    def test_trivial(self):
        assert empirical_moments(SparseSymmetricMatrix.from_dense(np.zeros((3, 3))), 3).tolist() == [0, 0, 0]
        assert empirical_moments(SWAP, 4) == pytest.approx([1, 1, 1, 1])

    def test_bad_kmax(self):
        with pytest.raises(InvalidParameterError):
            empirical_moments(SWAP, 0)

    def test_bitwise_from_eigenvalues(self):
        m = sample_matrix(EnsembleSpec(40, 5, GAUSS, 2))
        eig = dense_spectrum(m)
        assert np.array_equal(empirical_moments(m, 5), moments_from_eigenvalues(eig, 5))
        want = [np.sum(eig ** (2 * k)) / 40 for k in range(1, 6)]
        assert np.allclose(empirical_moments(m, 5), want, rtol=1e-13)

    @pytest.mark.parametrize("n,p,dist", [(8, 4, RAD), (32, 3, GAUSS), (64, 10, RAD), (64, 64, GAUSS)])
    def test_against_matvec_trace(self, n, p, dist):
        m = sample_matrix(EnsembleSpec(n, p, dist, n + int(p)))
        a = empirical_moments(m, 5)
        b = trace_moments_matvec(m, 5)
        assert np.all(a >= 0)
        assert np.allclose(a, b, rtol=1e-9, atol=0)

    def test_monte_carlo_m2(self):
        reports = monte_carlo_moments(4, 2, RAD, 1, trials=10_000, master_seed=0)
        r = reports[0]
        assert r.k == 1 and r.trials == 10_000
        assert abs(r.monte_carlo_mean - 1.0) <= 3 * r.std_error

    def test_monte_carlo_needs_two_trials(self):
        with pytest.raises(InvalidParameterError):
            monte_carlo_moments(4, 2, RAD, 1, trials=1)
