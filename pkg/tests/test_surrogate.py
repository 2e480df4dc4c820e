import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vantage.errors import FactorizationError
from vantage.geometry import NormalizedPoint
from vantage.surrogate import (
    GpPosterior,
    GridSearchSpace,
    KernelParams,
    Observation,
    fit,
    fit_hyperparameters,
    kernel,
    log_marginal_likelihood,
    posterior_mean_cov,
)

UNIT = KernelParams(signal_variance=1.0, lengthscale_h=1.0, lengthscale_v=1.0, noise_variance=0.0)


def sq_exp(a, b, p: KernelParams):
    """Independent kernel oracle for matrix assembly in tests."""
    dh = (a[0] - b[0]) / p.lengthscale_h
    dv = (a[1] - b[1]) / p.lengthscale_v
    return p.signal_variance * math.exp(-0.5 * (dh * dh + dv * dv))


def dense_posterior(observations, params, query, prior_mean=None):
    """Textbook GP equations via explicit matrix inverse (no Cholesky)."""
    pts = np.array([[o.point.nu_h, o.point.nu_v] for o in observations])
    y = np.array([o.value for o in observations])
    mean = y.mean() if prior_mean is None else prior_mean
    n = len(pts)
    gram = np.array([[sq_exp(pts[i], pts[j], params) for j in range(n)] for i in range(n)])
    k_star = np.array([[sq_exp(pts[i], q, params) for q in query] for i in range(n)])
    k_qq = np.array([[sq_exp(a, b, params) for b in query] for a in query])
    inv = np.linalg.inv(gram + params.noise_variance * np.eye(n))
    return mean + k_star.T @ inv @ (y - mean), k_qq - k_star.T @ inv @ k_star


def random_observations(rng, n):
    return [Observation(NormalizedPoint(*rng.random(2)), float(rng.random())) for _ in range(n)]


class TestKernel:
    def test_zero_distance_is_signal_variance(self):
        p = NormalizedPoint(0.3, 0.7)
        assert kernel(p, p, UNIT) == 1.0

    def test_unit_diagonal_distance(self):
        value = kernel(NormalizedPoint(0, 0), NormalizedPoint(1, 1), UNIT)
        assert value == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_anisotropic_evaluation(self):
        params = KernelParams(signal_variance=2.0, lengthscale_h=0.5, lengthscale_v=1.0, noise_variance=0.0)
        value = kernel(NormalizedPoint(0, 0), NormalizedPoint(0.5, 0), params)
        assert value == pytest.approx(2.0 * math.exp(-0.5), rel=1e-12)

    def test_symmetry(self):
        a, b = NormalizedPoint(0.1, 0.9), NormalizedPoint(0.8, 0.2)
        params = KernelParams(lengthscale_h=0.3, lengthscale_v=0.6)
        assert kernel(a, b, params) == kernel(b, a, params)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            KernelParams(signal_variance=0.0)
        with pytest.raises(ValueError):
            KernelParams(lengthscale_h=-0.1)
        with pytest.raises(ValueError):
            KernelParams(noise_variance=-1e-9)


class TestFit:
    def test_single_observation_interpolates_exactly(self):
        obs = [Observation(NormalizedPoint(0.4, 0.6), 0.7)]
        gp = fit(obs, UNIT)
        mean, cov = posterior_mean_cov(gp, [obs[0].point])
        assert mean[0] == pytest.approx(0.7, abs=1e-12)
        assert cov[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_coincident_zero_noise_rejected(self):
        p = NormalizedPoint(0.5, 0.5)
        with pytest.raises(ValueError, match="coincident"):
            fit([Observation(p, 0.2), Observation(p, 0.4)], UNIT)

    def test_single_point_closed_form_update(self):
        # With an explicit prior mean of 0.5 and unit signal variance the
        # posterior mean is prior + k(q, p0) * (y - prior).
        p0 = NormalizedPoint(0.5, 0.5)
        gp = fit([Observation(p0, 0.8)], UNIT, prior_mean=0.5)
        for q in (NormalizedPoint(0.5, 0.5), NormalizedPoint(0.2, 0.9), NormalizedPoint(1.0, 0.0)):
            expected = 0.5 + kernel(q, p0, UNIT) * (0.8 - 0.5)
            mean, _ = posterior_mean_cov(gp, [q])
            assert mean[0] == pytest.approx(expected, abs=1e-12)

    def test_default_prior_mean_is_data_mean(self):
        rng = np.random.default_rng(0)
        obs = random_observations(rng, 5)
        gp = fit(obs)
        assert gp.prior_mean == pytest.approx(np.mean([o.value for o in obs]))

    def test_empty_fit_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            fit([])

    def test_observation_value_validated(self):
        with pytest.raises(ValueError, match="success rate"):
            Observation(NormalizedPoint(0.5, 0.5), 1.2)


class TestPosterior:
    def test_training_point_with_zero_noise(self):
        rng = np.random.default_rng(1)
        obs = random_observations(rng, 6)
        gp = fit(obs, KernelParams(noise_variance=0.0))
        mean, cov = posterior_mean_cov(gp, [obs[2].point])
        assert mean[0] == pytest.approx(obs[2].value, abs=1e-8)
        assert abs(cov[0, 0]) < 1e-9

    def test_prior_only_queries(self):
        params = KernelParams()
        gp = GpPosterior.prior(params, prior_mean=0.5)
        batch = [NormalizedPoint(0.2, 0.3), NormalizedPoint(0.8, 0.1)]
        mean, cov = posterior_mean_cov(gp, batch)
        np.testing.assert_allclose(mean, 0.5)
        expect = np.array([[sq_exp((0.2, 0.3), (0.2, 0.3), params), sq_exp((0.2, 0.3), (0.8, 0.1), params)],
                           [sq_exp((0.8, 0.1), (0.2, 0.3), params), sq_exp((0.8, 0.1), (0.8, 0.1), params)]])
        np.testing.assert_allclose(cov, expect, atol=1e-14)

    def test_empty_batch_rejected(self):
        gp = GpPosterior.prior(KernelParams())
        with pytest.raises(ValueError, match="non-empty"):
            posterior_mean_cov(gp, [])

    def test_matches_dense_inverse_oracle(self):
        rng = np.random.default_rng(2)
        params = KernelParams(signal_variance=0.09, lengthscale_h=0.25, lengthscale_v=0.35, noise_variance=1e-3)
        obs = random_observations(rng, 3)
        query = [NormalizedPoint(0.15, 0.85), NormalizedPoint(0.6, 0.4)]
        gp = fit(obs, params)
        mean, cov = posterior_mean_cov(gp, query)
        mean_o, cov_o = dense_posterior(obs, params, [(q.nu_h, q.nu_v) for q in query])
        np.testing.assert_allclose(mean, mean_o, atol=1e-8)
        np.testing.assert_allclose(cov, cov_o, atol=1e-8)

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_variance_bounded_by_prior(self, n, seed):
        rng = np.random.default_rng(seed)
        params = KernelParams()
        gp = fit(random_observations(rng, n), params)
        query = [NormalizedPoint(*rng.random(2)) for _ in range(4)]
        _, cov = posterior_mean_cov(gp, query)
        assert np.all(cov.diagonal() >= 0.0)
        assert np.all(cov.diagonal() <= params.signal_variance + 1e-9)
        np.testing.assert_allclose(cov, cov.T, atol=1e-12)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_more_data_never_increases_variance(self, seed):
        rng = np.random.default_rng(seed)
        obs = random_observations(rng, 6)
        query = [NormalizedPoint(*rng.random(2)) for _ in range(5)]
        _, cov_small = posterior_mean_cov(fit(obs[:5]), query)
        _, cov_big = posterior_mean_cov(fit(obs), query)
        assert np.all(cov_big.diagonal() <= cov_small.diagonal() + 1e-10)

    def test_zero_noise_interpolates_all_points(self):
        rng = np.random.default_rng(3)
        obs = random_observations(rng, 8)
        gp = fit(obs, KernelParams(noise_variance=0.0))
        mean, _ = posterior_mean_cov(gp, [o.point for o in obs])
        np.testing.assert_allclose(mean, [o.value for o in obs], atol=1e-8)

    def test_gram_matrices_positive_semidefinite(self):
        rng = np.random.default_rng(4)
        from vantage._kernels import cross_cov

        for _ in range(10):
            pts = rng.random((12, 2))
            gram = cross_cov(pts, pts, 0.2, 0.3, 0.04)
            assert np.min(np.linalg.eigvalsh(gram)) >= -1e-8


class TestHyperparameters:
    def test_requires_three_observations(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError, match="at least 3"):
            fit_hyperparameters(random_observations(rng, 2))

    def test_recovers_known_lengthscale(self):
        # Draw from a GP with lengthscale 0.2 and check the grid search
        # lands within one grid step of it.
        rng = np.random.default_rng(7)
        truth = KernelParams(signal_variance=0.04, lengthscale_h=0.2, lengthscale_v=0.2, noise_variance=1e-6)
        pts = rng.random((40, 2))
        from vantage._kernels import cross_cov

        gram = cross_cov(pts, pts, 0.2, 0.2, 0.04) + truth.noise_variance * np.eye(40)
        y = 0.5 + np.linalg.cholesky(gram) @ rng.standard_normal(40)
        y = np.clip(y, 0.0, 1.0)
        obs = [Observation(NormalizedPoint(*pt), float(v)) for pt, v in zip(pts, y)]
        grid = GridSearchSpace.default()
        fitted = fit_hyperparameters(obs, grid)
        candidates = np.asarray(grid.lengthscales)
        target_idx = int(np.argmin(np.abs(candidates - 0.2)))
        got_idx = int(np.argmin(np.abs(candidates - fitted.lengthscale_h)))
        assert abs(got_idx - target_idx) <= 1

    def test_matches_brute_force_likelihood_argmax(self):
        rng = np.random.default_rng(8)
        obs = random_observations(rng, 6)
        grid = GridSearchSpace(
            signal_variances=(0.01, 0.04, 0.16),
            lengthscales=(0.1, 0.3),
            noise_variances=(1e-4, 1e-2),
        )
        fitted = fit_hyperparameters(obs, grid)
        best, best_ll = None, -np.inf
        for s2 in grid.signal_variances:
            for ls in grid.lengthscales:
                for noise in grid.noise_variances:
                    cand = KernelParams(s2, ls, ls, noise)
                    ll = log_marginal_likelihood(obs, cand)
                    if ll > best_ll:
                        best, best_ll = cand, ll
        assert fitted == best

    def test_constant_observations_collapse_signal(self):
        # Flat data: the selected candidate is the brute-force likelihood
        # argmax and puts no variance in the signal (minimum of the grid),
        # i.e. the noise-to-signal ratio is maximal at the chosen noise.
        pts = [(0.1, 0.2), (0.5, 0.8), (0.9, 0.4), (0.3, 0.6)]
        obs = [Observation(NormalizedPoint(*p), 0.7) for p in pts]
        grid = GridSearchSpace(
            signal_variances=(0.01, 0.04, 0.16),
            lengthscales=(0.1, 0.2, 0.4),
            noise_variances=(1e-4, 1e-3),
        )
        fitted = fit_hyperparameters(obs, grid)
        assert fitted.signal_variance == min(grid.signal_variances)
        ratios = [n / s for s in grid.signal_variances for n in grid.noise_variances if n == fitted.noise_variance]
        assert fitted.noise_variance / fitted.signal_variance == max(ratios)

    def test_lml_oracle_formula(self):
        # Against the direct dense formula -0.5 r' A^-1 r - 0.5 logdet(A) - n/2 log(2pi).
        rng = np.random.default_rng(9)
        obs = random_observations(rng, 5)
        params = KernelParams()
        pts = np.array([[o.point.nu_h, o.point.nu_v] for o in obs])
        y = np.array([o.value for o in obs])
        r = y - y.mean()
        gram = np.array([[sq_exp(a, b, params) for b in pts] for a in pts]) + params.noise_variance * np.eye(5)
        sign, logdet = np.linalg.slogdet(gram)
        assert sign > 0
        expected = -0.5 * r @ np.linalg.inv(gram) @ r - 0.5 * logdet - 2.5 * math.log(2 * math.pi)
        assert log_marginal_likelihood(obs, params) == pytest.approx(expected, rel=1e-10)


class TestFactorizationFailure:
    def test_error_reports_jitter(self):
        err = FactorizationError("boom", jitter=1e-4)
        assert err.jitter == 1e-4
