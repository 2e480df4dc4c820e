import math

import numpy as np
import pytest

from vantage._kernels import psd_factor
from vantage.acquisition import (
    AcquisitionConfig,
    _dedupe,
    _sobol,
    beta_schedule,
    propose_batch,
    qmc_normals,
    qucb_score,
    qucb_score_from_factor,
)
from vantage.geometry import NormalizedPoint
from vantage.seeding import split_seed
from vantage.surrogate import GpPosterior, KernelParams, Observation, fit, posterior_mean_cov


def random_gp(rng, n=8, params=None):
    params = params or KernelParams()
    obs = [Observation(NormalizedPoint(*rng.random(2)), float(rng.random())) for _ in range(n)]
    return fit(obs, params)


def cfg_for(q, **kwargs):
    defaults = dict(q=q, mc_samples=256, restarts=16, refine_steps=5)
    defaults.update(kwargs)
    return AcquisitionConfig(**defaults)


class TestScore:
    def test_q1_reduces_to_ucb(self):
        # E|z - mu| under N(mu, (beta*pi/2) s^2) is sqrt(beta) * s, so the
        # score must approach mu + sqrt(beta) * s within MC error.
        rng = np.random.default_rng(0)
        failures = 0
        for trial in range(100):
            gp = random_gp(rng, n=int(rng.integers(1, 10)))
            point = NormalizedPoint(*rng.random(2))
            beta = float(rng.uniform(0.2, 4.0))
            cfg = AcquisitionConfig(q=1, beta=beta, mc_samples=4096, restarts=1, refine_steps=0)
            mean, cov = posterior_mean_cov(gp, [point])
            sigma = math.sqrt(max(cov[0, 0], 0.0))
            score = qucb_score(gp, [point], cfg, qmc_seed=trial)
            # MC standard error of the folded-normal sample mean.
            c = math.sqrt(beta * math.pi / 2.0)
            se = c * sigma * math.sqrt(1.0 - 2.0 / math.pi) / math.sqrt(cfg.mc_samples)
            if abs(score - (mean[0] + math.sqrt(beta) * sigma)) > 3.0 * max(se, 1e-12):
                failures += 1
        assert failures == 0

    def test_tiny_beta_collapses_to_max_mean(self):
        rng = np.random.default_rng(1)
        gp = random_gp(rng, n=6)
        batch = [NormalizedPoint(*rng.random(2)) for _ in range(4)]
        cfg = AcquisitionConfig(q=4, beta=1e-12, mc_samples=512, restarts=1, refine_steps=0)
        mean, _ = posterior_mean_cov(gp, batch)
        assert qucb_score(gp, batch, cfg, qmc_seed=3) == pytest.approx(mean.max(), abs=1e-4)

    def test_zero_variance_point_contributes_its_mean_exactly(self):
        # A batch consisting of a zero-noise training point has zero
        # posterior variance: the factor column is zero, so the score is
        # the mean itself regardless of beta.
        p0 = NormalizedPoint(0.5, 0.5)
        gp = fit([Observation(p0, 0.8)], KernelParams(noise_variance=0.0))
        cfg = AcquisitionConfig(q=1, beta=50.0, mc_samples=64, restarts=1, refine_steps=0)
        assert qucb_score(gp, [p0], cfg, qmc_seed=0) == pytest.approx(0.8, abs=1e-9)

    def test_monotone_in_beta(self):
        rng = np.random.default_rng(2)
        gp = random_gp(rng, n=7)
        batch = [NormalizedPoint(*rng.random(2)) for _ in range(3)]
        betas = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0]
        scores = []
        for beta in betas:
            cfg = AcquisitionConfig(q=3, beta=beta, mc_samples=256, restarts=1, refine_steps=0)
            scores.append(qucb_score(gp, batch, cfg, qmc_seed=11))
        assert all(b >= a for a, b in zip(scores, scores[1:]))

    def test_permutation_invariance_through_factor(self):
        rng = np.random.default_rng(3)
        gp = random_gp(rng, n=9)
        batch = [NormalizedPoint(*rng.random(2)) for _ in range(4)]
        mean, cov = posterior_mean_cov(gp, batch)
        factor = psd_factor(cov)
        normals = qmc_normals(256, 4, seed=5)
        base = qucb_score_from_factor(mean, factor, normals, beta=2.0)
        perm = np.array([2, 0, 3, 1])
        permuted = qucb_score_from_factor(mean[perm], factor[perm, :], normals, beta=2.0)
        assert permuted == base  # identical max over a permuted set

    def test_score_dominates_best_mean(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            gp = random_gp(rng, n=int(rng.integers(2, 12)))
            batch = [NormalizedPoint(*rng.random(2)) for _ in range(5)]
            cfg = AcquisitionConfig(q=5, beta=float(rng.uniform(0.1, 3.0)), mc_samples=64, restarts=1, refine_steps=0)
            mean, _ = posterior_mean_cov(gp, batch)
            assert qucb_score(gp, batch, cfg, qmc_seed=trial) >= mean.max() - 1e-6

    def test_batch_size_must_match_config(self):
        gp = GpPosterior.prior(KernelParams())
        with pytest.raises(ValueError, match="batch size"):
            qucb_score(gp, [NormalizedPoint(0.5, 0.5)], cfg_for(2), qmc_seed=0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        gp = random_gp(rng)
        batch = [NormalizedPoint(*rng.random(2)) for _ in range(3)]
        cfg = cfg_for(3)
        a = qucb_score(gp, batch, cfg, qmc_seed=123)
        b = qucb_score(gp, batch, cfg, qmc_seed=123)
        assert a == b


class TestProposal:
    def test_deterministic(self):
        rng = np.random.default_rng(6)
        gp = random_gp(rng)
        cfg = cfg_for(4)
        assert propose_batch(gp, cfg, seed=9) == propose_batch(gp, cfg, seed=9)

    def test_score_at_least_every_initial_candidate(self):
        rng = np.random.default_rng(7)
        gp = random_gp(rng, n=10)
        cfg = cfg_for(3)
        seed = 13
        proposal = propose_batch(gp, cfg, seed=seed)
        qmc_seed = split_seed(seed, 2)
        initial = _sobol(cfg.restarts, 2 * cfg.q, split_seed(seed, 1)).reshape(cfg.restarts, cfg.q, 2)
        for candidate in initial:
            batch = [NormalizedPoint(float(x[0]), float(x[1])) for x in candidate]
            assert proposal.score >= qucb_score(gp, batch, cfg, qmc_seed) - 1e-9

    def test_exploitation_clusters_at_peak(self):
        # Sharp high-mean peak, negligible exploration: the whole batch
        # lands within one lengthscale of the peak.
        peak = NormalizedPoint(0.5, 0.5)
        obs = [Observation(peak, 0.95)]
        for corner in ((0.05, 0.05), (0.05, 0.95), (0.95, 0.05), (0.95, 0.95), (0.3, 0.8), (0.8, 0.3)):
            obs.append(Observation(NormalizedPoint(*corner), 0.1))
        gp = fit(obs, KernelParams(signal_variance=0.04, lengthscale_h=0.15, lengthscale_v=0.15, noise_variance=1e-6))
        cfg = AcquisitionConfig(q=4, beta=1e-8, mc_samples=64, restarts=32, refine_steps=7)
        proposal = propose_batch(gp, cfg, seed=3)
        for p in proposal.points:
            dist = math.hypot(p.nu_h - peak.nu_h, p.nu_v - peak.nu_v)
            assert dist <= 0.15, f"point {p} is {dist:.3f} from the peak"

    def test_prior_gp_q1_returns_best_initial_candidate(self):
        # Flat UCB surface: descent cannot strictly improve, so the
        # proposal is the best-scoring Sobol candidate.
        gp = GpPosterior.prior(KernelParams(), prior_mean=0.5)
        cfg = AcquisitionConfig(q=1, beta=2.0, mc_samples=128, restarts=8, refine_steps=4)
        seed = 21
        proposal = propose_batch(gp, cfg, seed=seed)
        initial = _sobol(cfg.restarts, 2, split_seed(seed, 1))
        assert any(
            proposal.points[0].nu_h == pytest.approx(c[0], abs=1e-15)
            and proposal.points[0].nu_v == pytest.approx(c[1], abs=1e-15)
            for c in initial
        )
        expected = 0.5 + math.sqrt(cfg.beta) * math.sqrt(KernelParams().signal_variance)
        assert proposal.score == pytest.approx(expected, abs=5e-3)

    def test_q1_matches_dense_grid_ucb_oracle(self):
        rng = np.random.default_rng(8)
        gp = random_gp(rng, n=12)
        cfg = AcquisitionConfig(q=1, beta=2.0, mc_samples=128, restarts=32, refine_steps=7)
        proposal = propose_batch(gp, cfg, seed=17)
        axis = np.linspace(0, 1, 101)
        lattice = np.array([[h, v] for h in axis for v in axis])
        mean, cov = posterior_mean_cov(gp, lattice)
        grid_best = float(np.max(mean + math.sqrt(cfg.beta) * np.sqrt(np.maximum(np.diagonal(cov), 0.0))))
        m, c = posterior_mean_cov(gp, list(proposal.points))
        proposal_ucb = float(m[0] + math.sqrt(cfg.beta) * math.sqrt(max(c[0, 0], 0.0)))
        assert proposal_ucb >= grid_best - 1e-3

    def test_points_keep_minimum_spacing(self):
        rng = np.random.default_rng(9)
        gp = random_gp(rng, n=15)
        proposal = propose_batch(gp, cfg_for(6, restarts=24), seed=31)
        pts = np.array([[p.nu_h, p.nu_v] for p in proposal.points])
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert np.linalg.norm(pts[i] - pts[j]) >= 1e-3

    def test_dedupe_replaces_from_next_best(self):
        batch = np.array([[0.5, 0.5], [0.5, 0.5 + 1e-4], [0.9, 0.9]])
        alternatives = np.array([[[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]]])
        out, changed = _dedupe(batch, alternatives)
        assert changed
        np.testing.assert_allclose(out[1], [0.2, 0.2])
        np.testing.assert_allclose(out[0], [0.5, 0.5])
        np.testing.assert_allclose(out[2], [0.9, 0.9])

    def test_dedupe_keeps_spaced_batches(self):
        batch = np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]])
        out, changed = _dedupe(batch, np.empty((0, 3, 2)))
        assert not changed
        np.testing.assert_allclose(out, batch)


class TestBetaSchedule:
    def test_formula(self):
        assert beta_schedule(1, grid_size=441, delta=0.1) == pytest.approx(
            2.0 * math.log(441 * math.pi**2 / 0.6), rel=1e-12
        )
        assert beta_schedule(4, grid_size=100, delta=0.5) == pytest.approx(
            2.0 * math.log(100 * 16 * math.pi**2 / 3.0), rel=1e-12
        )

    def test_monotone_in_round(self):
        values = [beta_schedule(t) for t in range(1, 10)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_rejects_round_zero(self):
        with pytest.raises(ValueError, match="round"):
            beta_schedule(0)

    def test_config_resolves_schedule(self):
        cfg = AcquisitionConfig(use_beta_schedule=True)
        assert cfg.beta_for_round(3) == pytest.approx(beta_schedule(3))
        fixed = AcquisitionConfig(beta=1.5)
        assert fixed.beta_for_round(3) == 1.5


class TestConfigValidation:
    def test_invariants(self):
        with pytest.raises(ValueError, match="q"):
            AcquisitionConfig(q=0)
        with pytest.raises(ValueError, match="beta"):
            AcquisitionConfig(beta=0.0)
        with pytest.raises(ValueError, match="mc_samples"):
            AcquisitionConfig(mc_samples=32)
        with pytest.raises(ValueError, match="restarts"):
            AcquisitionConfig(restarts=0)
