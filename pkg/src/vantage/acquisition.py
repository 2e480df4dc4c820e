"""Batch q-UCB acquisition with quasi-Monte-Carlo scoring.

The joint score of a batch ``X = (x_1 .. x_q)`` is the reparameterized
upper confidence bound

    E_{z ~ N(mu, (beta*pi/2) * Sigma)} [ max_i (mu_i + |z_i - mu_i|) ]

with ``(mu, Sigma)`` the GP posterior on the batch.  The expectation is
estimated with scrambled-Sobol samples pushed through the covariance
factor; for q = 1 it collapses to the classic ``mu + sqrt(beta) * sigma``
(folded-normal mean).  Batch selection maximizes the score over the
2q-dimensional joint space by multi-start coordinate descent with common
random numbers, so the whole search is deterministic given its seed.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri
from scipy.stats import qmc

from . import _kernels
from .errors import FactorizationError
from .geometry import NormalizedPoint
from .seeding import split_seed
from .surrogate import GpPosterior, posterior_mean_cov

# Coordinate-descent step schedule: halve from the initial step each
# refinement sweep (0.25, 0.125, ... ~0.004 at the default 7 sweeps).
INITIAL_STEP = 0.25

# Proposed points closer than this (Euclidean, normalized space) count as
# duplicates and the later one is replaced.
DUPLICATE_TOL = 1e-3


@dataclass(frozen=True)
class AcquisitionConfig:
    """Knobs for batch scoring and the batch search.

    With ``use_beta_schedule`` the campaign replaces the constant
    ``beta`` by :func:`beta_schedule` evaluated at each round; that is
    the setting under which the regret analysis applies.
    """

    q: int = 8
    beta: float = 2.0
    mc_samples: int = 128
    restarts: int = 64
    refine_steps: int = 7
    use_beta_schedule: bool = False
    schedule_delta: float = 0.1
    schedule_grid_size: int = 441

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.mc_samples < 64:
            raise ValueError(f"mc_samples must be >= 64, got {self.mc_samples}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.refine_steps < 0:
            raise ValueError(f"refine_steps must be >= 0, got {self.refine_steps}")
        if not 0.0 < self.schedule_delta < 1.0:
            raise ValueError(f"schedule_delta must lie in (0, 1), got {self.schedule_delta}")
        if self.schedule_grid_size < 1:
            raise ValueError(f"schedule_grid_size must be >= 1, got {self.schedule_grid_size}")

    def beta_for_round(self, t: int) -> float:
        if self.use_beta_schedule:
            return beta_schedule(t, self.schedule_grid_size, self.schedule_delta)
        return self.beta


@dataclass(frozen=True)
class BatchProposal:
    """A batch of q points with its acquisition score."""

    points: tuple[NormalizedPoint, ...]
    score: float


def beta_schedule(t: int, grid_size: int = 441, delta: float = 0.1) -> float:
    """Round-t exploration weight for the finite-grid confidence analysis.

    beta_t = 2 * log(G * t^2 * pi^2 / (6 * delta)) for a size-G
    candidate grid; grows logarithmically so late rounds keep exploring.
    """
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    return 2.0 * math.log(grid_size * t * t * math.pi**2 / (6.0 * delta))


def _sobol(n: int, dim: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # Non-power-of-two draws trade a little balance for flexibility.
        warnings.simplefilter("ignore", UserWarning)
        return sampler.random(n)


def qmc_normals(n: int, dim: int, seed: int) -> np.ndarray:
    """(n, dim) standard-normal QMC samples: scrambled Sobol + inverse CDF."""
    u = _sobol(n, dim, seed)
    return ndtri(np.clip(u, 1e-16, 1.0 - 1e-16))


def _score_factored(means, factors, normals, beta):
    try:
        return _kernels.qucb_scores_factored(means, factors, normals, beta)
    except np.linalg.LinAlgError as err:  # pragma: no cover - defensive
        raise FactorizationError(str(err), jitter=_kernels.JITTER_MAX) from err


def _score_covs(means, covs, normals, beta):
    try:
        return _kernels.qucb_scores(means, covs, normals, beta)
    except np.linalg.LinAlgError as err:
        raise FactorizationError(str(err), jitter=_kernels.JITTER_MAX) from err


def qucb_score_from_factor(means, factor, normals, beta: float) -> float:
    """Score one batch from its mean vector and covariance factor.

    The estimator depends on the batch only through the rows of
    ``(means, factor)``, so permuting both consistently leaves the score
    unchanged exactly.
    """
    means = np.asarray(means, dtype=np.float64)
    return float(_score_factored(means[None, :], np.asarray(factor)[None, :, :], normals, beta)[0])


def qucb_score(gp: GpPosterior, batch, cfg: AcquisitionConfig, qmc_seed: int) -> float:
    """q-UCB score of a batch under the GP posterior.

    Deterministic given ``qmc_seed``: the same scrambled-Sobol normal
    sample is drawn for equal (mc_samples, q, seed).
    """
    if len(batch) != cfg.q:
        raise ValueError(f"batch size {len(batch)} does not match cfg.q={cfg.q}")
    mean, cov = posterior_mean_cov(gp, batch)
    normals = qmc_normals(cfg.mc_samples, cfg.q, qmc_seed)
    return float(_score_covs(mean[None, :], cov[None, :, :], normals, cfg.beta)[0])


class _SearchState:
    """Candidate batches plus cached posterior pieces for cheap probes.

    For every restart r the cache holds the batch points, their posterior
    mean, the batch posterior covariance, and the whitened cross
    covariances ``V[r, i] = L^-1 k(X_train, x_i)`` so that moving one
    point only recomputes one row/column of the covariance.
    """

    def __init__(self, gp: GpPosterior, stack: np.ndarray, normals: np.ndarray, beta: float):
        self.gp = gp
        self.normals = normals
        self.beta = beta
        self.params = gp.params
        self.pts = np.ascontiguousarray(stack, dtype=np.float64)  # (R, q, 2)
        r, q, _ = self.pts.shape
        p = self.params
        cov = _kernels.batch_cov(self.pts, p.lengthscale_h, p.lengthscale_v, p.signal_variance)
        n = gp.n_observations
        if n:
            flat = self.pts.reshape(r * q, 2)
            k_star = _kernels.cross_cov(gp.train_points, flat, p.lengthscale_h, p.lengthscale_v, p.signal_variance)
            mu = gp.prior_mean + k_star.T @ gp.weights
            v = solve_triangular(gp.chol_factor, k_star, lower=True, check_finite=False)
            self.v = np.ascontiguousarray(v.T.reshape(r, q, n))  # (R, q, n)
            cov -= self.v @ self.v.transpose(0, 2, 1)
            self.mu = mu.reshape(r, q)
        else:
            self.v = np.zeros((r, q, 0), dtype=np.float64)
            self.mu = np.full((r, q), gp.prior_mean)
        self.cov = cov
        self.scores = _score_covs(self.mu, self.cov, normals, beta)

    def _moved_posterior(self, moved: np.ndarray):
        """Posterior mean and whitened cross-cov of one moved point per restart."""
        gp, p = self.gp, self.params
        if gp.n_observations == 0:
            return np.full(moved.shape[0], gp.prior_mean), np.zeros((moved.shape[0], 0))
        k_mov = _kernels.cross_cov(gp.train_points, moved, p.lengthscale_h, p.lengthscale_v, p.signal_variance)
        mu_mov = gp.prior_mean + k_mov.T @ gp.weights
        v_mov = solve_triangular(gp.chol_factor, k_mov, lower=True, check_finite=False)
        return mu_mov, np.ascontiguousarray(v_mov.T)  # (R,), (R, n)

    def probe(self, point_idx: int, axis: int, step: float):
        """Score moving one coordinate by +step and -step in every restart."""
        p = self.params
        r, q, _ = self.pts.shape
        cur = self.pts[:, point_idx, axis]
        coords = np.clip(np.stack([cur + step, cur - step]), 0.0, 1.0)  # (2, R)
        moved = np.tile(self.pts[:, point_idx, :], (2, 1))  # (2R, 2)
        moved[:, axis] = coords.reshape(-1)
        mu_mov, v_mov = self._moved_posterior(moved)

        # Kernel row of the moved point against its own batch.
        others = np.tile(self.pts, (2, 1, 1))  # (2R, q, 2)
        dh = (moved[:, None, 0] - others[:, :, 0]) / p.lengthscale_h
        dv = (moved[:, None, 1] - others[:, :, 1]) / p.lengthscale_v
        k_row = p.signal_variance * np.exp(-0.5 * (dh * dh + dv * dv))
        v_full = np.tile(self.v, (2, 1, 1))
        row = k_row - np.einsum("rn,rjn->rj", v_mov, v_full)
        row[:, point_idx] = np.maximum(p.signal_variance - np.einsum("rn,rn->r", v_mov, v_mov), 0.0)

        covs = np.tile(self.cov, (2, 1, 1))
        covs[:, point_idx, :] = row
        covs[:, :, point_idx] = row
        means = np.tile(self.mu, (2, 1))
        means[:, point_idx] = mu_mov
        scores = _score_covs(means, covs, self.normals, self.beta)

        s_plus, s_minus = scores[:r], scores[r:]
        take_plus = s_plus >= s_minus
        best = np.where(take_plus, s_plus, s_minus)
        accept = best > self.scores
        if not np.any(accept):
            return
        rows = np.nonzero(accept)[0]
        src = np.where(take_plus[rows], rows, rows + r)
        self.pts[rows, point_idx, axis] = moved[src, axis]
        self.mu[rows, point_idx] = mu_mov[src]
        self.v[rows, point_idx, :] = v_mov[src]
        self.cov[rows, point_idx, :] = row[src]
        self.cov[rows, :, point_idx] = row[src]
        self.scores[rows] = best[rows]

    def descend(self, refine_steps: int):
        q = self.pts.shape[1]
        step = INITIAL_STEP
        for _ in range(refine_steps):
            for point_idx in range(q):
                for axis in (0, 1):
                    self.probe(point_idx, axis, step)
            step *= 0.5


def _dedupe(batch: np.ndarray, ranked_alternatives: np.ndarray) -> tuple[np.ndarray, bool]:
    """Replace near-duplicate points from best-scoring alternative batches.

    Point j keeps its slot if it clears DUPLICATE_TOL against every
    earlier point; otherwise the j-th point of the next-best restart is
    tried, and as a last resort the point is nudged deterministically.
    """
    out = batch.copy()
    changed = False
    for j in range(1, out.shape[0]):
        candidates = [out[j]] + [alt[j] for alt in ranked_alternatives]
        placed = False
        for idx, cand in enumerate(candidates):
            if np.all(np.linalg.norm(out[:j] - cand[None, :], axis=1) >= DUPLICATE_TOL):
                if idx > 0:
                    changed = True
                out[j] = cand
                placed = True
                break
        if not placed:
            nudge = out[j]
            k = 1
            while not np.all(np.linalg.norm(out[:j] - nudge[None, :], axis=1) >= DUPLICATE_TOL):
                nudge = np.clip(out[j] + [k * 2 * DUPLICATE_TOL, k * 2 * DUPLICATE_TOL], 0.0, 1.0)
                k += 1
            out[j] = nudge
            changed = True
    return out, changed


def propose_batch(gp: GpPosterior, cfg: AcquisitionConfig, seed: int) -> BatchProposal:
    """Select the next batch of q viewpoints by maximizing the q-UCB score.

    Scrambled-Sobol restarts in the 2q-dimensional joint space are each
    refined by coordinate descent with a halving step (0.25 down to
    ~0.004), every score evaluated with the same QMC normal sample.  The
    best refined batch wins (ties to the lowest restart index), then
    near-duplicate points are replaced from the next-best restarts.
    """
    restart_seed = split_seed(seed, 1)
    qmc_seed = split_seed(seed, 2)
    normals = qmc_normals(cfg.mc_samples, cfg.q, qmc_seed)
    stack = _sobol(cfg.restarts, 2 * cfg.q, restart_seed).reshape(cfg.restarts, cfg.q, 2)
    state = _SearchState(gp, stack, normals, cfg.beta)
    state.descend(cfg.refine_steps)

    order = np.argsort(-state.scores, kind="stable")
    winner = state.pts[order[0]]
    batch, changed = _dedupe(winner, state.pts[order[1:]])
    if changed and cfg.refine_steps > 0:
        # Re-polish the edited batch at the finest step, keeping spacing.
        polish = _SearchState(gp, batch[None, :, :], normals, cfg.beta)
        fine = INITIAL_STEP * 0.5 ** (cfg.refine_steps - 1)
        for point_idx in range(cfg.q):
            for axis in (0, 1):
                polish.probe(point_idx, axis, fine)
        batch, _ = _dedupe(polish.pts[0], state.pts[order[1:]])

    points = tuple(NormalizedPoint(float(x[0]), float(x[1])) for x in batch)
    return BatchProposal(points=points, score=qucb_score(gp, points, cfg, qmc_seed))
