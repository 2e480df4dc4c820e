"""Gaussian-process regression over normalized viewpoint space.

The surrogate models measured success rate as a GP with a constant prior
mean and a squared-exponential kernel over ``[0, 1]^2``.  Fitting is an
exact Cholesky solve of ``K + noise * I``; hyperparameters can optionally
be selected by exact log-marginal-likelihood grid search.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .errors import FactorizationError
from .geometry import NormalizedPoint


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters.

    Lengthscales are per normalized axis; variances are in squared
    success-rate units.  Defaults suit success surfaces on the unit
    square: prior std 0.2, correlation length 0.2, small observation
    noise for ~20-rollout estimates.
    """

    signal_variance: float = 0.04
    lengthscale_h: float = 0.2
    lengthscale_v: float = 0.2
    noise_variance: float = 1e-4

    def __post_init__(self):
        if not self.signal_variance > 0:
            raise ValueError(f"signal_variance must be > 0, got {self.signal_variance}")
        if not (self.lengthscale_h > 0 and self.lengthscale_v > 0):
            raise ValueError("lengthscales must be > 0")
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")


@dataclass(frozen=True)
class Observation:
    """One training datum: a normalized viewpoint and its measured success rate."""

    point: NormalizedPoint
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"observed success rate must lie in [0, 1], got {self.value}")


def kernel(a: NormalizedPoint, b: NormalizedPoint, params: KernelParams) -> float:
    """Squared-exponential covariance between two points."""
    dh = (a.nu_h - b.nu_h) / params.lengthscale_h
    dv = (a.nu_v - b.nu_v) / params.lengthscale_v
    return params.signal_variance * math.exp(-0.5 * (dh * dh + dv * dv))


@dataclass(frozen=True, eq=False)
class GpPosterior:
    """Fitted GP: training data plus the factorization backing queries.

    ``chol_factor`` is the lower Cholesky factor of ``K + noise * I``
    (with any jitter folded in) and ``weights`` solves
    ``(K + noise * I) w = y - prior_mean``, so posterior means are
    ``prior_mean + k(x, X) @ w``.  Immutable after fit; queries are safe
    to run concurrently.
    """

    params: KernelParams
    observations: tuple[Observation, ...]
    prior_mean: float
    train_points: np.ndarray  # (n, 2)
    train_values: np.ndarray  # (n,)
    chol_factor: np.ndarray  # (n, n) lower-triangular
    weights: np.ndarray  # (n,)
    jitter: float  # diagonal jitter folded into the factorization

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    @classmethod
    def prior(cls, params: KernelParams, prior_mean: float = 0.5) -> "GpPosterior":
        """Data-free posterior: queries return the prior mean and kernel."""
        empty = np.empty((0, 2), dtype=np.float64)
        return cls(
            params=params,
            observations=(),
            prior_mean=float(prior_mean),
            train_points=empty,
            train_values=np.empty(0, dtype=np.float64),
            chol_factor=np.empty((0, 0), dtype=np.float64),
            weights=np.empty(0, dtype=np.float64),
            jitter=0.0,
        )


def _points_array(observations) -> np.ndarray:
    out = np.empty((len(observations), 2), dtype=np.float64)
    for i, obs in enumerate(observations):
        out[i, 0] = obs.point.nu_h
        out[i, 1] = obs.point.nu_v
    return out


def _factor_with_jitter(gram: np.ndarray, noise: float) -> tuple[np.ndarray, float]:
    """Cholesky of gram + noise*I, escalating jitter 1e-10 .. 1e-4."""
    n = gram.shape[0]
    jitter = 0.0
    while True:
        try:
            factor = np.linalg.cholesky(gram + (noise + jitter) * np.eye(n))
            return factor, jitter
        except np.linalg.LinAlgError:
            if jitter >= _kernels.JITTER_MAX:
                raise FactorizationError(
                    f"Gram matrix is not positive definite even with jitter {jitter:g}",
                    jitter=jitter,
                ) from None
            jitter = _kernels.JITTER_START if jitter == 0.0 else jitter * 10.0


def fit(
    observations,
    params: KernelParams = KernelParams(),
    prior_mean: float | None = None,
) -> GpPosterior:
    """Fit the exact GP to a list of :class:`Observation`.

    ``prior_mean`` defaults to the mean of the observed values.  With
    zero observation noise, coincident training points make the Gram
    matrix singular and are rejected up front.
    """
    observations = tuple(observations)
    if not observations:
        raise ValueError("fit requires at least one observation; use GpPosterior.prior for a data-free surrogate")
    points = _points_array(observations)
    values = np.array([obs.value for obs in observations], dtype=np.float64)
    if params.noise_variance == 0.0:
        _, counts = np.unique(points, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise ValueError("coincident observations with zero noise make the Gram matrix singular")
    mean = float(np.mean(values)) if prior_mean is None else float(prior_mean)
    gram = _kernels.cross_cov(points, points, params.lengthscale_h, params.lengthscale_v, params.signal_variance)
    factor, jitter = _factor_with_jitter(gram, params.noise_variance)
    residual = values - mean
    weights = np.linalg.solve(factor.T, np.linalg.solve(factor, residual))
    return GpPosterior(
        params=params,
        observations=observations,
        prior_mean=mean,
        train_points=points,
        train_values=values,
        chol_factor=factor,
        weights=weights,
        jitter=jitter,
    )


def _batch_array(batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        return np.ascontiguousarray(batch, dtype=np.float64)
    out = np.empty((len(batch), 2), dtype=np.float64)
    for i, p in enumerate(batch):
        out[i, 0] = p.nu_h
        out[i, 1] = p.nu_v
    return out


def posterior_mean_cov(gp: GpPosterior, batch) -> tuple[np.ndarray, np.ndarray]:
    """Exact posterior mean vector and covariance matrix on a batch.

    ``batch`` is a non-empty sequence of :class:`NormalizedPoint` (or an
    (m, 2) array).  The covariance is symmetric with diagonal clipped at
    zero; with no training data this returns the prior.
    """
    pts = _batch_array(batch)
    if pts.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    p = gp.params
    prior = _kernels.cross_cov(pts, pts, p.lengthscale_h, p.lengthscale_v, p.signal_variance)
    if gp.n_observations == 0:
        mean = np.full(pts.shape[0], gp.prior_mean)
        return mean, prior
    k_star = _kernels.cross_cov(gp.train_points, pts, p.lengthscale_h, p.lengthscale_v, p.signal_variance)
    mean = gp.prior_mean + k_star.T @ gp.weights
    v = solve_triangular(gp.chol_factor, k_star, lower=True, check_finite=False)
    cov = prior - v.T @ v
    np.fill_diagonal(cov, np.maximum(cov.diagonal(), 0.0))
    return mean, cov


@dataclass(frozen=True)
class GridSearchSpace:
    """Log-spaced hyperparameter candidates for marginal-likelihood search.

    Lengthscale candidates apply to both axes jointly (isotropic search);
    the full Cartesian product of the three lists is scored.
    """

    signal_variances: tuple[float, ...]
    lengthscales: tuple[float, ...]
    noise_variances: tuple[float, ...]

    @classmethod
    def default(cls) -> "GridSearchSpace":
        return cls(
            signal_variances=tuple(np.geomspace(0.005, 0.5, 7)),
            lengthscales=tuple(np.geomspace(0.05, 0.8, 7)),
            noise_variances=tuple(np.geomspace(1e-5, 1e-2, 4)),
        )


def log_marginal_likelihood(observations, params: KernelParams) -> float:
    """Exact GP log marginal likelihood with the data-mean constant prior."""
    gp = fit(observations, params)
    residual = gp.train_values - gp.prior_mean
    n = len(residual)
    logdet_half = float(np.sum(np.log(np.diagonal(gp.chol_factor))))
    return float(-0.5 * residual @ gp.weights - logdet_half - 0.5 * n * math.log(2.0 * math.pi))


def fit_hyperparameters(observations, grid: GridSearchSpace | None = None) -> KernelParams:
    """Pick the candidate maximizing exact log marginal likelihood.

    Deterministic: ties keep the earliest candidate in grid order.
    Candidates whose Gram matrix cannot be factorized are skipped; if all
    fail, the last factorization error propagates.
    """
    observations = tuple(observations)
    if len(observations) < 3:
        raise ValueError(f"hyperparameter fitting needs at least 3 observations, got {len(observations)}")
    grid = grid or GridSearchSpace.default()
    best: KernelParams | None = None
    best_ll = -np.inf
    last_error: FactorizationError | None = None
    for s2, ls, noise in product(grid.signal_variances, grid.lengthscales, grid.noise_variances):
        candidate = KernelParams(
            signal_variance=float(s2),
            lengthscale_h=float(ls),
            lengthscale_v=float(ls),
            noise_variance=float(noise),
        )
        try:
            ll = log_marginal_likelihood(observations, candidate)
        except FactorizationError as err:
            last_error = err
            continue
        if ll > best_ll:
            best_ll = ll
            best = candidate
    if best is None:
        raise FactorizationError(
            "every hyperparameter candidate failed factorization",
            jitter=last_error.jitter if last_error else 0.0,
        )
    return best
