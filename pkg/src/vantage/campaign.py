"""End-to-end viewpoint-selection campaigns and their baselines.

A campaign evaluates ``q * (init_batches + iterations)`` training
viewpoints.  The Bayesian strategy seeds its surrogate with random
viewpoints, then alternates GP fitting, batch q-UCB proposal, and
simulator evaluation; grid and random baselines spend the identical
budget on a fixed lattice or uniform draws.  Every stream derives from
``master_seed``, so records are exactly reproducible.

The module also computes the diagnostics used to sanity-check the
theory: instantaneous/cumulative regret against the noise-free optimum,
the running average-success curve, greedy information gain, and the
ratio of cumulative regret to its ``sqrt(qT * gamma_qT * beta_T)``
envelope.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .acquisition import AcquisitionConfig, propose_batch
from .errors import CampaignError, VantageError
from .geometry import AngleBounds, NormalizedPoint, Viewpoint, normalized_grid
from .seeding import ROLE_ACQUISITION, ROLE_DESIGN, ROLE_ROLLOUT, generator, split_seed
from .simulator import (
    EvaluationResult,
    Landscape,
    RolloutConfig,
    evaluate,
    objective_on_unit_square,
)
from .surrogate import GpPosterior, KernelParams, Observation, fit, fit_hyperparameters

STRATEGIES = ("vantage", "grid", "random")


@dataclass(frozen=True)
class CampaignConfig:
    """Everything one campaign needs; total with defaults except the landscape."""

    landscape: Landscape
    bounds: AngleBounds = AngleBounds()
    q: int = 8
    iterations: int = 4
    init_batches: int = 1
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    rollout: RolloutConfig | None = None
    strategy: str = "vantage"
    master_seed: int = 0
    kernel: KernelParams = field(default_factory=KernelParams)
    refit_hyperparameters: bool = False

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.init_batches < 1:
            raise ValueError(f"init_batches must be >= 1, got {self.init_batches}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.acquisition.q != self.q:
            raise ValueError(f"acquisition.q={self.acquisition.q} must match campaign q={self.q}")
        if self.rollout is None:
            object.__setattr__(self, "rollout", RolloutConfig.default(self.bounds))

    @property
    def budget(self) -> int:
        """Total simulator evaluations; identical across compared strategies."""
        return self.q * (self.init_batches + self.iterations)


@dataclass(frozen=True)
class IterationRecord:
    """One batch of the campaign; iteration 0 is the initialization."""

    iteration: int
    points: tuple[NormalizedPoint, ...]
    evaluations: tuple[EvaluationResult, ...]
    best_so_far: float
    evaluations_completed: int


@dataclass(frozen=True)
class Selection:
    point: NormalizedPoint
    value: float


@dataclass(frozen=True)
class CampaignRecord:
    """Full audit trail of one run: batches, observations, final choice."""

    strategy: str
    seed: int
    iterations: tuple[IterationRecord, ...]
    final_selection: Selection

    def observations(self) -> list[tuple[NormalizedPoint, float]]:
        out = []
        for it in self.iterations:
            out.extend((ev.train_point, ev.mean_success) for ev in it.evaluations)
        return out

    def all_points(self) -> np.ndarray:
        pts = [p for it in self.iterations for p in it.points]
        return np.array([[p.nu_h, p.nu_v] for p in pts], dtype=np.float64)


def _select_best(observations: list[tuple[NormalizedPoint, float]]) -> Selection:
    """Argmax of observed success; ties keep the earliest observation."""
    best_idx = 0
    for i, (_, value) in enumerate(observations):
        if value > observations[best_idx][1]:
            best_idx = i
    point, value = observations[best_idx]
    return Selection(point=point, value=value)


def _materialized_rollout(cfg: CampaignConfig) -> RolloutConfig:
    if cfg.rollout.rng_seed is None:
        return replace(cfg.rollout, rng_seed=split_seed(cfg.master_seed, ROLE_ROLLOUT))
    return cfg.rollout


def _batch_records(cfg: CampaignConfig, points: np.ndarray, rollout: RolloutConfig, strategy: str) -> CampaignRecord:
    """Chunk a fixed evaluation plan into iteration records (baselines)."""
    sizes = [cfg.q * cfg.init_batches] + [cfg.q] * cfg.iterations
    records = []
    observations: list[tuple[NormalizedPoint, float]] = []
    best = -math.inf
    done = 0
    offset = 0
    for iteration, size in enumerate(sizes):
        chunk = points[offset : offset + size]
        offset += size
        batch_points = tuple(NormalizedPoint(float(x[0]), float(x[1])) for x in chunk)
        evals = tuple(evaluate(cfg.landscape, p, rollout) for p in batch_points)
        observations.extend((ev.train_point, ev.mean_success) for ev in evals)
        best = max(best, max((ev.mean_success for ev in evals), default=best))
        done += size
        records.append(
            IterationRecord(
                iteration=iteration,
                points=batch_points,
                evaluations=evals,
                best_so_far=best,
                evaluations_completed=done,
            )
        )
    return CampaignRecord(
        strategy=strategy,
        seed=cfg.master_seed,
        iterations=tuple(records),
        final_selection=_select_best(observations),
    )


def run_campaign(cfg: CampaignConfig) -> CampaignRecord:
    """Bayesian-optimization campaign: initialize, loop, select.

    Step 1 draws ``q * init_batches`` uniform random viewpoints and
    evaluates them.  Step 2 repeats ``iterations`` times: fit the GP on
    everything observed (optionally refitting hyperparameters once after
    initialization), propose a q-point batch, evaluate it.  Step 3
    returns the argmax of all observed success rates.
    """
    rollout = _materialized_rollout(cfg)
    design = generator(cfg.master_seed, ROLE_DESIGN)
    init_points = design.random((cfg.q * cfg.init_batches, 2))

    records: list[IterationRecord] = []
    observations: list[Observation] = []
    best = -math.inf

    batch_points = tuple(NormalizedPoint(float(x[0]), float(x[1])) for x in init_points)
    evals = tuple(evaluate(cfg.landscape, p, rollout) for p in batch_points)
    observations.extend(Observation(ev.train_point, ev.mean_success) for ev in evals)
    best = max(ev.mean_success for ev in evals)
    records.append(
        IterationRecord(
            iteration=0,
            points=batch_points,
            evaluations=evals,
            best_so_far=best,
            evaluations_completed=len(evals),
        )
    )

    params = cfg.kernel
    if cfg.refit_hyperparameters:
        try:
            params = fit_hyperparameters(observations)
        except VantageError as err:
            raise CampaignError(f"hyperparameter refit failed after initialization: {err}", iteration=0) from err

    for t in range(1, cfg.iterations + 1):
        try:
            gp = fit(observations, params)
        except VantageError as err:
            raise CampaignError(f"GP fit failed at iteration {t}: {err}", iteration=t) from err
        acq = replace(cfg.acquisition, beta=cfg.acquisition.beta_for_round(t))
        proposal = propose_batch(gp, acq, split_seed(cfg.master_seed, ROLE_ACQUISITION, t))
        evals = tuple(evaluate(cfg.landscape, p, rollout) for p in proposal.points)
        observations.extend(Observation(ev.train_point, ev.mean_success) for ev in evals)
        best = max(best, max(ev.mean_success for ev in evals))
        records.append(
            IterationRecord(
                iteration=t,
                points=proposal.points,
                evaluations=evals,
                best_so_far=best,
                evaluations_completed=records[-1].evaluations_completed + len(evals),
            )
        )

    return CampaignRecord(
        strategy="vantage",
        seed=cfg.master_seed,
        iterations=tuple(records),
        final_selection=_select_best([(o.point, o.value) for o in observations]),
    )


def _near_square_factors(budget: int) -> tuple[int, int] | None:
    """(small, large) factor pair with both >= 2 minimizing their gap."""
    best = None
    for a in range(2, int(math.isqrt(budget)) + 1):
        if budget % a == 0:
            best = (a, budget // a)
    return best


def grid_plan(budget: int, bounds: AngleBounds, seed: int) -> np.ndarray:
    """Evaluation plan for the grid baseline: lattice plus random fill.

    The largest near-square lattice of at most ``budget`` points covers
    the unit square corners-in, the wider viewpoint axis receiving the
    larger count; any remainder (prime budgets) is filled with uniform
    random points.
    """
    lattice_size = budget
    factors = _near_square_factors(lattice_size)
    while factors is None and lattice_size >= 4:
        lattice_size -= 1
        factors = _near_square_factors(lattice_size)
    points: list[list[float]] = []
    if factors is not None:
        small, large = factors
        h_range = bounds.h_max - bounds.h_min
        v_range = bounds.v_max - bounds.v_min
        n_h, n_v = (large, small) if h_range >= v_range else (small, large)
        hs = np.linspace(0.0, 1.0, n_h)
        vs = np.linspace(0.0, 1.0, n_v)
        points = [[float(h), float(v)] for h in hs for v in vs]
    remainder = budget - len(points)
    if remainder > 0:
        fill = generator(seed, ROLE_DESIGN).random((remainder, 2))
        points.extend([float(x[0]), float(x[1])] for x in fill)
    return np.array(points, dtype=np.float64)


def run_grid_baseline(cfg: CampaignConfig) -> CampaignRecord:
    """Spend the campaign budget on a uniform lattice, then pick the argmax."""
    rollout = _materialized_rollout(cfg)
    points = grid_plan(cfg.budget, cfg.bounds, cfg.master_seed)
    return _batch_records(cfg, points, rollout, "grid")


def run_random_baseline(cfg: CampaignConfig) -> CampaignRecord:
    """Spend the campaign budget on uniform random viewpoints."""
    rollout = _materialized_rollout(cfg)
    points = generator(cfg.master_seed, ROLE_DESIGN).random((cfg.budget, 2))
    return _batch_records(cfg, points, rollout, "random")


def run_strategy(cfg: CampaignConfig) -> CampaignRecord:
    """Dispatch on ``cfg.strategy``."""
    runner = {
        "vantage": run_campaign,
        "grid": run_grid_baseline,
        "random": run_random_baseline,
    }[cfg.strategy]
    return runner(cfg)


@lru_cache(maxsize=64)
def _optimum_cached(
    landscape: Landscape,
    grid: tuple[Viewpoint, ...],
    bounds: AngleBounds,
    resolution: int,
) -> tuple[NormalizedPoint, float]:
    axis = np.linspace(0.0, 1.0, resolution)
    hh, vv = np.meshgrid(axis, axis, indexing="ij")
    lattice = np.column_stack([hh.ravel(), vv.ravel()])
    tests = normalized_grid(grid, bounds)
    values = objective_on_unit_square(landscape, lattice, tests)
    idx = int(np.argmax(values))
    point = NormalizedPoint(float(lattice[idx, 0]), float(lattice[idx, 1]))
    return point, float(values[idx])


def landscape_optimum(
    landscape: Landscape,
    grid: tuple[Viewpoint, ...] | list[Viewpoint],
    bounds: AngleBounds = AngleBounds(),
    resolution: int = 201,
) -> tuple[NormalizedPoint, float]:
    """Noise-free global optimum located by exhaustive lattice search."""
    return _optimum_cached(landscape, tuple(grid), bounds, resolution)


def information_gain_steps(params: KernelParams, candidate_grid: np.ndarray, budget: int) -> np.ndarray:
    """Greedy marginal information gains, one per selected observation.

    Step k adds the grid point with maximal posterior variance and gains
    ``0.5 * log(1 + var / noise)``; prefix sums of the result give the
    greedy total after any number of steps.
    """
    if params.noise_variance <= 0:
        raise ValueError("information gain is undefined for zero observation noise")
    pts = np.ascontiguousarray(candidate_grid, dtype=np.float64)
    if budget > pts.shape[0]:
        raise ValueError(f"budget {budget} exceeds candidate grid size {pts.shape[0]}")
    cov = _kernels.cross_cov(pts, pts, params.lengthscale_h, params.lengthscale_v, params.signal_variance)
    noise = params.noise_variance
    gains = np.empty(budget, dtype=np.float64)
    for step in range(budget):
        variances = np.diagonal(cov)
        j = int(np.argmax(variances))
        gains[step] = 0.5 * math.log1p(variances[j] / noise)
        col = cov[:, j].copy()
        cov = cov - np.outer(col, col) / (col[j] + noise)
    return gains


def information_gain(params: KernelParams, candidate_grid, budget: int) -> float:
    """Greedy approximation of the maximum information gain from ``budget`` observations.

    By submodularity the greedy total is within a (1 - 1/e) factor of
    the true maximum; selecting the entire grid recovers
    ``0.5 * logdet(I + K / noise)`` exactly.
    """
    if budget == 0:
        return 0.0
    grid = _as_point_array(candidate_grid)
    return float(information_gain_steps(params, grid, budget).sum())


def _as_point_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.ascontiguousarray(points, dtype=np.float64)
    return np.array([[p.nu_h, p.nu_v] for p in points], dtype=np.float64)


def unit_lattice(resolution: int) -> np.ndarray:
    """(resolution^2, 2) corners-in lattice over the unit square."""
    axis = np.linspace(0.0, 1.0, resolution)
    hh, vv = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([hh.ravel(), vv.ravel()])


@dataclass(frozen=True)
class RegretReport:
    """Regret diagnostics for one campaign against the noise-free oracle.

    Per-evaluation series cover the whole record (initialization
    included); the round-indexed series cover only optimization rounds,
    matching how the regret envelope is stated.
    """

    optimum_point: NormalizedPoint
    optimum_value: float
    oracle_values: tuple[float, ...]
    instantaneous_regret: tuple[float, ...]
    cumulative_regret: tuple[float, ...]
    average_success: tuple[float, ...]
    round_average_success: tuple[float, ...]
    round_cumulative_regret: tuple[float, ...]
    info_gain: tuple[float, ...]
    betas: tuple[float, ...]
    bound_ratio: tuple[float, ...]


def regret_report(
    record: CampaignRecord,
    landscape: Landscape,
    cfg: CampaignConfig,
    info_grid_resolution: int = 21,
    optimum_resolution: int = 201,
) -> RegretReport:
    """Score a finished record against the exhaustive-grid optimum."""
    opt_point, opt_value = landscape_optimum(landscape, cfg.rollout.test_grid, cfg.rollout.bounds, optimum_resolution)
    tests = normalized_grid(cfg.rollout.test_grid, cfg.rollout.bounds)
    pts = record.all_points()
    oracle = objective_on_unit_square(landscape, pts, tests)
    inst = opt_value - oracle
    cum = np.cumsum(inst)
    avg = np.cumsum(oracle) / np.arange(1, len(oracle) + 1)

    bo_oracle: list[np.ndarray] = []
    offset = 0
    for it in record.iterations:
        size = len(it.points)
        if it.iteration >= 1:
            bo_oracle.append(oracle[offset : offset + size])
        offset += size

    rounds = len(bo_oracle)
    round_avg: list[float] = []
    round_cum: list[float] = []
    ratios: list[float] = []
    betas: list[float] = []
    gammas: list[float] = []
    if rounds:
        gains = information_gain_steps(cfg.kernel, unit_lattice(info_grid_resolution), min(cfg.q * rounds, info_grid_resolution**2))
        totals = np.cumsum(gains)
        flat: list[float] = []
        running = 0.0
        for t, chunk in enumerate(bo_oracle, start=1):
            flat.extend(chunk)
            running += float(np.sum(opt_value - chunk))
            round_cum.append(running)
            round_avg.append(float(np.mean(flat)))
            beta_t = cfg.acquisition.beta_for_round(t)
            betas.append(beta_t)
            qt = min(cfg.q * t, len(totals))
            gamma = float(totals[qt - 1]) if qt >= 1 else 0.0
            gammas.append(gamma)
            envelope = math.sqrt(max(cfg.q * t * gamma * beta_t, 1e-300))
            ratios.append(running / envelope)

    return RegretReport(
        optimum_point=opt_point,
        optimum_value=opt_value,
        oracle_values=tuple(float(x) for x in oracle),
        instantaneous_regret=tuple(float(x) for x in inst),
        cumulative_regret=tuple(float(x) for x in cum),
        average_success=tuple(float(x) for x in avg),
        round_average_success=tuple(round_avg),
        round_cumulative_regret=tuple(round_cum),
        info_gain=tuple(gammas),
        betas=tuple(betas),
        bound_ratio=tuple(ratios),
    )
