"""Synthetic stand-in for the expensive fine-tune-and-evaluate black box.

A :class:`Landscape` encodes a ground-truth generalization surface: the
quality of a policy fine-tuned at a training viewpoint is a mixture of
Gaussian bumps over the unit square, and its success probability at a
test viewpoint decays with the train/test distance.  Evaluating a
training viewpoint draws Bernoulli rollouts on a grid of test viewpoints
and reports the average empirical success rate, exactly mirroring how
the real pipeline scores a fine-tuned policy.

Rollout noise is seeded hierarchically per (seed, train point, test
index): evaluations at distinct train points are independent, and one
test point's stream never perturbs the others.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import AngleBounds, NormalizedPoint, Viewpoint, normalized_grid, test_grid
from .seeding import seed_sequence


@dataclass(frozen=True)
class Bump:
    """One Gaussian quality bump: policies trained near ``center`` are good."""

    center: NormalizedPoint
    height: float
    width: float

    def __post_init__(self):
        if not 0.0 <= self.height <= 1.0:
            raise ValueError(f"bump height must lie in [0, 1], got {self.height}")
        if not self.width > 0:
            raise ValueError(f"bump width must be > 0, got {self.width}")


@dataclass(frozen=True)
class Landscape:
    """Ground-truth surface: bump mixture plus a floor success rate.

    ``generalization_width`` (rho) controls how quickly a trained
    policy's success decays as the test viewpoint moves away from its
    training viewpoint.
    """

    bumps: tuple[Bump, ...]
    base_rate: float = 0.1
    generalization_width: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if not self.bumps:
            raise ValueError("landscape needs at least one bump")
        if not 0.0 <= self.base_rate <= 1.0:
            raise ValueError(f"base_rate must lie in [0, 1], got {self.base_rate}")
        if not self.generalization_width > 0:
            raise ValueError("generalization_width must be > 0")

    def bump_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        centers = np.array([[b.center.nu_h, b.center.nu_v] for b in self.bumps])
        heights = np.array([b.height for b in self.bumps])
        widths = np.array([b.width for b in self.bumps])
        return centers, heights, widths


# Desk-scale analogues of the three benchmark tasks, ordered easy to
# hard: a broad forgiving basin, two asymmetric bumps, and one narrow
# bump over a near-zero floor.
PRESETS: dict[str, Landscape] = {
    "lift": Landscape(
        bumps=(Bump(NormalizedPoint(0.5, 0.62), height=0.42, width=0.34),),
        base_rate=0.5,
        generalization_width=0.55,
    ),
    "pickplace": Landscape(
        bumps=(
            Bump(NormalizedPoint(0.27, 0.62), height=0.38, width=0.16),
            Bump(NormalizedPoint(0.72, 0.38), height=0.55, width=0.13),
        ),
        base_rate=0.15,
        generalization_width=0.35,
    ),
    "square": Landscape(
        bumps=(Bump(NormalizedPoint(0.42, 0.66), height=0.32, width=0.11),),
        base_rate=0.03,
        generalization_width=0.28,
    ),
}


def preset_landscape(name: str) -> Landscape:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown landscape preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class RolloutConfig:
    """How a training viewpoint gets evaluated.

    ``rng_seed`` may be left None inside a campaign config, where it is
    derived from the campaign master seed; :func:`evaluate` requires it.
    """

    test_grid: tuple[Viewpoint, ...]
    rollouts_per_test_point: int = 20
    rng_seed: int | None = None
    bounds: AngleBounds = AngleBounds()

    def __post_init__(self):
        object.__setattr__(self, "test_grid", tuple(self.test_grid))
        if not self.test_grid:
            raise ValueError("test grid must be non-empty")
        if self.rollouts_per_test_point < 1:
            raise ValueError("rollouts_per_test_point must be >= 1")

    @classmethod
    def default(cls, bounds: AngleBounds = AngleBounds(), n_h: int = 10, n_v: int = 10, **kwargs) -> "RolloutConfig":
        return cls(test_grid=tuple(test_grid(bounds, n_h, n_v)), bounds=bounds, **kwargs)


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome of evaluating one training viewpoint over the test grid."""

    train_point: NormalizedPoint
    mean_success: float
    per_test_point: tuple[tuple[Viewpoint, float], ...]
    rollouts_used: int

    def __post_init__(self):
        if self.per_test_point:
            mean = sum(rate for _, rate in self.per_test_point) / len(self.per_test_point)
            if abs(mean - self.mean_success) > 1e-12:
                raise ValueError("mean_success must equal the mean of per-test-point rates")


def true_success_prob(landscape: Landscape, train: NormalizedPoint, test: NormalizedPoint) -> float:
    """Ground-truth success probability for one (train, test) pair.

    clamp(base + sum_b h_b exp(-|train-c_b|^2 / (2 w_b^2))
          * exp(-|test-train|^2 / (2 rho^2)), 0, 1)
    """
    quality = 0.0
    for bump in landscape.bumps:
        d2 = (train.nu_h - bump.center.nu_h) ** 2 + (train.nu_v - bump.center.nu_v) ** 2
        quality += bump.height * math.exp(-d2 / (2.0 * bump.width**2))
    d2 = (test.nu_h - train.nu_h) ** 2 + (test.nu_v - train.nu_v) ** 2
    p = landscape.base_rate + quality * math.exp(-d2 / (2.0 * landscape.generalization_width**2))
    return min(max(p, 0.0), 1.0)


def _float_bits(x: float) -> int:
    return int(np.float64(x).view(np.uint64))


def evaluate(landscape: Landscape, train: NormalizedPoint, cfg: RolloutConfig) -> EvaluationResult:
    """Bernoulli-rollout evaluation of one training viewpoint.

    Each test-grid point draws ``rollouts_per_test_point`` rollouts from
    its own stream seeded by (rng_seed, train, test index); the result is
    the grand mean of the per-point empirical rates.
    """
    if cfg.rng_seed is None:
        raise ValueError("rng_seed must be set to evaluate (campaigns derive it from the master seed)")
    tests = normalized_grid(cfg.test_grid, cfg.bounds)
    probs = [
        true_success_prob(landscape, train, NormalizedPoint(float(t[0]), float(t[1])))
        for t in tests
    ]
    root = seed_sequence(cfg.rng_seed, _float_bits(train.nu_h), _float_bits(train.nu_v))
    children = root.spawn(len(cfg.test_grid))
    n = cfg.rollouts_per_test_point
    rates = []
    for child, p in zip(children, probs):
        rng = np.random.Generator(np.random.PCG64(child))
        rates.append(float(np.count_nonzero(rng.random(n) < p)) / n)
    mean = float(np.mean(rates))
    return EvaluationResult(
        train_point=train,
        mean_success=mean,
        per_test_point=tuple(zip(cfg.test_grid, rates)),
        rollouts_used=n * len(cfg.test_grid),
    )


def true_objective(
    landscape: Landscape,
    train: NormalizedPoint,
    grid: tuple[Viewpoint, ...] | list[Viewpoint],
    bounds: AngleBounds = AngleBounds(),
) -> float:
    """Noise-free objective: exact mean success probability over the grid."""
    if not grid:
        raise ValueError("test grid must be non-empty")
    tests = normalized_grid(grid, bounds)
    return float(objective_on_unit_square(landscape, train.as_array()[None, :], tests)[0])


def objective_on_unit_square(landscape: Landscape, train_points: np.ndarray, test_points: np.ndarray) -> np.ndarray:
    """Vectorized noise-free objective for (N, 2) train and (G, 2) test arrays."""
    centers, heights, widths = landscape.bump_arrays()
    return _kernels.landscape_objective(
        train_points, test_points, centers, heights, widths, landscape.base_rate, landscape.generalization_width
    )


def success_confidence_interval(successes: int, trials: int, delta: float) -> tuple[float, float]:
    """Two-sided concentration interval for an empirical success rate.

    Point estimate +- sqrt(ln(2/delta) / (2 * trials)), clamped to
    [0, 1]; holds with probability at least 1 - delta for independent
    trials.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly between 0 and 1, got {delta}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, trials], got {successes}/{trials}")
    estimate = successes / trials
    half_width = math.sqrt(math.log(2.0 / delta) / (2.0 * trials))
    return (max(estimate - half_width, 0.0), min(estimate + half_width, 1.0))
