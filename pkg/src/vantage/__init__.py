"""Batched Bayesian optimization of camera viewpoints.

Selects informative training viewpoints on a sphere around a robot so
that fine-tuning a policy at those viewpoints maximizes average success
over the whole viewing space.  The expensive fine-tune-and-evaluate step
is replaced by a configurable synthetic simulator, and campaigns can be
benchmarked against grid and random search at identical budgets.
"""

from ._kernels import BACKEND
from .acquisition import AcquisitionConfig, BatchProposal, beta_schedule, propose_batch, qucb_score
from .campaign import (
    CampaignConfig,
    CampaignRecord,
    IterationRecord,
    RegretReport,
    Selection,
    information_gain,
    landscape_optimum,
    regret_report,
    run_campaign,
    run_grid_baseline,
    run_random_baseline,
    run_strategy,
)
from .errors import CampaignError, ConfigError, FactorizationError, VantageError
from .geometry import (
    AngleBounds,
    NormalizedPoint,
    SphereConfig,
    Viewpoint,
    denormalize,
    normalize,
    test_grid,
    to_cartesian,
)
from .simulator import (
    Bump,
    EvaluationResult,
    Landscape,
    RolloutConfig,
    evaluate,
    preset_landscape,
    success_confidence_interval,
    true_objective,
    true_success_prob,
)
from .surrogate import (
    GpPosterior,
    GridSearchSpace,
    KernelParams,
    Observation,
    fit,
    fit_hyperparameters,
    kernel,
    posterior_mean_cov,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "AngleBounds",
    "BACKEND",
    "BatchProposal",
    "Bump",
    "CampaignConfig",
    "CampaignError",
    "CampaignRecord",
    "ConfigError",
    "EvaluationResult",
    "FactorizationError",
    "GpPosterior",
    "GridSearchSpace",
    "IterationRecord",
    "KernelParams",
    "Landscape",
    "NormalizedPoint",
    "Observation",
    "RegretReport",
    "RolloutConfig",
    "Selection",
    "SphereConfig",
    "VantageError",
    "Viewpoint",
    "beta_schedule",
    "denormalize",
    "evaluate",
    "fit",
    "fit_hyperparameters",
    "information_gain",
    "kernel",
    "landscape_optimum",
    "normalize",
    "posterior_mean_cov",
    "preset_landscape",
    "propose_batch",
    "qucb_score",
    "regret_report",
    "run_campaign",
    "run_grid_baseline",
    "run_random_baseline",
    "run_strategy",
    "success_confidence_interval",
    "test_grid",
    "to_cartesian",
    "true_objective",
    "true_success_prob",
    "__version__",
]
