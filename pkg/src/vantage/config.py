"""Campaign configuration files.

Configs are YAML mappings; every key is optional except the landscape
(which itself defaults to the ``pickplace`` preset), so an empty
document is runnable.  Angles accept plain numbers (radians) or strings
with a ``deg``/``rad`` suffix.  Unknown keys are rejected with the
offending key named.

Full key reference (defaults shown):

    landscape: pickplace        # preset name, or a mapping (see below)
    strategy: vantage           # vantage | grid | random   (run)
    strategies: [vantage, grid, random]                     (compare)
    master_seed: 0
    q: 8
    iterations: 4
    init_batches: 1
    refit_hyperparameters: false
    bounds:
      h: [-90deg, 90deg]
      v: [-45deg, 45deg]
    kernel:
      signal_variance: 0.04
      lengthscale_h: 0.2
      lengthscale_v: 0.2
      noise_variance: 1.0e-4
    acquisition:
      beta: 2.0
      mc_samples: 128
      restarts: 64
      refine_steps: 7
      beta_schedule: false      # use the round-indexed schedule
      schedule_delta: 0.1
      schedule_grid_size: 441
    rollout:
      rollouts_per_test_point: 20
      test_grid: [10, 10]       # n_h x n_v over the bounds
      rng_seed: null            # derived from master_seed when null

    landscape:                  # inline form
      base_rate: 0.15
      generalization_width: 0.35
      bumps:
        - center: [0.27, 0.62]
          height: 0.38
          width: 0.16
"""

import math

import yaml

from .acquisition import AcquisitionConfig
from .campaign import STRATEGIES, CampaignConfig
from .errors import ConfigError
from .geometry import AngleBounds, NormalizedPoint
from .simulator import Bump, Landscape, RolloutConfig, preset_landscape
from .surrogate import KernelParams

_TOP_KEYS = {
    "landscape",
    "strategy",
    "strategies",
    "master_seed",
    "q",
    "iterations",
    "init_batches",
    "refit_hyperparameters",
    "bounds",
    "kernel",
    "acquisition",
    "rollout",
}


def _reject_unknown(mapping: dict, allowed: set[str], where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def _angle(value, key: str) -> float:
    """Radians from a number, or a string like '-90deg' / '1.57rad'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        try:
            if text.endswith("deg"):
                return math.radians(float(text[:-3]))
            if text.endswith("rad"):
                return float(text[:-3])
            return float(text)
        except ValueError:
            pass
    raise ConfigError(f"{key} must be a number (radians) or a 'deg'/'rad' suffixed string, got {value!r}")


def _require_int(value, key: str, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _require_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _require_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be true or false, got {value!r}")
    return value


def _parse_bounds(section) -> AngleBounds:
    if section is None:
        return AngleBounds()
    if not isinstance(section, dict):
        raise ConfigError("bounds must be a mapping with 'h' and 'v' entries")
    _reject_unknown(section, {"h", "v"}, "bounds")
    defaults = AngleBounds()
    h = section.get("h", [defaults.h_min, defaults.h_max])
    v = section.get("v", [defaults.v_min, defaults.v_max])
    for name, pair in (("bounds.h", h), ("bounds.v", v)):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"{name} must be a [min, max] pair")
    try:
        return AngleBounds(
            h_min=_angle(h[0], "bounds.h[0]"),
            h_max=_angle(h[1], "bounds.h[1]"),
            v_min=_angle(v[0], "bounds.v[0]"),
            v_max=_angle(v[1], "bounds.v[1]"),
        )
    except ValueError as err:
        raise ConfigError(f"bounds: {err}") from err


def _parse_landscape(section) -> Landscape:
    if section is None:
        return preset_landscape("pickplace")
    if isinstance(section, str):
        try:
            return preset_landscape(section)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    if not isinstance(section, dict):
        raise ConfigError("landscape must be a preset name or a mapping")
    _reject_unknown(section, {"base_rate", "generalization_width", "bumps"}, "landscape")
    bumps_spec = section.get("bumps")
    if not isinstance(bumps_spec, list) or not bumps_spec:
        raise ConfigError("landscape.bumps must be a non-empty list")
    bumps = []
    for i, b in enumerate(bumps_spec):
        if not isinstance(b, dict):
            raise ConfigError(f"landscape.bumps[{i}] must be a mapping")
        _reject_unknown(b, {"center", "height", "width"}, f"landscape.bumps[{i}]")
        center = b.get("center")
        if not isinstance(center, (list, tuple)) or len(center) != 2:
            raise ConfigError(f"landscape.bumps[{i}].center must be a [nu_h, nu_v] pair")
        try:
            bumps.append(
                Bump(
                    center=NormalizedPoint(
                        _require_number(center[0], f"landscape.bumps[{i}].center[0]"),
                        _require_number(center[1], f"landscape.bumps[{i}].center[1]"),
                    ),
                    height=_require_number(b.get("height", 0.5), f"landscape.bumps[{i}].height"),
                    width=_require_number(b.get("width", 0.2), f"landscape.bumps[{i}].width"),
                )
            )
        except ValueError as err:
            raise ConfigError(f"landscape.bumps[{i}]: {err}") from err
    try:
        return Landscape(
            bumps=tuple(bumps),
            base_rate=_require_number(section.get("base_rate", 0.1), "landscape.base_rate"),
            generalization_width=_require_number(
                section.get("generalization_width", 0.3), "landscape.generalization_width"
            ),
        )
    except ValueError as err:
        raise ConfigError(f"landscape: {err}") from err


def _parse_kernel(section) -> KernelParams:
    if section is None:
        return KernelParams()
    if not isinstance(section, dict):
        raise ConfigError("kernel must be a mapping")
    allowed = {"signal_variance", "lengthscale_h", "lengthscale_v", "noise_variance"}
    _reject_unknown(section, allowed, "kernel")
    defaults = KernelParams()
    try:
        return KernelParams(
            signal_variance=_require_number(section.get("signal_variance", defaults.signal_variance), "kernel.signal_variance"),
            lengthscale_h=_require_number(section.get("lengthscale_h", defaults.lengthscale_h), "kernel.lengthscale_h"),
            lengthscale_v=_require_number(section.get("lengthscale_v", defaults.lengthscale_v), "kernel.lengthscale_v"),
            noise_variance=_require_number(section.get("noise_variance", defaults.noise_variance), "kernel.noise_variance"),
        )
    except ValueError as err:
        raise ConfigError(f"kernel: {err}") from err


def _parse_acquisition(section, q: int) -> AcquisitionConfig:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("acquisition must be a mapping")
    allowed = {"beta", "mc_samples", "restarts", "refine_steps", "beta_schedule", "schedule_delta", "schedule_grid_size"}
    _reject_unknown(section, allowed, "acquisition")
    defaults = AcquisitionConfig()
    try:
        return AcquisitionConfig(
            q=q,
            beta=_require_number(section.get("beta", defaults.beta), "acquisition.beta"),
            mc_samples=_require_int(section.get("mc_samples", defaults.mc_samples), "acquisition.mc_samples", 64),
            restarts=_require_int(section.get("restarts", defaults.restarts), "acquisition.restarts", 1),
            refine_steps=_require_int(section.get("refine_steps", defaults.refine_steps), "acquisition.refine_steps", 0),
            use_beta_schedule=_require_bool(section.get("beta_schedule", defaults.use_beta_schedule), "acquisition.beta_schedule"),
            schedule_delta=_require_number(section.get("schedule_delta", defaults.schedule_delta), "acquisition.schedule_delta"),
            schedule_grid_size=_require_int(
                section.get("schedule_grid_size", defaults.schedule_grid_size), "acquisition.schedule_grid_size", 1
            ),
        )
    except ValueError as err:
        raise ConfigError(f"acquisition: {err}") from err


def _parse_rollout(section, bounds: AngleBounds) -> RolloutConfig:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("rollout must be a mapping")
    _reject_unknown(section, {"rollouts_per_test_point", "test_grid", "rng_seed"}, "rollout")
    grid_spec = section.get("test_grid", [10, 10])
    if not isinstance(grid_spec, (list, tuple)) or len(grid_spec) != 2:
        raise ConfigError("rollout.test_grid must be an [n_h, n_v] pair")
    n_h = _require_int(grid_spec[0], "rollout.test_grid[0]", 2)
    n_v = _require_int(grid_spec[1], "rollout.test_grid[1]", 2)
    seed = section.get("rng_seed")
    if seed is not None:
        seed = _require_int(seed, "rollout.rng_seed", 0)
    try:
        return RolloutConfig.default(
            bounds,
            n_h,
            n_v,
            rollouts_per_test_point=_require_int(
                section.get("rollouts_per_test_point", 20), "rollout.rollouts_per_test_point", 1
            ),
            rng_seed=seed,
        )
    except ValueError as err:
        raise ConfigError(f"rollout: {err}") from err


def _load_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"config is not valid YAML: {err}") from err
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping at the top level")
    _reject_unknown(doc, _TOP_KEYS, "config")
    return doc


def parse_config(text: str) -> CampaignConfig:
    """Validated :class:`CampaignConfig` from a YAML document."""
    doc = _load_document(text)
    bounds = _parse_bounds(doc.get("bounds"))
    q = _require_int(doc.get("q", 8), "q", 1)
    strategy = doc.get("strategy", "vantage")
    if strategy not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {list(STRATEGIES)}, got {strategy!r}")
    try:
        return CampaignConfig(
            landscape=_parse_landscape(doc.get("landscape")),
            bounds=bounds,
            q=q,
            iterations=_require_int(doc.get("iterations", 4), "iterations", 0),
            init_batches=_require_int(doc.get("init_batches", 1), "init_batches", 1),
            acquisition=_parse_acquisition(doc.get("acquisition"), q),
            rollout=_parse_rollout(doc.get("rollout"), bounds),
            strategy=strategy,
            master_seed=_require_int(doc.get("master_seed", 0), "master_seed", 0),
            kernel=_parse_kernel(doc.get("kernel")),
            refit_hyperparameters=_require_bool(doc.get("refit_hyperparameters", False), "refit_hyperparameters"),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def parse_compare_config(text: str) -> tuple[CampaignConfig, list[str]]:
    """Config plus the strategy list for a comparison sweep."""
    doc = _load_document(text)
    strategies = doc.get("strategies", list(STRATEGIES))
    if not isinstance(strategies, list) or not strategies:
        raise ConfigError("strategies must be a non-empty list")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"strategies entries must be among {list(STRATEGIES)}, got {s!r}")
    if len(set(strategies)) != len(strategies):
        raise ConfigError("strategies must not repeat")
    return parse_config(text), list(strategies)
