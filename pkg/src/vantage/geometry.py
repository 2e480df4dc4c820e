"""Viewpoint space geometry.

A camera viewpoint lives on a sphere of radius ``r`` around the robot
base ``b`` and is parameterized by a horizontal angle ``theta_h`` and a
vertical angle ``theta_v``.  The optimizer itself never sees angles: it
works in normalized ``[0, 1]^2`` coordinates, and the affine maps in this
module convert between the two representations.

All angles are radians.  Conversions carry their :class:`AngleBounds`
explicitly so campaigns over different viewpoint boxes can coexist.
"""

import math
from dataclasses import dataclass

import numpy as np

# Values this close to an interval edge are snapped onto it.  Acquisition
# searches routinely land exactly on the boundary, and round-tripping
# through the affine maps may overshoot by a few ulps.
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class AngleBounds:
    """Closed angle box defining the viewpoint space.

    Defaults cover the spherical quadrant in front of the robot:
    horizontal in [-pi/2, pi/2], vertical in [-pi/4, pi/4].
    """

    h_min: float = -math.pi / 2
    h_max: float = math.pi / 2
    v_min: float = -math.pi / 4
    v_max: float = math.pi / 4

    def __post_init__(self):
        if not self.h_min < self.h_max:
            raise ValueError(f"h_min must be < h_max, got [{self.h_min}, {self.h_max}]")
        if not self.v_min < self.v_max:
            raise ValueError(f"v_min must be < v_max, got [{self.v_min}, {self.v_max}]")


DEFAULT_BOUNDS = AngleBounds()


def _snap(value: float, low: float, high: float) -> float:
    if abs(value - low) <= BOUNDARY_TOL:
        return low
    if abs(value - high) <= BOUNDARY_TOL:
        return high
    return value


@dataclass(frozen=True)
class Viewpoint:
    """Camera placement as a (horizontal, vertical) angle pair in radians."""

    theta_h: float
    theta_v: float


@dataclass(frozen=True)
class NormalizedPoint:
    """Optimizer-side coordinates in the closed unit square.

    Coordinates within ``BOUNDARY_TOL`` of 0 or 1 are clamped; anything
    further outside is rejected.
    """

    nu_h: float
    nu_v: float

    def __post_init__(self):
        for name, value in (("nu_h", self.nu_h), ("nu_v", self.nu_v)):
            snapped = _snap(float(value), 0.0, 1.0)
            if not 0.0 <= snapped <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, snapped)

    def as_array(self) -> np.ndarray:
        return np.array([self.nu_h, self.nu_v], dtype=np.float64)


@dataclass(frozen=True)
class SphereConfig:
    """Sphere the cameras sit on: robot base position and radius (meters)."""

    base: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        object.__setattr__(self, "base", tuple(float(c) for c in self.base))
        if len(self.base) != 3:
            raise ValueError("base must be a 3-vector")


def denormalize(p: NormalizedPoint, bounds: AngleBounds = DEFAULT_BOUNDS) -> Viewpoint:
    """Map unit-square coordinates to physical angles.

    Per axis: ``theta = (nu - 0.5) * (max - min) + (max + min) / 2``, so
    0 maps to the lower bound, 1 to the upper, and 0.5 to the center.
    """
    theta_h = (p.nu_h - 0.5) * (bounds.h_max - bounds.h_min) + 0.5 * (bounds.h_max + bounds.h_min)
    theta_v = (p.nu_v - 0.5) * (bounds.v_max - bounds.v_min) + 0.5 * (bounds.v_max + bounds.v_min)
    return Viewpoint(_snap(theta_h, bounds.h_min, bounds.h_max), _snap(theta_v, bounds.v_min, bounds.v_max))


def normalize(v: Viewpoint, bounds: AngleBounds = DEFAULT_BOUNDS) -> NormalizedPoint:
    """Inverse of :func:`denormalize`; rejects angles outside ``bounds``."""
    theta_h = _snap(v.theta_h, bounds.h_min, bounds.h_max)
    theta_v = _snap(v.theta_v, bounds.v_min, bounds.v_max)
    if not bounds.h_min <= theta_h <= bounds.h_max:
        raise ValueError(f"theta_h {v.theta_h} outside [{bounds.h_min}, {bounds.h_max}]")
    if not bounds.v_min <= theta_v <= bounds.v_max:
        raise ValueError(f"theta_v {v.theta_v} outside [{bounds.v_min}, {bounds.v_max}]")
    nu_h = (theta_h - bounds.h_min) / (bounds.h_max - bounds.h_min)
    nu_v = (theta_v - bounds.v_min) / (bounds.v_max - bounds.v_min)
    return NormalizedPoint(nu_h, nu_v)


def to_cartesian(v: Viewpoint, cfg: SphereConfig = SphereConfig()) -> np.ndarray:
    """3-D camera position: ``b + r * [cos(v)cos(h), cos(v)sin(h), sin(v)]``."""
    cv = math.cos(v.theta_v)
    direction = np.array(
        [cv * math.cos(v.theta_h), cv * math.sin(v.theta_h), math.sin(v.theta_v)],
        dtype=np.float64,
    )
    return np.asarray(cfg.base, dtype=np.float64) + cfg.radius * direction


def test_grid(bounds: AngleBounds = DEFAULT_BOUNDS, n_h: int = 10, n_v: int = 10) -> list[Viewpoint]:
    """Uniform ``n_h x n_v`` lattice over the angle box, corners included.

    Points are ordered horizontal-major: all vertical angles for the first
    horizontal angle, then the next, and so on.
    """
    if n_h < 2 or n_v < 2:
        raise ValueError(f"grid needs at least 2 points per axis, got {n_h}x{n_v}")
    hs = np.linspace(bounds.h_min, bounds.h_max, n_h)
    vs = np.linspace(bounds.v_min, bounds.v_max, n_v)
    return [Viewpoint(float(h), float(v)) for h in hs for v in vs]


def normalized_grid(points: list[Viewpoint] | tuple[Viewpoint, ...], bounds: AngleBounds) -> np.ndarray:
    """Stack viewpoints into an (n, 2) array of normalized coordinates."""
    out = np.empty((len(points), 2), dtype=np.float64)
    for i, vp in enumerate(points):
        p = normalize(vp, bounds)
        out[i, 0] = p.nu_h
        out[i, 1] = p.nu_v
    return out
