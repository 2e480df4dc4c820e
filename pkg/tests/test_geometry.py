import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vantage.geometry import (
    AngleBounds,
    NormalizedPoint,
    SphereConfig,
    Viewpoint,
    denormalize,
    normalize,
    normalized_grid,
    test_grid,
    to_cartesian,
)

BOUNDS = AngleBounds()

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestBoundsAndPoints:
    def test_default_bounds_match_quadrant(self):
        assert BOUNDS.h_min == -math.pi / 2
        assert BOUNDS.h_max == math.pi / 2
        assert BOUNDS.v_min == -math.pi / 4
        assert BOUNDS.v_max == math.pi / 4

    def test_inverted_bounds_rejected(self):
        with pytest.raises(ValueError, match="h_min"):
            AngleBounds(h_min=1.0, h_max=-1.0)
        with pytest.raises(ValueError, match="v_min"):
            AngleBounds(v_min=0.5, v_max=0.5)

    def test_normalized_point_clamps_within_tolerance(self):
        p = NormalizedPoint(-1e-13, 1.0 + 1e-13)
        assert p.nu_h == 0.0
        assert p.nu_v == 1.0

    def test_normalized_point_rejects_outside(self):
        with pytest.raises(ValueError, match="nu_h"):
            NormalizedPoint(-1e-6, 0.5)
        with pytest.raises(ValueError, match="nu_v"):
            NormalizedPoint(0.5, 1.01)

    def test_sphere_config_requires_positive_radius(self):
        with pytest.raises(ValueError, match="radius"):
            SphereConfig(radius=0.0)


class TestAffineMaps:
    def test_midpoint_maps_to_center(self):
        v = denormalize(NormalizedPoint(0.5, 0.5), BOUNDS)
        assert v.theta_h == pytest.approx(0.0, abs=1e-15)
        assert v.theta_v == pytest.approx(0.0, abs=1e-15)

    def test_lower_corner_maps_to_lower_bounds(self):
        v = denormalize(NormalizedPoint(0.0, 0.0), BOUNDS)
        assert v.theta_h == BOUNDS.h_min
        assert v.theta_v == BOUNDS.v_min

    def test_affine_formula_direct_evaluation(self):
        v = denormalize(NormalizedPoint(0.75, 0.25), BOUNDS)
        assert v.theta_h == pytest.approx(math.pi / 4, abs=1e-15)
        assert v.theta_v == pytest.approx(-math.pi / 8, abs=1e-15)

    def test_normalize_center(self):
        p = normalize(Viewpoint(0.0, 0.0), BOUNDS)
        assert (p.nu_h, p.nu_v) == (0.5, 0.5)

    def test_normalize_upper_corner(self):
        p = normalize(Viewpoint(math.pi / 2, math.pi / 4), BOUNDS)
        assert (p.nu_h, p.nu_v) == (1.0, 1.0)

    def test_normalize_inverse_affine(self):
        p = normalize(Viewpoint(-math.pi / 4, math.pi / 8), BOUNDS)
        assert p.nu_h == pytest.approx(0.25, abs=1e-15)
        assert p.nu_v == pytest.approx(0.75, abs=1e-15)

    def test_normalize_rejects_out_of_bounds(self):
        with pytest.raises(ValueError, match="theta_h"):
            normalize(Viewpoint(math.pi / 2 + 1e-6, 0.0), BOUNDS)
        with pytest.raises(ValueError, match="theta_v"):
            normalize(Viewpoint(0.0, -math.pi / 4 - 1e-6), BOUNDS)

    def test_normalize_snaps_boundary_noise(self):
        p = normalize(Viewpoint(math.pi / 2 + 1e-13, 0.0), BOUNDS)
        assert p.nu_h == 1.0

    @given(unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, nu_h, nu_v):
        p = NormalizedPoint(nu_h, nu_v)
        back = normalize(denormalize(p, BOUNDS), BOUNDS)
        assert abs(back.nu_h - p.nu_h) < 1e-12
        assert abs(back.nu_v - p.nu_v) < 1e-12

    @given(unit, unit)
    @settings(max_examples=100, deadline=None)
    def test_round_trip_asymmetric_bounds(self, nu_h, nu_v):
        bounds = AngleBounds(h_min=0.1, h_max=2.2, v_min=-0.9, v_max=-0.2)
        p = NormalizedPoint(nu_h, nu_v)
        back = normalize(denormalize(p, bounds), bounds)
        assert abs(back.nu_h - p.nu_h) < 1e-12
        assert abs(back.nu_v - p.nu_v) < 1e-12


class TestCartesian:
    def test_forward_axis(self):
        x = to_cartesian(Viewpoint(0.0, 0.0), SphereConfig())
        np.testing.assert_allclose(x, [1.0, 0.0, 0.0], atol=1e-15)

    def test_side_axis(self):
        x = to_cartesian(Viewpoint(math.pi / 2, 0.0), SphereConfig())
        np.testing.assert_allclose(x, [0.0, 1.0, 0.0], atol=1e-15)

    def test_offset_base_and_radius(self):
        x = to_cartesian(Viewpoint(0.0, math.pi / 4), SphereConfig(base=(0.0, 0.0, 0.5), radius=2.0))
        np.testing.assert_allclose(x, [math.sqrt(2.0), 0.0, 0.5 + math.sqrt(2.0)], atol=1e-12)

    @given(unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_sphere_membership(self, nu_h, nu_v):
        cfg = SphereConfig(base=(0.3, -0.2, 0.8), radius=1.7)
        v = denormalize(NormalizedPoint(nu_h, nu_v), BOUNDS)
        x = to_cartesian(v, cfg)
        assert abs(np.linalg.norm(x - np.array(cfg.base)) - cfg.radius) < 1e-9

    @given(unit, unit)
    @settings(max_examples=100, deadline=None)
    def test_default_quadrant_in_front_of_robot(self, nu_h, nu_v):
        # (x - b) . u >= 0 with u = (1, 0, 0) holds for |theta_h| <= pi/2.
        v = denormalize(NormalizedPoint(nu_h, nu_v), BOUNDS)
        x = to_cartesian(v, SphereConfig())
        assert x[0] >= -1e-12

    def test_above_table_holds_for_nonnegative_v_min(self):
        bounds = AngleBounds(v_min=0.0, v_max=math.pi / 4)
        for nu in np.linspace(0, 1, 7):
            v = denormalize(NormalizedPoint(float(nu), float(nu)), bounds)
            assert to_cartesian(v, SphereConfig())[2] >= -1e-12


class TestGrid:
    def test_two_by_two_is_corners(self):
        pts = test_grid(BOUNDS, 2, 2)
        expect = {
            (BOUNDS.h_min, BOUNDS.v_min),
            (BOUNDS.h_min, BOUNDS.v_max),
            (BOUNDS.h_max, BOUNDS.v_min),
            (BOUNDS.h_max, BOUNDS.v_max),
        }
        assert {(p.theta_h, p.theta_v) for p in pts} == expect

    def test_odd_counts_include_center(self):
        pts = test_grid(BOUNDS, 3, 3)
        assert len(pts) == 9
        assert any(p.theta_h == 0.0 and p.theta_v == 0.0 for p in pts)

    def test_5x4_spacing(self):
        pts = test_grid(BOUNDS, 5, 4)
        assert len(pts) == 20
        hs = sorted({p.theta_h for p in pts})
        vs = sorted({p.theta_v for p in pts})
        np.testing.assert_allclose(np.diff(hs), math.pi / 4, atol=1e-12)
        np.testing.assert_allclose(np.diff(vs), math.pi / 6, atol=1e-12)

    def test_rejects_single_row(self):
        with pytest.raises(ValueError, match="at least 2"):
            test_grid(BOUNDS, 1, 5)

    def test_reflection_symmetry(self):
        pts = test_grid(BOUNDS, 4, 3)
        mirrored = {(-p.theta_h, -p.theta_v) for p in pts}
        original = {(p.theta_h, p.theta_v) for p in pts}
        assert {(round(h, 15), round(v, 15)) for h, v in mirrored} == {
            (round(h, 15), round(v, 15)) for h, v in original
        }

    def test_normalized_grid_stacks_in_order(self):
        pts = test_grid(BOUNDS, 2, 2)
        arr = normalized_grid(pts, BOUNDS)
        assert arr.shape == (4, 2)
        np.testing.assert_allclose(arr, [[0, 0], [0, 1], [1, 0], [1, 1]], atol=1e-15)
