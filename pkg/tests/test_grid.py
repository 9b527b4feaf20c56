from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraciso.errors import PreconditionError
from fraciso.grid import (GridFunction, KernelParams, LatticeDomain, PixelSet, Regime, ball_to_cube,
                          build_grid_function, cube_to_ball, level_set, rescale_levels, transfer_pixel_set)


class TestKernelParams:
    def test_alpha_and_regime(self):
        kp = KernelParams(2, 0.75, 2.0)
        assert kp.alpha == 1.5
        assert kp.regime is Regime.SUPERCRITICAL
        assert KernelParams(1, 0.25, 2.0).regime is Regime.SUBCRITICAL

    def test_critical_snap(self):
        kp = KernelParams(1, 1 / 3, 3.0)
        assert kp.regime is Regime.CRITICAL
        assert kp.alpha == 1.0

    @pytest.mark.parametrize("n,s,p", [(0, 0.5, 2), (1, 0.0, 2), (1, 1.0, 2), (1, 0.5, 1.0), (1.5, 0.5, 2)])
    def test_rejects(self, n, s, p):
        with pytest.raises(PreconditionError):
            KernelParams(n, s, p)


class TestLatticeDomain:
    def test_unit_cube_centers(self):
        dom = LatticeDomain.unit_cube(1, 4)
        np.testing.assert_allclose(dom.active_centers()[:, 0], [0.125, 0.375, 0.625, 0.875])
        assert dom.measure == 1.0

    def test_ball_center_rule(self):
        dom = LatticeDomain.ball(2, 2)
        # centers (+-0.5, +-0.5) have norm 0.707 < 1
        assert dom.active_count == 4

    def test_ball_strict_inclusion(self):
        # n=1, N=2 over (-1,1): centers +-0.5 inside; radius so that a center lies exactly on the sphere
        dom = LatticeDomain.ball(1, 4, radius=1.0)
        assert dom.active_count == 4
        dom2 = LatticeDomain("ball", 2, 4, (0.0, 0.0), 1.0)
        c = dom2.centers()
        inside = np.sum(c * c, axis=-1) < 1.0
        assert np.array_equal(dom2.active, inside)

    def test_ball_mask_monotone_in_radius(self):
        # fixed cell size h = 0.05: the smaller ball's box sits inside the larger one
        small = LatticeDomain.ball(2, 12, radius=0.3)
        large = LatticeDomain.ball(2, 20, radius=0.5)
        shift = (large.N - small.N) // 2
        embedded = np.zeros(large.shape, bool)
        embedded[shift:shift + small.N, shift:shift + small.N] = small.active
        assert np.all(embedded <= large.active)
        assert small.active_count < large.active_count

    def test_rejects_bad(self):
        with pytest.raises(PreconditionError):
            LatticeDomain("torus", 1, 4, 0.0, 1.0)
        with pytest.raises(PreconditionError):
            LatticeDomain.ball(1, 0)
        with pytest.raises(PreconditionError):
            LatticeDomain.ball(1, 4, radius=-1.0)


class TestGridFunction:
    def test_sampler_values(self):
        dom = LatticeDomain.unit_cube(1, 4)
        u = build_grid_function(dom, lambda x: x[:, 0])
        np.testing.assert_allclose(u.values, [0.125, 0.375, 0.625, 0.875])

    def test_pointwise_sampler(self):
        dom = LatticeDomain.unit_cube(2, 3)
        u = build_grid_function(dom, lambda x: x[0] + 2 * x[1], vectorized=False)
        c = dom.active_centers()
        np.testing.assert_allclose(u.values, c[:, 0] + 2 * c[:, 1])

    def test_zero_sampler(self):
        dom = LatticeDomain.ball(2, 8)
        u = build_grid_function(dom, lambda x: 0.0)
        assert np.all(u.values == 0.0)

    def test_nonfinite_names_cell(self):
        dom = LatticeDomain.unit_cube(1, 4)
        with pytest.raises(PreconditionError, match="cell 2"):
            build_grid_function(dom, lambda x: np.array([0.0, 1.0, np.inf, 2.0]))

    def test_count_checked(self):
        with pytest.raises(PreconditionError):
            GridFunction(LatticeDomain.unit_cube(1, 4), [1.0, 2.0])

    def test_values_readonly(self):
        u = GridFunction(LatticeDomain.unit_cube(1, 2), [1.0, 2.0])
        with pytest.raises(ValueError):
            u.values[0] = 3.0

    def test_dense_roundtrip(self):
        dom = LatticeDomain.ball(2, 10)
        u = build_grid_function(dom, lambda x: x[:, 0] * x[:, 1])
        assert np.array_equal(GridFunction.from_dense(dom, u.dense()).values, u.values)


class TestLevelSets:
    def test_half_measure(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 8), lambda x: x[:, 0])
        assert level_set(u, "le", 0.5).measure == 0.5

    def test_empty(self):
        u = build_grid_function(LatticeDomain.unit_cube(2, 4), lambda x: 0.0)
        S = level_set(u, "ge", 1.0)
        assert S.count == 0 and S.measure == 0.0

    def test_between_band(self):
        u = build_grid_function(LatticeDomain.unit_cube(2, 16), lambda x: x[:, 0])
        assert level_set(u, "between", 0.25, 0.75).measure == 0.5

    def test_between_requires_order(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 4), lambda x: x[:, 0])
        with pytest.raises(PreconditionError):
            level_set(u, "between", 0.5, 0.5)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.integers(2, 12), st.floats(-1, 1), st.floats(0.01, 1), st.integers(0, 2 ** 32 - 1))
    def test_exact_partition(self, n, N, h, gap, seed):
        dom = LatticeDomain.ball(n, N)
        u = GridFunction(dom, np.random.default_rng(seed).uniform(-2, 2, dom.active_count))
        k = h + gap
        parts = [level_set(u, "le", h), level_set(u, "ge", k), level_set(u, "between", h, k)]
        assert sum(p.count for p in parts) == dom.active_count
        assert (parts[0] | parts[1] | parts[2]) == PixelSet.full(dom)


class TestRescale:
    def test_constant(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 4), lambda x: 0.3)
        assert np.all(rescale_levels(u, 0.3, 1.0).values == 0.0)

    def test_identity(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 4), lambda x: x[:, 0])
        assert np.array_equal(rescale_levels(u, 0.0, 1.0).values, u.values)

    def test_affine(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 8), lambda x: x[:, 0])
        v = rescale_levels(u, 0.25, 0.75)
        np.testing.assert_allclose(v.values, 2 * u.values - 0.5)
        assert level_set(v, "le", 0.0).measure == 0.25

    def test_masks_coincide(self, rng):
        dom = LatticeDomain.ball(2, 16)
        u = GridFunction(dom, rng.uniform(-1, 1, dom.active_count))
        v = rescale_levels(u, -0.2, 0.4)
        assert level_set(v, "le", 0.0) == level_set(u, "le", -0.2)
        assert level_set(v, "ge", 1.0) == level_set(u, "ge", 0.4)

    def test_rejects(self):
        u = build_grid_function(LatticeDomain.unit_cube(1, 4), lambda x: x[:, 0])
        with pytest.raises(PreconditionError):
            rescale_levels(u, 1.0, 0.0)


class TestPixelSet:
    def test_complement_additivity(self, rng):
        dom = LatticeDomain.ball(3, 8)
        S = PixelSet(dom, rng.random(dom.active_count) < 0.3)
        assert S.count + S.complement().count == dom.active_count
        assert S.measure + S.complement().measure == pytest.approx(dom.measure, rel=1e-15)

    def test_set_algebra(self, rng):
        dom = LatticeDomain.unit_cube(2, 8)
        A = PixelSet(dom, rng.random(64) < 0.5)
        B = PixelSet(dom, rng.random(64) < 0.5)
        assert (A | B).count == A.count + B.count - (A & B).count
        assert (A - B).isdisjoint(B)

    def test_mixed_domains_rejected(self):
        A = PixelSet.full(LatticeDomain.unit_cube(1, 4))
        B = PixelSet.full(LatticeDomain.unit_cube(1, 8))
        with pytest.raises(PreconditionError):
            A | B


class TestCubeBall:
    def test_center(self):
        assert np.all(cube_to_ball([0.5, 0.5, 0.5]) == 0.0)

    def test_corner(self):
        np.testing.assert_allclose(cube_to_ball([1.0, 1.0]), [1 / math.sqrt(2)] * 2, rtol=1e-15)

    def test_norm_is_linf(self, rng):
        x = rng.random((100, 3))
        y = 2 * x - 1
        np.testing.assert_allclose(np.linalg.norm(cube_to_ball(x), axis=1), np.max(np.abs(y), axis=1), rtol=1e-14)

    def test_round_trip(self, rng):
        x = rng.random((1000, 2))
        assert np.max(np.abs(ball_to_cube(cube_to_ball(x)) - x)) < 1e-12

    def test_rejects_outside(self):
        with pytest.raises(PreconditionError):
            cube_to_ball([1.5, 0.2])


class TestTransfer:
    def test_full_and_empty(self):
        dom = LatticeDomain.ball(2, 16)
        full = transfer_pixel_set(PixelSet.full(dom), 16)
        assert full.pixels.count == full.pixels.domain.active_count
        empty = transfer_pixel_set(PixelSet.empty(dom), 16)
        assert empty.pixels.count == 0 and empty.factor == 1.0

    def test_half_ball(self):
        dom = LatticeDomain.ball(2, 32)
        S = PixelSet(dom, dom.active_centers()[:, 0] > 0)
        res = transfer_pixel_set(S, 32)
        assert 0.4 <= res.target_measure <= 0.6
        assert res.factor >= 1.0

    def test_requires_unit_ball(self):
        with pytest.raises(PreconditionError):
            transfer_pixel_set(PixelSet.full(LatticeDomain.unit_cube(2, 4)), 4)
