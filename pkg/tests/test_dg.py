from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraciso.dg import (DGParams, caccioppoli_sides, growth_simulation, level_index_M, membership_scan,
                        truncate)
from fraciso.errors import PreconditionError
from fraciso.grid import GridFunction, KernelParams, LatticeDomain, build_grid_function
from fraciso.iso_probe import default_beta
from fraciso.selftest import random_dg_instance

KP1 = KernelParams(1, 0.75, 2.0)


def brute_sides(u, params, x0, r, R, k, sign):
    """Direct O(N^2) evaluation of the three right-side terms and the left side (n = 1)."""
    dom = u.domain
    kp = params.kernel
    p, a, h = kp.p, kp.alpha, dom.h
    x = dom.active_centers()[:, 0]
    v = u.values
    w = np.maximum(v - k, 0) if sign == "+" else np.maximum(k - v, 0)
    inr = np.abs(x - x0) < r
    inR = np.abs(x - x0) < R
    lhs = 0.0
    for i in np.nonzero(inr)[0]:
        for j in np.nonzero(inr)[0]:
            if i != j:
                lhs += abs(w[i] - w[j]) ** p * h * h / abs(x[i] - x[j]) ** (1 + a)
    above = v > k if sign == "+" else v < k
    level = R ** params.lam * params.d ** p * np.count_nonzero(inR & above) * h
    bulk = R ** ((1 - kp.s) * p) / (R - r) ** p * np.sum(w[inR] ** p) * h
    out = np.abs(x - x0) >= r
    tail_int = np.sum(w[out] ** (p - 1) * h / np.abs(x[out] - x0) ** (1 + a))
    const = max(-k, 0) if sign == "+" else max(k, 0)
    if const > 0:
        lo, hi = dom.lower[0], dom.lower[0] + 2 * dom.radius
        # exact exterior integral of |x - x0|^-(1+a) in 1D
        tail_int += const ** (p - 1) * ((x0 - lo) ** -a + (hi - x0) ** -a) / a
    tail_t = (R / (R - r)) ** (1 + a) * np.sum(w[inR]) * h * tail_int
    return lhs, level, bulk, tail_t


def test_truncate():
    v = np.array([-1.0, 0.5, 2.0])
    assert np.array_equal(truncate(v, 0.5, "+"), [0, 0, 1.5])
    assert np.array_equal(truncate(v, 0.5, "-"), [1.5, 0, 0])
    with pytest.raises(PreconditionError):
        truncate(v, 0.0, "*")


def test_params_validation():
    with pytest.raises(PreconditionError):
        DGParams(-1.0, 1.0, 0.0, KP1)
    with pytest.raises(PreconditionError):
        DGParams(0.0, math.inf, 0.0, KP1)


class TestCaccioppoli:
    @pytest.mark.parametrize("sign,k", [("+", 0.2), ("-", 0.2), ("+", -0.4), ("-", -0.4)])
    def test_against_brute_force(self, sign, k):
        dom = LatticeDomain.cube(1, 96, center=0.0, half_side=2.0)
        u = build_grid_function(dom, lambda x: np.sin(2 * x[:, 0]) + 0.2 * x[:, 0])
        params = DGParams(0.7, 1.0, 0.5, KernelParams(1, 0.6, 2.5))
        rep = caccioppoli_sides(u, params, 0.1, 0.5, 1.2, k, sign)
        lhs, level, bulk, tail_t = brute_sides(u, params, 0.1, 0.5, 1.2, k, sign)
        assert rep.lhs == pytest.approx(lhs, rel=1e-11)
        assert rep.level_term == pytest.approx(level, rel=1e-13)
        assert rep.bulk_term == pytest.approx(bulk, rel=1e-13)
        # the exterior integral is evaluated in closed form minus a midpoint correction
        assert rep.tail_term == pytest.approx(tail_t, rel=2e-3)
        assert rep.ratio == pytest.approx(rep.lhs / rep.rhs, rel=1e-15)
        assert rep.certified == (rep.ratio <= 1.0)

    def test_exterior_constant_only_for_negative_levels(self):
        dom = LatticeDomain.cube(1, 64, center=0.0, half_side=2.0)
        u = build_grid_function(dom, lambda x: np.cos(x[:, 0]))
        params = DGParams(0.0, 1.0, 0.0, KP1)
        pos = caccioppoli_sides(u, params, 0.0, 0.5, 1.0, 0.5, "+")
        lhs, level, bulk, tail_t = brute_sides(u, params, 0.0, 0.5, 1.0, 0.5, "+")
        assert pos.tail_term == pytest.approx(tail_t, rel=1e-13)

    def test_vacuous(self):
        dom = LatticeDomain.cube(1, 32, center=0.0, half_side=2.0)
        u = GridFunction(dom, np.full(dom.active_count, 0.3))
        rep = caccioppoli_sides(u, DGParams(0.0, 1.0, 0.0, KP1), 0.0, 0.5, 1.0, 0.3, "+")
        assert rep.vacuous and rep.ratio == 0.0 and rep.certified

    def test_zero_lhs_nonzero_rhs(self):
        # constant above k: (u-k)_+ is constant on B_r so the left side is 0
        dom = LatticeDomain.cube(1, 32, center=0.0, half_side=2.0)
        u = GridFunction(dom, np.full(dom.active_count, 1.0))
        rep = caccioppoli_sides(u, DGParams(0.0, 1.0, 0.0, KP1), 0.0, 0.5, 1.0, 0.0, "+")
        assert rep.lhs == 0.0 and rep.rhs > 0 and rep.ratio == 0.0 and not rep.vacuous

    def test_admissibility(self):
        dom = LatticeDomain.cube(1, 32, center=0.0, half_side=2.0)
        u = GridFunction(dom, np.zeros(dom.active_count))
        params = DGParams(0.0, 1.0, 0.0, KP1)
        with pytest.raises(PreconditionError) as exc:
            caccioppoli_sides(u, params, 1.5, 1.0, 0.8, 0.0, "+")
        assert len(exc.value.failures) == 2
        with pytest.raises(PreconditionError):
            caccioppoli_sides(u, params, 0.0, 0.5, 1.0, 0.0, "x")
        with pytest.raises(PreconditionError, match="dimension"):
            caccioppoli_sides(u, DGParams(0.0, 1.0, 0.0, KernelParams(2, 0.5, 2.0)), 0.0, 0.5, 1.0, 0.0, "+")

    @pytest.mark.parametrize("seed", range(6))
    def test_homogeneity(self, seed):
        u, params, (x0, r, R, k, sign) = random_dg_instance(np.random.default_rng(seed))
        base = caccioppoli_sides(u, params, x0, r, R, k, sign)
        for lam in (0.1, 3.0, 100.0):
            scaled = DGParams(lam * params.d, params.H, params.lam, params.kernel)
            rep = caccioppoli_sides(u.with_values(lam * u.values), scaled, x0, r, R, lam * k, sign)
            assert rep.ratio == pytest.approx(base.ratio, rel=1e-9, abs=1e-300)

    def test_strong_term(self):
        dom = LatticeDomain.cube(1, 48, center=0.0, half_side=2.0)
        x = dom.active_centers()[:, 0]
        u = build_grid_function(dom, lambda x: x[:, 0])
        params = DGParams(0.0, 1.0, 0.0, KP1)
        rep = caccioppoli_sides(u, params, 0.0, 0.5, 1.0, 0.0, "+", strong_term=True)
        assert caccioppoli_sides(u, params, 0.0, 0.5, 1.0, 0.0, "+").strong_term is None
        h = dom.h
        wp, wm = np.maximum(x, 0), np.maximum(-x, 0)
        brute = sum(wp[i] * wm[j] ** (KP1.p - 1) * h * h / abs(x[i] - x[j]) ** (1 + KP1.alpha)
                    for i in range(len(x)) if abs(x[i]) < 0.5 for j in range(len(x)) if i != j)
        assert rep.strong_term == pytest.approx(brute, rel=1e-9)


class TestScan:
    def test_max_and_skips(self):
        dom = LatticeDomain.cube(1, 64, center=0.0, half_side=2.0)
        u = build_grid_function(dom, lambda x: x[:, 0] ** 2)
        params = DGParams(0.5, 1.0, 0.0, KP1)
        samples = [(0.0, 0.5, 1.0, 0.1, "+"), (0.2, 0.3, 0.9, 0.5, "-"), (1.8, 0.5, 1.0, 0.0, "+")]
        res = membership_scan(u, params, samples)
        assert res.skipped == 1 and len(res.reports) == 2
        assert res.H_min == max(caccioppoli_sides(u, params, *s).ratio for s in samples[:2])

    def test_all_skipped(self):
        dom = LatticeDomain.cube(1, 16, center=0.0, half_side=2.0)
        u = GridFunction(dom, np.zeros(dom.active_count))
        with pytest.raises(PreconditionError, match="no admissible"):
            membership_scan(u, DGParams(0.0, 1.0, 0.0, KP1), [(0.0, 2.0, 3.0, 0.0, "+")])

    def test_regression(self, regression):
        dom = LatticeDomain.cube(1, 512, center=0.0, half_side=4.0)
        u = build_grid_function(dom, lambda x: x[:, 0])
        params = DGParams(0.0, 1.0, 0.0, KernelParams(1, 0.5, 2.0))
        samples = [(x0, r, R, k, sg) for x0 in (-1.0, 0.0, 1.5) for (r, R) in ((0.5, 1.0), (1.0, 2.0))
                   for k in (-0.5, 0.0, 0.5) for sg in "+-"]
        res = membership_scan(u, params, samples)
        assert 0 < res.H_min < math.inf
        regression("dg_scan", {"H_min": res.H_min, "skipped": res.skipped,
                               "ratios": [r.ratio for r in res.reports]})


class TestGrowth:
    def test_level_index_examples(self):
        assert [level_index_M(d) for d in (1 / 16, 1 / 32, 1 / 64)] == [1, 2, 3]
        assert level_index_M(0.1) == 1 and level_index_M(1 / 8) == 0

    @given(st.floats(1e-12, 0.99))
    def test_level_index_definition(self, delta):
        M = level_index_M(delta)
        assert 2.0 ** -(M + 3) <= delta < 2.0 ** -(M + 2)

    def test_level_index_rejects(self):
        with pytest.raises(PreconditionError):
            level_index_M(0.0)

    def ramp(self, N=1024, slope=2.0):
        dom = LatticeDomain.ball(1, N, radius=4.0)
        return build_grid_function(dom, lambda x: np.clip(slope * x[:, 0], 0.0, 1.0))

    def test_ramp_rows(self, regression):
        u = self.ramp()
        params = DGParams(0.0, 1.0, 0.0, KP1)
        rep = growth_simulation(u, params, 1 / 16, 0.5)
        assert rep.M == 1 and [r.j for r in rep.rows] == [1]
        assert rep.band_sum_ok
        assert rep.u_nonnegative and rep.tail_negative_part == 0.0
        # {u >= 1} = [1/2, 2) inside B_2 = (-2, 2)
        assert rep.density_at_one == pytest.approx(1.5 / 4, abs=1 / 256)
        assert not rep.density_hypothesis and not rep.hypotheses_ok
        for row in rep.rows:
            assert all(math.isfinite(v) for v in (row.seminorm_ratio, row.iso_lhs, row.iso_rhs, row.chain_slack))
            assert row.tail_split_holds
        regression("growth_ramp", rep.to_dict())

    def test_constants_chain(self):
        u = self.ramp(256)
        params = DGParams(0.0, 1.0, 0.0, KP1)
        rep = growth_simulation(u, params, 1 / 64, 0.5, iso_constant=2.0, C1=5.0)
        assert rep.C1 == 5.0
        assert rep.C2 == 4.0 ** 2 * 2.0
        assert rep.C3 == 5.0 * rep.C2
        assert rep.iso_exponent == 2.0 * default_beta(KP1)
        assert rep.C4 == pytest.approx((2 * 4.0) ** rep.iso_exponent * rep.C3, rel=1e-14)

    def test_band_cells_exact(self):
        u = self.ramp(512, slope=1.3)
        rep = growth_simulation(u, DGParams(0.0, 1.0, 0.0, KP1), 1 / 64, 0.5)
        x = u.domain.active_centers()[:, 0]
        v = u.values
        inb2 = np.abs(x) < 2
        for row in rep.rows:
            expect = np.count_nonzero(inb2 & (v > 2.0 ** -(row.j + 1)) & (v < 2.0 ** -row.j))
            assert row.band_cells == expect
        assert rep.below_one_cells == np.count_nonzero(inb2 & (v < 1))
        assert rep.band_cells_total == sum(r.band_cells for r in rep.rows) <= rep.below_one_cells

    def test_all_hypotheses(self):
        dom = LatticeDomain.ball(1, 256, radius=4.0)
        u = GridFunction(dom, np.ones(dom.active_count))
        rep = growth_simulation(u, DGParams(0.0, 1.0, 0.0, KP1), 1 / 32, 0.5)
        assert rep.hypotheses_ok and rep.final_density == 0.0 and rep.conclusion_holds
        assert rep.C1_empirical == 0.0 and rep.C1 == 1.0

    def test_negative_tail(self):
        dom = LatticeDomain.ball(1, 512, radius=8.0)
        x = dom.active_centers()[:, 0]
        u = GridFunction(dom, np.where(np.abs(x) > 5, -1.0, 1.0))
        rep = growth_simulation(u, DGParams(0.0, 1.0, 0.0, KP1), 1 / 32, 0.5)
        assert rep.u_nonnegative
        assert rep.tail_negative_part > 0 and not rep.smallness_hypothesis

    def test_rejections(self):
        u = self.ramp(128)
        params = DGParams(0.0, 1.0, 0.0, KP1)
        with pytest.raises(PreconditionError):
            growth_simulation(u, params, 0.2, 0.5)
        with pytest.raises(PreconditionError, match="sp"):
            growth_simulation(u, DGParams(0.0, 1.0, 0.0, KernelParams(1, 0.3, 2.0)), 1 / 16, 0.5)
        small = LatticeDomain.ball(1, 64, radius=3.0)
        with pytest.raises(PreconditionError, match="B_4"):
            growth_simulation(GridFunction(small, np.ones(small.active_count)), params, 1 / 16, 0.5)
