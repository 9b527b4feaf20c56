"""Caccioppoli ratios and the growth chain for a weak fractional De Giorgi class.

The first part evaluates the truncated energy inequality for u(x) = x on
(-4, 4) over a few centers, radii and levels and reports the smallest class
constant H that covers them.  The second part replays the dyadic level
chain on clamp(2x, 0, 1) and prints one row per level.
"""

from __future__ import annotations

import numpy as np

from fraciso import DGParams, KernelParams, LatticeDomain, build_grid_function, growth_simulation, membership_scan


def main():
    dom = LatticeDomain.cube(1, 512, center=0.0, half_side=4.0)
    u = build_grid_function(dom, lambda x: x[:, 0])
    params = DGParams(0.0, 1.0, 0.0, KernelParams(1, 0.5, 2.0))
    samples = [(x0, r, 2 * r, k, sign) for x0 in (-1.0, 0.0, 1.5) for r in (0.5, 1.0)
               for k in (-0.5, 0.5) for sign in "+-"]
    scan = membership_scan(u, params, samples)
    print(f"{len(scan.reports)} instances, {scan.skipped} skipped, smallest H = {scan.H_min:.4f}")
    worst = max(scan.reports, key=lambda r: r.ratio)
    print(f"worst instance: x0={worst.x0[0]}, r={worst.r}, k={worst.k}, sign {worst.sign}, "
          f"terms {', '.join(f'{t:.3g}' for t in worst.rhs_terms)}")

    ball = LatticeDomain.ball(1, 1024, radius=4.0)
    ramp = build_grid_function(ball, lambda x: np.clip(2 * x[:, 0], 0.0, 1.0))
    rep = growth_simulation(ramp, DGParams(0.0, 1.0, 0.0, KernelParams(1, 0.75, 2.0)), 1 / 64, 0.5)
    print(f"delta = 1/64: M = {rep.M}, hypotheses met: {rep.hypotheses_ok} "
          f"(density of {{u >= 1}} in B_2 is {rep.density_at_one:.3f})")
    for row in rep.rows:
        print(f"  j={row.j}  band density {row.density_band:.4f}  seminorm ratio {row.seminorm_ratio:.3f}  "
              f"tail split {row.tail_split_lhs:.3g} <= {row.tail_split_rhs:.3g}")
    print(f"band cells {rep.band_cells_total} <= cells below 1: {rep.below_one_cells} <= ball cells {rep.ball_cells}")


if __name__ == "__main__":
    main()
