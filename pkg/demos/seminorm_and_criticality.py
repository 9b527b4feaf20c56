"""Gagliardo seminorm of a jump, below and above the critical line sp = 1.

For the indicator of (0, 1) on (-1, 1) the seminorm [u]^p is finite when
sp < 1 and has a closed form.  The script compares the lattice value with
that formula, then shows how the value keeps growing under refinement once
sp >= 1 (logarithmically at sp = 1, like a power above it).
"""

from __future__ import annotations

from fraciso import KernelParams, LatticeDomain, QuadratureSpec, build_grid_function, gagliardo_p
from fraciso.quadrature import halfstep_seminorm_closed_form


def jump(N):
    dom = LatticeDomain.ball(1, N)
    return build_grid_function(dom, lambda x: ((x[:, 0] > 0) & (x[:, 0] < 1)).astype(float))


def main():
    kp = KernelParams(1, 0.25, 2.0)
    exact = halfstep_seminorm_closed_form(kp)
    print(f"sp = 0.5, closed form {exact:.6f}")
    for N in (256, 512, 1024, 2048):
        mid = gagliardo_p(jump(N), kp)
        ref = gagliardo_p(jump(N), kp, QuadratureSpec.refined(4))
        print(f"  N={N:5d}  midpoint {mid:.6f}  refined(m=4) {ref:.6f}  rel. error {ref / exact - 1:+.3%}")

    for s in (0.5, 0.75):
        kp = KernelParams(1, s, 2.0)
        vals = [gagliardo_p(jump(N), kp) for N in (256, 512, 1024, 2048, 4096)]
        growth = ", ".join(f"{b / a - 1:+.1%}" for a, b in zip(vals, vals[1:]))
        print(f"sp = {2 * s}: growth per doubling {growth}")


if __name__ == "__main__":
    main()
