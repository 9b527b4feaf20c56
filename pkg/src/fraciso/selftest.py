"""Invariant suites run by ``fraciso selftest``.

Every suite draws its instances from a seeded generator and counts
violations of one exact or tolerance-based invariant.  The summary contains
no timings, so two runs with the same seed produce identical output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .certifier import certify_interaction_lower_bound, classify_cells, column_census
from .dg import DGParams, caccioppoli_sides, growth_simulation, level_index_M
from .grid import GridFunction, KernelParams, LatticeDomain, PixelSet, build_grid_function
from .psi import LOG_BRANCH_FLOOR, psi, psi_inverse
from .quadrature import QuadratureSpec, gagliardo_p, interaction, interaction_lower_quadrature, tail

__all__ = ["SuiteResult", "random_disjoint_pair", "random_halfspace_pair", "random_dg_instance", "run_selftest", "summary", "SUITES"]


@dataclass
class SuiteResult:
    name: str
    instances: int = 0
    violations: int = 0
    notes: list = field(default_factory=list)

    def record(self, ok: bool, note: str = None):
        self.instances += 1
        if not ok:
            self.violations += 1
            if note and len(self.notes) < 5:
                self.notes.append(note)


def random_disjoint_pair(domain: LatticeDomain, rng: np.random.Generator):
    """Two disjoint nonempty pixel sets of one of three random shapes."""
    style = rng.integers(3)
    cells = domain.active_count
    if style == 0:
        # independent labels with random proportions
        prob = rng.dirichlet(np.ones(3))
        labels = rng.choice(3, size=cells, p=prob)
    elif style == 1:
        return random_halfspace_pair(domain, rng, width=rng.uniform(0, 0.3))
    else:
        idx = np.argwhere(domain.active)
        coarse = int(rng.integers(2, 6))
        block = tuple(((idx * coarse) // domain.N).T)
        table = rng.integers(3, size=(coarse,) * domain.n)
        labels = table[block]
    A = PixelSet(domain, labels == 0)
    B = PixelSet(domain, labels == 1)
    if A.count == 0 or B.count == 0:
        return random_disjoint_pair(domain, rng)
    return A, B


def random_halfspace_pair(domain: LatticeDomain, rng: np.random.Generator, width: float = 0.0,
                          min_fraction: float = 0.0):
    """``A``/``B`` on either side of a random hyperplane, separated by a slab
    of the given width; both keep at least ``min_fraction`` of the cells."""
    c = domain.active_centers()
    for _ in range(1000):
        v = rng.standard_normal(domain.n)
        v /= np.linalg.norm(v)
        proj = c @ v
        t = rng.uniform(np.quantile(proj, 0.25), np.quantile(proj, 0.75))
        A = PixelSet(domain, proj < t - width / 2)
        B = PixelSet(domain, proj >= t + width / 2)
        lo = max(1, int(np.ceil(min_fraction * domain.active_count)))
        if A.count >= lo and B.count >= lo:
            return A, B
    raise RuntimeError("could not draw a balanced half-space pair")


def random_dg_instance(rng: np.random.Generator, n: int = None):
    """A random smooth function on a box lattice with one admissible
    Caccioppoli configuration ``(x0, r, R, k, sign)``."""
    n = int(rng.integers(1, 3)) if n is None else n
    N = 64 if n == 1 else 24
    dom = LatticeDomain.cube(n, N, center=0.0, half_side=2.0)
    coef = rng.standard_normal((3, n))
    shift = rng.uniform(-1, 1)

    def sampler(x):
        return shift + np.sin(x @ coef[0]) + 0.5 * np.cos(x @ coef[1] + 1.0) + 0.3 * (x @ coef[2])

    u = build_grid_function(dom, sampler)
    s = rng.uniform(0.3, 0.9)
    p = rng.uniform(1.2, 3.0)
    kp = KernelParams(n, s, p)
    x0 = rng.uniform(-0.5, 0.5, n)
    R = rng.uniform(0.6, 1.4)
    r = R * rng.uniform(0.3, 0.8)
    k = float(rng.uniform(np.min(u.values), np.max(u.values)))
    sign = "+" if rng.integers(2) else "-"
    params = DGParams(float(rng.uniform(0, 2)), 1.0, float(rng.uniform(0, 2)), kp)
    return u, params, (x0, r, R, k, sign)


def _suite_psi(rng, quick):
    res = SuiteResult("psi")
    t = np.linspace(0.0, 1.0, 200 if quick else 1000)
    res.record(bool(np.array_equal(psi(2.0, t), t)), "psi(2, .) is not the identity")
    for alpha in (1.0, 1.5, 2.0, 3.0):
        # on the log branch, preimages of y below the floor underflow float64
        lo = LOG_BRANCH_FLOOR if alpha == 1.0 else 0.0
        y = np.concatenate([[lo, 1.0], rng.uniform(lo, 1.0, 50 if quick else 500)])
        err = float(np.max(np.abs(psi(alpha, psi_inverse(alpha, y)) - y)))
        res.record(err < 1e-12, f"alpha={alpha}: round trip error {err:.3g}")
    tiny = rng.uniform(0.0, LOG_BRANCH_FLOOR, 20)
    res.record(bool(np.all(psi(1.0, psi_inverse(1.0, tiny)) == 0.0)), "sub-floor log-branch round trip is not 0")
    return res


def _suite_pixel_measure(rng, quick):
    res = SuiteResult("pixel_measure")
    for _ in range(10 if quick else 50):
        dom = LatticeDomain.ball(int(rng.integers(1, 4)), int(rng.integers(4, 20)))
        S = PixelSet(dom, rng.random(dom.active_count) < rng.random())
        ok = S.count + S.complement().count == dom.active_count
        res.record(ok, "complement counts do not add up")
    return res


def _suite_kernel_floor(rng, quick):
    res = SuiteResult("kernel_floor")
    N = 32 if quick else 64
    dom = LatticeDomain.ball(2, N)
    for _ in range(10 if quick else 100):
        A, B = random_disjoint_pair(dom, rng)
        for alpha in (1.0, 1.5, 2.0):
            floor = A.measure * B.measure / 2.0 ** (2 + alpha)
            val = interaction(A, B, alpha)
            res.record(val >= 0.98 * floor, f"alpha={alpha}: I={val:.6g} < floor {floor:.6g}")
    return res


def _suite_census(rng, quick):
    res = SuiteResult("census")
    for _ in range(50 if quick else 1000):
        n = int(rng.integers(1, 3))
        m = int(rng.choice([2, 4, 8]))
        dom = LatticeDomain.unit_cube(n, m * int(rng.choice([2, 4])))
        A, B = random_disjoint_pair(dom, rng)
        cls = classify_cells(A, B, 1.0 / m)
        ok = cls.bounds_hold()
        for axis in range(n):
            ok = ok and column_census(cls, axis).identity_holds()
        res.record(bool(ok), f"n={n}, m={m}: census identity or measure bound fails")
    return res


def _suite_certificate(rng, quick):
    res = SuiteResult("certificate_soundness")
    for _ in range(6 if quick else 100):
        n = int(rng.integers(1, 3))
        N = int(rng.choice([64, 128])) if n == 1 or not quick else 64
        alpha = float(rng.choice([1.0, 1.5, 2.0]))
        dom = LatticeDomain.unit_cube(n, N)
        A, B = random_halfspace_pair(dom, rng, width=1.5 / N, min_fraction=0.2)
        if A.count + B.count == dom.active_count:
            continue
        cert = certify_interaction_lower_bound(A, B, alpha)
        lower = interaction_lower_quadrature(A, B, alpha)
        res.record(cert.total <= lower, f"n={n}, N={N}, alpha={alpha}: total {cert.total:.6g} > {lower:.6g}")
    return res


def _suite_thread_determinism(rng, quick):
    res = SuiteResult("thread_determinism")
    dom = LatticeDomain.ball(2, 24 if quick else 48)
    u = GridFunction(dom, rng.standard_normal(dom.active_count))
    kp = KernelParams(2, 0.6, 2.0)
    ref = gagliardo_p(u, kp, QuadratureSpec(threads=1))
    for threads in (2, 3, 5):
        val = gagliardo_p(u, kp, QuadratureSpec(threads=threads))
        res.record(val == ref, f"threads={threads}: {val!r} != {ref!r}")
    return res


def _suite_tail(rng, quick):
    res = SuiteResult("tail_homogeneity")
    dom = LatticeDomain.cube(1, 256, center=0.0, half_side=4.0)
    kp = KernelParams(1, 0.5, 2.0)
    for _ in range(5 if quick else 20):
        u = GridFunction(dom, rng.standard_normal(dom.active_count))
        R = float(rng.uniform(0.5, 3.0))
        t1 = tail(u, kp, 0.0, R).value
        t2 = tail(u.with_values(2.0 * u.values), kp, 0.0, R).value
        res.record(abs(t2 - 2.0 * t1) <= 1e-12 * t1, f"R={R}: {t2} != 2 * {t1}")
    return res


def _suite_dg_homogeneity(rng, quick):
    res = SuiteResult("dg_homogeneity")
    for _ in range(5 if quick else 50):
        u, params, (x0, r, R, k, sign) = random_dg_instance(rng)
        base = caccioppoli_sides(u, params, x0, r, R, k, sign).ratio
        for lam in (0.1, 3.0, 100.0):
            scaled = DGParams(lam * params.d, params.H, params.lam, params.kernel)
            rep = caccioppoli_sides(u.with_values(lam * u.values), scaled, x0, r, R, lam * k, sign)
            dev = abs(rep.ratio - base) / base if base else abs(rep.ratio)
            res.record(dev < 1e-9, f"lambda={lam}: relative deviation {dev:.3g}")
    return res


def _suite_growth(rng, quick):
    res = SuiteResult("growth_exactness")
    dom = LatticeDomain.ball(1, 256 if quick else 1024, radius=4.0)
    kp = KernelParams(1, 0.75, 2.0)
    params = DGParams(0.0, 1.0, 0.0, kp)
    for delta in (1 / 16, 1 / 32, 1 / 64):
        M = level_index_M(delta)
        res.record(2.0 ** -(M + 3) <= delta < 2.0 ** -(M + 2), f"delta={delta}: M={M}")
        for _ in range(2 if quick else 5):
            slope = float(rng.uniform(0.5, 4.0))
            u = build_grid_function(dom, lambda x, a=slope: np.clip(a * x[:, 0], 0.0, 1.0))
            rep = growth_simulation(u, params, delta, 0.5)
            res.record(rep.band_sum_ok and rep.M == M, f"delta={delta}, slope={slope}: band sums not ordered")
    return res


SUITES = {
    "psi": _suite_psi,
    "pixel_measure": _suite_pixel_measure,
    "kernel_floor": _suite_kernel_floor,
    "census": _suite_census,
    "certificate_soundness": _suite_certificate,
    "thread_determinism": _suite_thread_determinism,
    "tail_homogeneity": _suite_tail,
    "dg_homogeneity": _suite_dg_homogeneity,
    "growth_exactness": _suite_growth,
}


def run_selftest(seed: int = 0, quick: bool = False, suites=None):
    """Run the named suites (all by default); each gets its own child seed."""
    names = list(SUITES) if suites is None else list(suites)
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    seeds = dict(zip(SUITES, children))
    out = []
    for name in names:
        rng = np.random.default_rng(seeds[name])
        out.append(SUITES[name](rng, quick))
    return out


def summary(results, seed: int, quick: bool) -> dict:
    return {
        "seed": seed,
        "quick": quick,
        "suites": [asdict(r) for r in results],
        "total_instances": sum(r.instances for r in results),
        "total_violations": sum(r.violations for r in results),
        "passed": all(r.violations == 0 for r in results),
    }
