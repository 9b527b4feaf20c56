"""Weak fractional De Giorgi classes on lattices.

:func:`caccioppoli_sides` evaluates both sides of the truncated energy
inequality for one ``(x0, r, R, k, sign)``; :func:`membership_scan` takes the
worst ratio over a sample; :func:`growth_simulation` replays the level-set
chain that turns a half-density hypothesis at level 1 into smallness of
``{u < 2 delta}`` inside ``B_2``.

The lattice box acts as the ambient open set.  ``u`` vanishes outside the
box, so a truncation ``(u - k)_±`` equals the constant ``(-k)_±`` there; its
tail contribution from the exterior is included through
:func:`~fraciso.quadrature.exterior_kernel_integral`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import PreconditionError
from .grid import GridFunction, KernelParams, LatticeDomain, Regime
from .iso_probe import default_beta
from .psi import psi, psi_inverse
from .quadrature import QuadratureSpec, exterior_kernel_integral, gagliardo_p_masked, tail_dense
from .reduction import tree_sum

__all__ = [
    "DGParams",
    "CaccioppoliReport",
    "ScanResult",
    "GrowthRow",
    "GrowthReport",
    "truncate",
    "caccioppoli_sides",
    "membership_scan",
    "level_index_M",
    "growth_simulation",
]


@dataclass(frozen=True)
class DGParams:
    d: float
    H: float
    lam: float
    kernel: KernelParams

    def __post_init__(self):
        for name in ("d", "H", "lam"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise PreconditionError(f"{name} must be a finite nonnegative number, got {v}")


def truncate(values: np.ndarray, k: float, sign: str) -> np.ndarray:
    if sign == "+":
        return np.maximum(values - k, 0.0)
    if sign == "-":
        return np.maximum(k - values, 0.0)
    raise PreconditionError(f"sign must be '+' or '-', got {sign!r}")


def _ball_mask(domain: LatticeDomain, x0, radius) -> np.ndarray:
    c = domain.centers() - np.asarray(x0, float)
    return np.sum(c * c, axis=-1) < radius * radius


def _box_distance(domain: LatticeDomain, x0) -> float:
    lo = domain.lower
    hi = lo + 2 * domain.radius
    return float(min(np.min(x0 - lo), np.min(hi - x0)))


@dataclass(frozen=True)
class CaccioppoliReport:
    x0: tuple
    r: float
    R: float
    k: float
    sign: str
    lhs: float
    level_term: float
    bulk_term: float
    tail_term: float
    ratio: float
    vacuous: bool
    certified: bool
    strong_term: float = None

    @property
    def rhs_terms(self) -> tuple:
        return (self.level_term, self.bulk_term, self.tail_term)

    @property
    def rhs(self) -> float:
        return self.level_term + self.bulk_term + self.tail_term

    def to_dict(self):
        return asdict(self)


def _strong_term(w_pm, w_mp, mask_r, domain, params):
    """Midpoint value of the mixed double integral dropped by the weak class
    (diagnostic only; lattice part, zero-offset pairs skipped)."""
    n, N, h = domain.n, domain.N, domain.h
    f = np.where(mask_r, w_pm, 0.0)
    g = w_mp ** (params.p - 1.0)
    if not np.any(f) or not np.any(g):
        return 0.0
    rng = np.arange(-(N - 1), N)
    grids = np.meshgrid(*([rng] * n), indexing="ij")
    dist = np.sqrt(sum(gr.astype(float) ** 2 for gr in grids)) * h
    with np.errstate(divide="ignore"):
        ker = np.where(dist > 0, h ** n / dist ** (n + params.alpha), 0.0)
    conv = fftconvolve(g, ker, mode="full")
    inner = conv[tuple(slice(N - 1, 2 * N - 1) for _ in range(n))]
    return float(tree_sum((f * inner).reshape(-1)) * h ** n)


def caccioppoli_sides(u: GridFunction, params: DGParams, x0, r: float, R: float, k: float, sign: str,
                      spec: QuadratureSpec = QuadratureSpec(), strong_term: bool = False) -> CaccioppoliReport:
    """Left side ``[(u-k)_±]^p`` on ``B_r(x0)`` and the three right-side terms.

    ``ratio = lhs / (sum of terms)``; it is 0 whenever ``lhs`` vanishes
    (``vacuous`` marks the 0/0 case) and ``inf`` if only the right side does.
    """
    dom = u.domain
    kp = params.kernel
    if kp.n != dom.n:
        raise PreconditionError("kernel dimension does not match the lattice")
    x0 = np.broadcast_to(np.asarray(x0, float), (dom.n,)).copy()
    failures = []
    if not 0 < r < R:
        failures.append(f"radii must satisfy 0 < r < R, got r={r}, R={R}")
    dist = _box_distance(dom, x0)
    if not R < dist:
        failures.append(f"R = {R} must be below dist(x0, boundary) = {dist}")
    if failures:
        raise PreconditionError("; ".join(failures), failures)
    n, p, s = dom.n, kp.p, kp.s
    vals = u.dense()
    w = truncate(vals, k, sign)
    mask_r = _ball_mask(dom, x0, r)
    mask_R = _ball_mask(dom, x0, R)
    hv = dom.cell_volume

    lhs = gagliardo_p_masked(w, mask_r, dom.h, kp, spec)
    if sign == "-":
        level_cells = np.count_nonzero(mask_R & (vals < k))
    else:
        level_cells = np.count_nonzero(mask_R & (vals > k))
    level = R ** params.lam * params.d ** p * level_cells * hv
    wR = w[mask_R]
    bulk = R ** ((1 - s) * p) / (R - r) ** p * tree_sum(wR ** p) * hv
    l1 = tree_sum(wR) * hv
    outside = truncate(np.zeros(1), k, sign)[0]
    tail_int = tail_dense(w, dom, kp, x0, r)
    if outside > 0:
        tail_int += outside ** (p - 1) * exterior_kernel_integral(dom, kp, x0)
    tail_t = R ** (n + kp.alpha) / (R - r) ** (n + kp.alpha) * l1 * tail_int
    rhs = level + bulk + tail_t
    vacuous = lhs == 0.0 and rhs == 0.0
    if lhs == 0.0:
        ratio = 0.0
    elif rhs == 0.0:
        ratio = math.inf
    else:
        ratio = lhs / rhs
    strong = None
    if strong_term:
        other = "-" if sign == "+" else "+"
        strong = _strong_term(w, truncate(vals, k, other), mask_r, dom, kp)
    return CaccioppoliReport(tuple(float(c) for c in x0), float(r), float(R), float(k), sign, float(lhs),
                             float(level), float(bulk), float(tail_t), float(ratio), bool(vacuous),
                             bool(ratio <= params.H), strong)


@dataclass(frozen=True)
class ScanResult:
    H_min: float
    reports: tuple = field(repr=False)
    skipped: int = 0

    @property
    def vacuous(self) -> int:
        return sum(r.vacuous for r in self.reports)


def membership_scan(u: GridFunction, params: DGParams, samples, spec: QuadratureSpec = QuadratureSpec()) -> ScanResult:
    """Largest ratio over ``samples`` of ``(x0, r, R, k, sign)``.

    Inadmissible samples are skipped and counted.  The result is the
    smallest ``H`` for which every sampled inequality holds.
    """
    reports, skipped = [], 0
    for x0, r, R, k, sign in samples:
        try:
            reports.append(caccioppoli_sides(u, params, x0, r, R, k, sign, spec))
        except PreconditionError:
            skipped += 1
    if not reports:
        raise PreconditionError("no admissible sample in the scan")
    return ScanResult(max(rep.ratio for rep in reports), tuple(reports), skipped)


def level_index_M(delta: float) -> int:
    """The integer ``M`` with ``2^-(M+3) <= delta < 2^-(M+2)`` (exact powers of two)."""
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    M = -2
    while not (2.0 ** -(M + 3) <= delta < 2.0 ** -(M + 2)):
        M += 1
    return M


@dataclass(frozen=True)
class GrowthRow:
    j: int
    level: float
    density_upper: float
    density_lower: float
    density_band: float
    band_cells: int
    seminorm_p: float
    seminorm_ratio: float
    iso_lhs: float
    iso_rhs: float
    chain_lhs: float
    chain_rhs: float
    chain_slack: float
    tail_split_lhs: float
    tail_split_rhs: float

    @property
    def tail_split_holds(self) -> bool:
        return self.tail_split_lhs <= self.tail_split_rhs


@dataclass(frozen=True)
class GrowthReport:
    delta: float
    tau: float
    M: int
    u_nonnegative: bool
    density_at_one: float
    density_hypothesis: bool
    tail_negative_part: float
    smallness_hypothesis: bool
    rows: tuple
    C1_empirical: float
    C1: float
    C2: float
    C3: float
    C4: float
    iso_constant: float
    iso_exponent: float
    band_cells_total: int
    below_one_cells: int
    ball_cells: int
    final_density: float
    final_bound: float
    conclusion_holds: bool
    summation_lhs: float
    summation_rhs: float

    @property
    def band_sum_ok(self) -> bool:
        return self.band_cells_total <= self.below_one_cells <= self.ball_cells

    @property
    def hypotheses_ok(self) -> bool:
        return self.u_nonnegative and self.density_hypothesis and self.smallness_hypothesis

    def to_dict(self):
        d = asdict(self)
        d["rows"] = [asdict(r) for r in self.rows]
        return d


def growth_simulation(u: GridFunction, params: DGParams, delta: float, tau: float,
                      iso_constant: float = 1.0, iso_exponent: float = None, C1: float = None,
                      spec: QuadratureSpec = QuadratureSpec()) -> GrowthReport:
    """Run the dyadic level chain ``k_j = 2^-j``, ``j = 1..M``, on ``B_2``.

    Hypotheses (nonnegativity on ``B_4``, density at least 1/2 of
    ``{u >= 1}`` in ``B_2``, smallness of ``d + Tail(u_-; B_4)``) are
    reported, not enforced.  ``iso_constant`` and ``iso_exponent`` are the
    constant and exponent of the isoperimetric inequality on ``B_2``; the
    exponent defaults to ``p * beta`` with the probe's default ``beta``.
    ``C1`` defaults to the largest observed ``[(u-k_{j-1})_-]^p / k_{j-1}^p``
    (at least 1).
    """
    kp = params.kernel
    dom = u.domain
    if not 0 < delta < 0.125:
        raise PreconditionError(f"delta must lie in (0, 1/8) so that M >= 1, got {delta}")
    if kp.regime is Regime.SUBCRITICAL:
        raise PreconditionError(f"the growth chain needs sp >= 1, got sp = {kp.alpha}")
    if kp.n != dom.n:
        raise PreconditionError("kernel dimension does not match the lattice")
    if _box_distance(dom, np.zeros(dom.n)) < 4.0:
        raise PreconditionError("the lattice box must contain B_4")
    p = kp.p
    gamma = kp.p * default_beta(kp) if iso_exponent is None else float(iso_exponent)
    vals = u.dense()
    b2 = _ball_mask(dom, np.zeros(dom.n), 2.0)
    b4 = _ball_mask(dom, np.zeros(dom.n), 4.0)
    ball_cells = int(b2.sum())
    hv = dom.cell_volume
    measure_b2 = ball_cells * hv

    nonneg = bool(np.all(vals[b4] >= 0))
    density_one = np.count_nonzero(b2 & (vals >= 1.0)) / ball_cells
    u_minus = np.maximum(-vals, 0.0)
    t_int = tail_dense(u_minus, dom, kp, np.zeros(dom.n), 4.0)
    tail_minus = t_int ** (1.0 / (p - 1.0)) if t_int > 0 else 0.0
    M = level_index_M(delta)
    ext_b2 = exterior_kernel_integral(dom, kp, np.zeros(dom.n))
    far = ~b2
    c = dom.centers()
    dist = np.sqrt(np.sum(c * c, axis=-1))

    raw = []
    for j in range(1, M + 1):
        k_prev = 2.0 ** -(j - 1)
        w = truncate(vals, k_prev, "-")
        sem = gagliardo_p_masked(w, b2, dom.h, kp, spec)
        up = np.count_nonzero(b2 & (vals >= 2.0 ** -j)) / ball_cells
        low = np.count_nonzero(b2 & (vals <= 2.0 ** -(j + 1))) / ball_cells
        band_cells = int(np.count_nonzero(b2 & (vals > 2.0 ** -(j + 1)) & (vals < 2.0 ** -j)))
        # tail split: (k-u)^(p-1) <= 2^(p-1) (k^(p-1) + |u|^(p-1)) on {u < k} outside B_2
        with np.errstate(divide="ignore"):
            kern = hv / dist ** (dom.n + kp.alpha)
        sel = far & (vals < k_prev)
        t_lhs = tree_sum(((k_prev - vals[sel]) ** (p - 1)) * kern[sel]) + k_prev ** (p - 1) * ext_b2
        t_rhs = 2.0 ** (p - 1) * (k_prev ** (p - 1) * (tree_sum(kern[far]) + ext_b2)
                                  + tree_sum(np.abs(vals[sel]) ** (p - 1) * kern[sel]))
        raw.append((j, k_prev, up, low, band_cells, sem, sem / k_prev ** p, t_lhs, t_rhs))

    C1_emp = max(r[6] for r in raw)
    C1_used = max(1.0, C1_emp) if C1 is None else float(C1)
    C2 = 4.0 ** p * iso_constant
    C3 = C1_used * C2
    C4 = (2.0 * measure_b2) ** gamma * C3
    rows = []
    for j, k_prev, up, low, band_cells, sem, ratio, t_lhs, t_rhs in raw:
        band = band_cells / ball_cells
        psi_band = psi(kp, band)
        iso_lhs = (up * low) ** gamma
        iso_rhs = C2 * ratio * psi_band
        chain_lhs = iso_lhs / C3
        slack = math.inf if chain_lhs == 0 else psi_band / chain_lhs
        rows.append(GrowthRow(j, 2.0 ** -j, up, low, band, band_cells, sem, ratio, iso_lhs, iso_rhs,
                              chain_lhs, psi_band, slack, t_lhs, t_rhs))

    band_total = sum(r.band_cells for r in rows)
    below_one = int(np.count_nonzero(b2 & (vals < 1.0)))
    final_cells = int(np.count_nonzero(b2 & (vals < 2.0 * delta)))
    final_density = final_cells / ball_cells
    le_cells = int(np.count_nonzero(b2 & (vals <= 2.0 * delta)))
    bound_meas = (C4 * psi(kp, 1.0 / M)) ** (1.0 / gamma)
    final_bound = min(1.0, bound_meas / measure_b2)
    arg = min(1.0, (le_cells * hv) ** gamma / C4)
    summation_lhs = M * psi_inverse(kp, arg)
    summation_rhs = band_total / ball_cells
    return GrowthReport(delta, tau, M, nonneg, density_one, density_one >= 0.5, tail_minus,
                        params.d + tail_minus <= delta, tuple(rows), C1_emp, C1_used, C2, C3, C4,
                        iso_constant, gamma, band_total, below_one, ball_cells, final_density,
                        final_bound, final_density <= tau, summation_lhs, summation_rhs)
