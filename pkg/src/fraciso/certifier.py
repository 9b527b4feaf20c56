"""Certified lower bounds for the interaction energy of two subsets of Q1.

The procedure follows the cube-decomposition argument for
``I(A, B) >= c_sharp * sigma**q / Psi_alpha(|E|)``:

* :func:`constants_ledger` fixes one explicit, valid value for every
  constant the argument needs;
* :func:`classify_cells` and :func:`column_census` reproduce the
  combinatorics of the per-scale estimate on a pixel lattice;
* :func:`main_estimate_check` compares the per-scale bound with the
  measured annulus interaction;
* :func:`certify_interaction_lower_bound` aggregates the per-scale bounds
  over the dyadic-type scales ``r_k = gamma**(2k)``.

Pixel counts are kept as integers wherever a comparison has to be exact.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PreconditionError
from .grid import LatticeDomain, PixelSet
from .psi import is_log_branch, psi
from .quadrature import interaction_annulus
from .reduction import tree_sum

__all__ = [
    "ConstantsLedger",
    "CellClassification",
    "ColumnCensus",
    "ScaleBound",
    "MainEstimateRecord",
    "LowerBoundCertificate",
    "unit_ball_volume",
    "constants_ledger",
    "classify_cells",
    "column_census",
    "choose_projection_axis",
    "aligned_inverse_scale",
    "largest_scale_index",
    "main_estimate_check",
    "certify_interaction_lower_bound",
    "certificate_from_measures",
]

LABEL_A, LABEL_B, LABEL_E = 0, 1, 2
LABEL_NAMES = {LABEL_A: "K_A", LABEL_B: "K_B", LABEL_E: "K_E"}


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _ceil(x: float) -> int:
    # guard against 2.0000000000000004-type rounding
    return math.ceil(x - 1e-12)


@dataclass(frozen=True)
class ConstantsLedger:
    n: int
    alpha: float
    c1: float
    c2: float
    c3: float
    c3_columns: float
    gamma_caps: dict = field(hash=False)
    c_star: float
    c_sharp: float
    q: int
    c_circ: float
    log_branch: bool

    @property
    def sigma_exponent(self) -> float:
        return (2 * self.n - 1) / self.n

    def to_dict(self):
        return asdict(self)


def constants_ledger(n: int, alpha: float) -> ConstantsLedger:
    """One explicit admissible choice of every constant of the argument.

    * ``c1 = 1 / (6 n^((n+alpha)/2))``: the near-field case, using
      ``1/3 - |B1| gamma^n >= 1/6``.
    * ``c3 = 1 / (9 (3 + sqrt n)^(n+alpha))``: one pair of neighbouring
      ``K_A``/``K_B`` cubes.
    * ``c2 = 1 / (4 n 2^((2n-1)/n))``: lower bound on the number of mixed
      columns, from ``1 - (1-t)^(1/n) >= t/n``.
    * in dimension ``n >= 2`` the column case yields ``c2 * c3``, in
      dimension one it yields ``c3``; ``c_star`` is the minimum of the case
      constants and of every cap imposed on ``gamma``.
    * ``q = 3 ceil((2n-1)/n) max(1, ceil(3 alpha - 2))``.
    * ``c_sharp`` is the smallest of ``(c_star/2)^3`` and the constant of the
      final summation step, so that ``|E| <= c_sharp sigma^q`` triggers the
      summation and the summed bound dominates the closed form.
    """
    if int(n) != n or n < 1:
        raise PreconditionError(f"dimension must be a positive integer, got {n}")
    if alpha < 1.0 and not is_log_branch(alpha):
        raise PreconditionError(f"the interaction estimate needs alpha >= 1, got {alpha}")
    n = int(n)
    log_branch = is_log_branch(alpha)
    if log_branch:
        alpha = 1.0
    a = (2 * n - 1) / n
    c1 = 1.0 / (6.0 * n ** ((n + alpha) / 2.0))
    c3 = 1.0 / (9.0 * (3.0 + math.sqrt(n)) ** (n + alpha))
    c2 = 1.0 / (4.0 * n * 2.0 ** a)
    c3_columns = c3 if n == 1 else c2 * c3
    caps = {
        "1/sqrt(n)": 1.0 / math.sqrt(n),
        "(6|B1|)^(-1/n)": (6.0 * unit_ball_volume(n)) ** (-1.0 / n),
        "1/4": 0.25,
        "1/(3+sqrt(n))": 1.0 / (3.0 + math.sqrt(n)),
        "1/3": 1.0 / 3.0,
        "c2": c2,
        "1/10": 0.1,
    }
    c_star = min(c1, c3_columns, *caps.values())
    q = 3 * _ceil(a) * max(1, _ceil(3.0 * alpha - 2.0))
    if log_branch:
        c_circ = c_star / (10.0 * math.log(2.0 / c_star))
    else:
        c_circ = c_star * (c_star / 2.0) ** (3.0 * (alpha - 1.0))
    c_sharp = min((c_star / 2.0) ** 3, c_circ)
    return ConstantsLedger(n, float(alpha), c1, c2, c3, c3_columns, caps, c_star, c_sharp, q, c_circ, log_branch)


def _require_unit_cube_pair(A: PixelSet, B: PixelSet):
    if A.domain != B.domain:
        raise PreconditionError("A and B live on different lattices")
    d = A.domain
    if d != LatticeDomain.unit_cube(d.n, d.N):
        raise PreconditionError("the cube decomposition works on the unit-cube lattice (0,1)^n")
    if not A.isdisjoint(B):
        raise PreconditionError("A and B must be disjoint")


@dataclass(frozen=True)
class CellClassification:
    """Labels of the ``m**n`` subcubes of side ``1/m``.

    Counts are pixel counts; ``pixel_volume`` converts them to measures.
    """

    n: int
    m: int
    block: int
    labels: np.ndarray = field(repr=False)
    count_A: np.ndarray = field(repr=False)
    count_B: np.ndarray = field(repr=False)
    count_E: np.ndarray = field(repr=False)
    pixel_volume: float

    @property
    def r(self) -> float:
        return 1.0 / self.m

    @property
    def cube_pixels(self) -> int:
        return self.block ** self.n

    def cubes(self, label) -> int:
        return int(np.count_nonzero(self.labels == label))

    def _pixels(self, label) -> int:
        return self.cubes(label) * self.cube_pixels

    @property
    def QE(self) -> float:
        return self._pixels(LABEL_E) * self.pixel_volume

    @property
    def QB(self) -> float:
        return self._pixels(LABEL_B) * self.pixel_volume

    @property
    def QA(self) -> float:
        return self._pixels(LABEL_A) * self.pixel_volume

    @property
    def QB_cap_A_pixels(self) -> int:
        return int(self.count_A[self.labels == LABEL_B].sum())

    @property
    def QA_cap_B_pixels(self) -> int:
        return int(self.count_B[self.labels == LABEL_A].sum())

    @property
    def QB_cap_A(self) -> float:
        return self.QB_cap_A_pixels * self.pixel_volume

    @property
    def QA_cap_B(self) -> float:
        return self.QA_cap_B_pixels * self.pixel_volume

    def bounds_hold(self) -> bool:
        """Exact integer check of ``|Q_E| <= 3|E|`` and ``|Q_A| <= 3|A|``."""
        total_E = int(self.count_E.sum())
        total_A = int(self.count_A.sum())
        return self._pixels(LABEL_E) <= 3 * total_E and self._pixels(LABEL_A) <= 3 * total_A


def _block_counts(mask: np.ndarray, m: int, block: int) -> np.ndarray:
    n = mask.ndim
    shape = []
    for _ in range(n):
        shape += [m, block]
    r = mask.reshape(shape).astype(np.int64)
    return r.sum(axis=tuple(range(1, 2 * n, 2)))


def _inverse_scale(r) -> int:
    if r <= 0:
        raise PreconditionError(f"scale must be positive, got {r}")
    m = round(1.0 / r)
    if m < 1 or abs(m * r - 1.0) > 1e-9:
        raise PreconditionError(f"scale r = {r} does not satisfy 1/r in N")
    return m


def classify_cells(A: PixelSet, B: PixelSet, r) -> CellClassification:
    """Label each subcube of side ``r`` as ``K_E``, ``K_B`` or ``K_A``.

    ``K_E``: at least a third of the cube lies in E; ``K_B``: otherwise, at
    least a third lies in B; ``K_A``: everything else.  ``1/r`` must divide
    the lattice resolution.
    """
    _require_unit_cube_pair(A, B)
    m = _inverse_scale(r)
    N = A.domain.N
    if N % m:
        raise PreconditionError(f"scale 1/{m} is not aligned with the lattice resolution N = {N}")
    block = N // m
    a, b = A.dense(), B.dense()
    e = ~(a | b)
    cA, cB, cE = (_block_counts(x, m, block) for x in (a, b, e))
    cube = block ** A.domain.n
    labels = np.full(cA.shape, LABEL_A, dtype=np.int8)
    is_E = 3 * cE >= cube
    is_B = ~is_E & (3 * cB >= cube)
    labels[is_E] = LABEL_E
    labels[is_B] = LABEL_B
    return CellClassification(A.domain.n, m, block, labels, cA, cB, cE, A.domain.cell_volume)


@dataclass(frozen=True)
class ColumnCensus:
    axis: int
    M_A: int
    m_A: int
    m_E: int
    m_B: int

    def identity_holds(self) -> bool:
        return self.m_B == self.M_A - self.m_A - self.m_E


def _columns(cls: CellClassification, axis: int) -> np.ndarray:
    if not 0 <= axis < cls.n:
        raise PreconditionError(f"axis {axis} out of range for dimension {cls.n}")
    return np.moveaxis(cls.labels, axis, -1).reshape(-1, cls.m)


def column_census(cls: CellClassification, axis: int) -> ColumnCensus:
    """Count columns of subcubes along ``axis`` by the labels they contain."""
    cols = _columns(cls, axis)
    has_A = np.any(cols == LABEL_A, axis=1)
    all_A = np.all(cols == LABEL_A, axis=1)
    has_E = np.any(cols == LABEL_E, axis=1)
    has_B = np.any(cols == LABEL_B, axis=1)
    M_A = int(has_A.sum())
    m_A = int(all_A.sum())
    m_E = int((has_A & has_E).sum())
    m_B = int((has_A & has_B & ~has_E).sum())
    return ColumnCensus(axis, M_A, m_A, m_E, m_B)


def choose_projection_axis(cls: CellClassification) -> int:
    """Lowest axis along which the projection of ``Q_A`` has measure at least
    ``|Q_A|^((n-1)/n)``.

    With ``P`` columns hit and ``c`` cubes in ``K_A`` the comparison is the
    integer inequality ``P^n >= c^(n-1)``.
    """
    c = cls.cubes(LABEL_A)
    if c == 0:
        raise PreconditionError("Q_A is empty; no projection axis to choose")
    n = cls.n
    for axis in range(n):
        P = int(np.any(_columns(cls, axis) == LABEL_A, axis=1).sum())
        if P ** n >= c ** (n - 1):
            return axis
    raise AssertionError("no axis satisfies the projection inequality; Loomis-Whitney violated")


def aligned_inverse_scale(m: int, N: int) -> int:
    """Largest divisor of ``N`` not exceeding ``m``: the finest lattice-aligned
    cube family at least as coarse as side ``1/m``."""
    for d in range(min(m, N), 0, -1):
        if N % d == 0:
            return d
    return 1


@dataclass(frozen=True)
class MainEstimateRecord:
    r: float
    gamma: float
    certified: float
    measured: float
    case: str
    census: ColumnCensus = None
    classification_m: int = 0
    aligned: bool = True

    @property
    def sound(self) -> bool:
        return self.measured >= self.certified


def main_estimate_check(A: PixelSet, B: PixelSet, alpha: float, sigma: float, gamma: float, r: float,
                        ledger: ConstantsLedger = None) -> MainEstimateRecord:
    """Per-scale estimate: annulus interaction versus
    ``c_star sigma^((2n-1)/n) r^(1-alpha)``.

    All hypotheses are checked first and reported together.  The case label
    (1, 2, 3.1 or 3.2) is a diagnostic computed from the cube
    classification at scale ``r`` (or the finest aligned coarsening).
    """
    _require_unit_cube_pair(A, B)
    n = A.domain.n
    led = ledger or constants_ledger(n, alpha)
    eps = A.domain.measure - A.measure - B.measure
    a = led.sigma_exponent
    failures = []
    if not 0.0 < sigma < 1.0:
        failures.append(f"sigma = {sigma} must lie in (0, 1)")
    if min(A.measure, B.measure) < sigma:
        failures.append(f"min(|A|, |B|) = {min(A.measure, B.measure)} < sigma = {sigma}")
    if not 0.0 < gamma < 1.0:
        failures.append(f"gamma = {gamma} must lie in (0, 1)")
    elif sigma > 0 and gamma > led.c_star * sigma ** a:
        failures.append(f"gamma = {gamma} exceeds c_star sigma^((2n-1)/n) = {led.c_star * sigma ** a}")
    if gamma > 0 and eps > gamma * sigma / 4.0:
        failures.append(f"|E| = {eps} exceeds gamma sigma / 4 = {gamma * sigma / 4.0}")
    try:
        m = _inverse_scale(r)
    except PreconditionError as exc:
        failures.append(str(exc))
        m = None
    if gamma > 0 and r < eps / gamma * (1 - 1e-12):
        failures.append(f"r = {r} is below |E|/gamma = {eps / gamma}")
    if r > sigma / 4.0 * (1 + 1e-12):
        failures.append(f"r = {r} exceeds sigma/4 = {sigma / 4.0}")
    if failures:
        raise PreconditionError("main estimate hypotheses violated: " + "; ".join(failures), failures)

    certified = led.c_star * sigma ** a * r ** (1.0 - alpha)
    measured = interaction_annulus(A, B, alpha, gamma, r)
    mc = aligned_inverse_scale(m, A.domain.N)
    cls = classify_cells(A, B, 1.0 / mc)
    census = None
    if cls.QB_cap_A >= r:
        case = "1"
    elif cls.QA_cap_B >= r:
        case = "2"
    elif n == 1:
        case = "3.1"
    else:
        case = "3.2"
        if cls.cubes(LABEL_A):
            census = column_census(cls, choose_projection_axis(cls))
    return MainEstimateRecord(r, gamma, certified, measured, case, census, mc, mc == m)


def largest_scale_index(inv_gamma: int, epsilon: float) -> int:
    """Largest integer ``k`` with ``gamma**(2k+1) >= epsilon`` for ``gamma = 1/inv_gamma``.

    Evaluated in exact rational arithmetic.
    """
    if inv_gamma < 2 or not epsilon > 0:
        raise PreconditionError("need inv_gamma >= 2 and epsilon > 0")
    eps = Fraction(epsilon)
    guess = math.floor((math.log(epsilon) / -math.log(inv_gamma) - 1.0) / 2.0)

    def ok(k):
        e = 2 * k + 1
        g = Fraction(1, inv_gamma ** e) if e >= 0 else Fraction(inv_gamma ** -e)
        return g >= eps

    k = guess
    while ok(k + 1):
        k += 1
    while not ok(k):
        k -= 1
    return k


@dataclass(frozen=True)
class ScaleBound:
    k: int
    inv_r: int
    r: float
    bound: float
    admissible: bool
    aligned: bool


@dataclass(frozen=True)
class LowerBoundCertificate:
    n: int
    alpha: float
    N: int
    measure_A: float
    measure_B: float
    sigma: float
    epsilon: float
    hypothesis_ok: bool
    reasons: tuple
    branch: str
    inv_gamma: int
    gamma: float
    k0: int
    per_scale: tuple
    total: float
    formula_bound: float
    ending_bound: float
    constants: ConstantsLedger

    def to_dict(self):
        d = asdict(self)
        d["per_scale"] = [asdict(s) for s in self.per_scale]
        d["reasons"] = list(self.reasons)
        return d


def certify_interaction_lower_bound(A: PixelSet, B: PixelSet, alpha: float) -> LowerBoundCertificate:
    """Certified lower bound on ``I(A, B)`` for disjoint pixel sets of Q1.

    If ``|E| <= c_sharp sigma^q`` the bound is the sum of the per-scale
    estimates over ``r_k = gamma^(2k)``, ``k = 1..k0``.  Otherwise the
    certificate falls back to ``|A||B| / n^((n+alpha)/2)`` (the kernel floor
    on Q1) and is flagged ``trivial_branch``.
    """
    _require_unit_cube_pair(A, B)
    if A.count == 0 or B.count == 0:
        raise PreconditionError("A and B must both be nonempty")
    dom = A.domain
    n, N = dom.n, dom.N
    e_pixels = dom.active_count - A.count - B.count
    if e_pixels == 0:
        raise PreconditionError(
            "|E| = 0: A and B fill the cube with no interface pixel; a finite interaction "
            "between two nonempty sets forces |E| > 0, so no lower bound of this form exists")
    return certificate_from_measures(n, alpha, A.measure, B.measure, e_pixels * dom.cell_volume, N)


def certificate_from_measures(n: int, alpha: float, measure_A: float, measure_B: float, epsilon: float,
                              N: int = None) -> LowerBoundCertificate:
    """The certificate arithmetic given only ``|A|``, ``|B|`` and ``|E|``.

    Lets the small-interface branch be evaluated for interface measures
    far below one lattice pixel.  ``N`` (optional) is used only for the
    alignment flags of the scales.
    """
    if not (measure_A > 0 and measure_B > 0 and epsilon > 0):
        raise PreconditionError("|A|, |B| and |E| must all be positive")
    if measure_A + measure_B + epsilon > 1.0 + 1e-12:
        raise PreconditionError("|A| + |B| + |E| exceeds the measure of the unit cube")
    led = constants_ledger(n, alpha)
    alpha = led.alpha
    a = led.sigma_exponent
    mA, mB = float(measure_A), float(measure_B)
    sigma = min(mA, mB)
    eps = float(epsilon)
    threshold = led.c_sharp * sigma ** led.q
    reasons = [f"min(|A|, |B|) = sigma = {sigma:.6g} > 0"]
    hyp = eps <= threshold
    if hyp:
        reasons.append(f"|E| = {eps:.6g} <= c_sharp sigma^q = {threshold:.6g}")
    else:
        reasons.append(f"|E| = {eps:.6g} > c_sharp sigma^q = {threshold:.6g}: smallness hypothesis fails")

    base = led.c_star * sigma ** a
    inv_gamma = math.ceil(1.0 / base)
    gamma = 1.0 / inv_gamma
    k0 = largest_scale_index(inv_gamma, eps)
    per_scale = []
    for k in range(1, max(k0, 0) + 1):
        inv_r = inv_gamma ** (2 * k)
        r = 1.0 / inv_r
        admissible = Fraction(eps) / Fraction(1, inv_gamma) <= Fraction(1, inv_r) <= Fraction(sigma) / 4
        aligned = N is not None and N % inv_r == 0
        per_scale.append(ScaleBound(k, inv_r, r, base * r ** (1.0 - alpha), bool(admissible), aligned))

    psi_eps = psi(led.alpha if not led.log_branch else 1.0, eps) if eps <= 1.0 else 1.0
    if hyp:
        total = tree_sum([s.bound for s in per_scale])
        formula = led.c_sharp * sigma ** led.q / psi_eps
        if led.log_branch:
            ending = led.c_circ * sigma ** a * abs(math.log(eps / math.e)) / (1.0 + abs(math.log(sigma)))
        else:
            ending = led.c_circ * sigma ** ((2 * n - 1) * (3 * alpha - 2) / n) / eps ** (alpha - 1.0)
        branch = "lemma"
    else:
        floor = n ** ((n + alpha) / 2.0)
        total = mA * mB / floor
        if led.log_branch:
            ratio = abs(math.log(eps / math.e)) / abs(math.log(threshold / math.e))
        else:
            ratio = (threshold / eps) ** (alpha - 1.0)
        formula = sigma ** 2 / floor * ratio
        ending = float("nan")
        branch = "trivial_branch"
    return LowerBoundCertificate(n, alpha, N, mA, mB, sigma, eps, hyp, tuple(reasons), branch,
                                 inv_gamma, gamma, k0, tuple(per_scale), total, formula, ending, led)
