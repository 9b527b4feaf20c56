"""Empirical probe of the level-set isoperimetric inequality on lattices.

For ``u`` on a ball lattice and levels ``h < k`` the probe evaluates

    lhs = (|{u <= h}| |{u >= k}|) ** beta
    rhs = [u]_{W^{s,p}} * Psi_{sp}(|{h < u < k}| / |B|) ** (1/p) / (k - h)

and reports ``implied_C = lhs / rhs``, the smallest constant for which the
inequality holds on that instance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .certifier import constants_ledger
from .errors import DegenerateFamilyError, PreconditionError
from .grid import GridFunction, KernelParams, LatticeDomain, Regime, build_grid_function, level_set, rescale_levels
from .psi import psi
from .quadrature import QuadratureSpec, gagliardo_p, interaction

__all__ = [
    "IsoperimetricReport",
    "TrivialBoundCheck",
    "FitResult",
    "default_beta",
    "iso_report",
    "trivial_bound_check",
    "fit_beta_C",
    "family_generator",
    "smoothed_step_sweep",
]

DEFAULT_DELTA_BAR = 0.1


def default_beta(params: KernelParams) -> float:
    """Exponent obtained by chaining the interaction estimate into the
    inequality: ``(q * sp + 2) / p`` with ``q`` from the constants ledger.

    It dominates the exponents of the small-interface branch (``q/p``) and of
    both large-interface branches, so one value serves every case.
    """
    led = constants_ledger(params.n, params.alpha)
    return (led.q * led.alpha + 2.0) / params.p


@dataclass(frozen=True)
class IsoperimetricReport:
    n: int
    s: float
    p: float
    h: float
    k: float
    measure_le: float
    measure_ge: float
    measure_between: float
    domain_measure: float
    interface_density: float
    seminorm_p: float
    psi_value: float
    beta: float
    lhs: float
    rhs: float
    implied_C: float
    trivial_branch: bool
    delta_bar: float

    @property
    def seminorm(self) -> float:
        return self.seminorm_p ** (1.0 / self.p)

    @property
    def measure_product(self) -> float:
        return self.measure_le * self.measure_ge

    def to_dict(self):
        return asdict(self)


def _check_iso_params(u: GridFunction, params: KernelParams):
    if u.domain.kind != "ball":
        raise PreconditionError("the isoperimetric probe works on ball lattices")
    if params.n != u.domain.n:
        raise PreconditionError("kernel dimension does not match the lattice")
    if params.regime is Regime.SUBCRITICAL:
        raise PreconditionError(
            f"sp = {params.alpha} < 1: the inequality requires sp >= 1 "
            "(characteristic functions have finite seminorm below it)")


def iso_report(u: GridFunction, h: float, k: float, params: KernelParams, beta: float = None,
               spec: QuadratureSpec = QuadratureSpec(), delta_bar: float = DEFAULT_DELTA_BAR,
               seminorm_p: float = None) -> IsoperimetricReport:
    """Both sides of the inequality for one function and one pair of levels.

    ``seminorm_p`` may be passed to reuse a previously computed ``[u]^p``.
    """
    if not h < k:
        raise PreconditionError(f"levels need h < k, got h={h}, k={k}")
    _check_iso_params(u, params)
    beta = default_beta(params) if beta is None else float(beta)
    A = level_set(u, "le", h)
    B = level_set(u, "ge", k)
    E = level_set(u, "between", h, k)
    dom = u.domain
    density = E.count / dom.active_count
    if seminorm_p is None:
        seminorm_p = gagliardo_p(u, params, spec)
    psi_val = psi(params, density)
    lhs = (A.measure * B.measure) ** beta
    rhs = seminorm_p ** (1.0 / params.p) * psi_val ** (1.0 / params.p) / (k - h)
    if lhs == 0.0:
        implied = 0.0
    elif rhs == 0.0:
        implied = math.inf
    else:
        implied = lhs / rhs
    return IsoperimetricReport(
        dom.n, params.s, params.p, float(h), float(k), A.measure, B.measure, E.measure, dom.measure,
        density, seminorm_p, psi_val, beta, lhs, rhs, implied, density > delta_bar, delta_bar)


@dataclass(frozen=True)
class TrivialBoundCheck:
    passed: bool
    slack: float
    seminorm_p: float
    interaction: float
    floor: float


def trivial_bound_check(u: GridFunction, h: float, k: float, params: KernelParams, tol: float = 0.02,
                        spec: QuadratureSpec = QuadratureSpec()) -> TrivialBoundCheck:
    """Check ``[v]^p >= I(A, B) >= |A||B| / 2^(n+sp)`` for ``v = (u-h)/(k-h)``.

    ``slack`` is ``[v]^p`` over the kernel-floor value; the check passes when
    both links hold up to the relative tolerance ``tol``.
    """
    _check_iso_params(u, params)
    v = rescale_levels(u, h, k)
    A = level_set(v, "le", 0.0)
    B = level_set(v, "ge", 1.0)
    floor = A.measure * B.measure / 2.0 ** (params.n + params.alpha)
    if floor == 0.0:
        return TrivialBoundCheck(True, math.inf, 0.0, 0.0, 0.0)
    sem = gagliardo_p(v, params, spec)
    inter = interaction(A, B, params.alpha)
    passed = inter >= floor * (1.0 - tol) and sem >= inter * (1.0 - tol)
    return TrivialBoundCheck(bool(passed), sem / floor, sem, inter, floor)


@dataclass(frozen=True)
class FitResult:
    beta_hat: float
    C_hat: float
    slope: float
    intercept: float
    residuals: np.ndarray


def fit_beta_C(reports, min_reports: int = 3) -> FitResult:
    """Regress ``log(|{u<=h}||{u>=k}|)`` on ``log([u] Psi^(1/p) / (k-h))``.

    ``beta_hat`` is the reciprocal of the slope (NaN if the slope is not
    positive); ``C_hat`` is the largest implied constant over the family at
    ``beta_hat``, or at each report's own ``beta`` when ``beta_hat`` is NaN.
    """
    usable = [r for r in reports if r.measure_product > 0 and 0 < r.rhs < math.inf]
    if len(usable) < min_reports:
        raise PreconditionError(f"need at least {min_reports} reports with nonzero measures, got {len(usable)}")
    x = np.array([math.log(r.rhs) for r in usable])
    y = np.array([math.log(r.measure_product) for r in usable])
    if np.ptp(x) == 0.0:
        raise DegenerateFamilyError("all reports share the same right-hand side; the slope is undetermined")
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (intercept + slope * x)
    if slope > 0:
        beta_hat = 1.0 / slope
        C_hat = max(r.measure_product ** beta_hat / r.rhs for r in usable)
    else:
        beta_hat = math.nan
        C_hat = max(r.implied_C for r in usable)
    return FitResult(beta_hat, C_hat, float(slope), float(intercept), residuals)


def family_generator(kind: str, domain: LatticeDomain, eps: float = None, seed: int = None,
                     degree: int = None) -> GridFunction:
    """Test functions bounded in [-2, 2].

    ``smoothed_step``: ``clamp(x1/eps, 0, 1)``;
    ``radial_ramp``: ``clamp((|x| - 1/2)/eps, 0, 1)``;
    ``trig_polynomial``: seeded random cosine sum of the given degree.
    """
    if kind == "smoothed_step":
        if not eps or eps <= 0:
            raise PreconditionError("smoothed_step needs eps > 0")
        return build_grid_function(domain, lambda x: np.clip(x[:, 0] / eps, 0.0, 1.0))
    if kind == "radial_ramp":
        if not eps or eps <= 0:
            raise PreconditionError("radial_ramp needs eps > 0")
        return build_grid_function(
            domain, lambda x: np.clip((np.linalg.norm(x, axis=1) - 0.5) / eps, 0.0, 1.0))
    if kind == "trig_polynomial":
        if seed is None or degree is None or degree < 1:
            raise PreconditionError("trig_polynomial needs a seed and degree >= 1")
        rng = np.random.default_rng(seed)
        n = domain.n
        freqs = np.stack(np.meshgrid(*([np.arange(degree + 1)] * n), indexing="ij"), -1).reshape(-1, n)
        coef = rng.standard_normal(freqs.shape[0])
        phase = rng.uniform(0.0, 2.0 * np.pi, freqs.shape[0])
        scale = 2.0 / np.sum(np.abs(coef))

        def sampler(x):
            return scale * np.cos(np.pi * x @ freqs.T + phase) @ coef

        return build_grid_function(domain, sampler)
    raise PreconditionError(f"unknown family {kind!r}")


def smoothed_step_sweep(eps_list, N: int, params: KernelParams, h: float = 0.0, k: float = 1.0,
                        beta: float = None, spec: QuadratureSpec = QuadratureSpec()):
    """Reports for ``clamp(x1/eps, 0, 1)`` on the unit-ball lattice, one per ``eps``."""
    dom = LatticeDomain.ball(params.n, N)
    return [iso_report(family_generator("smoothed_step", dom, eps=e), h, k, params, beta, spec)
            for e in eps_list]
