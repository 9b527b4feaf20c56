"""The interface modulus Psi_alpha on [0, 1] and its inverse.

Psi_alpha(t) = t**(alpha - 1) for alpha > 1 and 1/|log(t/e)| for
alpha = 1, extended by Psi_alpha(0) = 0.  Both branches are strictly
increasing bijections of [0, 1].
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PreconditionError
from .grid import KernelParams, Regime

__all__ = ["psi", "psi_inverse", "psi_for", "psi_inverse_for", "is_log_branch", "LOG_BRANCH_FLOOR"]

ALPHA_ONE_TOL = 1e-12
# below this t the log branch is returned as 0
LOG_UNDERFLOW = 1e-300
# smallest nonzero value of the log branch; psi_inverse(1, y) for 0 < y below it
# lies under LOG_UNDERFLOW, so round trips are exact only for y >= LOG_BRANCH_FLOOR
LOG_BRANCH_FLOOR = 1.0 / (1.0 - math.log(LOG_UNDERFLOW))


def is_log_branch(alpha) -> bool:
    if isinstance(alpha, KernelParams):
        return alpha.regime is Regime.CRITICAL
    return abs(alpha - 1.0) < ALPHA_ONE_TOL


def _alpha_value(alpha) -> float:
    a = alpha.alpha if isinstance(alpha, KernelParams) else float(alpha)
    if a < 1.0 and not is_log_branch(alpha):
        raise PreconditionError(f"Psi_alpha is defined for alpha >= 1 only, got alpha={a}")
    return a


def _check_unit(name, x):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise PreconditionError(f"{name} must lie in [0, 1]")
    return arr


def psi(alpha, t):
    """Evaluate Psi_alpha(t); ``alpha`` may be a number or a KernelParams.

    Scalars in, float out; arrays in, array out.
    """
    a = _alpha_value(alpha)
    arr = _check_unit("t", t)
    if is_log_branch(alpha):
        out = np.zeros_like(arr)
        pos = arr >= LOG_UNDERFLOW
        out[pos] = 1.0 / np.abs(np.log(arr[pos]) - 1.0)
    else:
        out = np.power(arr, a - 1.0)
        out = np.where(arr == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def psi_inverse(alpha, y):
    """Inverse of :func:`psi` on [0, 1]."""
    a = _alpha_value(alpha)
    arr = _check_unit("y", y)
    if is_log_branch(alpha):
        out = np.zeros_like(arr)
        pos = arr > 0.0
        with np.errstate(under="ignore"):
            out[pos] = math.e * np.exp(-1.0 / arr[pos])
    else:
        out = np.power(arr, 1.0 / (a - 1.0))
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


def psi_for(params: KernelParams, t):
    """Psi_{sp}(t) dispatched on the snapped regime of ``params``."""
    return psi(params, t)


def psi_inverse_for(params: KernelParams, y):
    return psi_inverse(params, y)
