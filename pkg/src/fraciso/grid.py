"""Lattice discretization of cubes and balls.

Every domain is an axis-aligned box ``center ± radius`` split into ``N``
cells per axis.  For a cube all cells are active; for a ball exactly the
cells whose centers lie strictly inside the ball are active.  Grid
functions store one value per active cell (row-major order over the box),
pixel sets one boolean per active cell.  Measures are exact cell counts
times ``h**n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Regime",
    "KernelParams",
    "LatticeDomain",
    "GridFunction",
    "PixelSet",
    "TransferResult",
    "build_grid_function",
    "level_set",
    "rescale_levels",
    "cube_to_ball",
    "ball_to_cube",
    "transfer_pixel_set",
]

CRITICAL_TOL = 1e-12


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class KernelParams:
    """Dimension ``n``, fractional order ``s`` and integrability ``p``.

    ``alpha = s*p`` is the kernel exponent beyond ``n``.  Products within
    1e-12 of 1 are snapped to exactly 1 and classified as critical.
    """

    n: int
    s: float
    p: float
    alpha: float = field(init=False)
    regime: Regime = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"dimension n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.s < 1.0:
            raise PreconditionError(f"s must lie in (0, 1), got {self.s!r}")
        if not 1.0 < self.p < math.inf:
            raise PreconditionError(f"p must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "n", int(self.n))
        alpha = float(self.s) * float(self.p)
        if abs(alpha - 1.0) < CRITICAL_TOL:
            alpha, regime = 1.0, Regime.CRITICAL
        elif alpha < 1.0:
            regime = Regime.SUBCRITICAL
        else:
            regime = Regime.SUPERCRITICAL
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "regime", regime)

    @property
    def sp(self) -> float:
        return self.alpha


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LatticeDomain:
    """A cube or ball discretized on the box ``center ± radius``.

    For ``kind="cube"`` the box itself is the domain and ``radius`` is half
    the side length; :meth:`unit_cube` gives Q1 = (0,1)^n.
    """

    kind: str
    n: int
    N: int
    center: tuple
    radius: float

    def __post_init__(self):
        if self.kind not in ("cube", "ball"):
            raise PreconditionError(f"kind must be 'cube' or 'ball', got {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"dimension must be a positive integer, got {self.n!r}")
        if int(self.N) != self.N or self.N < 1:
            raise PreconditionError(f"resolution must be a positive integer, got {self.N!r}")
        center = tuple(float(c) for c in np.broadcast_to(np.asarray(self.center, float), (int(self.n),)))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise PreconditionError(f"radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def cube(cls, n, N, center=0.5, half_side=0.5):
        return cls("cube", n, N, center, half_side)

    @classmethod
    def unit_cube(cls, n, N):
        return cls("cube", n, N, 0.5, 0.5)

    @classmethod
    def ball(cls, n, N, center=0.0, radius=1.0):
        return cls("ball", n, N, center, radius)

    @property
    def h(self) -> float:
        return 2.0 * self.radius / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - self.radius

    @cached_property
    def axis_centers(self) -> np.ndarray:
        """Cell-center coordinates along one axis, relative to ``center``."""
        return _readonly(-self.radius + self.h * (np.arange(self.N) + 0.5))

    def centers(self) -> np.ndarray:
        """Absolute cell centers of the whole box, shape ``shape + (n,)``."""
        grids = np.meshgrid(*[self.axis_centers + c for c in self.center], indexing="ij")
        return np.stack(grids, axis=-1)

    @cached_property
    def active(self) -> np.ndarray:
        """Dense boolean mask of active cells."""
        if self.kind == "cube":
            mask = np.ones(self.shape, dtype=bool)
        else:
            r2 = np.zeros(self.shape)
            for ax in range(self.n):
                sl = [np.newaxis] * self.n
                sl[ax] = slice(None)
                r2 = r2 + (self.axis_centers ** 2)[tuple(sl)]
            mask = r2 < self.radius ** 2
        return _readonly(mask)

    @cached_property
    def active_count(self) -> int:
        return int(self.active.sum())

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def measure(self) -> float:
        return self.active_count * self.cell_volume

    def active_centers(self) -> np.ndarray:
        """Centers of active cells, shape ``(active_count, n)``, row-major."""
        return self.centers()[self.active]

    def same_lattice(self, other: "LatticeDomain") -> bool:
        return self == other


class GridFunction:
    """Real values at the centers of the active cells of a lattice."""

    def __init__(self, domain: LatticeDomain, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.size != domain.active_count:
            raise PreconditionError(
                f"expected {domain.active_count} values for the active cells, got {values.size}")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise PreconditionError(f"non-finite value at active cell {int(bad[0])}")
        self.domain = domain
        self.values = _readonly(values)

    @classmethod
    def from_dense(cls, domain: LatticeDomain, array) -> "GridFunction":
        array = np.asarray(array, dtype=float)
        if array.shape != domain.shape:
            raise PreconditionError(f"dense array has shape {array.shape}, lattice is {domain.shape}")
        return cls(domain, array[domain.active])

    def dense(self, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.domain.shape, fill, dtype=float)
        out[self.domain.active] = self.values
        return out

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)

    def __repr__(self):
        d = self.domain
        return f"GridFunction({d.kind}, n={d.n}, N={d.N}, cells={self.values.size})"


class PixelSet:
    """A subset of the active cells of a lattice."""

    def __init__(self, domain: LatticeDomain, mask):
        mask = np.asarray(mask).reshape(-1)
        if mask.size != domain.active_count:
            raise PreconditionError(
                f"expected {domain.active_count} mask entries for the active cells, got {mask.size}")
        self.domain = domain
        self.mask = _readonly(mask.astype(bool))

    @classmethod
    def from_dense(cls, domain: LatticeDomain, array) -> "PixelSet":
        array = np.asarray(array, dtype=bool)
        if array.shape != domain.shape:
            raise PreconditionError(f"dense mask has shape {array.shape}, lattice is {domain.shape}")
        return cls(domain, array[domain.active])

    @classmethod
    def empty(cls, domain):
        return cls(domain, np.zeros(domain.active_count, bool))

    @classmethod
    def full(cls, domain):
        return cls(domain, np.ones(domain.active_count, bool))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.domain.shape, dtype=bool)
        out[self.domain.active] = self.mask
        return out

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.count * self.domain.cell_volume

    def _check(self, other):
        if self.domain != other.domain:
            raise PreconditionError("pixel sets live on different lattices")

    def complement(self) -> "PixelSet":
        return PixelSet(self.domain, ~self.mask)

    def __or__(self, other):
        self._check(other)
        return PixelSet(self.domain, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return PixelSet(self.domain, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return PixelSet(self.domain, self.mask & ~other.mask)

    def isdisjoint(self, other) -> bool:
        self._check(other)
        return not np.any(self.mask & other.mask)

    def __eq__(self, other):
        if not isinstance(other, PixelSet):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.mask, other.mask)

    __hash__ = None

    def indicator(self) -> GridFunction:
        return GridFunction(self.domain, self.mask.astype(float))

    def __repr__(self):
        return f"PixelSet({self.domain.kind}, n={self.domain.n}, N={self.domain.N}, count={self.count})"


def build_grid_function(domain: LatticeDomain, sampler: Callable, vectorized: bool = True) -> GridFunction:
    """Sample ``sampler`` at the active cell centers.

    With ``vectorized=True`` the sampler receives an ``(m, n)`` array of
    centers and returns ``m`` values; otherwise it is called per point.
    """
    pts = domain.active_centers()
    if vectorized:
        vals = np.asarray(sampler(pts), dtype=float)
        vals = np.broadcast_to(vals, (pts.shape[0],)).copy() if vals.ndim == 0 else vals.reshape(-1)
    else:
        vals = np.array([float(sampler(x)) for x in pts])
    if vals.size != pts.shape[0]:
        raise PreconditionError(f"sampler returned {vals.size} values for {pts.shape[0]} cells")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(f"sampler returned {vals[i]} at active cell {i}, center {tuple(pts[i])}")
    return GridFunction(domain, vals)


def level_set(u: GridFunction, predicate: str, h: float, k: float = None) -> PixelSet:
    """Cells whose value satisfies ``predicate``.

    ``"le"``: u <= h;  ``"ge"``: u >= h;  ``"between"``: h < u < k.
    """
    v = u.values
    if predicate == "le":
        mask = v <= h
    elif predicate == "ge":
        mask = v >= h
    elif predicate == "between":
        if k is None or not h < k:
            raise PreconditionError(f"interface levels need h < k, got h={h}, k={k}")
        mask = (v > h) & (v < k)
    else:
        raise PreconditionError(f"unknown level-set predicate {predicate!r}")
    return PixelSet(u.domain, mask)


def rescale_levels(u: GridFunction, h: float, k: float) -> GridFunction:
    """Affine map sending level h to 0 and level k to 1."""
    if not h < k:
        raise PreconditionError(f"rescaling needs h < k, got h={h}, k={k}")
    if h == 0.0 and k == 1.0:
        return u
    return u.with_values((u.values - h) / (k - h))


def cube_to_ball(x) -> np.ndarray:
    """Bi-Lipschitz map of the closed unit cube onto the closed unit ball.

    ``y = 2x - 1`` followed by radial rescaling ``y * |y|_inf / |y|``;
    the origin maps to itself.  Works on the last axis of ``x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise PreconditionError("cube_to_ball input lies outside the closed unit cube")
    y = 2.0 * x - 1.0
    linf = np.max(np.abs(y), axis=-1, keepdims=True)
    l2 = np.linalg.norm(y, axis=-1, keepdims=True)
    scale = np.divide(linf, l2, out=np.zeros_like(l2), where=l2 > 0)
    return y * scale


def ball_to_cube(z) -> np.ndarray:
    """Inverse of :func:`cube_to_ball`."""
    z = np.asarray(z, dtype=float)
    l2 = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(l2 > 1.0 + 1e-12) or not np.all(np.isfinite(z)):
        raise PreconditionError("ball_to_cube input lies outside the closed unit ball")
    linf = np.max(np.abs(z), axis=-1, keepdims=True)
    scale = np.divide(l2, linf, out=np.zeros_like(l2), where=linf > 0)
    return np.clip((z * scale + 1.0) / 2.0, 0.0, 1.0)


@dataclass(frozen=True)
class TransferResult:
    pixels: PixelSet
    source_measure: float
    target_measure: float
    factor: float


def transfer_pixel_set(S: PixelSet, N: int) -> TransferResult:
    """Pull a pixel set on the unit-ball lattice back to the unit-cube lattice.

    A cube cell is selected iff the image of its center lies in a selected
    cell of ``S``.  ``factor`` is the ratio between the larger and the
    smaller of the two measures (1 when both vanish).
    """
    src = S.domain
    if src.kind != "ball" or src.radius != 1.0 or any(c != 0.0 for c in src.center):
        raise PreconditionError("transfer_pixel_set expects a pixel set on the unit-ball lattice")
    target = LatticeDomain.unit_cube(src.n, N)
    z = cube_to_ball(target.active_centers())
    idx = np.floor((z - src.lower) / src.h).astype(np.int64)
    np.clip(idx, 0, src.N - 1, out=idx)
    dense = S.dense()
    hit = dense[tuple(idx.T)]
    out = PixelSet(target, hit)
    a, b = S.measure, out.measure
    if a == 0.0 and b == 0.0:
        factor = 1.0
    elif a == 0.0 or b == 0.0:
        factor = math.inf
    else:
        factor = max(a / b, b / a)
    return TransferResult(out, a, b, factor)
