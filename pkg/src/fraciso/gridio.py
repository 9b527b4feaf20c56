"""Text serialization of grid functions and pixel sets, and CSV export.

Format: a header line ``n N kind c1,...,cn radius`` followed by one value
per active cell in row-major order (``0``/``1`` for pixel sets).  For a cube
lattice ``radius`` is the half side.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .errors import PreconditionError
from .grid import GridFunction, LatticeDomain, PixelSet

__all__ = ["dumps_grid", "loads_grid", "save_grid", "load_grid", "load_pixel_set", "to_csv"]


def _header(dom: LatticeDomain) -> str:
    center = ",".join(repr(float(c)) for c in dom.center)
    return f"{dom.n} {dom.N} {dom.kind} {center} {float(dom.radius)!r}"


def dumps_grid(obj) -> str:
    """Serialize a :class:`GridFunction` or :class:`PixelSet`."""
    if isinstance(obj, PixelSet):
        body = "\n".join("1" if b else "0" for b in obj.mask)
    elif isinstance(obj, GridFunction):
        body = "\n".join(format(float(v), ".17g") for v in obj.values)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return _header(obj.domain) + "\n" + body + ("\n" if body else "")


def _parse_domain(line: str) -> LatticeDomain:
    parts = line.split()
    if len(parts) != 5:
        raise PreconditionError(f"grid header needs 'n N kind center radius', got {line!r}")
    try:
        n, N = int(parts[0]), int(parts[1])
        center = tuple(float(c) for c in parts[3].split(","))
        radius = float(parts[4])
    except ValueError as exc:
        raise PreconditionError(f"bad grid header {line!r}: {exc}") from None
    kind = parts[2]
    if len(center) != n:
        raise PreconditionError(f"header center has {len(center)} coordinates for n = {n}")
    if kind == "cube":
        return LatticeDomain.cube(n, N, center=center, half_side=radius)
    if kind == "ball":
        return LatticeDomain.ball(n, N, center=center, radius=radius)
    raise PreconditionError(f"unknown lattice kind {kind!r}")


def loads_grid(text: str, as_set: bool = False):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PreconditionError("empty grid file")
    dom = _parse_domain(lines[0])
    try:
        vals = np.array([float(v) for v in lines[1:]])
    except ValueError as exc:
        raise PreconditionError(f"bad grid value: {exc}") from None
    if as_set:
        if not np.all((vals == 0) | (vals == 1)):
            raise PreconditionError("pixel-set files hold only 0/1 entries")
        return PixelSet(dom, vals.astype(bool))
    return GridFunction(dom, vals)


def save_grid(obj, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_grid(obj))


def load_grid(path) -> GridFunction:
    with open(path, encoding="ascii") as fh:
        return loads_grid(fh.read())


def load_pixel_set(path) -> PixelSet:
    with open(path, encoding="ascii") as fh:
        return loads_grid(fh.read(), as_set=True)


def to_csv(obj, digits: int = 6) -> str:
    """Rows ``x1..xn,value`` for the active cells, for plotting."""
    dom = obj.domain
    vals = obj.mask.astype(float) if isinstance(obj, PixelSet) else obj.values
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(dom.n)] + ["value"])
    fmt = f".{digits}g"
    for c, v in zip(dom.active_centers(), vals):
        w.writerow([format(float(x), fmt) for x in c] + [format(float(v), fmt)])
    return buf.getvalue()
