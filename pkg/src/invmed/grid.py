"""Uniform square grids, field containers, sampling and the ``.fld`` format.

Field values are stored as ``values[iy, ix]`` (row-major, y is the slow
index), so ``values.ravel()`` walks x fastest.  The same order is used on
disk.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FieldFormatError, IncompatibleGridError

__all__ = [
    "Grid",
    "RealField",
    "ComplexField",
    "unit_grid",
    "bilinear_sample",
    "bilinear_weights",
    "restrict",
    "grid_norm",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class Grid:
    """An ``n x n`` node grid on the square ``[x0, x1] x [y0, y1]``."""

    n: int
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"grid needs n >= 3 points per side, got {self.n}")
        if not self.x1 > self.x0:
            raise ValueError("grid bounds must satisfy x1 > x0")
        if not np.isclose(self.y1 - self.y0, self.x1 - self.x0, rtol=1e-12, atol=0.0):
            raise ValueError("grid must be square")

    @property
    def h(self):
        return (self.x1 - self.x0) / (self.n - 1)

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def bounds(self):
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.n)

    @property
    def y(self):
        return self.y0 + self.h * np.arange(self.n)

    def mesh(self):
        """Coordinate arrays ``(X, Y)`` shaped like field values."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def contains(self, x, y, tol=1e-12):
        span = self.x1 - self.x0
        return (
            self.x0 - tol * span <= x <= self.x1 + tol * span
            and self.y0 - tol * span <= y <= self.y1 + tol * span
        )


def unit_grid(n):
    """Grid with ``n`` points per side on the unit square."""
    return Grid(n, 0.0, 0.0, 1.0, 1.0)


class _Field:
    dtype = None

    def __init__(self, grid, values):
        arr = np.array(values, dtype=self.dtype)
        if arr.shape != grid.shape:
            raise IncompatibleGridError(
                f"values of shape {arr.shape} do not match grid {grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.flags.writeable = False
        self._grid = grid
        self._values = arr

    @property
    def grid(self):
        return self._grid

    @property
    def values(self):
        return self._values

    def with_values(self, values):
        return type(self)(self._grid, values)

    def __repr__(self):
        return f"{type(self).__name__}(n={self._grid.n}, bounds={self._grid.bounds})"


class RealField(_Field):
    """Real samples (a scatterer) on a :class:`Grid`."""

    dtype = np.float64

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))


class ComplexField(_Field):
    """Complex samples (incident, scattered or adjoint wave) on a :class:`Grid`."""

    dtype = np.complex128

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))


def bilinear_weights(grid, points):
    """Interpolation stencils for a batch of points.

    Returns
    -------
    idx : (P, 4) int array
        Flat (row-major) node indices of the enclosing cell corners.
    w : (P, 4) float array
        Bilinear weights; each row sums to one.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    for px, py in pts:
        if not grid.contains(px, py):
            raise DomainError(f"point ({px}, {py}) lies outside grid bounds {grid.bounds}")
    n, h = grid.n, grid.h
    tx = np.clip((pts[:, 0] - grid.x0) / h, 0.0, n - 1)
    ty = np.clip((pts[:, 1] - grid.y0) / h, 0.0, n - 1)
    ix = np.minimum(np.floor(tx).astype(int), n - 2)
    iy = np.minimum(np.floor(ty).astype(int), n - 2)
    fx = tx - ix
    fy = ty - iy
    base = iy * n + ix
    idx = np.stack([base, base + 1, base + n, base + n + 1], axis=1)
    w = np.stack(
        [(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=1
    )
    return idx, w


def bilinear_sample(f, p):
    """Bilinear interpolation of field ``f`` at the point ``p = (x, y)``."""
    idx, w = bilinear_weights(f.grid, [p])
    flat = f.values.ravel()
    val = np.dot(flat[idx[0]], w[0])
    return val.item()


def restrict(f_fine, n_coarse):
    """Inject a fine field onto the coarse grid sharing its corner nodes."""
    n_fine = f_fine.grid.n
    if n_coarse < 3 or (n_fine - 1) % (n_coarse - 1) != 0:
        raise IncompatibleGridError(
            f"cannot restrict {n_fine} points per side to {n_coarse}: "
            f"{n_fine - 1} is not a multiple of {n_coarse - 1}"
        )
    stride = (n_fine - 1) // (n_coarse - 1)
    g = f_fine.grid
    coarse = Grid(n_coarse, g.x0, g.y0, g.x1, g.y1)
    return type(f_fine)(coarse, f_fine.values[::stride, ::stride])


def grid_norm(f, kind="L2"):
    """Discrete norm of a field.

    ``"L2"`` is ``h * sqrt(sum |f|^2)`` (uniform cell weight, no trapezoid
    correction at the boundary); ``"Linf"`` is ``max |f|``.
    """
    vals = f.values if hasattr(f, "values") else np.asarray(f)
    if kind == "L2":
        h = f.grid.h
        return float(h * np.sqrt(np.sum(np.abs(vals) ** 2)))
    if kind == "Linf":
        return float(np.max(np.abs(vals))) if vals.size else 0.0
    raise ValueError(f"unknown norm kind {kind!r}")


_DTYPES = {"f64": ("<f8", RealField), "c128": ("<c16", ComplexField)}


def write_field(path, field, k=None):
    """Write ``field`` to ``path`` in the ``.fld`` format.

    One JSON header line, a single newline byte, then the raw little-endian
    samples in row-major order.
    """
    dtype = "c128" if isinstance(field, ComplexField) else "f64"
    g = field.grid
    header = {
        "nx": g.n,
        "ny": g.n,
        "dtype": dtype,
        "order": "row-major",
        "domain": [float(g.x0), float(g.y0), float(g.x1), float(g.y1)],
        "k": None if k is None else float(k),
    }
    payload = np.ascontiguousarray(field.values, dtype=_DTYPES[dtype][0]).tobytes()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)
    return path


def read_field(path):
    """Read a ``.fld`` file.

    Returns
    -------
    field : RealField or ComplexField
    k : float or None
        Wavenumber recorded in the header.
    """
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise FieldFormatError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{path}: bad header ({exc})") from None
    for key in ("nx", "ny", "dtype", "order", "domain"):
        if key not in header:
            raise FieldFormatError(f"{path}: header lacks {key!r}")
    if header["dtype"] not in _DTYPES:
        raise FieldFormatError(f"{path}: unknown dtype {header['dtype']!r}")
    if header["order"] != "row-major":
        raise FieldFormatError(f"{path}: only row-major order is supported")
    nx, ny = int(header["nx"]), int(header["ny"])
    if nx != ny:
        raise FieldFormatError(f"{path}: non-square grids are not supported")
    np_dtype, cls = _DTYPES[header["dtype"]]
    body = raw[cut + 1:]
    expected = nx * ny * np.dtype(np_dtype).itemsize
    if len(body) != expected:
        raise FieldFormatError(f"{path}: expected {expected} data bytes, found {len(body)}")
    x0, y0, x1, y1 = header["domain"]
    grid = Grid(nx, x0, y0, x1, y1)
    values = np.frombuffer(body, dtype=np_dtype).reshape(ny, nx)
    k = header.get("k")
    return cls(grid, values), (None if k is None else float(k))
