"""Quartic-kernel density estimation onto a regular grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import ConfigError, InputError

log = logging.getLogger(__name__)

QUARTIC_PEAK = 3.0 / math.pi  # K(0)


@dataclass(frozen=True)
class Extent:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def shifted(self, dx: float, dy: float) -> "Extent":
        return Extent(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)

    def padded(self, pad: float) -> "Extent":
        return Extent(self.xmin - pad, self.ymin - pad, self.xmax + pad, self.ymax + pad)


@dataclass(frozen=True)
class KdeParams:
    bandwidth_h: float = 600.0
    cell_size: float | None = None  # defaults to bandwidth_h / 10
    extent: Extent | None = None

    def __post_init__(self):
        if not (self.bandwidth_h > 0 and math.isfinite(self.bandwidth_h)):
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth_h}")
        if self.cell_size is None:
            object.__setattr__(self, "cell_size", self.bandwidth_h / 10.0)
        if not self.cell_size > 0:
            raise ConfigError(f"cell size must be positive, got {self.cell_size}")
        if self.cell_size > self.bandwidth_h:
            raise ConfigError(f"cell size {self.cell_size} exceeds bandwidth {self.bandwidth_h}")
        if self.extent is not None and not (self.extent.width > 0 and self.extent.height > 0):
            raise ConfigError("extent must have positive width and height")

    @classmethod
    def around_points(cls, points, bandwidth_h: float = 600.0, cell_size: float | None = None) -> "KdeParams":
        """Params whose extent is the points' bounding box padded by the bandwidth."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise ConfigError("cannot derive an extent from zero points")
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        ext = Extent(lo[0], lo[1], hi[0], hi[1]).padded(bandwidth_h)
        return cls(bandwidth_h, cell_size, ext)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Raster of density values; ``values[row, col]`` with row 0 at the south edge.

    Cell ``(row, col)`` is centred at ``origin + ((col + 0.5), (row + 0.5)) * cell_size``.
    """
    values: np.ndarray
    cell_size: float
    origin: tuple[float, float]

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("density values must be a 2-D array")
        object.__setattr__(self, "values", v)

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    @property
    def extent(self) -> Extent:
        x0, y0 = self.origin
        return Extent(x0, y0, x0 + self.ncols * self.cell_size, y0 + self.nrows * self.cell_size)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0 = self.origin
        xs = x0 + (np.arange(self.ncols) + 0.5) * self.cell_size
        ys = y0 + (np.arange(self.nrows) + 0.5) * self.cell_size
        return xs, ys

    def scaled(self, c: float) -> "DensityGrid":
        return DensityGrid(self.values * c, self.cell_size, self.origin)

    @classmethod
    def from_function(cls, fn, ncols: int, nrows: int, cell_size: float = 1.0,
                      origin: tuple[float, float] = (0.0, 0.0)) -> "DensityGrid":
        """Sample ``fn(x, y)`` at the cell centres of a grid (handy for synthetic surfaces)."""
        x0, y0 = origin
        xs = x0 + (np.arange(ncols) + 0.5) * cell_size
        ys = y0 + (np.arange(nrows) + 0.5) * cell_size
        X, Y = np.meshgrid(xs, ys)
        return cls(fn(X, Y), cell_size, origin)


@njit
def _kde_numba(px, py, x0, y0, cs, ncols, nrows, h):
    out = np.zeros((nrows, ncols))
    h2 = h * h
    for i in range(px.shape[0]):
        c_lo = max(0, int(math.ceil((px[i] - h - x0) / cs - 0.5)))
        c_hi = min(ncols - 1, int(math.floor((px[i] + h - x0) / cs - 0.5)))
        r_lo = max(0, int(math.ceil((py[i] - h - y0) / cs - 0.5)))
        r_hi = min(nrows - 1, int(math.floor((py[i] + h - y0) / cs - 0.5)))
        for r in range(r_lo, r_hi + 1):
            dy = y0 + (r + 0.5) * cs - py[i]
            for c in range(c_lo, c_hi + 1):
                dx = x0 + (c + 0.5) * cs - px[i]
                u2 = (dx * dx + dy * dy) / h2
                if u2 < 1.0:
                    w = 1.0 - u2
                    out[r, c] += w * w
    return out


def _kde_numpy(px, py, x0, y0, cs, ncols, nrows, h):
    out = np.zeros((nrows, ncols))
    h2 = h * h
    for i in range(px.shape[0]):
        c_lo = max(0, int(math.ceil((px[i] - h - x0) / cs - 0.5)))
        c_hi = min(ncols - 1, int(math.floor((px[i] + h - x0) / cs - 0.5)))
        r_lo = max(0, int(math.ceil((py[i] - h - y0) / cs - 0.5)))
        r_hi = min(nrows - 1, int(math.floor((py[i] + h - y0) / cs - 0.5)))
        if c_lo > c_hi or r_lo > r_hi:
            continue
        dx = x0 + (np.arange(c_lo, c_hi + 1) + 0.5) * cs - px[i]
        dy = y0 + (np.arange(r_lo, r_hi + 1) + 0.5) * cs - py[i]
        u2 = (dx[None, :] * dx[None, :] + dy[:, None] * dy[:, None]) / h2
        w = np.where(u2 < 1.0, 1.0 - u2, 0.0)
        out[r_lo:r_hi + 1, c_lo:c_hi + 1] += w * w
    return out


def kernel_sums(points, params: KdeParams, backend: str | None = None) -> DensityGrid:
    """Unnormalised surface: sum over points of (1 - u^2)^2 at each cell centre."""
    if params.extent is None:
        raise ConfigError("KdeParams.extent is required")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not np.isfinite(pts).all():
        raise InputError("non-finite point coordinate")
    ext, cs, h = params.extent, params.cell_size, params.bandwidth_h
    ncols = max(1, int(math.ceil(ext.width / cs - 1e-9)))
    nrows = max(1, int(math.ceil(ext.height / cs - 1e-9)))
    if len(pts):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        if lo[0] - h < ext.xmin or lo[1] - h < ext.ymin or hi[0] + h > ext.xmax or hi[1] + h > ext.ymax:
            log.debug("extent does not pad every point by the bandwidth; mass will be truncated")
    use_numba = USE_NUMBA if backend is None else backend == "numba"
    kernel = _kde_numba if use_numba else _kde_numpy
    px, py = np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])
    sums = kernel(px, py, float(ext.xmin), float(ext.ymin), float(cs), ncols, nrows, float(h))
    return DensityGrid(sums, cs, (ext.xmin, ext.ymin))


def estimate_density(points, params: KdeParams, backend: str | None = None) -> DensityGrid:
    """Evaluate f(x) = 1/(n h^2) * sum_i K((x - x_i)/h) with the quartic kernel
    K(u) = 3/pi * (1 - |u|^2)^2 on |u| <= 1, at every cell centre.

    Zero points give an all-zero grid.
    """
    grid = kernel_sums(points, params, backend)
    n = len(np.asarray(points).reshape(-1, 2))
    if n == 0:
        return grid
    scale = QUARTIC_PEAK / (n * params.bandwidth_h ** 2)
    return DensityGrid(grid.values * scale, grid.cell_size, grid.origin)


def write_ascii_grid(grid: DensityGrid, path: str | Path) -> None:
    """ESRI ASCII raster, north row first."""
    x0, y0 = grid.origin
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {x0!r}",
        f"yllcorner {y0!r}",
        f"cellsize {grid.cell_size!r}",
        "NODATA_value -9999",
    ]
    for row in grid.values[::-1]:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ascii_grid(path: str | Path) -> DensityGrid:
    with open(path, encoding="utf-8") as fh:
        header = {}
        for _ in range(6):
            key, val = fh.readline().split()
            header[key.lower()] = val
        values = np.loadtxt(fh, ndmin=2)
    nodata = float(header.get("nodata_value", "-9999"))
    values = np.where(values == nodata, np.nan, values)[::-1]
    return DensityGrid(values, float(header["cellsize"]),
                       (float(header["xllcorner"]), float(header["yllcorner"])))
