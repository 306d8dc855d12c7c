"""Fixed-diagonal triangulation of a density lattice.

Every lattice cell is split along its lower-left to upper-right diagonal,
so an interior vertex touches exactly six triangles and its neighbour ring,
counter-clockwise from +x, is E, NE, N, W, SW, S.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density import DensityGrid
from .errors import ConfigError

# (dcol, drow) of ring slots, CCW from +x
RING_OFFSETS = np.array([(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)], dtype=np.int64)
RING_NAMES = ("E", "NE", "N", "W", "SW", "S")


@dataclass(frozen=True, eq=False)
class TinMesh:
    ncols: int
    nrows: int
    cell_size: float
    origin: tuple[float, float]  # lower-left corner of the source raster
    z: np.ndarray          # (N,) heights, vertex id = row * ncols + col
    xy: np.ndarray         # (N, 2) planar positions (cell centres)
    triangles: np.ndarray  # (T, 3) CCW vertex ids
    neighbors: np.ndarray  # (N, 6) ring slots, -1 where the neighbour is off-grid
    boundary: np.ndarray   # (N,) bool
    rank: np.ndarray       # (N,) position of each vertex in the (z, x, y) total order

    @property
    def n_vertices(self) -> int:
        return self.z.shape[0]

    @property
    def vertices(self) -> np.ndarray:
        return np.column_stack([self.xy, self.z])

    def vertex_id(self, col: int, row: int) -> int:
        return row * self.ncols + col

    def col_row(self, vid: int) -> tuple[int, int]:
        return vid % self.ncols, vid // self.ncols

    def interior_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def unique_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def to_obj(self) -> str:
        lines = [f"v {x!r} {y!r} {z!r}" for (x, y), z in zip(self.xy.tolist(), self.z.tolist())]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.triangles.tolist()]
        return "\n".join(lines) + "\n"

    def write_obj(self, path: str | Path) -> None:
        Path(path).write_text(self.to_obj(), encoding="utf-8")

    def to_bytes(self) -> bytes:
        parts = [np.array([self.ncols, self.nrows], dtype=np.int64), np.array([self.cell_size, *self.origin]),
                 self.z, self.xy, self.triangles, self.neighbors, self.boundary, self.rank]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


def height_rank(z: np.ndarray, col: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Rank of every vertex under the order (z, x, y); x and y grow with col and row."""
    order = np.lexsort((row, col, z))
    rank = np.empty(z.shape[0], dtype=np.int64)
    rank[order] = np.arange(z.shape[0])
    return rank


def triangulate(grid: DensityGrid) -> TinMesh:
    nrows, ncols = grid.values.shape
    if ncols < 2 or nrows < 2:
        raise ConfigError(f"grid must be at least 2x2, got {ncols}x{nrows}")
    if not np.isfinite(grid.values).all():
        raise ConfigError("grid contains non-finite values")

    z = grid.values.reshape(-1).copy()
    vid = np.arange(ncols * nrows, dtype=np.int64)
    col, row = vid % ncols, vid // ncols
    xs, ys = grid.cell_centers()
    xy = np.column_stack([xs[col], ys[row]])

    c = np.arange(ncols - 1)
    r = np.arange(nrows - 1)
    C, R = np.meshgrid(c, r)
    ll = (R * ncols + C).ravel()
    lr, ul, ur = ll + 1, ll + ncols, ll + ncols + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    neighbors = np.full((ncols * nrows, 6), -1, dtype=np.int64)
    for k, (dc, dr) in enumerate(RING_OFFSETS):
        nc, nr = col + dc, row + dr
        ok = (nc >= 0) & (nc < ncols) & (nr >= 0) & (nr < nrows)
        neighbors[ok, k] = nr[ok] * ncols + nc[ok]
    boundary = (neighbors < 0).any(axis=1)

    return TinMesh(ncols, nrows, float(grid.cell_size), tuple(grid.origin), z, xy,
                   triangles, neighbors, boundary, height_rank(z, col, row))


def neighbor_ring(mesh: TinMesh, vertex_id: int) -> tuple[list[int], bool]:
    """CCW neighbour list of a vertex and its boundary flag.

    Interior rings start at the East neighbour. Boundary rings are returned as
    the open chain that follows the off-grid gap, still in CCW order.
    """
    if not 0 <= vertex_id < mesh.n_vertices:
        raise IndexError(f"unknown vertex id {vertex_id}")
    slots = mesh.neighbors[vertex_id].tolist()
    if not mesh.boundary[vertex_id]:
        return slots, False
    k = 0
    while not (slots[k] < 0 and slots[(k + 1) % 6] >= 0):
        k += 1
    chain = [slots[(k + 1 + i) % 6] for i in range(6)]
    return [v for v in chain if v >= 0], True
