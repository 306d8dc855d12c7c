"""Peak / pit / pass classification by cyclic sign changes around each vertex.

Height ties are resolved symbolically: vertices compare by (z, x, y), so no
two vertices are ever equal and the stored heights are never modified.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import InvariantError
from .mesh import TinMesh

REGULAR, PEAK, PIT, PASS = 0, 1, 2, 3
BOUNDARY = -1
KIND_NAMES = {REGULAR: "regular", PEAK: "peak", PIT: "pit", PASS: "pass", BOUNDARY: "boundary"}


@dataclass(frozen=True, order=True)
class HeightKey:
    z: float
    x: float
    y: float


def signed_difference(neighbor: HeightKey, center: HeightKey) -> int:
    """+1 if ``neighbor`` is above ``center`` in the (z, x, y) order, else -1."""
    if neighbor == center:
        raise ValueError("a vertex has no height difference with itself")
    return 1 if neighbor > center else -1


def height_key(mesh: TinMesh, v: int) -> HeightKey:
    x, y = mesh.xy[v]
    return HeightKey(float(mesh.z[v]), float(x), float(y))


@dataclass(frozen=True)
class Classification:
    kind: str
    sign_changes: int
    multiplicity: int | None = None


@dataclass(frozen=True)
class PassRecord:
    vertex: int
    ordinal: int       # 0 .. multiplicity-1 for decomposed passes
    multiplicity: int


@dataclass
class CriticalPointSet:
    peaks: np.ndarray
    pits: np.ndarray
    passes: list[PassRecord]
    kind: np.ndarray          # (N,) int8 codes, BOUNDARY for frame vertices
    sign_changes: np.ndarray  # (N,) int64, -1 for frame vertices
    _peak_set: frozenset = field(init=False, repr=False)
    _pit_set: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        self._peak_set = frozenset(self.peaks.tolist())
        self._pit_set = frozenset(self.pits.tolist())

    @property
    def n_peaks(self) -> int:
        return len(self.peaks)

    @property
    def n_pits(self) -> int:
        return len(self.pits)

    @property
    def n_passes(self) -> int:
        """Pass count with decomposed passes counted once per ordinary pass."""
        return len(self.passes)

    def pass_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.kind == PASS)

    def multiplicity(self, v: int) -> int:
        return int((self.sign_changes[v] - 2) // 2) if self.kind[v] == PASS else 0

    def is_peak(self, v: int) -> bool:
        return v in self._peak_set

    def is_pit(self, v: int) -> bool:
        return v in self._pit_set

    def euler_check(self) -> int:
        return self.n_peaks + self.n_pits - self.n_passes


@njit
def _sign_changes_numba(rank, neighbors, boundary):
    n = rank.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    first_up = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if boundary[v]:
            continue
        rv = rank[v]
        prev = rank[neighbors[v, 5]] > rv
        first_up[v] = rank[neighbors[v, 0]] > rv
        count = 0
        for k in range(6):
            up = rank[neighbors[v, k]] > rv
            if up != prev:
                count += 1
            prev = up
        out[v] = count
    return out, first_up


def _sign_changes_numpy(rank, neighbors, boundary):
    n = rank.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    inner = np.flatnonzero(~boundary)
    up = rank[neighbors[inner]] > rank[inner][:, None]
    out[inner] = (up != np.roll(up, 1, axis=1)).sum(axis=1)
    first_up = np.zeros(n, dtype=np.bool_)
    first_up[inner] = up[:, 0]
    return out, first_up


def ring_sign_changes(mesh: TinMesh, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic sign-change count N_s per vertex (-1 on the frame) and the sign of
    each interior vertex's first (East) neighbour."""
    use_numba = USE_NUMBA if backend is None else backend == "numba"
    fn = _sign_changes_numba if use_numba else _sign_changes_numpy
    return fn(mesh.rank, mesh.neighbors, mesh.boundary)


def ring_signs(mesh: TinMesh, v: int) -> list[int]:
    rv = mesh.rank[v]
    return [1 if mesh.rank[u] > rv else -1 for u in mesh.neighbors[v]]


def _classify(ns: int, first_up: bool) -> Classification:
    if ns % 2:
        raise InvariantError(f"odd sign-change count {ns}: neighbour ring is broken")
    if ns == 0:
        return Classification("pit" if first_up else "peak", 0)
    if ns == 2:
        return Classification("regular", 2)
    return Classification("pass", ns, (ns - 2) // 2)


def classify_vertex(mesh: TinMesh, v: int) -> Classification:
    if mesh.boundary[v]:
        raise ValueError(f"vertex {v} is on the mesh boundary and cannot be classified")
    signs = ring_signs(mesh, v)
    ns = sum(1 for k in range(6) if signs[k] != signs[k - 1])
    return _classify(ns, signs[0] > 0)


def extract_critical_points(mesh: TinMesh, backend: str | None = None) -> CriticalPointSet:
    ns, first_up = ring_sign_changes(mesh, backend)
    if (ns[ns >= 0] % 2).any():
        raise InvariantError("odd sign-change count: neighbour ring is broken")
    kind = np.full(mesh.n_vertices, BOUNDARY, dtype=np.int8)
    inner = ns >= 0
    kind[inner & (ns == 2)] = REGULAR
    kind[inner & (ns >= 4)] = PASS
    kind[inner & (ns == 0) & ~first_up] = PEAK
    kind[inner & (ns == 0) & first_up] = PIT

    passes = []
    for v in np.flatnonzero(kind == PASS).tolist():
        m = int((ns[v] - 2) // 2)
        passes.extend(PassRecord(v, k, m) for k in range(m))
    return CriticalPointSet(np.flatnonzero(kind == PEAK), np.flatnonzero(kind == PIT), passes, kind, ns)


def write_critical_points_csv(cps: CriticalPointSet, mesh: TinMesh, window_index: int, fh: TextIO) -> None:
    """One row per critical vertex: ``window_index,kind,x,y,z,multiplicity``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["window_index", "kind", "x", "y", "z", "multiplicity"])
    rows = []
    for v in np.flatnonzero(cps.kind > 0).tolist():
        k = int(cps.kind[v])
        mult = cps.multiplicity(v) if k == PASS else 1
        x, y = mesh.xy[v]
        rows.append((v, [window_index, KIND_NAMES[k], repr(float(x)), repr(float(y)), repr(float(mesh.z[v])), mult]))
    for _, row in sorted(rows):
        w.writerow(row)
