"""Ridgelines and course-lines traced from the four critical neighbours of
every (decomposed) pass by steepest-neighbour stepping."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ._accel import USE_NUMBA, njit
from .critical_points import BOUNDARY, PASS, PEAK, PIT, REGULAR, CriticalPointSet, ring_signs
from .errors import InvariantError
from .mesh import TinMesh


@dataclass(frozen=True)
class PassFCN:
    pass_vertex: int
    ordinal: int
    members: tuple[int, int, int, int]  # in ring order
    ascending: tuple[int, int]          # highest first
    descending: tuple[int, int]         # lowest first

    @property
    def pass_id(self) -> str:
        return f"{self.pass_vertex}:{self.ordinal}"


@dataclass(frozen=True)
class CriticalLine:
    kind: str                 # "ridgeline" | "courseline"
    pass_vertex: int
    pass_ordinal: int
    path: tuple[int, ...]     # vertex ids, pass first
    terminus_kind: str        # "peak" | "pit" | "boundary" | "pass" | "cycle"
    terminus: int | None
    complete: bool
    length_m: float
    via_passes: tuple[int, ...] = ()

    @property
    def pass_id(self) -> str:
        return f"{self.pass_vertex}:{self.pass_ordinal}"


@dataclass
class CriticalLines:
    fcns: list[PassFCN]
    ridgelines: list[CriticalLine]
    courselines: list[CriticalLine]


def _sign_runs(signs: list[int]) -> list[list[int]]:
    """Split a cyclic sign sequence into maximal runs of ring positions."""
    n = len(signs)
    start = next(k for k in range(n) if signs[k] != signs[k - 1])
    runs: list[list[int]] = []
    for i in range(n):
        k = (start + i) % n
        if i == 0 or signs[k] != signs[k - 1]:
            runs.append([])
        runs[-1].append(k)
    return runs


def find_four_critical_neighbors(mesh: TinMesh, pass_vertex: int, multiplicity: int) -> list[PassFCN]:
    """Steepest ascending and descending neighbours assigned to each ordinary pass.

    Each sign run of the ring is reduced to its most extreme neighbour. The
    reduced ring is rotated to start at its lowest member; ordinary pass k
    (0-based) then takes reduced positions 2k .. 2k+3, i.e. each further pass
    drops the first two members of the previous one.
    """
    if mesh.boundary[pass_vertex]:
        raise ValueError(f"vertex {pass_vertex} is on the boundary")
    signs = ring_signs(mesh, pass_vertex)
    runs = _sign_runs(signs) if len(set(signs)) > 1 else []
    if len(runs) < 4 or multiplicity != (len(runs) - 2) // 2:
        raise ValueError(f"vertex {pass_vertex} is not a pass of multiplicity {multiplicity} "
                         f"({len(runs)} sign changes)")
    ring = mesh.neighbors[pass_vertex]
    rank = mesh.rank
    reduced = []
    for run in runs:
        ids = [int(ring[k]) for k in run]
        pick = max if signs[run[0]] > 0 else min
        reduced.append(pick(ids, key=lambda u: rank[u]))
    lo = min(range(len(reduced)), key=lambda i: rank[reduced[i]])
    reduced = reduced[lo:] + reduced[:lo]

    rv = rank[pass_vertex]
    out = []
    for k in range(multiplicity):
        members = tuple(reduced[2 * k:2 * k + 4])
        asc = sorted((u for u in members if rank[u] > rv), key=lambda u: -rank[u])
        desc = sorted((u for u in members if rank[u] < rv), key=lambda u: rank[u])
        if len(asc) != 2 or len(desc) != 2:
            raise InvariantError(f"pass {pass_vertex}:{k} critical neighbours do not alternate")
        out.append(PassFCN(pass_vertex, k, members, tuple(asc), tuple(desc)))
    return out


@njit
def _walk_numba(start, nxt, stop):
    buf = np.empty(64, dtype=np.int64)
    n = 0
    v = start
    limit = nxt.shape[0]
    while n < limit:
        v = nxt[v]
        if n == buf.shape[0]:
            grown = np.empty(2 * n, dtype=np.int64)
            grown[:n] = buf
            buf = grown
        buf[n] = v
        n += 1
        if stop[v]:
            break
    return buf[:n]


def _walk_numpy(start, nxt, stop):
    out = []
    v = start
    for _ in range(nxt.shape[0]):
        v = int(nxt[v])
        out.append(v)
        if stop[v]:
            break
    return np.array(out, dtype=np.int64)


class LineTracer:
    """Steepest-neighbour tracing over one mesh and its critical points."""

    def __init__(self, mesh: TinMesh, cps: CriticalPointSet, fcns: list[PassFCN] | None = None,
                 backend: str | None = None):
        self.mesh = mesh
        self.cps = cps
        use_numba = USE_NUMBA if backend is None else backend == "numba"
        self._walk = _walk_numba if use_numba else _walk_numpy
        if fcns is None:
            fcns = assign_fcns(mesh, cps)
        self.fcn_by_vertex: dict[int, list[PassFCN]] = {}
        for f in fcns:
            self.fcn_by_vertex.setdefault(f.pass_vertex, []).append(f)

        n = mesh.n_vertices
        inner = np.flatnonzero(~mesh.boundary)
        nb = mesh.neighbors[inner]
        nb_rank = mesh.rank[nb]
        self.up_next = np.full(n, -1, dtype=np.int64)
        self.down_next = np.full(n, -1, dtype=np.int64)
        rows = np.arange(len(inner))
        self.up_next[inner] = nb[rows, nb_rank.argmax(axis=1)]
        self.down_next[inner] = nb[rows, nb_rank.argmin(axis=1)]
        self.stop = cps.kind != REGULAR

    def trace(self, pass_vertex: int, pass_ordinal: int, start: int, up: bool) -> CriticalLine:
        kind, rank = self.cps.kind, self.mesh.rank
        target = PEAK if up else PIT
        path = [pass_vertex, start]
        visited = {pass_vertex, start}
        via: list[int] = []
        nxt = self.up_next if up else self.down_next
        while True:
            v = path[-1]
            k = kind[v]
            if k == target:
                return self._line(up, pass_vertex, pass_ordinal, path, "peak" if up else "pit", v, True, via)
            if k == BOUNDARY:
                return self._line(up, pass_vertex, pass_ordinal, path, "boundary", v, False, via)
            if k == PASS:
                cands = [u for f in self.fcn_by_vertex[v] for u in (f.ascending if up else f.descending)
                         if u not in visited]
                if not cands:
                    return self._line(up, pass_vertex, pass_ordinal, path, "pass", v, False, via)
                via.append(v)
                step = [max(cands, key=lambda u: rank[u]) if up else min(cands, key=lambda u: rank[u])]
            elif k == REGULAR:
                step = self._walk(v, nxt, self.stop).tolist()
            else:
                raise InvariantError(f"{'ascending' if up else 'descending'} trace reached a "
                                     f"{'pit' if up else 'peak'} at vertex {v}")
            for u in step:
                if u in visited:
                    return self._line(up, pass_vertex, pass_ordinal, path, "cycle", u, False, via)
                visited.add(u)
                path.append(u)

    def _line(self, up, pv, po, path, tkind, terminus, complete, via) -> CriticalLine:
        return CriticalLine("ridgeline" if up else "courseline", pv, po, tuple(path), tkind,
                            terminus, complete, polyline_length(self.mesh, path), tuple(via))


def polyline_length(mesh: TinMesh, path) -> float:
    if len(path) < 2:
        return 0.0
    p = mesh.xy[np.asarray(path)]
    d = np.diff(p, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def assign_fcns(mesh: TinMesh, cps: CriticalPointSet) -> list[PassFCN]:
    fcns: list[PassFCN] = []
    for v in cps.pass_vertices().tolist():
        fcns.extend(find_four_critical_neighbors(mesh, v, cps.multiplicity(v)))
    return fcns


def trace_line(mesh: TinMesh, cps: CriticalPointSet, fcn: PassFCN, start: int, direction: str,
               tracer: LineTracer | None = None) -> CriticalLine:
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if start not in fcn.members:
        raise ValueError(f"vertex {start} is not a critical neighbour of pass {fcn.pass_id}")
    tracer = tracer or LineTracer(mesh, cps)
    return tracer.trace(fcn.pass_vertex, fcn.ordinal, start, direction == "up")


def extract_critical_lines(mesh: TinMesh, cps: CriticalPointSet, backend: str | None = None) -> CriticalLines:
    """Two ridgelines and two course-lines per ordinary pass, incomplete ones included."""
    fcns = assign_fcns(mesh, cps)
    tracer = LineTracer(mesh, cps, fcns, backend)
    ridges, courses = [], []
    for f in fcns:
        for s in f.ascending:
            ridges.append(tracer.trace(f.pass_vertex, f.ordinal, s, True))
        for s in f.descending:
            courses.append(tracer.trace(f.pass_vertex, f.ordinal, s, False))
    return CriticalLines(fcns, ridges, courses)


def lines_feature_collection(lines, mesh: TinMesh, window_index: int) -> dict:
    feats = []
    for ln in lines:
        coords = [[float(x), float(y)] for x, y in mesh.xy[list(ln.path)].tolist()]
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"kind": ln.kind, "pass_id": ln.pass_id, "terminus_kind": ln.terminus_kind,
                           "complete": ln.complete, "length_m": ln.length_m, "window_index": window_index},
        })
    return {"type": "FeatureCollection", "features": feats}


def write_lines_geojson(lines, mesh: TinMesh, window_index: int, fh: TextIO) -> None:
    json.dump(lines_feature_collection(lines, mesh, window_index), fh, sort_keys=True)
    fh.write("\n")
