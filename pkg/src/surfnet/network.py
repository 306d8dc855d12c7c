"""Peak-ridgeline surface networks: significance filtering, assembly and
structural counts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .critical_lines import CriticalLine, PassFCN
from .critical_points import CriticalPointSet
from .errors import ConfigError, InvariantError
from .mesh import TinMesh

log = logging.getLogger(__name__)


class UnionFind:
    def __init__(self, items: Iterable[int] = ()):
        self.parent: dict[int, int] = {}
        self.rank: dict[int, int] = {}
        for x in items:
            self.add(x)

    def add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if self.rank[a] < self.rank[b]:
            a, b = b, a
        self.parent[b] = a
        if self.rank[a] == self.rank[b]:
            self.rank[a] += 1

    def n_sets(self) -> int:
        return sum(1 for x in self.parent if self.find(x) == x)


def count_components_uf(vertices: Sequence[int], adjacencies: Iterable[tuple[int, int]]) -> int:
    uf = UnionFind(vertices)
    for a, b in adjacencies:
        uf.union(a, b)
    return uf.n_sets()


def count_components_dfs(vertices: Sequence[int], adjacencies: Iterable[tuple[int, int]]) -> int:
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for a, b in adjacencies:
        adj[a].append(b)
        adj[b].append(a)
    seen: set[int] = set()
    count = 0
    for v in vertices:
        if v in seen:
            continue
        count += 1
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return count


@dataclass(frozen=True)
class NetworkEdge:
    pass_vertex: int
    pass_ordinal: int
    peaks: tuple[int, int]
    ridgelines: tuple[CriticalLine, CriticalLine]


@dataclass
class SurfaceNetwork:
    peaks: list[int]                 # significant peaks (network vertices)
    edges: list[NetworkEdge]         # retained passes, two ridgelines each
    p: int
    L_km: float
    SA_km2: float
    euler_check: int | None = None
    ridgelines: list[CriticalLine] = field(default_factory=list)

    @property
    def v(self) -> int:
        return len(self.peaks)

    @property
    def e(self) -> int:
        return 2 * len(self.edges)

    @property
    def n_retained_passes(self) -> int:
        return len(self.edges)

    def summary(self, window_index: int) -> dict:
        return {"window_index": window_index, "v": self.v, "e": self.e, "p": self.p,
                "L_km": self.L_km, "SA_km2": self.SA_km2, "euler_check": self.euler_check}


def _ridges_by_pass(ridgelines: Iterable[CriticalLine]) -> dict[tuple[int, int], list[CriticalLine]]:
    out: dict[tuple[int, int], list[CriticalLine]] = {}
    for ln in ridgelines:
        out.setdefault((ln.pass_vertex, ln.pass_ordinal), []).append(ln)
    return out


def filter_significant_peaks(cps: CriticalPointSet, mesh: TinMesh, ridgelines: Sequence[CriticalLine],
                             threshold: float = 0.10) -> list[int]:
    """Keep peaks whose relative height over their highest connected pass is at least ``threshold``.

    A pass is connected to a peak when one of its complete ridgelines ends
    there. Peaks with no connected pass are always kept.
    """
    if not 0.0 <= threshold < 1.0:
        raise ConfigError(f"threshold must be in [0, 1), got {threshold}")
    z = mesh.z
    highest_pass: dict[int, float] = {}
    for ln in ridgelines:
        if ln.complete:
            zq = float(z[ln.pass_vertex])
            if ln.terminus not in highest_pass or zq > highest_pass[ln.terminus]:
                highest_pass[ln.terminus] = zq
    kept = []
    for pk in cps.peaks.tolist():
        if pk not in highest_pass:
            kept.append(pk)
            continue
        zp = float(z[pk])
        if zp <= 0:
            log.warning("peak %d has non-positive height %r with a connected pass; dropped", pk, zp)
            continue
        if (zp - highest_pass[pk]) / zp >= threshold:
            kept.append(pk)
    return kept


def build_surface_network(significant_peaks: Sequence[int], fcns: Sequence[PassFCN],
                          ridgelines: Sequence[CriticalLine], sa_km2: float,
                          euler_check: int | None = None) -> SurfaceNetwork:
    """Assemble the peak-ridgeline graph.

    A pass is retained when both of its ridgelines are complete and end at
    significant peaks; it then contributes two edges. Components are counted
    twice, by union-find and by depth-first search, and must agree.
    """
    sig = set(significant_peaks)
    by_pass = _ridges_by_pass(ridgelines)
    edges = []
    for f in fcns:
        pair = by_pass.get((f.pass_vertex, f.ordinal), [])
        if len(pair) == 2 and all(ln.complete and ln.terminus in sig for ln in pair):
            edges.append(NetworkEdge(f.pass_vertex, f.ordinal, (pair[0].terminus, pair[1].terminus),
                                     (pair[0], pair[1])))
    peaks = sorted(sig)
    adjacency = [e.peaks for e in edges]
    p_uf = count_components_uf(peaks, adjacency)
    p_dfs = count_components_dfs(peaks, adjacency)
    if p_uf != p_dfs:
        raise InvariantError(f"component count mismatch: union-find {p_uf}, DFS {p_dfs}")
    kept_lines = [ln for e in edges for ln in e.ridgelines]
    L_km = sum(ln.length_m for ln in kept_lines) / 1000.0
    return SurfaceNetwork(peaks, edges, p_uf, L_km, sa_km2, euler_check, kept_lines)


def euler_check(peaks: int, pits: int, passes: int) -> int:
    """Peaks + pits - passes (passes counted with multiplicity)."""
    if min(peaks, pits, passes) < 0:
        raise ValueError("counts must be non-negative")
    return peaks + pits - passes


def surface_area_km2(mesh: TinMesh, mask: np.ndarray | None = None) -> float:
    """Extent area of the raster minus masked-out cells, in km^2."""
    n_cells = mesh.n_vertices if mask is None else int(np.count_nonzero(~np.asarray(mask, bool)))
    return n_cells * mesh.cell_size ** 2 / 1e6


def network_feature_collection(net: SurfaceNetwork, mesh: TinMesh, window_index: int) -> dict:
    feats = []
    for pk in net.peaks:
        x, y = mesh.xy[pk].tolist()
        feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": [x, y]},
                      "properties": {"kind": "peak", "vertex": pk, "z": float(mesh.z[pk]),
                                     "window_index": window_index}})
    for e in net.edges:
        for ln in e.ridgelines:
            coords = mesh.xy[list(ln.path)].tolist()
            feats.append({"type": "Feature", "geometry": {"type": "LineString", "coordinates": coords},
                          "properties": {"kind": "ridgeline", "pass_id": ln.pass_id, "peak": ln.terminus,
                                         "length_m": ln.length_m, "window_index": window_index}})
    return {"type": "FeatureCollection", "features": feats}
