import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfnet.density import DensityGrid
from surfnet.errors import ConfigError
from surfnet.mesh import neighbor_ring, triangulate


def grid(ncols, nrows, seed=0):
    return DensityGrid(np.random.default_rng(seed).random((nrows, ncols)), 1.0, (0.0, 0.0))


def ring_from_triangles(mesh, v):
    """Oracle: neighbours are vertices sharing a triangle, sorted by angle from +x."""
    nbrs = {int(u) for tri in mesh.triangles if v in tri for u in tri if u != v}
    x0, y0 = mesh.xy[v]
    ang = {u: math.atan2(mesh.xy[u][1] - y0, mesh.xy[u][0] - x0) % (2 * math.pi) for u in nbrs}
    return sorted(nbrs, key=ang.get)


def test_single_cell():
    m = triangulate(grid(2, 2))
    assert m.n_vertices == 4 and len(m.triangles) == 2


def test_counts():
    m = triangulate(grid(7, 5))
    assert m.n_vertices == 35 and len(m.triangles) == 2 * 6 * 4


def test_too_small():
    with pytest.raises(ConfigError):
        triangulate(grid(1, 5))


def test_center_ring_of_3x3():
    m = triangulate(grid(3, 3))
    ring, is_boundary = neighbor_ring(m, 4)
    assert not is_boundary
    assert [m.col_row(u) for u in ring] == [(2, 1), (2, 2), (1, 2), (0, 1), (0, 0), (1, 0)]  # E NE N W SW S
    assert ring == ring_from_triangles(m, 4)


def test_diagonal_corners():
    m = triangulate(grid(3, 3))
    ring, b = neighbor_ring(m, 0)  # lower-left, start of the diagonal
    assert b and len(ring) == 3 and [m.col_row(u) for u in ring] == [(1, 0), (1, 1), (0, 1)]
    ring, b = neighbor_ring(m, 8)  # upper-right, end of the diagonal
    assert b and len(ring) == 3
    ring, b = neighbor_ring(m, 2)  # lower-right: off-diagonal corner
    assert b and len(ring) == 2


def test_boundary_rings_are_open_chains():
    m = triangulate(grid(5, 4))
    for v in np.flatnonzero(m.boundary):
        ring, b = neighbor_ring(m, int(v))
        assert b and len(ring) < 6
        assert set(ring) == set(ring_from_triangles(m, int(v)))
        # consecutive chain members share a triangle with v
        tris = {frozenset(t) for t in m.triangles.tolist()}
        for a, c in zip(ring, ring[1:]):
            assert frozenset((int(v), a, c)) in tris


def test_determinism_and_unknown_vertex():
    m = triangulate(grid(4, 4))
    assert neighbor_ring(m, 5) == neighbor_ring(m, 5)
    assert triangulate(grid(4, 4)).to_bytes() == m.to_bytes()
    with pytest.raises(IndexError):
        neighbor_ring(m, 16)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 10))
def test_mesh_invariants(ncols, nrows, seed):
    m = triangulate(grid(ncols, nrows, seed))
    V, E, F = m.n_vertices, len(m.unique_edges()), len(m.triangles)
    assert V - E + F == 1
    # CCW orientation: positive signed area everywhere
    a, b, c = (m.xy[m.triangles[:, k]] for k in range(3))
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    assert (cross > 0).all()
    # ring symmetry and interior ring size
    for v in range(V):
        ring, b = neighbor_ring(m, v)
        assert b or len(ring) == 6
        for u in ring:
            assert v in neighbor_ring(m, u)[0]
    for v in np.flatnonzero(~m.boundary):
        assert neighbor_ring(m, int(v))[0] == ring_from_triangles(m, int(v))


def test_height_rank_order():
    vals = np.array([[1.0, 1.0], [0.5, 1.0]])
    m = triangulate(DensityGrid(vals, 1.0, (0.0, 0.0)))
    # (z, x, y): (0,1)=0.5 lowest; then z=1 ties broken by x then y: (0,0) < (1,0) < (1,1)
    order = np.argsort(m.rank)
    assert [m.col_row(int(v)) for v in order] == [(0, 1), (0, 0), (1, 0), (1, 1)]


def test_obj_dump():
    m = triangulate(DensityGrid(np.zeros((2, 2)), 1.0, (0.0, 0.0)))
    lines = m.to_obj().splitlines()
    assert lines[0] == "v 0.5 0.5 0.0"
    assert lines[4:] == ["f 1 2 4", "f 1 4 3"]
