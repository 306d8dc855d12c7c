from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfnet.critical_lines import CriticalLine, PassFCN, extract_critical_lines
from surfnet.critical_points import extract_critical_points
from surfnet.errors import ConfigError
from surfnet.mesh import triangulate
from surfnet.network import (build_surface_network, count_components_dfs, count_components_uf,
                             filter_significant_peaks, network_feature_collection, surface_area_km2)
from surfnet.synthetic import two_bump_grid


def ridge(pass_vertex, peak, ordinal=0, complete=True, length=1000.0):
    return CriticalLine("ridgeline", pass_vertex, ordinal, (pass_vertex, peak),
                        "peak" if complete else "boundary", peak, complete, length)


def fcn(pass_vertex, ordinal=0):
    return PassFCN(pass_vertex, ordinal, (0, 0, 0, 0), (0, 0), (0, 0))


def _significance(z_peak, z_pass, threshold=0.10):
    mesh = SimpleNamespace(z=np.array([z_peak, z_pass]))
    cps = SimpleNamespace(peaks=np.array([0]))
    return filter_significant_peaks(cps, mesh, [ridge(1, 0)], threshold)


class TestSignificance:
    def test_shallow_peak_removed(self):
        assert _significance(100.0, 95.0) == []

    def test_prominent_peak_kept(self):
        assert _significance(100.0, 80.0) == [0]

    def test_exact_threshold_kept(self):
        assert _significance(100.0, 90.0) == [0]

    def test_unconnected_peak_kept(self):
        mesh = SimpleNamespace(z=np.array([5.0, 4.9]))
        cps = SimpleNamespace(peaks=np.array([0]))
        assert filter_significant_peaks(cps, mesh, [ridge(1, 0, complete=False)]) == [0]

    def test_highest_pass_wins(self):
        mesh = SimpleNamespace(z=np.array([100.0, 50.0, 96.0]))
        cps = SimpleNamespace(peaks=np.array([0]))
        assert filter_significant_peaks(cps, mesh, [ridge(1, 0), ridge(2, 0)]) == []

    @pytest.mark.parametrize("t", [-0.1, 1.0, 2.0])
    def test_bad_threshold(self, t):
        with pytest.raises(ConfigError):
            _significance(1.0, 0.5, t)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8), st.floats(0, 0.99), st.floats(0, 0.99))
    def test_threshold_monotone(self, drops, t1, t2):
        lo, hi = sorted((t1, t2))
        n = len(drops)
        z = np.concatenate([np.full(n, 10.0), 10.0 * (1 - np.array(drops))])
        mesh = SimpleNamespace(z=z)
        cps = SimpleNamespace(peaks=np.arange(n))
        lines = [ridge(n + i, i) for i in range(n)]
        assert set(filter_significant_peaks(cps, mesh, lines, hi)) <= set(filter_significant_peaks(cps, mesh, lines, lo))


class TestAssembly:
    def test_two_peaks_one_pass(self):
        net = build_surface_network([1, 2], [fcn(10)], [ridge(10, 1), ridge(10, 2)], 4.0)
        assert (net.v, net.e, net.p) == (2, 2, 1)
        assert net.L_km == pytest.approx(2.0)

    def test_isolated_peaks(self):
        net = build_surface_network([1, 2, 3], [], [], 1.0)
        assert (net.v, net.e, net.p) == (3, 0, 3)

    def test_parallel_passes(self):
        lines = [ridge(10, 1), ridge(10, 2), ridge(11, 1), ridge(11, 2)]
        net = build_surface_network([1, 2], [fcn(10), fcn(11)], lines, 1.0)
        assert (net.v, net.e, net.p) == (2, 4, 1)

    def test_self_loop(self):
        net = build_surface_network([1], [fcn(10)], [ridge(10, 1), ridge(10, 1)], 1.0)
        assert (net.v, net.e, net.p) == (1, 2, 1)

    def test_incomplete_or_insignificant_pass_dropped(self):
        lines = [ridge(10, 1), ridge(10, 2, complete=False), ridge(11, 1), ridge(11, 3)]
        net = build_surface_network([1, 2], [fcn(10), fcn(11)], lines, 1.0)
        assert (net.v, net.e, net.p) == (2, 0, 2)
        assert net.L_km == 0.0

    def test_multiplicity_ordinals_distinct(self):
        lines = [ridge(10, 1, 0), ridge(10, 2, 0), ridge(10, 2, 1), ridge(10, 3, 1)]
        net = build_surface_network([1, 2, 3], [fcn(10, 0), fcn(10, 1)], lines, 1.0)
        assert (net.v, net.e, net.p) == (3, 4, 1)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 15).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=20))))
def test_component_counts_agree(graph):
    n, edges = graph
    assert count_components_uf(range(n), edges) == count_components_dfs(range(n), edges)


def test_two_bump_network_and_export():
    m = triangulate(two_bump_grid())
    cps = extract_critical_points(m)
    lines = extract_critical_lines(m, cps)
    sig = filter_significant_peaks(cps, m, lines.ridgelines)
    net = build_surface_network(sig, lines.fcns, lines.ridgelines, surface_area_km2(m))
    assert (net.v, net.e, net.p) == (2, 2, 1)
    fc = network_feature_collection(net, m, 0)
    kinds = sorted(f["properties"]["kind"] for f in fc["features"])
    assert kinds == ["peak", "peak", "ridgeline", "ridgeline"]


def test_surface_area_mask():
    m = triangulate(two_bump_grid(n=11))
    mask = np.zeros(m.n_vertices, bool)
    mask[:21] = True
    assert surface_area_km2(m) == pytest.approx(121e-6)
    assert surface_area_km2(m, mask) == pytest.approx(100e-6)
