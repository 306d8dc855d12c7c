"""Mobility hotspot surface networks.

KDE surfaces from trajectory OD points, discrete critical points and
critical lines on a lattice TIN, peak-ridgeline surface networks, and their
graph indices over time.
"""

from ._accel import USE_NUMBA, backend_name
from .critical_lines import extract_critical_lines, find_four_critical_neighbors, trace_line
from .critical_points import classify_vertex, extract_critical_points, signed_difference, HeightKey
from .density import DensityGrid, Extent, KdeParams, estimate_density
from .indices import compute_indices, GraphIndices
from .mesh import TinMesh, neighbor_ring, triangulate
from .network import build_surface_network, euler_check, filter_significant_peaks

__version__ = "0.1.0"
