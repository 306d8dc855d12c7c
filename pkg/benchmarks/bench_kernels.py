"""Time the compiled kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first compiled call is made once before timing so JIT compilation is
not counted.
"""

import argparse
import timeit

import numpy as np

from surfnet._accel import HAVE_NUMBA
from surfnet.critical_lines import extract_critical_lines
from surfnet.critical_points import extract_critical_points, ring_sign_changes
from surfnet.density import Extent, KdeParams, kernel_sums
from surfnet.mesh import triangulate
from surfnet.synthetic import clustered_points


def cases():
    pts = clustered_points(20_000, [(5000, 5000), (11000, 5000)], 900, noise_n=5000, seed=1)
    params = KdeParams(300.0, 60.0, Extent(-2000, -2000, 18000, 12000))
    grid = kernel_sums(pts, params)
    mesh = triangulate(grid)
    cps = extract_critical_points(mesh)
    return {
        "kde accumulation": lambda b: kernel_sums(pts, params, backend=b),
        "ring sign changes": lambda b: ring_sign_changes(mesh, backend=b),
        "line tracing": lambda b: extract_critical_lines(mesh, cps, backend=b),
    }, f"{len(pts)} points, {mesh.n_vertices} vertices, {cps.n_passes} passes"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    table, label = cases()
    print(label)
    print(f"{'kernel':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for name, fn in table.items():
        fn("numba")
        a = min(timeit.repeat(lambda: fn("numba"), number=1, repeat=args.repeat))
        b = min(timeit.repeat(lambda: fn("numpy"), number=1, repeat=args.repeat))
        print(f"{name:<20}{a:>10.4f}{b:>10.4f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
