"""Synthetic surfaces and fleets for tests, benchmarks and demos."""

from __future__ import annotations

import csv
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .density import DensityGrid


def gaussian_mixture(centers, sigma: float, amplitudes=None):
    """Callable f(x, y) summing isotropic Gaussian bumps."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    amps = np.ones(len(centers)) if amplitudes is None else np.asarray(amplitudes, dtype=float)

    def f(x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for (cx, cy), a in zip(centers, amps):
            out += a * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma ** 2))
        return out
    return f


def two_bump_grid(n: int = 41, separation: float = 13.4, sigma: float = 4.0) -> DensityGrid:
    """Two equal Gaussian bumps on a unit-cell lattice, centres off the lattice nodes."""
    cx, cy = n / 2.0 + 0.1, n / 2.0 - 0.3
    f = gaussian_mixture([(cx - separation / 2, cy), (cx + separation / 2, cy)], sigma)
    return DensityGrid.from_function(f, n, n, 1.0)


def bump_chain_grid(k: int, spacing: float = 11.0, sigma: float = 3.6, margin: float = 14.0,
                    seed: int = 0) -> DensityGrid:
    """``k`` Gaussian bumps of distinct heights along a wobbly chain; values never
    underflow to zero, so the surface carries no exact ties in practice."""
    rng = np.random.default_rng(seed)
    xs = margin + spacing * np.arange(k) + rng.uniform(-0.4, 0.4, k)
    ncols = int(np.ceil(xs[-1] + margin)) + 1
    nrows = int(2 * margin) + 1
    ys = nrows / 2.0 + rng.uniform(-1.5, 1.5, k)
    amps = 1.0 + 0.1 * rng.permutation(k) + rng.uniform(0, 0.05, k)
    f = gaussian_mixture(np.column_stack([xs, ys]), sigma, amps)
    return DensityGrid.from_function(f, ncols, nrows, 1.0)


def clustered_points(n: int, centers, spread: float, noise_n: int = 0, noise_spacing: float = 300.0,
                     noise_spread: float = 25.0, seed: int = 0) -> np.ndarray:
    """Gaussian point clouds plus 'street-grid' noise: tight micro-clusters on a
    regular lattice covering the clouds, the kind of high-frequency texture a
    small bandwidth picks up."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    idx = rng.integers(0, len(centers), n)
    pts = centers[idx] + rng.normal(0.0, spread, (n, 2))
    if noise_n:
        lo = centers.min(axis=0) - 2 * spread
        hi = centers.max(axis=0) + 2 * spread
        gx = np.arange(lo[0], hi[0] + 1, noise_spacing)
        gy = np.arange(lo[1], hi[1] + 1, noise_spacing)
        nodes = np.array([(x, y) for x in gx for y in gy])
        pick = nodes[rng.integers(0, len(nodes), noise_n)]
        pts = np.vstack([pts, pick + rng.normal(0.0, noise_spread, (noise_n, 2))])
    return pts


def write_fleet_csv(path: str | Path, n_records: int, n_cars: int = 500, seed: int = 7,
                    start: datetime | None = None, interval_s: int = 300,
                    extent_m: float = 20000.0, hotspots: int = 6) -> Path:
    """Write a projected-coordinate trajectory CSV of ``n_records`` fixes.

    Cars hop between a handful of hotspots; loaded runs alternate with empty
    cruising so every car yields several trips.
    """
    rng = np.random.default_rng(seed)
    start = start or datetime(2024, 5, 3, tzinfo=timezone.utc)
    spots = rng.uniform(0.2 * extent_m, 0.8 * extent_m, (hotspots, 2))
    per_car = np.full(n_cars, n_records // n_cars)
    per_car[: n_records % n_cars] += 1
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["car_id", "time", "lon", "lat", "speed", "direction", "is_load"])
        for car in range(n_cars):
            pos = spots[rng.integers(hotspots)] + rng.normal(0, 800, 2)
            t = start + timedelta(seconds=int(rng.integers(0, interval_s)))
            loaded = False
            left = int(rng.integers(2, 8))
            for _ in range(per_car[car]):
                if left == 0:
                    loaded = not loaded
                    left = int(rng.integers(2, 8))
                    if loaded:
                        pos = spots[rng.integers(hotspots)] + rng.normal(0, 800, 2)
                left -= 1
                pos = np.clip(pos + rng.normal(0, 150, 2), 0, extent_m)
                w.writerow([f"car{car:04d}", t.strftime("%Y-%m-%dT%H:%M:%S"), f"{pos[0]:.2f}",
                            f"{pos[1]:.2f}", f"{rng.uniform(0, 20):.1f}", f"{rng.uniform(0, 359.9):.1f}",
                            int(loaded)])
                t += timedelta(seconds=interval_s)
    return path
