"""Graph indices of a surface network and their per-window time series.

Ratios of counts (alpha, beta, gamma) are exact ``Fraction`` values; length
based indices are floats. ``None`` marks an index whose denominator is zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, TextIO

from .network import SurfaceNetwork

COLUMNS = ("window_index", "v", "e", "p", "L_km", "SA_km2", "mu", "nd", "alpha", "beta",
           "gamma", "eta", "theta", "euler_check")
NA = "NA"


@dataclass(frozen=True)
class GraphIndices:
    v: int
    e: int
    p: int
    L_km: float
    SA_km2: float
    mu: int
    nd: float | None
    alpha: Fraction | None
    beta: Fraction | None
    gamma: Fraction | None
    eta: float | None
    theta: float | None


def compute_indices_from_counts(v: int, e: int, p: int, L_km: float = 0.0, SA_km2: float = 0.0) -> GraphIndices:
    mu = e - v + p
    alpha_den = v * (v - 1) // 2 - (v - 1)
    gamma_den = v * (v - 1) // 2
    return GraphIndices(
        v=v, e=e, p=p, L_km=L_km, SA_km2=SA_km2, mu=mu,
        nd=L_km / SA_km2 if SA_km2 > 0 else None,
        alpha=Fraction(mu, alpha_den) if alpha_den else None,
        beta=Fraction(e, v) if v > 0 else None,
        gamma=Fraction(e, gamma_den) if v > 1 else None,
        eta=L_km / e if e > 0 else None,
        theta=L_km / v if v > 0 else None,
    )


def compute_indices(network: SurfaceNetwork) -> GraphIndices:
    return compute_indices_from_counts(network.v, network.e, network.p, network.L_km, network.SA_km2)


@dataclass(frozen=True)
class IndexRow:
    window_index: int
    indices: GraphIndices
    euler_check: int | None = None


def empty_indices(SA_km2: float = 0.0) -> GraphIndices:
    return compute_indices_from_counts(0, 0, 0, 0.0, SA_km2)


def assemble_time_series(rows: Iterable[IndexRow]) -> list[IndexRow]:
    """Order rows by window index and check the windows are contiguous from 0."""
    out = sorted(rows, key=lambda r: r.window_index)
    idx = [r.window_index for r in out]
    if idx != list(range(len(out))):
        raise ValueError(f"window indices are not contiguous from 0: {idx}")
    return out


def _fmt(value) -> str:
    if value is None:
        return NA
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else NA
    return str(value)


def write_time_series_csv(rows: Iterable[IndexRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        d = asdict(r.indices)
        w.writerow([r.window_index] + [_fmt(d[c]) for c in COLUMNS[1:-1]] + [_fmt(r.euler_check)])


def read_time_series_csv(fh: TextIO) -> list[dict[str, float | None]]:
    """Parse an indices CSV back into dicts of floats (``None`` for NA)."""
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
        raise ValueError(f"unexpected indices CSV header {reader.fieldnames}")
    rows = []
    for n, rec in enumerate(reader, start=2):
        try:
            rows.append({k: (None if v == NA else float(v)) for k, v in rec.items()})
        except (TypeError, ValueError) as exc:
            raise ValueError(f"line {n}: {exc}") from None
    return rows
