"""Trajectory ingestion: CSV parsing, loaded-trip OD extraction, region
filtering and time-window bucketing."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from itertools import groupby
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon, shape

from .errors import ConfigError, InputError

log = logging.getLogger(__name__)

HEADER = ("car_id", "time", "lon", "lat", "speed", "direction", "is_load")
TIME_FORMAT = "%Y-%m-%dT%H:%M:%S"
EARTH_RADIUS_M = 6371008.8


@dataclass(frozen=True)
class TrajectoryRecord:
    car_id: str
    time: datetime
    lon: float
    lat: float
    speed: float | None
    direction: float | None
    is_load: bool
    line: int = 0  # source line number, used as the tie-break for duplicate timestamps


@dataclass(frozen=True)
class ODPoint:
    car_id: str
    kind: str  # "origin" | "destination"
    x: float
    y: float
    time: datetime
    trip_id: int


@dataclass
class ParseReport:
    records: list[TrajectoryRecord] = field(default_factory=list)
    rejects: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)


@dataclass
class HourBucket:
    window_index: int
    start: datetime
    end: datetime
    points: list[ODPoint] = field(default_factory=list)

    def xy(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, 2))
        return np.array([(p.x, p.y) for p in self.points], dtype=np.float64)


class RegionSpec:
    """A named study region: a simple polygon in projected meters.

    Points on the boundary count as inside.
    """

    def __init__(self, name: str, coords: Sequence[Sequence[float]]):
        poly = Polygon(coords)
        if not poly.is_valid or not poly.exterior.is_simple or poly.area <= 0:
            raise ConfigError(f"region {name!r}: polygon must be simple with positive area")
        self.name = name
        self.polygon = poly

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.polygon.bounds

    def contains(self, x, y) -> np.ndarray:
        return shapely.covers(self.polygon, shapely.points(np.asarray(x, float), np.asarray(y, float)))

    def __repr__(self) -> str:
        return f"RegionSpec({self.name!r}, area={self.polygon.area:.1f})"


def _parse_time(text: str) -> datetime:
    return datetime.strptime(text, TIME_FORMAT).replace(tzinfo=timezone.utc)


def _optional_float(text: str) -> float | None:
    text = text.strip()
    return float(text) if text else None


def parse_trajectory_file(stream: IO[bytes] | IO[str], projected: bool = False) -> ParseReport:
    """Parse a trajectory CSV into records, tallying rejected rows.

    With ``projected=True`` the lon/lat columns carry planar x/y meters and
    the geographic bounds checks are skipped.
    """
    if not isinstance(stream, io.TextIOBase):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("trajectory file is empty (missing header)") from None
    except UnicodeDecodeError as exc:
        raise InputError(f"trajectory file is not UTF-8: {exc}") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise InputError(f"bad header {header!r}, expected {','.join(HEADER)}")

    report = ParseReport()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        try:
            report.records.append(_parse_row(row, line, projected))
        except (ValueError, IndexError) as exc:
            report.rejects.append((line, str(exc)))
    if report.rejects:
        log.warning("rejected %d trajectory rows (first at line %d: %s)",
                    report.n_rejected, *report.rejects[0])
    return report


def _parse_row(row: list[str], line: int, projected: bool) -> TrajectoryRecord:
    if len(row) != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} fields, got {len(row)}")
    car_id, t, lon, lat, speed, direction, is_load = (c.strip() for c in row)
    if not car_id:
        raise ValueError("empty car_id")
    lon_f, lat_f = float(lon), float(lat)
    if not (math.isfinite(lon_f) and math.isfinite(lat_f)):
        raise ValueError("non-finite position")
    if not projected and not (-90.0 <= lat_f <= 90.0 and -180.0 <= lon_f <= 180.0):
        raise ValueError(f"position out of range: lon={lon_f}, lat={lat_f}")
    speed_f, dir_f = _optional_float(speed), _optional_float(direction)
    if speed_f is not None and not speed_f >= 0:
        raise ValueError(f"negative speed {speed_f}")
    if dir_f is not None and not 0.0 <= dir_f < 360.0:
        raise ValueError(f"direction out of range {dir_f}")
    if is_load not in ("0", "1"):
        raise ValueError(f"is_load must be 0 or 1, got {is_load!r}")
    return TrajectoryRecord(car_id, _parse_time(t), lon_f, lat_f, speed_f, dir_f, is_load == "1", line)


def read_trajectories(paths: Iterable[str | Path], projected: bool = False) -> ParseReport:
    merged = ParseReport()
    offset = 0
    for path in paths:
        try:
            with open(path, "rb") as fh:
                rep = parse_trajectory_file(fh, projected=projected)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        # keep file-position order unique across several inputs
        merged.records.extend(
            TrajectoryRecord(r.car_id, r.time, r.lon, r.lat, r.speed, r.direction, r.is_load, r.line + offset)
            for r in rep.records)
        merged.rejects.extend((ln + offset, msg) for ln, msg in rep.rejects)
        offset += 1 + max([r.line for r in rep.records] + [ln for ln, _ in rep.rejects] + [0])
    return merged


def project(lon, lat, origin: tuple[float, float]):
    """Local equirectangular projection about ``origin`` (lon0, lat0), in meters."""
    lon0, lat0 = origin
    k = math.pi / 180.0
    x = EARTH_RADIUS_M * math.cos(lat0 * k) * (np.asarray(lon, float) - lon0) * k
    y = EARTH_RADIUS_M * (np.asarray(lat, float) - lat0) * k
    if np.ndim(x) == 0:
        return float(x), float(y)
    return x, y


def unproject(x, y, origin: tuple[float, float]):
    lon0, lat0 = origin
    k = math.pi / 180.0
    lon = lon0 + np.asarray(x, float) / (EARTH_RADIUS_M * math.cos(lat0 * k) * k)
    lat = lat0 + np.asarray(y, float) / (EARTH_RADIUS_M * k)
    if np.ndim(lon) == 0:
        return float(lon), float(lat)
    return lon, lat


def extract_trips(records: Sequence[TrajectoryRecord],
                  origin: tuple[float, float] | None = None) -> list[tuple[ODPoint, ODPoint]]:
    """Turn each maximal run of loaded fixes per car into an (origin, destination) pair.

    Records are sorted by (car_id, time); equal timestamps keep file order.
    ``origin=None`` means positions are already projected meters.
    """
    ordered = sorted(records, key=lambda r: (r.car_id, r.time, r.line))
    for a, b in zip(ordered, ordered[1:]):
        if a.car_id == b.car_id and a.time == b.time:
            log.warning("duplicate timestamp for car %s at %s (lines %d, %d)",
                        a.car_id, a.time.isoformat(), a.line, b.line)

    def pos(r: TrajectoryRecord) -> tuple[float, float]:
        return (r.lon, r.lat) if origin is None else project(r.lon, r.lat, origin)

    def endpoints(run: list[TrajectoryRecord], trip_id: int) -> tuple[ODPoint, ODPoint]:
        first, last = run[0], run[-1]
        return (ODPoint(first.car_id, "origin", *pos(first), first.time, trip_id),
                ODPoint(last.car_id, "destination", *pos(last), last.time, trip_id))

    trips: list[tuple[ODPoint, ODPoint]] = []
    for _, car_records in groupby(ordered, key=lambda r: r.car_id):
        trip_id = 0
        for loaded, run in groupby(car_records, key=lambda r: r.is_load):
            if loaded:
                trips.append(endpoints(list(run), trip_id))
                trip_id += 1
    return trips


def extract_od_points(records: Sequence[TrajectoryRecord],
                      origin: tuple[float, float] | None = None) -> list[ODPoint]:
    return [p for trip in extract_trips(records, origin) for p in trip]


def filter_noise(trips: Sequence[tuple[ODPoint, ODPoint]], region: RegionSpec) -> tuple[list[ODPoint], int]:
    """Drop trips with an endpoint strictly outside ``region``; returns (kept points, removed trips)."""
    if not trips:
        return [], 0
    xs = np.array([[o.x, d.x] for o, d in trips])
    ys = np.array([[o.y, d.y] for o, d in trips])
    inside = region.contains(xs.ravel(), ys.ravel()).reshape(-1, 2).all(axis=1)
    kept = [p for trip, ok in zip(trips, inside) if ok for p in trip]
    removed = int((~inside).sum())
    if removed:
        log.info("region %s: removed %d of %d trips outside the boundary", region.name, removed, len(trips))
    return kept, removed


def n_windows(horizon: tuple[datetime, datetime], window_width: float) -> int:
    span = (horizon[1] - horizon[0]).total_seconds()
    return int(math.ceil(span / window_width))


def bucket_by_window(points: Sequence[ODPoint], window_width: float,
                     horizon: tuple[datetime, datetime]) -> tuple[list[HourBucket], int]:
    """Assign points to half-open windows ``[start + k*w, start + (k+1)*w)``.

    Every window of the horizon is emitted, empty or not. Returns the buckets
    and the number of points dropped for falling outside the horizon.
    """
    if not window_width > 0:
        raise ConfigError("window width must be positive")
    start, end = horizon
    if not end > start:
        raise ConfigError("horizon must be non-empty")
    count = n_windows(horizon, window_width)
    buckets = [HourBucket(k, start + timedelta(seconds=k * window_width),
                          min(end, start + timedelta(seconds=(k + 1) * window_width)))
               for k in range(count)]
    dropped = 0
    for p in points:
        if not start <= p.time < end:
            dropped += 1
            continue
        k = int((p.time - start).total_seconds() // window_width)
        buckets[k].points.append(p)
    if dropped:
        log.info("dropped %d OD points outside the horizon", dropped)
    return buckets, dropped


def load_region(path: str | Path, name: str | None = None,
                degrees: bool = False) -> tuple[RegionSpec, tuple[float, float] | None]:
    """Load a GeoJSON Polygon (bare geometry, Feature, or single-feature collection).

    With ``degrees=True`` the polygon is projected about its own centroid,
    which is returned as the projection origin for that region's records.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read region {path}: {exc}") from exc
    props = {}
    if doc.get("type") == "FeatureCollection":
        feats = doc.get("features", [])
        if len(feats) != 1:
            raise ConfigError(f"{path}: expected exactly one feature")
        doc = feats[0]
    if doc.get("type") == "Feature":
        props = doc.get("properties") or {}
        doc = doc["geometry"]
    if doc.get("type") != "Polygon":
        raise ConfigError(f"{path}: geometry must be a Polygon")
    ring = doc["coordinates"][0]
    name = name or props.get("name") or Path(path).stem
    if not degrees:
        return RegionSpec(name, ring), None
    c = shape(doc).centroid
    origin = (c.x, c.y)
    x, y = project([p[0] for p in ring], [p[1] for p in ring], origin)
    return RegionSpec(name, list(zip(x, y))), origin
