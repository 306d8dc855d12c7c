"""End-to-end runs: trajectories -> OD points -> per-window surfaces ->
critical features -> surface networks -> indices, written to disk with a
hash manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import ingest
from .critical_lines import extract_critical_lines, write_lines_geojson
from .critical_points import extract_critical_points, write_critical_points_csv
from .density import Extent, KdeParams, estimate_density, write_ascii_grid
from .errors import ConfigError, InputError
from .indices import IndexRow, assemble_time_series, compute_indices, empty_indices, write_time_series_csv
from .mesh import triangulate
from .network import build_surface_network, filter_significant_peaks, network_feature_collection

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegionConfig:
    path: str
    name: str | None = None


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    regions: list[RegionConfig] = field(default_factory=list)
    projected: bool = False
    bandwidth: float = 600.0
    cell_size: float | None = None
    window_secs: float = 3600.0
    horizon: tuple[datetime, datetime] | None = None
    threshold: float = 0.10
    out: str = "surfnet_out"
    sweep: list[float] = field(default_factory=list)
    jobs: int = 0  # 0: take SURFNET_JOBS, else 1
    export_raster: bool = False

    def validate(self) -> None:
        for name in ("bandwidth", "window_secs"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        if self.cell_size is not None and not self.cell_size > 0:
            raise ConfigError(f"cell_size must be positive, got {self.cell_size!r}")
        if not 0.0 <= self.threshold < 1.0:
            raise ConfigError(f"threshold must be in [0, 1), got {self.threshold!r}")
        if self.jobs < 0:
            raise ConfigError("jobs must be positive")
        if any(not (b > 0) for b in self.sweep):
            raise ConfigError("sweep bandwidths must be positive")
        if self.horizon is not None and not self.horizon[1] > self.horizon[0]:
            raise ConfigError("horizon end must be after its start")
        KdeParams(self.bandwidth, self.cell_size)

    def effective_jobs(self) -> int:
        if self.jobs:
            return self.jobs
        try:
            return max(1, int(os.environ.get("SURFNET_JOBS", "1")))
        except ValueError:
            raise ConfigError("SURFNET_JOBS must be an integer") from None

    def fingerprint(self) -> dict[str, Any]:
        """Output-relevant parameters only (no paths, no parallelism)."""
        return {
            "projected": self.projected,
            "bandwidth_m": self.bandwidth,
            "cell_size_m": self.cell_size if self.cell_size is not None else self.bandwidth / 10.0,
            "window_secs": self.window_secs,
            "horizon": None if self.horizon is None else [_fmt_time(t) for t in self.horizon],
            "threshold": self.threshold,
            "export_raster": self.export_raster,
        }


def _fmt_time(t: datetime) -> str:
    return t.astimezone(timezone.utc).strftime(ingest.TIME_FORMAT)


def _parse_horizon(value) -> tuple[datetime, datetime]:
    try:
        a, b = value
        return ingest._parse_time(str(a)), ingest._parse_time(str(b))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"horizon must be two YYYY-MM-DDTHH:MM:SS timestamps: {exc}") from None


_KEYS = {"input", "inputs", "region", "regions", "projected", "bandwidth", "cell_size", "window_secs",
         "horizon", "threshold", "out", "sweep", "jobs", "export_raster"}


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> PipelineConfig:
    """Read a TOML config (flat ``key = value``) and apply non-None overrides."""
    raw: dict[str, Any] = {}
    base = Path(".")
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid config {path}: {exc}") from exc
        base = Path(path).parent
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def rel(p: str) -> str:
        return str(p) if Path(p).is_absolute() or path is None else str(base / p)

    cfg = PipelineConfig()
    inputs = raw.get("inputs", raw.get("input", []))
    cfg.inputs = [rel(p) for p in ([inputs] if isinstance(inputs, str) else inputs)]
    regions = raw.get("regions", raw.get("region", []))
    if isinstance(regions, (str, dict)):
        regions = [regions]
    for r in regions:
        if isinstance(r, str):
            cfg.regions.append(RegionConfig(rel(r)))
        elif isinstance(r, dict) and "path" in r:
            cfg.regions.append(RegionConfig(rel(r["path"]), r.get("name")))
        else:
            raise ConfigError(f"bad region entry {r!r}")
    try:
        cfg.projected = bool(raw.get("projected", cfg.projected))
        cfg.bandwidth = float(raw.get("bandwidth", cfg.bandwidth))
        cfg.cell_size = None if raw.get("cell_size") is None else float(raw["cell_size"])
        cfg.window_secs = float(raw.get("window_secs", cfg.window_secs))
        cfg.threshold = float(raw.get("threshold", cfg.threshold))
        if (overrides or {}).get("out") is not None:
            cfg.out = str(overrides["out"])
        elif "out" in raw:
            cfg.out = rel(str(raw["out"]))
        sweep = raw.get("sweep", [])
        cfg.sweep = [float(b) for b in ([sweep] if isinstance(sweep, (int, float)) else sweep)]
        cfg.jobs = int(raw.get("jobs", 0))
        cfg.export_raster = bool(raw.get("export_raster", False))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None
    if raw.get("horizon") is not None:
        cfg.horizon = _parse_horizon(raw["horizon"])
    cfg.validate()
    return cfg


@dataclass
class RegionContext:
    name: str
    region: ingest.RegionSpec | None
    origin: tuple[float, float] | None
    extent: Extent | None
    mask: np.ndarray | None = None  # True where a grid cell centre lies outside the region


@dataclass
class WindowResult:
    region: str
    window_index: int
    n_points: int
    peaks: int
    pits: int
    passes: int
    significant_peaks: int
    row: IndexRow
    files: dict[str, bytes]


def _slug(name: str) -> str:
    keep = "".join(c if c.isalnum() or c in "-_." else "_" for c in name)
    return keep or "region"


def _region_contexts(cfg: PipelineConfig, records: Sequence[ingest.TrajectoryRecord]) -> list[RegionContext]:
    ctxs = []
    for rc in cfg.regions:
        region, origin = ingest.load_region(rc.path, rc.name, degrees=not cfg.projected)
        ctxs.append(RegionContext(region.name, region, origin, None))
    if not ctxs:
        origin = None
        if not cfg.projected and records:
            lon = np.array([r.lon for r in records])
            lat = np.array([r.lat for r in records])
            origin = (float(np.median(lon)), float(np.median(lat)))
        ctxs.append(RegionContext("all", None, origin, None))
    names = [_slug(c.name) for c in ctxs]
    if len(set(names)) != len(names):
        raise ConfigError(f"region names must be unique, got {names}")
    return ctxs


def _grid_frame(ctx: RegionContext, xy: np.ndarray, params: KdeParams) -> KdeParams | None:
    if ctx.region is not None:
        xmin, ymin, xmax, ymax = ctx.region.bounds
    elif len(xy):
        (xmin, ymin), (xmax, ymax) = xy.min(axis=0), xy.max(axis=0)
    else:
        return None
    ext = Extent(float(xmin), float(ymin), float(xmax), float(ymax)).padded(params.bandwidth_h)
    return replace(params, extent=ext)


def _hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode("utf-8")


def process_window(points_xy: np.ndarray, params: KdeParams, threshold: float, window_index: int,
                   region: str = "all", mask: np.ndarray | None = None,
                   export_raster: bool = False) -> WindowResult:
    """Run one surface through KDE, critical features, network and indices.

    Pure function: returns serialized artifacts instead of writing them.
    """
    grid = estimate_density(points_xy, params)
    mesh = triangulate(grid)
    cps = extract_critical_points(mesh)
    lines = extract_critical_lines(mesh, cps)
    sig = filter_significant_peaks(cps, mesh, lines.ridgelines, threshold)
    n_cells = grid.ncols * grid.nrows if mask is None else int(np.count_nonzero(~mask))
    sa_km2 = n_cells * grid.cell_size ** 2 / 1e6
    net = build_surface_network(sig, lines.fcns, lines.ridgelines, sa_km2, cps.euler_check())
    row = IndexRow(window_index, compute_indices(net), net.euler_check)

    files: dict[str, bytes] = {}
    buf = io.StringIO()
    write_critical_points_csv(cps, mesh, window_index, buf)
    files["critical_points.csv"] = buf.getvalue().encode("utf-8")
    buf = io.StringIO()
    write_lines_geojson(lines.ridgelines + lines.courselines, mesh, window_index, buf)
    files["lines.geojson"] = buf.getvalue().encode("utf-8")
    files["network.geojson"] = _json_bytes(network_feature_collection(net, mesh, window_index))
    files["summary.json"] = _json_bytes(net.summary(window_index))
    if export_raster:
        import tempfile
        with tempfile.TemporaryDirectory() as td:
            p = Path(td) / "density.asc"
            write_ascii_grid(grid, p)
            files["density.asc"] = p.read_bytes()
    return WindowResult(region, window_index, len(points_xy), cps.n_peaks, cps.n_pits, cps.n_passes,
                        len(sig), row, files)


def _empty_window(region: str, window_index: int) -> WindowResult:
    """Artifacts for a window with no grid frame (no region and no points at all)."""
    empty_fc = {"type": "FeatureCollection", "features": []}
    files = {
        "critical_points.csv": b"window_index,kind,x,y,z,multiplicity\n",
        "lines.geojson": (json.dumps(empty_fc, sort_keys=True) + "\n").encode("utf-8"),
        "network.geojson": _json_bytes(empty_fc),
        "summary.json": _json_bytes({"window_index": window_index, "v": 0, "e": 0, "p": 0,
                                     "L_km": 0.0, "SA_km2": 0.0, "euler_check": None}),
    }
    return WindowResult(region, window_index, 0, 0, 0, 0, 0, IndexRow(window_index, empty_indices(), None), files)


def _default_horizon(points: Sequence[ingest.ODPoint], width: float) -> tuple[datetime, datetime] | None:
    if not points:
        return None
    first = min(p.time for p in points)
    last = max(p.time for p in points)
    start = first.replace(hour=0, minute=0, second=0, microsecond=0)
    span = (last - start).total_seconds()
    n = int(span // width) + 1
    return start, start + timedelta(seconds=n * width)


@dataclass
class RunResult:
    manifest: dict
    results: list[WindowResult]
    out: Path


def run_pipeline(cfg: PipelineConfig, write: bool = True) -> RunResult:
    """Execute the full workflow and write every artifact plus ``manifest.json``."""
    cfg.validate()
    report = ingest.read_trajectories(cfg.inputs, projected=cfg.projected)
    trips_raw = ingest.extract_trips(report.records, origin=None)
    ctxs = _region_contexts(cfg, report.records)
    params = KdeParams(cfg.bandwidth, cfg.cell_size)

    all_points = [p for t in trips_raw for p in t]
    horizon = cfg.horizon or _default_horizon(all_points, cfg.window_secs)

    stats: dict[str, Any] = {"records": len(report.records), "rejected_rows": report.n_rejected,
                             "trips": len(trips_raw), "regions": {}}
    jobs = []
    for ctx in ctxs:
        trips = trips_raw
        if ctx.origin is not None:
            trips = [tuple(replace(p, x=xy[0], y=xy[1]) for p, xy in
                           zip(t, (ingest.project(q.x, q.y, ctx.origin) for q in t))) for t in trips_raw]
        if ctx.region is not None:
            kept, removed = ingest.filter_noise(trips, ctx.region)
        else:
            kept, removed = [p for t in trips for p in t], 0
        buckets, dropped = ingest.bucket_by_window(kept, cfg.window_secs, horizon) if horizon else ([], 0)
        xy_all = np.array([(p.x, p.y) for p in kept], dtype=np.float64).reshape(-1, 2)
        frame = _grid_frame(ctx, xy_all, params)
        if frame is not None and ctx.region is not None:
            xs = frame.extent.xmin + (np.arange(math.ceil(frame.extent.width / frame.cell_size - 1e-9)) + 0.5) * frame.cell_size
            ys = frame.extent.ymin + (np.arange(math.ceil(frame.extent.height / frame.cell_size - 1e-9)) + 0.5) * frame.cell_size
            X, Y = np.meshgrid(xs, ys)
            ctx.mask = ~ctx.region.contains(X.ravel(), Y.ravel()).reshape(X.shape)
        ctx.extent = None if frame is None else frame.extent
        stats["regions"][ctx.name] = {"trips_removed": removed, "od_points": len(kept),
                                      "points_outside_horizon": dropped}
        for b in buckets:
            jobs.append((ctx, b.window_index, b.xy(), frame))

    def run_job(job) -> WindowResult:
        ctx, widx, xy, frame = job
        if frame is None:
            return _empty_window(ctx.name, widx)
        return process_window(xy, frame, cfg.threshold, widx, ctx.name, ctx.mask, cfg.export_raster)

    n_jobs = cfg.effective_jobs()
    if n_jobs == 1:
        results = [run_job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_job, jobs))

    out = Path(cfg.out)
    files: dict[str, bytes] = {}
    windows: dict[str, list[WindowResult]] = {c.name: [] for c in ctxs}
    for res in results:
        windows[res.region].append(res)
        for fname, data in res.files.items():
            files[f"{_slug(res.region)}/window_{res.window_index:03d}/{fname}"] = data
    for ctx in ctxs:
        buf = io.StringIO()
        write_time_series_csv(assemble_time_series(r.row for r in windows[ctx.name]), buf)
        files[f"{_slug(ctx.name)}/indices.csv"] = buf.getvalue().encode("utf-8")

    manifest = {
        "format": "surfnet-manifest/1",
        "parameters": cfg.fingerprint(),
        "horizon": None if horizon is None else [_fmt_time(t) for t in horizon],
        "regions": [_slug(c.name) for c in ctxs],
        "n_windows": 0 if horizon is None else ingest.n_windows(horizon, cfg.window_secs),
        "stats": stats,
        "files": [{"path": k, "sha256": _hash(v), "bytes": len(v)} for k, v in sorted(files.items())],
    }
    if write:
        for rel, data in files.items():
            dest = out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_bytes(_json_bytes(manifest))
    return RunResult(manifest, results, out)


SWEEP_COLUMNS = ("bandwidth_m", "region", "window_index", "n_points", "peaks", "passes",
                 "significant_peaks", "v", "e", "mu")


def run_sweep(cfg: PipelineConfig) -> list[dict]:
    """Run the pipeline once per bandwidth into ``<out>/h_<bandwidth>/`` and
    tabulate peak, pass and network counts per window in ``<out>/sweep.csv``."""
    if not cfg.sweep:
        raise ConfigError("sweep needs at least one bandwidth")
    bandwidths = []
    for b in cfg.sweep:
        if b in bandwidths:
            log.warning("duplicate sweep bandwidth %g ignored", b)
            continue
        bandwidths.append(b)
    if cfg.cell_size is not None and cfg.cell_size > min(bandwidths):
        raise ConfigError(f"cell_size {cfg.cell_size} exceeds the smallest sweep bandwidth")
    table = []
    for bw in bandwidths:
        sub = replace(cfg, bandwidth=bw, sweep=[], out=str(Path(cfg.out) / f"h_{bw:g}"))
        for res in run_pipeline(sub).results:
            table.append({"bandwidth_m": bw, "region": res.region, "window_index": res.window_index,
                          "n_points": res.n_points, "peaks": res.peaks, "passes": res.passes,
                          "significant_peaks": res.significant_peaks, "v": res.row.indices.v,
                          "e": res.row.indices.e, "mu": res.row.indices.mu})
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({**row, "bandwidth_m": f"{row['bandwidth_m']:g}"})
    return table
