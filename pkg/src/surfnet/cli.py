"""Command line entry point: ``surfnet run | sweep | chart``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, InputError, InvariantError

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3, 4


def _abs(paths):
    if paths is None:
        return None
    return [str(Path(p).resolve()) for p in paths]


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its keys")
    p.add_argument("--input", action="append", help="trajectory CSV (repeatable)")
    p.add_argument("--region", action="append", help="GeoJSON polygon of a region (repeatable)")
    p.add_argument("--projected", action="store_true", default=None,
                   help="input lon/lat columns and region polygons are already in meters")
    p.add_argument("--bandwidth", type=float, help="KDE bandwidth in meters (default 600)")
    p.add_argument("--cell-size", type=float, help="raster cell size in meters (default bandwidth/10)")
    p.add_argument("--window-secs", type=float, help="time window width in seconds (default 3600)")
    p.add_argument("--horizon", nargs=2, metavar=("START", "END"),
                   help="analysis horizon as two YYYY-MM-DDTHH:MM:SS timestamps")
    p.add_argument("--threshold", type=float, help="significant-peak threshold (default 0.10)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel jobs (default $SURFNET_JOBS or 1)")
    p.add_argument("--export-raster", action="store_true", default=None, help="also write ESRI ASCII grids")


def _overrides(args) -> dict:
    return {
        "inputs": _abs(args.input),
        "regions": _abs(args.region),
        "projected": args.projected,
        "bandwidth": args.bandwidth,
        "cell_size": args.cell_size,
        "window_secs": args.window_secs,
        "horizon": args.horizon,
        "threshold": args.threshold,
        "out": args.out,
        "jobs": args.jobs,
        "export_raster": args.export_raster,
        "sweep": getattr(args, "bandwidths", None),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surfnet", description="Mobility hotspot surface networks")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline")
    _add_pipeline_flags(run)

    sweep = sub.add_parser("sweep", help="run the pipeline for several bandwidths and compare")
    _add_pipeline_flags(sweep)
    sweep.add_argument("--bandwidths", type=lambda s: [float(v) for v in s.split(",") if v.strip()],
                       help="comma-separated bandwidths in meters, e.g. 150,600,2000")

    chart = sub.add_parser("chart", help="render SVG charts from an indices CSV")
    chart.add_argument("csv", help="indices CSV written by 'run'")
    chart.add_argument("--out", help="directory for the SVG files (default: next to the CSV)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    from . import pipeline
    try:
        if args.command == "chart":
            from .chart import emit_chart
            try:
                report = emit_chart(args.csv, args.out or Path(args.csv).parent)
            except OSError as exc:
                raise InputError(str(exc)) from exc
            except ValueError as exc:
                raise ConfigError(f"malformed indices CSV: {exc}") from exc
            for panel in report.values():
                print(panel["path"])
            return EXIT_OK

        cfg = pipeline.load_config(args.config, _overrides(args))
        if args.command == "run":
            result = pipeline.run_pipeline(cfg)
            print(result.out / "manifest.json")
        else:
            table = pipeline.run_sweep(cfg)
            print(Path(cfg.out) / "sweep.csv")
            logging.getLogger(__name__).info("sweep produced %d rows", len(table))
        return EXIT_OK
    except InputError as exc:
        print(f"surfnet: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"surfnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"surfnet: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
