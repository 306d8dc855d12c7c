import csv
import json
from pathlib import Path

import pytest

from surfnet import cli, pipeline
from surfnet.errors import ConfigError
from surfnet.indices import COLUMNS
from surfnet.synthetic import write_fleet_csv

HORIZON = ["2024-05-03T00:00:00", "2024-05-03T03:00:00"]


def square(path, name, x0, y0, size):
    ring = [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]
    doc = {"type": "Feature", "properties": {"name": name}, "geometry": {"type": "Polygon", "coordinates": [ring]}}
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def fleet(tmp_path_factory):
    d = tmp_path_factory.mktemp("fleet")
    csv_path = write_fleet_csv(d / "fleet.csv", 3000, n_cars=60, extent_m=8000, seed=3)
    west = square(d / "west.geojson", "west", 0, 0, 4000)
    east = square(d / "east.geojson", "east", 4000, 0, 4000)
    return d, csv_path, west, east


def run_args(fleet, out, *extra, regions=("west", "east")):
    d, csv_path, west, east = fleet
    args = ["run", "--input", str(csv_path), "--projected", "--bandwidth", "800", "--cell-size", "200",
            "--horizon", *HORIZON, "--out", str(out)]
    for r in regions:
        args += ["--region", str(west if r == "west" else east)]
    return args + list(extra)


def test_two_regions_three_windows(fleet, tmp_path):
    assert cli.main(run_args(fleet, tmp_path)) == 0
    summaries = sorted(tmp_path.glob("*/window_*/summary.json"))
    assert len(summaries) == 6
    for region in ("west", "east"):
        with open(tmp_path / region / "indices.csv") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == COLUMNS and len(rows) == 4
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["n_windows"] == 3 and manifest["regions"] == ["west", "east"]
    listed = {f["path"] for f in manifest["files"]}
    assert "west/window_002/lines.geojson" in listed
    assert not any(p.endswith("density.asc") for p in listed)


def test_region_isolation(fleet, tmp_path):
    both, only = tmp_path / "both", tmp_path / "only"
    assert cli.main(run_args(fleet, both)) == 0
    assert cli.main(run_args(fleet, only, regions=("west",))) == 0
    for f in sorted((only / "west").rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (both / "west" / f.relative_to(only / "west")).read_bytes()


def test_determinism_and_jobs(fleet, tmp_path):
    outs = []
    for i, jobs in enumerate(("1", "1", "3")):
        out = tmp_path / str(i)
        assert cli.main(run_args(fleet, out, "--jobs", jobs)) == 0
        outs.append((out / "manifest.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_export_raster(fleet, tmp_path):
    assert cli.main(run_args(fleet, tmp_path, "--export-raster", regions=("west",))) == 0
    asc = tmp_path / "west" / "window_000" / "density.asc"
    assert asc.read_text().startswith("ncols")


def test_empty_input_with_horizon(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("car_id,time,lon,lat,speed,direction,is_load\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--input", str(src), "--projected", "--horizon", *HORIZON, "--out", str(out)]) == 0
    with open(out / "all" / "indices.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["v"] for r in rows] == ["0", "0", "0"]
    assert rows[0]["beta"] == "NA" and rows[0]["alpha"] == "0.0"


def test_config_file_relative_paths(fleet, tmp_path):
    d, csv_path, west, _ = fleet
    cfg = d / "job.toml"
    cfg.write_text(f'input = "{csv_path.name}"\nregion = {{ path = "{west.name}", name = "w" }}\n'
                   f'projected = true\nbandwidth = 800\ncell_size = 200\nhorizon = {json.dumps(HORIZON)}\n')
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "w" / "indices.csv").exists()


@pytest.mark.parametrize("extra,code", [
    (["--bandwidth", "-5"], 3),
    (["--cell-size", "900"], 3),
    (["--threshold", "1.5"], 3),
    (["--window-secs", "0"], 3),
])
def test_config_errors(fleet, tmp_path, extra, code):
    assert cli.main(run_args(fleet, tmp_path, *extra)) == code


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("colour = 'red'\n")
    assert cli.main(["run", "--config", str(cfg)]) == 3
    with pytest.raises(ConfigError):
        pipeline.load_config(cfg)


def test_input_errors(tmp_path):
    assert cli.main(["run", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("id,when\n1,2\n")
    assert cli.main(["run", "--input", str(bad), "--out", str(tmp_path)]) == 2


def test_sweep(fleet, tmp_path):
    args = run_args(fleet, tmp_path, "--bandwidths", "800,1600,800", regions=("west",))
    args[0] = "sweep"
    assert cli.main(args) == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert sorted({r["bandwidth_m"] for r in rows}) == ["1600", "800"]
    assert len(rows) == 6
    assert (tmp_path / "h_800" / "manifest.json").exists()


def test_sweep_single_value(fleet, tmp_path):
    args = run_args(fleet, tmp_path, "--bandwidths", "800", regions=("west",))
    args[0] = "sweep"
    assert cli.main(args) == 0
    assert (tmp_path / "h_800" / "west" / "indices.csv").exists()


def test_sweep_needs_bandwidths(fleet, tmp_path):
    args = run_args(fleet, tmp_path, regions=("west",))
    args[0] = "sweep"
    assert cli.main(args) == 3


def _indices_csv(path, n, na_cols=()):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(n):
            w.writerow([i] + ["NA" if c in na_cols else str(i + 1.0) for c in COLUMNS[1:]])
    return path


def test_chart_series(tmp_path):
    from surfnet.chart import emit_chart
    rep = emit_chart(_indices_csv(tmp_path / "ix.csv", 18), tmp_path / "svg")
    assert len(rep["complexity"]["series"]) == 3
    assert len(rep["connectivity"]["series"]) == 4
    assert Path(rep["complexity"]["path"]).read_text().lstrip().startswith("<?xml")


def test_chart_all_na_column_omitted(tmp_path):
    from surfnet.chart import emit_chart
    rep = emit_chart(_indices_csv(tmp_path / "ix.csv", 5, na_cols=("alpha",)), tmp_path)
    assert rep["connectivity"]["omitted"] == ["alpha"]
    assert "alpha" not in rep["connectivity"]["series"]


def test_chart_single_row_and_determinism(tmp_path):
    src = _indices_csv(tmp_path / "ix.csv", 1)
    assert cli.main(["chart", str(src), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["chart", str(src), "--out", str(tmp_path / "b")]) == 0
    for name in ("ix_complexity.svg", "ix_connectivity.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_chart_bad_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    assert cli.main(["chart", str(bad)]) == 3
    assert cli.main(["chart", str(tmp_path / "nope.csv")]) == 2
