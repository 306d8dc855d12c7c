"""SVG line charts of an indices time series."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .indices import read_time_series_csv  # noqa: E402

PANELS = {
    "complexity": ("mu", "nd", "beta"),
    "connectivity": ("alpha", "gamma", "eta", "theta"),
}
LABELS = {"mu": "cyclomatic number", "nd": "network density", "beta": "beta",
          "alpha": "alpha", "gamma": "gamma", "eta": "eta (km)", "theta": "theta (km)"}


def emit_chart(csv_path: str | Path, out_dir: str | Path, stem: str | None = None) -> dict[str, dict]:
    """Write ``<stem>_complexity.svg`` and ``<stem>_connectivity.svg``.

    NA values leave gaps in a series; a series that is NA everywhere is left
    out and named in the legend title. Returns, per panel, the file path and
    the plotted and omitted series.
    """
    csv_path = Path(csv_path)
    with open(csv_path, encoding="utf-8", newline="") as fh:
        rows = read_time_series_csv(fh)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or csv_path.stem
    x = np.array([r["window_index"] for r in rows], dtype=float)

    plt.rcParams["svg.hashsalt"] = "surfnet"
    report = {}
    for panel, cols in PANELS.items():
        fig, ax = plt.subplots(figsize=(8, 4))
        plotted, omitted = [], []
        for col in cols:
            y = np.array([np.nan if r[col] is None else r[col] for r in rows], dtype=float)
            if np.isnan(y).all():
                omitted.append(col)
                continue
            ax.plot(x, y, marker="o", label=LABELS[col])
            plotted.append(col)
        ax.set_xlabel("time window")
        ax.set_title(f"Graph indices over time: {panel}")
        if plotted or omitted:
            title = f"no data: {', '.join(omitted)}" if omitted else None
            ax.legend(title=title, loc="best")
        path = out_dir / f"{stem}_{panel}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        report[panel] = {"path": str(path), "series": plotted, "omitted": omitted}
    return report
