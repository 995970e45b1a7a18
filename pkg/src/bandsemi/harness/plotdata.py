"""Plot-data emission: turn run CSVs into whitespace-separated data files."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..spectra import semicircle_density

PLOT_KINDS = ("esd_histogram", "moment_vs_n", "variance_loglog")
HISTOGRAM_RANGE = (-2.5, 2.5)
HISTOGRAM_BINS = 50


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def _require_columns(rows: list[dict], columns: tuple[str, ...], path: Path) -> None:
    if not rows:
        raise ValueError(f"{path}: no data rows")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}; found {sorted(rows[0])}")


def _select_order(rows: list[dict], k: int | None, path: Path) -> list[dict]:
    orders = sorted({row["k"] for row in rows}, key=float)
    if k is None:
        if len(orders) > 1:
            raise ValueError(f"{path}: several moment orders {orders}; pass k explicitly")
        return rows
    wanted = [row for row in rows if float(row["k"]) == float(k)]
    if not wanted:
        raise ValueError(f"{path}: no rows with moment order {k}")
    return wanted


def emit_plot_data(
    csv_path: str | Path,
    kind: str,
    out_path: str | Path,
    k: int | None = None,
    render: bool = False,
) -> Path:
    """Write a two/three-column whitespace-separated plot-data file.

    Kinds: `esd_histogram` bins eigenvalues over [-2.5, 2.5] (50 bins) and
    adds the semicircle density at bin centers; `moment_vs_n` emits
    (n, mean, stderr, reference); `variance_loglog` emits (ln n, ln var).
    With `render`, an SVG of the same data is written next to the file.
    """
    csv_path, out_path = Path(csv_path), Path(out_path)
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    rows = _read_csv(csv_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    if kind == "esd_histogram":
        _require_columns(rows, ("eigenvalue",), csv_path)
        values = np.array([float(row["eigenvalue"]) for row in rows])
        edges = np.linspace(*HISTOGRAM_RANGE, HISTOGRAM_BINS + 1)
        counts, _ = np.histogram(values, bins=edges)
        width = edges[1] - edges[0]
        centers = (edges[:-1] + edges[1:]) / 2.0
        empirical = counts / (values.size * width)
        header = "# bin_center empirical_density semicircle_density"
        data = [
            (c, e, semicircle_density(float(c))) for c, e in zip(centers, empirical)
        ]
    elif kind == "moment_vs_n":
        _require_columns(
            rows, ("n", "k", "mean_moment", "stderr_moment", "reference"), csv_path
        )
        wanted = sorted(_select_order(rows, k, csv_path), key=lambda r: float(r["n"]))
        header = "# n mean stderr reference"
        data = [
            (
                float(r["n"]),
                float(r["mean_moment"]),
                float(r["stderr_moment"]),
                float(r["reference"]),
            )
            for r in wanted
        ]
    else:  # variance_loglog
        _require_columns(rows, ("n", "k", "variance"), csv_path)
        wanted = sorted(_select_order(rows, k, csv_path), key=lambda r: float(r["n"]))
        header = "# log_n log_variance"
        data = [
            (math.log(float(r["n"])), math.log(float(r["variance"]))) for r in wanted
        ]

    with open(out_path, "w", newline="") as handle:
        handle.write(header + "\n")
        for row in data:
            handle.write(" ".join(repr(float(cell)) for cell in row) + "\n")

    if render:
        _render(kind, data, out_path.with_suffix(".svg"))
    return out_path


def _render(kind: str, data: list[tuple], svg_path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    if kind == "esd_histogram":
        centers = [row[0] for row in data]
        ax.bar(centers, [row[1] for row in data], width=centers[1] - centers[0], alpha=0.6)
        ax.plot(centers, [row[2] for row in data], "k-", lw=1.5)
        ax.set_xlabel("eigenvalue")
        ax.set_ylabel("density")
    elif kind == "moment_vs_n":
        ax.errorbar(
            [row[0] for row in data],
            [row[1] for row in data],
            yerr=[row[2] for row in data],
            fmt="o-",
        )
        ax.axhline(data[0][3], color="k", ls="--", lw=1)
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("moment")
    else:
        ax.plot([row[0] for row in data], [row[1] for row in data], "o-")
        ax.set_xlabel("log n")
        ax.set_ylabel("log variance")
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
