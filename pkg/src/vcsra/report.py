"""Result emission: RFC-4180-style CSV with commented provenance header,
and matplotlib rendering of result tables to image files next to the CSV.
"""
from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.10g}"
    return str(value)


def write_csv(path, rows, metadata: dict, columns=None) -> None:
    """Write rows with a ``#``-commented metadata header.

    Every output file carries the fully resolved configuration, seed, and
    trial count, so any row is reproducible from the file alone.
    """
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key} = {_fmt(value)}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col, "")) for col in columns])


def read_csv(path):
    """Read back a vcsra CSV: (metadata dict, list of row dicts, columns)."""
    metadata: dict = {}
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header: list[str] | None = None
        for record in csv.reader(line for line in fh):
            if record and record[0].startswith("#"):
                text = ",".join(record).lstrip("#").strip()
                if "=" in text:
                    key, value = text.split("=", 1)
                    metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = record
                continue
            parsed = []
            for cell in record:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(dict(zip(header, parsed)))
    return metadata, rows, header or []


def render_figure(path, rows, x_column: str, y_columns, series_column=None, title: str = "") -> None:
    """Line plot of the table columns, one line per (series, y-column)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    series_values = sorted({row[series_column] for row in rows}, key=str) if series_column else [None]
    for series in series_values:
        subset = [r for r in rows if series_column is None or r[series_column] == series]
        xs = [r[x_column] for r in subset]
        for y_col in y_columns:
            ys = [r.get(y_col, float("nan")) for r in subset]
            if all(isinstance(y, float) and math.isnan(y) for y in ys):
                continue
            label = y_col if series is None else f"{y_col} ({series_column}={series})"
            ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=label)
    ax.set_xlabel(x_column)
    ax.set_ylabel(", ".join(y_columns))
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
