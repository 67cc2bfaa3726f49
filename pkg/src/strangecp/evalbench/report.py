"""Result emission: CSV rows, markdown tables and coverage-vs-width plot data."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, fields
from pathlib import Path
from typing import Sequence

from .engine import ResultRow, summarize

FORMATS = ("csv", "markdown", "plot-data")
ROW_FIELDS = [f.name for f in fields(ResultRow)]
_INT_FIELDS = {"k", "bins", "seed"}
_STR_FIELDS = {"config_id", "estimator", "mode"}

# metric rows of the markdown tables, in order
TABLE_METRICS = ("error", "eff_mean", "eff_med", "crps", "time_fit", "time_evaluate")
_TABLE_LABELS = {"crps": "CRPS"}

PLOT_FIELDS = ("label", "config_id", "confidence", "effective_coverage", "std_coverage",
               "mean_width", "std_width", "n_seeds")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: Sequence[ResultRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROW_FIELDS)
        for r in rows:
            d = asdict(r)
            writer.writerow([_cell(d[name]) for name in ROW_FIELDS])
    return path


def read_rows_csv(path) -> list[ResultRow]:
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for name in ROW_FIELDS:
                raw = rec[name]
                if name in _STR_FIELDS:
                    kw[name] = raw
                elif raw == "":
                    kw[name] = None
                elif name in _INT_FIELDS:
                    kw[name] = int(raw)
                else:
                    kw[name] = float(raw)
            rows.append(ResultRow(**kw))
    return rows


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.4f}"


def _mean(values):
    values = list(values)
    if not values or any(v is None for v in values):
        return None
    return sum(values) / len(values)


def markdown_tables(rows: Sequence[ResultRow]) -> str:
    """
    One table per configuration: metrics down the side, confidence levels
    across, each cell averaged over seeds.
    """
    by_config: dict = {}
    for r in rows:
        by_config.setdefault(r.config_id, {}).setdefault(r.confidence, []).append(r)
    blocks = []
    for cid, per_conf in by_config.items():
        confs = sorted(per_conf)
        lines = [
            f"### {cid}",
            "",
            "| metric | " + " | ".join(f"{c:g}" for c in confs) + " |",
            "|---|" + "---|" * len(confs),
        ]
        for metric in TABLE_METRICS:
            cells = [_fmt(_mean([getattr(r, metric) for r in per_conf[c]])) for c in confs]
            label = _TABLE_LABELS.get(metric, metric)
            lines.append(f"| {label} | " + " | ".join(cells) + " |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def plot_data(rows: Sequence[ResultRow]) -> list[tuple]:
    """
    One point per plotted configuration (config at a confidence level):
    ``(label, config_id, confidence, effective_coverage, std_coverage,
    mean_width, std_width, n_seeds)``.
    """
    return [
        (s.label, s.config_id, s.confidence, s.mean_coverage, s.std_coverage,
         s.mean_eff, s.std_eff, s.n_seeds)
        for s in summarize(rows)
    ]


def emit_report(rows: Sequence[ResultRow], fmt: str, out_dir) -> Path:
    """Write ``rows`` in ``fmt`` into ``out_dir`` and return the file path."""
    if not rows:
        raise ValueError("no rows to report")
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        return write_rows_csv(rows, out_dir / "results.csv")
    if fmt == "markdown":
        path = out_dir / "results.md"
        path.write_text(markdown_tables(rows), encoding="utf-8")
        return path
    path = out_dir / "plot_data.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLOT_FIELDS)
        for point in plot_data(rows):
            writer.writerow([_cell(v) for v in point])
    return path
