"""Experiment engine, metrics, reporting and CLI."""

from .engine import (
    ConfigSummary,
    CsvSource,
    DatasetSource,
    ExperimentConfig,
    ResultRow,
    Selection,
    SyntheticSource,
    run_experiment,
    select_best,
    summarize,
)
from .metrics import IntervalMetrics, evaluate
from .report import emit_report, markdown_tables, plot_data, read_rows_csv, write_rows_csv
