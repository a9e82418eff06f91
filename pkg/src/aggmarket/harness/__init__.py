"""Data loading, experiment pipelines and report emission."""

from .data import BenchmarkTable, fixture_path, load_scores, write_scores
from .experiments import (
    default_beta_grid,
    experiment_creation_table,
    experiment_nonmonotone_scan,
    experiment_replacement_scatter,
    experiment_team_scan,
)
from .report import ExperimentReport, emit, load_report

__all__ = [
    "BenchmarkTable",
    "ExperimentReport",
    "default_beta_grid",
    "emit",
    "experiment_creation_table",
    "experiment_nonmonotone_scan",
    "experiment_replacement_scatter",
    "experiment_team_scan",
    "fixture_path",
    "load_report",
    "load_scores",
    "write_scores",
]
