"""Evaluation metrics for navigation episodes and the rank-sum statistic."""

from .episodes import (
    MetricsError,
    MetricsReport,
    TrajectoryRecord,
    force_magnitude,
    format_report,
    path_length,
    safety,
    spl,
    summarize_runs,
)
from .stats import mann_whitney_u

__all__ = [
    "MetricsError",
    "MetricsReport",
    "TrajectoryRecord",
    "force_magnitude",
    "format_report",
    "path_length",
    "safety",
    "spl",
    "summarize_runs",
    "mann_whitney_u",
]
