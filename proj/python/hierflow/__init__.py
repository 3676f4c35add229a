"""Cohort event-sequence analytics over hierarchical event types."""

from ._core import (
    HierflowError,
    Service,
    chi_square_p_value,
    chi_square_yates,
    correlation,
    informative_cut,
    kaplan_meier,
    layout_cost,
    optimize_y,
    scent,
)

__all__ = [
    "HierflowError",
    "Service",
    "chi_square_p_value",
    "chi_square_yates",
    "correlation",
    "informative_cut",
    "kaplan_meier",
    "layout_cost",
    "optimize_y",
    "scent",
]
