"""Numerical Finsler curvature engine.

Structured results are plain dicts with the same fields as the CLI JSON.
Failures raise FinslerError; its ``code`` attribute names the error kind.
"""

from ._core import (
    FinslerError,
    Metric,
    __version__,
    berwald_frame,
    classify,
    curvature,
    fit_relative_stretch,
    flag_curvature,
    geodesic,
    parallelogram,
    run_suite,
    semi_c_fit,
    suite_names,
)

__all__ = [
    "FinslerError",
    "Metric",
    "__version__",
    "berwald_frame",
    "classify",
    "curvature",
    "fit_relative_stretch",
    "flag_curvature",
    "geodesic",
    "parallelogram",
    "run_suite",
    "semi_c_fit",
    "suite_names",
]
