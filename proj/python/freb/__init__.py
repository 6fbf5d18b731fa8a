"""Frequentist calibration of posterior-based confidence sets."""

from ._core import (
    FORMAT_VERSION,
    CoverageModel,
    CriticalValueModel,
    DataError,
    EvaluationError,
    InvalidInput,
    RejectionModel,
    analytic_hpd_coverage_1d,
    fit_coverage,
    fit_critical_values,
    fit_rejection,
    oracle_pvalue_1d,
    pvalue_set,
    sample,
    statistic,
)

__all__ = [
    "FORMAT_VERSION",
    "CoverageModel",
    "CriticalValueModel",
    "DataError",
    "EvaluationError",
    "InvalidInput",
    "RejectionModel",
    "analytic_hpd_coverage_1d",
    "fit_coverage",
    "fit_critical_values",
    "fit_rejection",
    "oracle_pvalue_1d",
    "pvalue_set",
    "sample",
    "statistic",
]
