"""Operational-risk capital: severity models, single-loss capital approximations and RCE."""

from ._oprisk import (
    CapitalBreakdown,
    ConfigError,
    DataError,
    DomainError,
    Error,
    EstimationError,
    FitResult,
    NumericError,
    RceResult,
    SeverityModel,
    capital,
    cdf,
    fisher_information,
    fit_severity,
    isla,
    log_likelihood,
    mc_capital,
    param_covariance,
    pdf,
    quantile,
    rce,
    sample,
    simulate_study,
    sla_bk,
    sla_degen,
)

__all__ = [
    "CapitalBreakdown",
    "ConfigError",
    "DataError",
    "DomainError",
    "Error",
    "EstimationError",
    "FitResult",
    "NumericError",
    "RceResult",
    "SeverityModel",
    "capital",
    "cdf",
    "fisher_information",
    "fit_severity",
    "isla",
    "log_likelihood",
    "mc_capital",
    "param_covariance",
    "pdf",
    "quantile",
    "rce",
    "sample",
    "simulate_study",
    "sla_bk",
    "sla_degen",
]
