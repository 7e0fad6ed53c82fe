"""Bayesian forecasting of epidemic death counts.

Daily deaths are modelled as Poisson counts whose intensity is proportional
to a skew-normal density; posterior inference runs on a from-scratch No-U-Turn
sampler, and posterior summaries from one country can be transferred as the
prior for another.  See the README for the CLI and file formats.
"""

from .errors import DataError, InvalidSeriesError, OracleError, SamplerError
from .kernels import backend_name
from .model import (
    DeathSeries,
    ParamVector,
    PriorSpec,
    loglik_and_grad,
    logpost_and_grad,
    logprior_and_grad,
    make_logpost,
    prior_from_draws,
)
from .quantities import (
    Band,
    ForecastSummary,
    QuantitySummary,
    forecast_summary,
    inflection_point,
    predictive_bands,
    summarize_quantity,
    time_to_threshold,
    total_deaths,
)
from .sampler import (
    Diagnostics,
    DrawMatrix,
    SamplerConfig,
    diagnostics,
    fit_series,
    nuts_sample,
    sample_initials,
)
from .specfun import SkewNormalParams, log_phi, owens_t, sn_cdf, sn_logpdf, sn_mode, sn_quantile

__version__ = "0.1.0"

__all__ = [
    "Band",
    "DataError",
    "DeathSeries",
    "Diagnostics",
    "DrawMatrix",
    "ForecastSummary",
    "InvalidSeriesError",
    "OracleError",
    "ParamVector",
    "PriorSpec",
    "QuantitySummary",
    "SamplerConfig",
    "SamplerError",
    "SkewNormalParams",
    "backend_name",
    "diagnostics",
    "fit_series",
    "forecast_summary",
    "inflection_point",
    "log_phi",
    "loglik_and_grad",
    "logpost_and_grad",
    "logprior_and_grad",
    "make_logpost",
    "nuts_sample",
    "owens_t",
    "predictive_bands",
    "prior_from_draws",
    "sample_initials",
    "sn_cdf",
    "sn_logpdf",
    "sn_mode",
    "sn_quantile",
    "summarize_quantity",
    "time_to_threshold",
    "total_deaths",
    "__version__",
]
