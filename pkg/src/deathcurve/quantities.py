"""Derived epidemic quantities and posterior predictive bands.

Per posterior draw the intensity on day t is p * g(t) * K and its integral
through day t is p * K * G(t); the asymptote p * K is the total number of
deaths.  The time to the death-rate threshold is the 0.99 quantile of g and
the inflection point is its mode (the day the daily death rate peaks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from . import kernels
from .errors import DataError
from .model import ParamVector

DEFAULT_HORIZON = 70
THRESHOLD_QUANTILE = 0.99


@dataclass(frozen=True)
class QuantitySummary:
    mean: float
    q2_5: float
    q97_5: float


@dataclass(frozen=True)
class Band:
    """Per-day predictive summaries over days 1..horizon."""

    day: np.ndarray
    mean: np.ndarray
    q2_5: np.ndarray
    q97_5: np.ndarray


@dataclass(frozen=True)
class ForecastSummary:
    horizon_days: int
    daily_band: Band
    cumulative_band: Band
    total_deaths: QuantitySummary
    time_to_threshold: QuantitySummary
    inflection_point: QuantitySummary


def _flat_draws(draws) -> np.ndarray:
    values = np.asarray(getattr(draws, "values", draws), dtype=float)
    flat = values.reshape(-1, values.shape[-1]) if values.ndim > 1 else values[None, :]
    if flat.size == 0:
        raise DataError("no posterior draws supplied")
    return flat


def total_deaths(draw: ParamVector, population_millions: float) -> float:
    """Asymptotic death count p * K implied by one draw."""
    if not population_millions > 0.0:
        raise ValueError("population (millions) must be positive")
    return math.exp(draw.log_p) * population_millions


def time_to_threshold(draw: ParamVector) -> float:
    """Days since first death until 99% of expected deaths have occurred."""
    p = draw.sn_params()
    return float(kernels.sn_quantile_one(THRESHOLD_QUANTILE, p.alpha, p.beta, p.eta))


def inflection_point(draw: ParamVector) -> float:
    """Day the daily death rate peaks (mode of the intensity curve)."""
    p = draw.sn_params()
    return float(kernels.sn_mode_one(p.alpha, p.beta, p.eta))


def summarize_quantity(values) -> QuantitySummary:
    """Sample mean with empirical 2.5%/97.5% quantiles (linear interpolation)."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DataError("cannot summarize an empty value set")
    lo, hi = np.quantile(values, [0.025, 0.975])
    return QuantitySummary(float(values.mean()), float(lo), float(hi))


def predictive_bands(draws, population_millions: float, horizon: int,
                     rng: np.random.Generator) -> tuple[Band, Band]:
    """Daily and cumulative predictive bands over days 1..horizon.

    Daily counts are independent Poisson draws at each draw's intensity.
    Cumulative counts are Poisson(Lambda_s(t)) sampled through a single
    uniform per posterior draw (inverse CDF), which preserves the exact
    marginals while keeping every sampled path, and hence each band column,
    nondecreasing in t.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least one day")
    flat = _flat_draws(draws)
    t = np.arange(1, horizon + 1, dtype=float)
    p = np.exp(flat[:, 0])
    alpha = np.exp(flat[:, 1])
    beta = flat[:, 2].copy()
    eta = flat[:, 3].copy()

    lam = p[:, None] * population_millions * np.exp(
        np.asarray(kernels.sn_logpdf_grid(t, alpha, beta, eta))
    )
    daily_counts = rng.poisson(lam)

    cum_intensity = p[:, None] * population_millions * np.asarray(
        kernels.sn_cdf_grid(t, alpha, beta, eta)
    )
    u = rng.random(flat.shape[0])
    with np.errstate(invalid="ignore"):
        cum_counts = poisson.ppf(u[:, None], cum_intensity)
    cum_counts = np.where(cum_intensity > 0.0, cum_counts, 0.0)

    day = np.arange(1, horizon + 1)

    def band(counts: np.ndarray) -> Band:
        lo, hi = np.quantile(counts, [0.025, 0.975], axis=0)
        return Band(day=day, mean=counts.mean(axis=0), q2_5=lo, q97_5=hi)

    return band(daily_counts), band(cum_counts)


def forecast_summary(draws, population_millions: float, horizon: int = DEFAULT_HORIZON,
                     rng: np.random.Generator | None = None) -> ForecastSummary:
    """Bands plus posterior summaries of the three derived quantities."""
    if rng is None:
        rng = np.random.default_rng(0)
    flat = _flat_draws(draws)
    daily, cumulative = predictive_bands(flat, population_millions, horizon, rng)

    alpha = np.exp(flat[:, 1])
    beta = flat[:, 2].copy()
    eta = flat[:, 3].copy()
    totals = np.exp(flat[:, 0]) * population_millions
    thresholds = np.asarray(kernels.sn_quantile_vec(THRESHOLD_QUANTILE, alpha, beta, eta))
    inflections = np.asarray(kernels.sn_mode_vec(alpha, beta, eta))

    return ForecastSummary(
        horizon_days=int(horizon),
        daily_band=daily,
        cumulative_band=cumulative,
        total_deaths=summarize_quantity(totals),
        time_to_threshold=summarize_quantity(thresholds),
        inflection_point=summarize_quantity(inflections),
    )
