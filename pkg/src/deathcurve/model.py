"""Poisson count model with skew-normal intensity, priors and gradients.

Daily deaths y_i on day t_i follow Poisson(lambda_i) with

    lambda_i = exp(log_p) * g(t_i | alpha, beta, eta) * K,

where K is the population in millions and p the asymptotic number of deaths
per million inhabitants.  Sampling runs on the unconstrained vector
(log_p, log_alpha, log_beta, eta); the prior on beta is a normal on the
natural scale, so the log-posterior carries the + log_beta change-of-variables
term.  All gradients are analytic; the inverse Mills ratio phi/Phi is
evaluated in log space so the tails stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable

import numpy as np

from . import kernels
from .errors import DataError, InvalidSeriesError
from .specfun import SkewNormalParams

if TYPE_CHECKING:  # pragma: no cover
    from .sampler import DrawMatrix

PARAM_NAMES = ("log_p", "log_alpha", "beta", "eta")


@dataclass(frozen=True)
class ParamVector:
    """Model parameters on the unconstrained sampling scale."""

    log_p: float
    log_alpha: float
    log_beta: float
    eta: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.log_p, self.log_alpha, self.log_beta, self.eta))):
            raise ValueError("parameter vector components must be finite")

    @property
    def p(self) -> float:
        return math.exp(self.log_p)

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta)

    def sn_params(self) -> SkewNormalParams:
        return SkewNormalParams(self.alpha, self.beta, self.eta)

    def to_array(self) -> np.ndarray:
        return np.array([self.log_p, self.log_alpha, self.log_beta, self.eta])

    @classmethod
    def from_array(cls, arr) -> "ParamVector":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


@dataclass(frozen=True)
class PriorSpec:
    """Independent normal priors, ordered (log_p, log_alpha, beta, eta).

    ``inflation`` multiplies the stored SDs of the last three components at
    evaluation time (the log_p component is never inflated).  ``p_free``
    swaps the log_p component for the weakly informative N(0, 10^2).
    ``beta_natural`` selects whether the third component is a normal on beta
    itself (transfer prior; adds the Jacobian) or on log_beta directly (the
    diffuse-prior definition used for the source-country fit).
    """

    mean: np.ndarray
    sd: np.ndarray
    inflation: float = 1.0
    p_free: bool = False
    beta_natural: bool = True

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=float)
        sd = np.ascontiguousarray(self.sd, dtype=float)
        if mean.shape != (4,) or sd.shape != (4,):
            raise ValueError("prior mean and sd must be length-4 vectors")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(sd)):
            raise ValueError("prior mean and sd must be finite")
        if np.any(sd <= 0.0):
            raise DataError("prior standard deviations must be positive")
        if not (self.inflation > 0.0 and math.isfinite(self.inflation)):
            raise ValueError("inflation factor must be positive and finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    def effective_sd(self) -> np.ndarray:
        out = self.sd.copy()
        out[1:] *= self.inflation
        return out

    def with_inflation(self, factor: float) -> "PriorSpec":
        return replace(self, inflation=float(factor))

    @classmethod
    def flat(cls) -> "PriorSpec":
        """Diffuse N(0, 10^2) on every unconstrained component."""
        return cls(
            mean=np.zeros(4),
            sd=np.full(4, 10.0),
            inflation=1.0,
            p_free=False,
            beta_natural=False,
        )


@dataclass(frozen=True)
class DeathSeries:
    """Daily death counts indexed by day since the first reported death."""

    day: np.ndarray
    deaths: np.ndarray
    population_millions: float

    def __post_init__(self):
        day = np.ascontiguousarray(self.day, dtype=np.int64)
        deaths = np.ascontiguousarray(self.deaths, dtype=np.int64)
        if day.shape != deaths.shape or day.ndim != 1:
            raise InvalidSeriesError("day and deaths must be 1-d arrays of equal length")
        if day.size > 0 and np.any(np.diff(day) != 1):
            raise InvalidSeriesError("days must be consecutive integers")
        if np.any(deaths < 0):
            raise InvalidSeriesError("death counts must be non-negative")
        if not (self.population_millions > 0.0 and math.isfinite(self.population_millions)):
            raise InvalidSeriesError("population (millions) must be positive")
        object.__setattr__(self, "day", day)
        object.__setattr__(self, "deaths", deaths)

    def __len__(self) -> int:
        return int(self.day.size)


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, ParamVector):
        return theta.to_array()
    arr = np.ascontiguousarray(theta, dtype=float)
    if arr.shape != (4,):
        raise ValueError("theta must be a ParamVector or length-4 array")
    return arr


def _validate_series(series) -> tuple[np.ndarray, np.ndarray, float]:
    day = np.ascontiguousarray(series.day, dtype=float)
    deaths = np.ascontiguousarray(series.deaths, dtype=float)
    if deaths.size and deaths.min() < 0:
        raise InvalidSeriesError("death counts must be non-negative")
    if day.size and np.any(np.diff(day) != 1):
        raise InvalidSeriesError("days must be consecutive integers")
    return day, deaths, float(series.population_millions)


def loglik_and_grad(theta, series) -> tuple[float, np.ndarray]:
    """Log likelihood (log y! constant dropped) and its gradient."""
    day, deaths, pop = _validate_series(series)
    ll, grad = kernels.loglik_grad(_theta_array(theta), day, deaths, pop)
    return float(ll), np.asarray(grad)


def logprior_and_grad(theta, prior: PriorSpec) -> tuple[float, np.ndarray]:
    """Log prior density (with the beta Jacobian when applicable) and gradient."""
    lp, grad = kernels.logprior_grad(
        _theta_array(theta), prior.mean, prior.effective_sd(), prior.p_free, prior.beta_natural
    )
    return float(lp), np.asarray(grad)


def logpost_and_grad(theta, series, prior: PriorSpec) -> tuple[float, np.ndarray]:
    """Componentwise sum of likelihood and prior; the sampler's target."""
    day, deaths, pop = _validate_series(series)
    lp, grad = kernels.logpost_grad(
        _theta_array(theta), day, deaths, pop, prior.mean, prior.effective_sd(),
        prior.p_free, prior.beta_natural,
    )
    return float(lp), np.asarray(grad)


def make_logpost(series, prior: PriorSpec) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Bind series and prior into the single callable handed to the sampler."""
    day, deaths, pop = _validate_series(series)
    mean = prior.mean
    sd = prior.effective_sd()
    p_free = prior.p_free
    beta_natural = prior.beta_natural

    def logpost(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return kernels.logpost_grad(theta, day, deaths, pop, mean, sd, p_free, beta_natural)

    return logpost


def prior_from_draws(draws: "DrawMatrix", inflation: float = 1.0, p_free: bool = True) -> PriorSpec:
    """Posterior sample mean/SD of (log_p, log_alpha, beta, eta) as a normal prior.

    beta enters on the natural scale, matching how posterior summaries are
    reported; the inflation factor is stored and applied at evaluation time.
    """
    values = np.asarray(getattr(draws, "values", draws), dtype=float)
    flat = values.reshape(-1, values.shape[-1])
    if flat.size == 0:
        raise DataError("cannot build a prior from an empty draw set")
    mean = flat.mean(axis=0)
    sd = flat.std(axis=0, ddof=1) if flat.shape[0] > 1 else np.zeros(4)
    if np.any(sd <= 0.0):
        raise DataError("degenerate draws: zero posterior variance cannot seed a normal prior")
    return PriorSpec(mean=mean, sd=sd, inflation=float(inflation), p_free=bool(p_free))
