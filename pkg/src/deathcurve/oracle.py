"""Independent brute-force references used by the test-suite.

Quadrature CDFs, dense-grid mode search and an Owen's T quadrature give the
main routines something to be checked against; simulation-based calibration
exercises the whole model-plus-sampler pipeline.  Apart from the log density
itself (the one shared primitive) these paths share no code with the
functions they validate.  Not public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from . import kernels
from .errors import OracleError
from .model import DeathSeries, PriorSpec, make_logpost
from .sampler import (
    SamplerConfig,
    _beta_to_natural,
    diagnostics,
    nuts_sample,
    sample_initials,
    substream,
)
from .specfun import SkewNormalParams

_TWO_PI = 2.0 * math.pi


def _adaptive_simpson(f, a, b, tol, depth):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)


def _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise OracleError("adaptive quadrature failed to converge within depth 60")
    return _simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _simpson_step(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


def quad_cdf(t: float, params: SkewNormalParams, tol: float = 1e-11) -> float:
    """CDF by adaptive Simpson quadrature of the density over [alpha - 12 beta, t]."""
    lo = params.alpha - 12.0 * params.beta
    if t <= lo:
        return 0.0

    def f(x):
        return math.exp(kernels.sn_logpdf_one(x, params.alpha, params.beta, params.eta))

    # integrate per scale-unit segment so flat tails cannot fool the error estimate
    knots = [lo]
    k = lo + params.beta
    while k < t:
        knots.append(k)
        k += params.beta
    knots.append(t)
    seg_tol = tol / (len(knots) - 1)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        total += _adaptive_simpson(f, a, b, seg_tol, 60)
    return total


def owens_t_quad(h: float, a: float, tol: float = 1e-13) -> float:
    """Owen's T by adaptive quadrature of its defining integral."""
    if a == 0.0:
        return 0.0
    sign = 1.0 if a > 0.0 else -1.0
    a = abs(a)
    hh = 0.5 * h * h

    def f(x):
        return math.exp(-hh * (1.0 + x * x)) / (1.0 + x * x)

    knots = [0.0]
    k = 1.0
    while k < a:
        knots.append(k)
        k += 1.0
    knots.append(a)
    seg_tol = tol / (len(knots) - 1)
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        total += _adaptive_simpson(f, lo, hi, seg_tol, 60)
    return sign * total / _TWO_PI


def grid_mode(params: SkewNormalParams) -> float:
    """Argmax of the log density over a 1e-6*beta grid, parabola-refined."""
    step = 1e-6 * params.beta
    lo = params.alpha - 6.0 * params.beta
    n = int(round(12.0 * params.beta / step)) + 1

    best_val = -math.inf
    best_idx = 0
    chunk = 2_000_000
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        x = lo + step * idx
        vals = np.asarray(kernels.sn_logpdf_vec(x, params.alpha, params.beta, params.eta))
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_idx = int(idx[j])

    if best_idx == 0 or best_idx == n - 1:
        return lo + step * best_idx
    xs = lo + step * np.array([best_idx - 1, best_idx, best_idx + 1])
    f0, f1, f2 = np.asarray(
        kernels.sn_logpdf_vec(xs, params.alpha, params.beta, params.eta)
    )
    denom = f0 - 2.0 * f1 + f2
    if denom == 0.0:
        return xs[1]
    return float(xs[1] + 0.5 * step * (f0 - f2) / denom)


# ---------------------------------------------------------------------------
# Simulation-based calibration
# ---------------------------------------------------------------------------

SBC_BINS = 20
_SBC_THINNED = 99  # ranks take values 0..99, splitting evenly into 20 bins


@dataclass(frozen=True)
class SbcResult:
    ranks: np.ndarray        # (replications_kept, 4)
    histogram: np.ndarray    # (4, SBC_BINS)
    chisq: np.ndarray        # (4,)
    p_value: np.ndarray      # (4,)
    failed: int              # replications excluded by the R-hat spot check

    @property
    def expected_per_bin(self) -> float:
        return self.ranks.shape[0] / SBC_BINS


def simulate_series(theta: np.ndarray, population_millions: float, n_days: int,
                    rng: np.random.Generator) -> DeathSeries:
    """Draw a synthetic death series from the model at a fixed parameter point."""
    t = np.arange(1, n_days + 1, dtype=float)
    alpha = math.exp(theta[1])
    beta = math.exp(theta[2])
    lam = math.exp(theta[0]) * population_millions * np.exp(
        np.asarray(kernels.sn_logpdf_vec(t, alpha, beta, theta[3]))
    )
    deaths = rng.poisson(lam)
    return DeathSeries(
        day=np.arange(1, n_days + 1), deaths=deaths,
        population_millions=population_millions,
    )


def sbc_run(prior: PriorSpec, population_millions: float, n_days: int,
            replications: int, cfg: SamplerConfig,
            flip_gradient: bool = False) -> SbcResult:
    """Rank-uniformity check of the full simulate-then-fit loop.

    Each replication draws a truth from the prior, simulates a series, refits
    with the same prior, and records the rank of each truth component among
    thinned posterior draws.  Every 10th replication runs two chains and is
    excluded when its R-hat exceeds 1.05.  ``flip_gradient`` negates the
    gradient fed to the sampler (negative control: uniformity must fail).
    """
    if replications < 50:
        raise ValueError("simulation-based calibration needs at least 50 replications")
    ranks = []
    failed = 0
    for r in range(replications):
        rep_seed = cfg.seed + 7919 * (r + 1)
        rng = substream(rep_seed, 3)
        theta_true = sample_initials(prior, 1, rng)[0].to_array()
        series = simulate_series(theta_true, population_millions, n_days, rng)

        base = make_logpost(series, prior)
        if flip_gradient:
            def logpost(q, _base=base):
                lp, grad = _base(q)
                return lp, -np.asarray(grad)
        else:
            logpost = base

        spot_check = (r % 10 == 9)
        rep_cfg = replace(cfg, seed=rep_seed, chains=2 if spot_check else 1)
        init = sample_initials(prior, rep_cfg.chains, substream(rep_seed, 1))
        draws = nuts_sample(logpost, init, rep_cfg, transform=_beta_to_natural)
        if spot_check and diagnostics(draws).max_rhat() > 1.05:
            failed += 1
            continue

        flat = draws.flat_values()
        thin_idx = np.linspace(0, flat.shape[0] - 1, _SBC_THINNED).astype(int)
        thinned = flat[thin_idx]
        truth_reported = _beta_to_natural(theta_true)
        ranks.append((thinned < truth_reported).sum(axis=0))

    ranks = np.asarray(ranks, dtype=np.int64)
    histogram = np.zeros((4, SBC_BINS), dtype=np.int64)
    bin_width = (_SBC_THINNED + 1) // SBC_BINS
    for j in range(4):
        for b in ranks[:, j] // bin_width:
            histogram[j, b] += 1
    expected = ranks.shape[0] / SBC_BINS
    chisq = ((histogram - expected) ** 2 / expected).sum(axis=1)
    p_value = chi2.sf(chisq, SBC_BINS - 1)
    return SbcResult(ranks=ranks, histogram=histogram, chisq=chisq,
                     p_value=np.asarray(p_value), failed=failed)


def write_sbc_report(result: SbcResult, path) -> None:
    from .dataio import _write_csv
    from .model import PARAM_NAMES

    rows = []
    for j, name in enumerate(PARAM_NAMES):
        for b in range(SBC_BINS):
            rows.append((name, b, int(result.histogram[j, b]),
                         float(result.chisq[j]), float(result.p_value[j])))
    _write_csv(Path(path), ["parameter", "bin", "count", "chisq", "p_value"], rows)
