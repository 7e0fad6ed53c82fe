import math

import numpy as np
import pytest

import deathcurve as dc
from deathcurve import kernels
from deathcurve.errors import DataError
from deathcurve.model import ParamVector
from deathcurve.quantities import (
    forecast_summary,
    inflection_point,
    predictive_bands,
    summarize_quantity,
    time_to_threshold,
    total_deaths,
)
from deathcurve.sampler import substream

REF_DRAW = ParamVector(0.87, 2.91, math.log(16.52), 2.34)


def random_reported_draws(n, seed=0):
    rng = np.random.default_rng(seed)
    flat = np.empty((n, 4))
    flat[:, 0] = rng.normal(0.9, 0.05, n)
    flat[:, 1] = rng.normal(2.9, 0.03, n)
    flat[:, 2] = rng.uniform(12.0, 20.0, n)
    flat[:, 3] = rng.uniform(0.5, 4.0, n)
    return flat


class TestTotalDeaths:
    def test_identity(self):
        assert total_deaths(ParamVector(0.0, 1.0, 1.0, 0.0), 1.0) == 1.0

    def test_reference_arithmetic(self):
        assert total_deaths(REF_DRAW, 1393.0) == pytest.approx(3325.0, abs=0.5)

    def test_rejects_bad_population(self):
        with pytest.raises(ValueError):
            total_deaths(REF_DRAW, 0.0)

    def test_matches_cdf_limit(self):
        far = REF_DRAW.alpha + 20.0 * REF_DRAW.beta
        tail = total_deaths(REF_DRAW, 1393.0) * dc.sn_cdf(far, REF_DRAW.sn_params())
        assert tail == pytest.approx(total_deaths(REF_DRAW, 1393.0), rel=1e-3)


class TestTimeToThreshold:
    def test_normal_case(self):
        draw = ParamVector(0.0, math.log(20.0), math.log(10.0), 0.0)
        assert time_to_threshold(draw) == pytest.approx(43.263478740408411, abs=1e-8)

    def test_monotone_in_scale(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            alpha = float(rng.uniform(5, 30))
            eta = float(rng.uniform(0, 4))
            b1, b2 = sorted(rng.uniform(2, 25, 2))
            t1 = time_to_threshold(ParamVector(0.0, math.log(alpha), math.log(b1), eta))
            t2 = time_to_threshold(ParamVector(0.0, math.log(alpha), math.log(b2), eta))
            assert t2 > t1

    def test_reference_value(self):
        # quadrature-bisection oracle at the calibration point
        assert time_to_threshold(REF_DRAW) == pytest.approx(60.909498660855325, abs=1e-6)


class TestInflectionPoint:
    def test_symmetric_case_is_location(self):
        draw = ParamVector(0.0, math.log(12.0), math.log(3.0), 0.0)
        assert inflection_point(draw) == 12.0

    def test_interior_bound(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            draw = ParamVector(0.0, float(rng.uniform(1, 3)), float(rng.uniform(0, 3)),
                               float(rng.uniform(0.1, 5)))
            m = inflection_point(draw)
            assert draw.alpha < m < draw.alpha + draw.beta

    def test_reference_value(self):
        assert inflection_point(REF_DRAW) == pytest.approx(26.83263023757993, abs=1e-5)

    def test_precedes_threshold_for_every_draw(self):
        flat = random_reported_draws(500, seed=5)
        alpha, beta, eta = np.exp(flat[:, 1]), flat[:, 2], flat[:, 3]
        ttt = np.asarray(kernels.sn_quantile_vec(0.99, alpha, beta, eta))
        infl = np.asarray(kernels.sn_mode_vec(alpha, beta, eta))
        assert np.all(ttt > infl)


class TestSummarize:
    def test_constant_vector(self):
        s = summarize_quantity(np.full(50, 3.25))
        assert (s.mean, s.q2_5, s.q97_5) == (3.25, 3.25, 3.25)

    def test_linear_interpolation_convention(self):
        s = summarize_quantity(np.arange(1, 1001, dtype=float))
        assert s.mean == pytest.approx(500.5)
        assert s.q2_5 == pytest.approx(25.975)
        assert s.q97_5 == pytest.approx(975.025)

    def test_quantile_ordering(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            s = summarize_quantity(rng.lognormal(0, 2, size=200))
            assert s.q2_5 <= s.q97_5

    def test_rejects_empty(self):
        with pytest.raises(DataError):
            summarize_quantity([])


class TestPredictiveBands:
    def test_zero_intensity_stub(self):
        stub = np.array([[-np.inf, 2.9, 16.5, 2.3]])
        daily, cum = predictive_bands(stub, 32.5, 20, substream(1, 2))
        for band in (daily, cum):
            assert np.all(band.mean == 0)
            assert np.all(band.q2_5 == 0)
            assert np.all(band.q97_5 == 0)

    def test_single_draw_repeated_matches_exact_poisson(self):
        # lambda == 4 at t=1 by construction; quantiles from the exact
        # Poisson(4) CDF tabulation: 2.5% -> 1, 97.5% -> 8
        g1 = kernels.sn_logpdf_one(1.0, 1.0, 1.0, 0.0)
        theta = np.array([math.log(4.0) - g1, 0.0, 1.0, 0.0])
        stub = np.tile(theta, (10_000, 1))
        daily, _ = predictive_bands(stub, 1.0, 1, substream(99, 2))
        assert daily.mean[0] == pytest.approx(4.0, abs=0.1)
        assert daily.q2_5[0] == 1.0
        assert daily.q97_5[0] == 8.0

    def test_cumulative_band_columns_nondecreasing(self):
        flat = random_reported_draws(400, seed=7)
        _, cum = predictive_bands(flat, 32.5, 70, substream(2, 2))
        for col in (cum.mean, cum.q2_5, cum.q97_5):
            assert np.all(np.diff(col) >= 0)

    def test_reproducible(self):
        flat = random_reported_draws(100, seed=8)
        a_daily, a_cum = predictive_bands(flat, 10.0, 30, substream(3, 2))
        b_daily, b_cum = predictive_bands(flat, 10.0, 30, substream(3, 2))
        assert np.array_equal(a_daily.mean, b_daily.mean)
        assert np.array_equal(a_cum.q97_5, b_cum.q97_5)

    def test_rejects_empty_draws(self):
        with pytest.raises(DataError):
            predictive_bands(np.empty((0, 4)), 1.0, 10, substream(4, 2))

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            predictive_bands(random_reported_draws(10), 1.0, 0, substream(5, 2))


class TestForecastSummary:
    def test_identical_draws_collapse_derived_intervals(self):
        flat = np.tile([0.9, 2.9, 16.5, 2.3], (200, 1))
        fs = forecast_summary(flat, 32.5, 40, substream(6, 2))
        for q in (fs.total_deaths, fs.time_to_threshold, fs.inflection_point):
            assert q.q2_5 == pytest.approx(q.mean, rel=1e-12)
            assert q.q97_5 == pytest.approx(q.mean, rel=1e-12)

    def test_band_triples_ordered(self):
        flat = random_reported_draws(300, seed=9)
        fs = forecast_summary(flat, 32.5, 50, substream(7, 2))
        for band in (fs.daily_band, fs.cumulative_band):
            assert np.all(band.q2_5 <= band.mean + 1e-12)
            assert np.all(band.mean <= band.q97_5 + 1e-12)
        assert fs.horizon_days == 50
        assert len(fs.daily_band.day) == 50
