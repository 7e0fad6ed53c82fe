import math

import numpy as np
import pytest
from scipy.stats import kstest

from deathcurve.errors import SamplerError
from deathcurve.model import PriorSpec
from deathcurve.sampler import (
    SamplerConfig,
    diagnostics,
    fit_series,
    nuts_sample,
    sample_initials,
    substream,
)

from conftest import REF_THETA


def std_normal(q):
    return -0.5 * float(q @ q), -q


@pytest.fixture(scope="module")
def std_normal_draws():
    cfg = SamplerConfig(chains=4, warmup=1000, samples=1000, seed=42)
    init = [np.full(4, 1.0), np.full(4, -1.0), np.array([2.0, -2.0, 2.0, -2.0]), np.zeros(4)]
    return nuts_sample(std_normal, init, cfg)


class TestInitials:
    PRIOR = PriorSpec(mean=np.array([0.87, 2.91, 16.52, 2.34]),
                      sd=np.array([0.02, 0.02, 0.37, 0.14]))

    def test_degenerate_sd_collapses_to_mean(self):
        tight = PriorSpec(mean=self.PRIOR.mean, sd=np.full(4, 1e-9))
        inits = sample_initials(tight, 8, substream(1, 1))
        for pv in inits:
            assert pv.log_p == pytest.approx(0.87, abs=1e-6)
            assert pv.log_alpha == pytest.approx(2.91, abs=1e-6)
            assert pv.beta == pytest.approx(16.52, abs=1e-6)
            assert pv.eta == pytest.approx(2.34, abs=1e-6)

    def test_seed_determinism(self):
        a = sample_initials(self.PRIOR, 4, substream(5, 1))
        b = sample_initials(self.PRIOR, 4, substream(5, 1))
        assert a == b

    def test_marginal_moments(self):
        inits = sample_initials(self.PRIOR, 10_000, substream(77, 1))
        log_alpha = np.array([pv.log_alpha for pv in inits])
        assert log_alpha.mean() == pytest.approx(2.91, abs=1e-3)
        assert log_alpha.std(ddof=1) == pytest.approx(0.02, abs=1e-3)

    def test_p_free_widens_first_component(self):
        prior = PriorSpec(mean=self.PRIOR.mean, sd=self.PRIOR.sd, p_free=True)
        inits = sample_initials(prior, 2000, substream(78, 1))
        log_p = np.array([pv.log_p for pv in inits])
        assert log_p.std(ddof=1) == pytest.approx(10.0, rel=0.1)

    def test_hopeless_beta_prior_raises(self):
        prior = PriorSpec(mean=np.array([0.0, 0.0, -100.0, 0.0]),
                          sd=np.array([1.0, 1.0, 1e-6, 1.0]))
        with pytest.raises(SamplerError):
            sample_initials(prior, 1, substream(9, 1))


class TestKnownTargets:
    def test_standard_normal_moments(self, std_normal_draws):
        d = diagnostics(std_normal_draws, names=("x0", "x1", "x2", "x3"))
        flat = std_normal_draws.flat_values()
        mcse = flat.std(axis=0, ddof=1) / np.sqrt([d.ess_bulk[f"x{j}"] for j in range(4)])
        assert np.all(np.abs(flat.mean(axis=0)) < 4 * mcse)
        assert np.all(np.abs(flat.std(axis=0, ddof=1) - 1.0) < 0.05)
        assert d.max_rhat() < 1.01
        assert d.divergences == 0

    def test_empirical_cdf_is_normal(self, std_normal_draws):
        flat = std_normal_draws.flat_values()
        for j in range(4):
            assert kstest(flat[:, j], "norm").pvalue > 0.001

    def test_anisotropic_mass_adaptation(self):
        sds = np.array([10.0, 1.0, 0.1, 0.01])
        ivar = 1.0 / sds**2

        def aniso(q):
            return -0.5 * float(np.sum(q * q * ivar)), -q * ivar

        # extra warmup lengthens the terminal adaptation window, which the
        # factor-1.5 mass check needs on the 10^4 condition-number target
        draws = nuts_sample(aniso, [np.zeros(4)] * 4,
                            SamplerConfig(chains=4, warmup=1500, samples=1000, seed=7))
        ratio = draws.inv_mass / sds**2
        assert np.all((ratio > 1 / 1.5) & (ratio < 1.5))
        flat = draws.flat_values()
        assert np.all(np.abs(flat.std(axis=0, ddof=1) / sds - 1.0) < 0.05)

    def test_bit_identical_rerun(self, std_normal_draws):
        cfg = SamplerConfig(chains=4, warmup=1000, samples=1000, seed=42)
        init = [np.full(4, 1.0), np.full(4, -1.0), np.array([2.0, -2.0, 2.0, -2.0]), np.zeros(4)]
        rerun = nuts_sample(std_normal, init, cfg)
        assert np.array_equal(rerun.values, std_normal_draws.values)
        assert np.array_equal(rerun.lp, std_normal_draws.lp)
        assert np.array_equal(rerun.divergent, std_normal_draws.divergent)

    def test_no_nan_in_draws(self, std_normal_draws):
        assert not np.isnan(std_normal_draws.values).any()
        assert not np.isnan(std_normal_draws.lp).any()


class TestFailureModes:
    def test_nonfinite_logpost_at_init(self):
        def broken(q):
            return -math.inf, np.zeros(4)

        with pytest.raises(SamplerError):
            nuts_sample(broken, [np.zeros(4)], SamplerConfig(chains=1, seed=1))

    def test_pathological_curvature_raises(self):
        # so extreme that no finite step size survives even the initial search
        def spike(q):
            return -1e150 * float(q @ q), -2e150 * q

        with pytest.raises(SamplerError):
            nuts_sample(spike, [np.full(4, 0.1)],
                        SamplerConfig(chains=1, warmup=50, samples=50, seed=3))

    def test_all_divergent_signalled(self, monkeypatch):
        from deathcurve import sampler as sampler_mod

        real = sampler_mod._transition

        def always_divergent(*args, **kwargs):
            q, lp, g, accept, _ = real(*args, **kwargs)
            return q, lp, g, accept, True

        monkeypatch.setattr(sampler_mod, "_transition", always_divergent)
        with pytest.raises(SamplerError, match="diverged"):
            nuts_sample(std_normal, [np.zeros(4)],
                        SamplerConfig(chains=1, warmup=20, samples=20, seed=3))

    def test_wrong_init_count(self):
        with pytest.raises(ValueError):
            nuts_sample(std_normal, [np.zeros(4)], SamplerConfig(chains=2, seed=1))


class TestFitSeries:
    def test_beta_column_positive_and_reproducible(self, synthetic_series):
        cfg = SamplerConfig(chains=2, warmup=300, samples=200, seed=21)
        draws = fit_series(synthetic_series, PriorSpec.flat(), cfg)
        assert np.all(draws.values[:, :, 2] > 0)
        rerun = fit_series(synthetic_series, PriorSpec.flat(), cfg)
        assert np.array_equal(draws.values, rerun.values)

    def test_recovers_truth_loosely(self, synthetic_series):
        cfg = SamplerConfig(chains=2, warmup=500, samples=500, seed=22)
        draws = fit_series(synthetic_series, PriorSpec.flat(), cfg)
        flat = draws.flat_values()
        truth = REF_THETA.copy()
        truth[2] = math.exp(truth[2])
        z = np.abs(flat.mean(axis=0) - truth) / flat.std(axis=0, ddof=1)
        assert np.all(z < 4.0)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(chains=0)
        with pytest.raises(ValueError):
            SamplerConfig(target_accept=1.5)
        with pytest.raises(ValueError):
            SamplerConfig(warmup=0)
