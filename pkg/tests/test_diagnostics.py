import numpy as np
import pytest

from deathcurve.sampler import DrawMatrix, diagnostics


def make_draws(values):
    s, c, d = values.shape
    return DrawMatrix(
        values=values,
        lp=np.zeros((s, c)),
        divergent=np.zeros((s, c), dtype=bool),
        step_size=np.ones(c),
        inv_mass=np.ones((c, d)),
    )


def iid_draws(seed=0, samples=1000, chains=4):
    rng = np.random.default_rng(seed)
    return make_draws(rng.standard_normal((samples, chains, 4)))


class TestRhat:
    def test_iid_chains_are_converged(self):
        d = diagnostics(iid_draws())
        for v in d.rhat.values():
            assert 0.99 <= v <= 1.01

    def test_shifted_chain_detected(self):
        draws = iid_draws(seed=1)
        values = draws.values.copy()
        values[:, 0, 2] += 10.0
        d = diagnostics(make_draws(values))
        assert d.rhat["beta"] > 1.2
        assert d.rhat["log_p"] < 1.01

    def test_insufficient_chains(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError):
            diagnostics(make_draws(rng.standard_normal((100, 1, 4))))

    def test_insufficient_draws(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            diagnostics(make_draws(rng.standard_normal((3, 4, 4))))


class TestEss:
    def test_iid_ess_near_total(self):
        # tolerance window measured over repeated IID replications
        d = diagnostics(iid_draws(seed=4))
        for v in d.ess_bulk.values():
            assert 3000 <= v <= 5000

    def test_correlated_chain_has_lower_ess(self):
        rng = np.random.default_rng(5)
        eps = rng.standard_normal((1000, 4, 4))
        ar = np.empty_like(eps)
        ar[0] = eps[0]
        for t in range(1, 1000):
            ar[t] = 0.9 * ar[t - 1] + np.sqrt(1 - 0.81) * eps[t]
        d = diagnostics(make_draws(ar))
        for v in d.ess_bulk.values():
            assert v < 1500


class TestDivergences:
    def test_counted(self):
        draws = iid_draws(seed=6)
        div = draws.divergent.copy()
        div[:7, 0] = True
        d = diagnostics(
            DrawMatrix(values=draws.values, lp=draws.lp, divergent=div,
                       step_size=draws.step_size, inv_mass=draws.inv_mass)
        )
        assert d.divergences == 7
