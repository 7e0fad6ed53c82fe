import math

import numpy as np
import pytest

import deathcurve as dc
from deathcurve import dataio, oracle
from deathcurve.sampler import SamplerConfig, fit_series, substream

# calibration parameter point used across the suite: (log_p, log_alpha, log_beta, eta)
REF_THETA = np.array([0.87, 2.91, math.log(16.52), 2.34])
REF_K = 1393.0


def ref_theta_reported() -> np.ndarray:
    out = REF_THETA.copy()
    out[2] = math.exp(out[2])
    return out


def random_params(rng, alpha=(-10.0, 30.0), beta=(0.5, 30.0), eta=(-5.0, 5.0)):
    return dc.SkewNormalParams(
        float(rng.uniform(*alpha)), float(rng.uniform(*beta)), float(rng.uniform(*eta))
    )


@pytest.fixture(scope="session")
def china_series() -> dc.DeathSeries:
    rows = dataio.parse_ecdc_csv(dataio.china_snapshot_path().read_bytes())
    return dataio.apply_china_correction(dataio.build_series(rows, "China"))


@pytest.fixture(scope="session")
def china_fit(china_series) -> dc.DrawMatrix:
    return fit_series(china_series, dc.PriorSpec.flat(), SamplerConfig(seed=42))


@pytest.fixture(scope="session")
def synthetic_series() -> dc.DeathSeries:
    return oracle.simulate_series(REF_THETA, REF_K, 70, substream(123, 3))
