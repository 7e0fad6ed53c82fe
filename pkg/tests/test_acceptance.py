"""Acceptance suite: one test per release criterion, one printed verdict each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
"""

import filecmp
import itertools
import math
import time

import numpy as np

import deathcurve as dc
from deathcurve import dataio, kernels, oracle
from deathcurve.cli import main as cli_main
from deathcurve.model import PriorSpec, logpost_and_grad, prior_from_draws
from deathcurve.quantities import summarize_quantity
from deathcurve.sampler import SamplerConfig, diagnostics, fit_series, nuts_sample, substream

from conftest import REF_THETA, random_params, ref_theta_reported


def _verdict(num: int, label: str, ok: bool, detail: str = "", t0: float | None = None):
    elapsed = f" [{time.time() - t0:.1f}s]" if t0 is not None else ""
    print(f"\n[acceptance] criterion {num} ({label}): "
          f"{'PASS' if ok else 'FAIL'} {detail}{elapsed}")
    assert ok, f"criterion {num} ({label}): {detail}"


def test_criterion_1_special_function_accuracy():
    t0 = time.time()
    rng = np.random.default_rng(101)

    worst_owens = 0.0
    for _ in range(1000):
        h = float(rng.uniform(-5, 5))
        a = float(rng.uniform(-8, 8))
        worst_owens = max(worst_owens, abs(dc.owens_t(h, a) - oracle.owens_t_quad(h, a)))

    worst_cdf = 0.0
    for _ in range(100):
        p = random_params(rng)
        t = float(rng.uniform(p.alpha - 4 * p.beta, p.alpha + 4 * p.beta))
        worst_cdf = max(worst_cdf, abs(dc.sn_cdf(t, p) - oracle.quad_cdf(t, p)))

    worst_rt = 0.0
    for _ in range(40):
        p = random_params(rng)
        for q in (0.01, 0.5, 0.99, float(rng.uniform(0.005, 0.995))):
            worst_rt = max(worst_rt, abs(dc.sn_cdf(dc.sn_quantile(q, p), p) - q))

    worst_mode = 0.0
    for _ in range(50):
        p = random_params(rng, eta=(-4.0, 4.0))
        worst_mode = max(worst_mode, abs(dc.sn_mode(p) - oracle.grid_mode(p)))

    ok = (worst_owens <= 1e-10 and worst_cdf <= 1e-9
          and worst_rt <= 1e-10 and worst_mode <= 1e-5)
    _verdict(1, "special-function accuracy", ok,
             f"owens {worst_owens:.2e}, cdf {worst_cdf:.2e}, "
             f"roundtrip {worst_rt:.2e}, mode {worst_mode:.2e}", t0)


def test_criterion_2_gradient_correctness(china_series):
    t0 = time.time()
    prior = PriorSpec.flat()
    rng = np.random.default_rng(202)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        theta = REF_THETA + rng.normal(0, 0.05, 4)
        _, grad = logpost_and_grad(theta, china_series, prior)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fp, _ = logpost_and_grad(theta + e, china_series, prior)
            fm, _ = logpost_and_grad(theta - e, china_series, prior)
            fd = (fp - fm) / (2 * h)
            worst = max(worst, abs(fd - grad[j]) / max(1.0, abs(grad[j])))
    _verdict(2, "gradient correctness", worst < 1e-6, f"worst rel err {worst:.2e}", t0)


def test_criterion_3_sampler_on_known_targets():
    t0 = time.time()

    def std_normal(q):
        return -0.5 * float(q @ q), -q

    names = ("x0", "x1", "x2", "x3")
    details = []
    ok = True

    draws = nuts_sample(
        std_normal,
        [np.full(4, 1.0), np.full(4, -1.0), np.array([2.0, -2.0, 2.0, -2.0]), np.zeros(4)],
        SamplerConfig(chains=4, warmup=1000, samples=1000, seed=42),
    )
    d = diagnostics(draws, names=names)
    flat = draws.flat_values()
    mcse = flat.std(axis=0, ddof=1) / np.sqrt([d.ess_bulk[n] for n in names])
    ok &= bool(np.all(np.abs(flat.mean(axis=0)) < 4 * mcse))
    ok &= bool(np.all(np.abs(flat.std(axis=0, ddof=1) - 1.0) < 0.05))
    ok &= d.max_rhat() < 1.01 and d.divergences == 0
    details.append(f"std-normal rhat {d.max_rhat():.4f}")

    sds = np.array([10.0, 1.0, 0.1, 0.01])
    ivar = 1.0 / sds**2

    def aniso(q):
        return -0.5 * float(np.sum(q * q * ivar)), -q * ivar

    draws2 = nuts_sample(aniso, [np.zeros(4)] * 4,
                         SamplerConfig(chains=4, warmup=1500, samples=1000, seed=7))
    d2 = diagnostics(draws2, names=names)
    flat2 = draws2.flat_values()
    mcse2 = flat2.std(axis=0, ddof=1) / np.sqrt([d2.ess_bulk[n] for n in names])
    ok &= bool(np.all(np.abs(flat2.mean(axis=0)) < 4 * mcse2))
    ok &= bool(np.all(np.abs(flat2.std(axis=0, ddof=1) / sds - 1.0) < 0.05))
    ok &= d2.max_rhat() < 1.01 and d2.divergences == 0
    ratio = draws2.inv_mass / sds**2
    ok &= bool(np.all((ratio > 1 / 1.5) & (ratio < 1.5)))
    details.append(f"anisotropic rhat {d2.max_rhat():.4f}, mass ratio "
                   f"[{ratio.min():.2f}, {ratio.max():.2f}]")

    _verdict(3, "sampler on known targets", ok, "; ".join(details), t0)


def test_criterion_4_synthetic_recovery(synthetic_series):
    t0 = time.time()
    draws = fit_series(synthetic_series, PriorSpec.flat(), SamplerConfig(seed=314))
    d = diagnostics(draws)
    flat = draws.flat_values()
    z = np.abs(flat.mean(axis=0) - ref_theta_reported()) / flat.std(axis=0, ddof=1)
    ok = bool(np.all(z < 3.0)) and d.max_rhat() < 1.01
    _verdict(4, "synthetic recovery", ok,
             f"max |z| {z.max():.2f}, rhat {d.max_rhat():.4f}", t0)


def test_criterion_5_source_country_reproduction(china_fit):
    t0 = time.time()
    flat = china_fit.flat_values()
    mean = flat.mean(axis=0)
    windows = {  # (center, half-width) on the reported scale
        "log_p": (0.87, 0.15),
        "log_alpha": (2.91, 0.15),
        "beta": (16.52, 1.5),
        "eta": (2.34, 0.6),
    }
    ok = True
    details = []
    for j, name in enumerate(("log_p", "log_alpha", "beta", "eta")):
        center, tol = windows[name]
        ok &= abs(mean[j] - center) <= tol
        details.append(f"{name} {mean[j]:.3f}")
    implied_total = math.exp(mean[0]) * 1393.0
    ok &= abs(implied_total - 3325.0) <= 0.12 * 3325.0
    details.append(f"implied total {implied_total:.0f}")
    _verdict(5, "source-country reproduction", ok, ", ".join(details), t0)


def test_criterion_6_transfer_pipeline_recovery(china_fit):
    t0 = time.time()
    prior = prior_from_draws(china_fit, inflation=1.0, p_free=True)
    population = 32.5
    truth = np.array([
        math.log(600.0 / population), prior.mean[1], math.log(prior.mean[2]), prior.mean[3],
    ])
    series = oracle.simulate_series(truth, population, 30, substream(2024, 9))

    draws = fit_series(series, prior, SamplerConfig(seed=11))
    flat = draws.flat_values()
    truth_reported = truth.copy()
    truth_reported[2] = math.exp(truth[2])
    z = np.abs(flat.mean(axis=0) - truth_reported) / flat.std(axis=0, ddof=1)

    alpha = np.exp(flat[:, 1])
    thresholds = np.asarray(kernels.sn_quantile_vec(0.99, alpha, flat[:, 2], flat[:, 3]))
    inflections = np.asarray(kernels.sn_mode_vec(alpha, flat[:, 2], flat[:, 3]))
    ordered = bool(np.all(thresholds > inflections))

    ok = bool(np.all(z < 3.0)) and ordered
    _verdict(6, "prior-transfer recovery", ok,
             f"max |z| {z.max():.2f}, threshold>inflection {ordered}", t0)


def test_criterion_7_sensitivity_structure(china_fit):
    t0 = time.time()
    prior = prior_from_draws(china_fit, inflation=1.0, p_free=True)
    population = 32.5
    truth = np.array([
        math.log(600.0 / population), prior.mean[1], math.log(prior.mean[2]), prior.mean[3],
    ])
    series = oracle.simulate_series(truth, population, 30, substream(2024, 9))

    summaries = []
    for factor in (1.0, 5.0, 10.0):
        draws = fit_series(series, prior.with_inflation(factor), SamplerConfig(seed=17))
        totals = np.exp(draws.flat_values()[:, 0]) * population
        summaries.append(summarize_quantity(totals))

    widths = [s.q97_5 - s.q2_5 for s in summaries]
    means = [s.mean for s in summaries]
    increasing = widths[0] < widths[1] < widths[2]
    max_pairwise = max(
        abs(a - b) / ((a + b) / 2) for a, b in itertools.combinations(means, 2)
    )
    ok = increasing and max_pairwise < 0.20
    _verdict(7, "sensitivity structure", ok,
             f"widths {[round(w, 1) for w in widths]}, "
             f"max mean spread {100 * max_pairwise:.1f}%", t0)


def test_criterion_8_simulation_based_calibration(tmp_path):
    t0 = time.time()
    prior = PriorSpec(mean=np.array([0.9, 2.2, 6.0, 1.5]),
                      sd=np.array([0.15, 0.08, 0.8, 0.4]))

    result = oracle.sbc_run(prior, 30.0, 40, 100,
                            SamplerConfig(chains=1, warmup=400, samples=400, seed=2718))
    oracle.write_sbc_report(result, tmp_path / "sbc_report.csv")
    ok = bool(np.all(result.p_value > 0.01))
    ok &= result.histogram.shape == (4, oracle.SBC_BINS)
    ok &= result.histogram.sum() == 4 * result.ranks.shape[0]

    # negative control at reduced scale: a broken gradient must fail uniformity
    control = oracle.sbc_run(
        prior, 30.0, 40, 50,
        SamplerConfig(chains=1, warmup=200, samples=200, seed=2718, max_tree_depth=6),
        flip_gradient=True,
    )
    ok &= bool(np.all(control.p_value < 1e-4))
    _verdict(8, "simulation-based calibration", ok,
             f"p {np.round(result.p_value, 3).tolist()}, excluded {result.failed}; "
             f"control max p {control.p_value.max():.1e}", t0)


def test_criterion_9_cli_determinism(tmp_path):
    t0 = time.time()
    snapshot = str(dataio.china_snapshot_path())
    fast = ["--chains", "2", "--warmup", "300", "--samples", "200", "--allow-unconverged"]

    for sub in ("a", "b"):
        rc = cli_main(["fit", "--data", snapshot, "--country", "China", "--seed", "5",
                       *fast, "--out", str(tmp_path / f"fit_{sub}")])
        assert rc == 0
    for sub in ("a", "b"):
        rc = cli_main(["forecast", "--data", snapshot, "--country", "Italy",
                       "--prior", str(tmp_path / "fit_a" / "summary.csv"),
                       "--seed", "6", *fast, "--out", str(tmp_path / f"fc_{sub}")])
        assert rc == 0

    ok = True
    for pair in (("fit_a", "fit_b"), ("fc_a", "fc_b")):
        a, b = (tmp_path / p for p in pair)
        names = sorted(p.name for p in a.iterdir())
        ok &= names == sorted(p.name for p in b.iterdir())
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        ok &= not mismatch and not errors
    _verdict(9, "CLI determinism", ok, "fit and forecast byte-identical", t0)
