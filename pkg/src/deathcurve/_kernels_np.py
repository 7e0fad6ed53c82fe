"""Vectorized pure-NumPy fallback for the hot kernels.

Same formulas and signatures as ``_kernels_nb``; selected by setting
``DEATHCURVE_NO_NUMBA=1`` (or when numba is not importable).  Loop kernels
become array expressions here, so the fallback stays usable on large grids.
"""

import math

import numpy as np
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)
LOG2 = math.log(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_2PI = 1.0 / (2.0 * math.pi)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


def log_phi(x):
    x = np.asarray(x, dtype=float)
    # the direct branch only feeds lanes with x >= -10; clip its input so the
    # unused lanes cannot underflow erfc and warn
    direct = np.log(0.5 * erfc(-np.clip(x, -10.0, 37.0) / SQRT2))
    xs = np.where(x < -10.0, x, -20.0)  # dummy lanes keep the series finite
    inv_x2 = 1.0 / (xs * xs)
    s = np.ones_like(xs)
    term = np.ones_like(xs)
    for k in range(1, 40):
        term = term * (-(2.0 * k - 1.0) * inv_x2)
        s = s + term
    asym = -0.5 * xs * xs - LOG_SQRT_2PI - np.log(-xs) + np.log(s)
    return np.where(x < -10.0, asym, direct)


def zeta(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x - LOG_SQRT_2PI - log_phi(x))


def _owens_core(h, a):
    # T(h, a) elementwise for 0 <= a <= 1, h >= 0.
    lam = 0.5 * h * h
    # power series (exact for a <= 0.7; dummy elsewhere)
    p = np.exp(-lam)
    c = p.copy()
    a2 = a * a
    apow = a.copy()
    s = c * apow
    sign = -1.0
    for n in range(1, 300):
        p = p * (lam / n)
        c = c + p
        apow = apow * a2
        s = s + sign * c * apow / (2.0 * n + 1.0)
        sign = -sign
    series = s * INV_2PI

    half = 0.5 * a
    x = half[..., None] * (_GL_X + 1.0)
    integrand = np.exp(-lam[..., None] * (1.0 + x * x)) / (1.0 + x * x)
    quad = (integrand @ _GL_W) * half * INV_2PI

    return np.where(a <= 0.7, series, quad)


def owens_t(h, a):
    h = np.abs(np.asarray(h, dtype=float))
    a = np.asarray(a, dtype=float)
    h, a = np.broadcast_arrays(h, a)
    sign = np.where(a < 0.0, -1.0, 1.0)
    a = np.abs(a)

    big = a > 1.0
    inv_a = np.where(big, 1.0 / np.where(a == 0.0, 1.0, a), a)
    hh = np.where(big, a * h, h)
    core = _owens_core(hh, inv_a)
    reduced = 0.5 * (norm_cdf(h) + norm_cdf(a * h)) - norm_cdf(h) * norm_cdf(a * h) - core
    t = np.where(big, reduced, core)
    return sign * np.where(a == 0.0, 0.0, t)


def sn_logpdf_one(t, alpha, beta, eta):
    z = (t - alpha) / beta
    return float(LOG2 - math.log(beta) - 0.5 * z * z - LOG_SQRT_2PI + log_phi(eta * z))


def sn_cdf_one(t, alpha, beta, eta):
    z = (t - alpha) / beta
    g = float(norm_cdf(z) - 2.0 * owens_t(z, eta))
    return min(max(g, 0.0), 1.0)


def sn_logpdf_vec(t, alpha, beta, eta):
    z = (np.asarray(t, dtype=float) - alpha) / beta
    return LOG2 - math.log(beta) - 0.5 * z * z - LOG_SQRT_2PI + log_phi(eta * z)


def sn_cdf_vec(t, alpha, beta, eta):
    z = (np.asarray(t, dtype=float) - alpha) / beta
    return np.clip(norm_cdf(z) - 2.0 * owens_t(z, eta), 0.0, 1.0)


def sn_logpdf_grid(t, alpha, beta, eta):
    t = np.asarray(t, dtype=float)
    a = np.asarray(alpha, dtype=float)[:, None]
    b = np.asarray(beta, dtype=float)[:, None]
    e = np.asarray(eta, dtype=float)[:, None]
    z = (t[None, :] - a) / b
    return LOG2 - np.log(b) - 0.5 * z * z - LOG_SQRT_2PI + log_phi(e * z)


def sn_cdf_grid(t, alpha, beta, eta):
    t = np.asarray(t, dtype=float)
    a = np.asarray(alpha, dtype=float)[:, None]
    b = np.asarray(beta, dtype=float)[:, None]
    e = np.asarray(eta, dtype=float)[:, None]
    z = (t[None, :] - a) / b
    return np.clip(norm_cdf(z) - 2.0 * owens_t(z, np.broadcast_to(e, z.shape)), 0.0, 1.0)


def _cdf_elem(t, alpha, beta, eta):
    z = (t - alpha) / beta
    return np.clip(norm_cdf(z) - 2.0 * owens_t(z, eta), 0.0, 1.0)


def sn_quantile_vec(q, alpha, beta, eta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    eta = np.asarray(eta, dtype=float)

    k = np.ones_like(alpha)
    lo = alpha - k * beta
    for _ in range(200):
        mask = _cdf_elem(lo, alpha, beta, eta) >= q
        if not mask.any():
            break
        k = np.where(mask, 2.0 * k, k)
        lo = np.where(mask, alpha - k * beta, lo)
    k = np.ones_like(alpha)
    hi = alpha + k * beta
    for _ in range(200):
        mask = _cdf_elem(hi, alpha, beta, eta) <= q
        if not mask.any():
            break
        k = np.where(mask, 2.0 * k, k)
        hi = np.where(mask, alpha + k * beta, hi)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = _cdf_elem(mid, alpha, beta, eta) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < 1e-13 * max(1.0, float(np.max(np.abs(hi)))):
            break
    return 0.5 * (lo + hi)


def sn_quantile_one(q, alpha, beta, eta):
    return float(sn_quantile_vec(q, np.array([alpha]), np.array([beta]), np.array([eta]))[0])


def sn_mode_vec(alpha, beta, eta):
    # root of the standardized score -z + |eta| * zeta(|eta| z) on (0, 1),
    # reflected for negative eta; see the scalar kernel for rationale
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    sign = np.where(eta < 0.0, -1.0, 1.0)
    e = np.abs(eta)
    lo = np.zeros_like(alpha)
    hi = np.ones_like(alpha)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = (-mid + e * zeta(e * mid)) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.max(hi - lo) < 1e-16:
            break
    return np.where(eta == 0.0, alpha, alpha + sign * 0.5 * (lo + hi) * beta)


def sn_mode_one(alpha, beta, eta):
    return float(sn_mode_vec(np.array([alpha]), np.array([beta]), np.array([eta]))[0])


def loglik_grad(theta, day, deaths, pop_millions):
    with np.errstate(all="ignore"):
        log_p = theta[0]
        alpha = float(np.exp(theta[1]))
        beta = float(np.exp(theta[2]))
        eta = theta[3]
        zeros = np.zeros(4)
        if not (math.isfinite(alpha) and math.isfinite(beta)) or beta == 0.0:
            return -np.inf, zeros
        z = (day - alpha) / beta
        log_g = LOG2 - theta[2] - 0.5 * z * z - LOG_SQRT_2PI + log_phi(eta * z)
        log_lam = log_p + log_g + math.log(pop_millions)
        if np.any(log_lam > 700.0) or not np.all(np.isfinite(log_lam)):
            return -np.inf, zeros
        lam = np.exp(log_lam)
        ll = float(np.sum(np.where(deaths > 0.0, deaths * log_lam, 0.0)) - np.sum(lam))
        if not math.isfinite(ll):
            return -np.inf, zeros
        r = deaths - lam
        zet = zeta(eta * z)
        grad = np.array(
            [
                np.sum(r),
                np.sum(r * alpha * (z - eta * zet) / beta),
                np.sum(r * (z * z - 1.0 - z * eta * zet)),
                np.sum(r * z * zet),
            ]
        )
        return ll, grad


def logprior_grad(theta, mean, sd, p_free, beta_natural):
    with np.errstate(all="ignore"):
        grad = np.zeros(4)
        lp = 0.0

        if p_free:
            m0, s0 = 0.0, 10.0
        else:
            m0, s0 = mean[0], sd[0]
        d = theta[0] - m0
        lp += -0.5 * (d / s0) ** 2 - math.log(s0) - LOG_SQRT_2PI
        grad[0] = -d / (s0 * s0)

        d = theta[1] - mean[1]
        lp += -0.5 * (d / sd[1]) ** 2 - math.log(sd[1]) - LOG_SQRT_2PI
        grad[1] = -d / (sd[1] * sd[1])

        if beta_natural:
            b = float(np.exp(theta[2]))
            d = b - mean[2]
            lp += -0.5 * (d / sd[2]) ** 2 - math.log(sd[2]) - LOG_SQRT_2PI + theta[2]
            grad[2] = -d / (sd[2] * sd[2]) * b + 1.0
        else:
            d = theta[2] - mean[2]
            lp += -0.5 * (d / sd[2]) ** 2 - math.log(sd[2]) - LOG_SQRT_2PI
            grad[2] = -d / (sd[2] * sd[2])

        d = theta[3] - mean[3]
        lp += -0.5 * (d / sd[3]) ** 2 - math.log(sd[3]) - LOG_SQRT_2PI
        grad[3] = -d / (sd[3] * sd[3])

        return lp, grad


def logpost_grad(theta, day, deaths, pop_millions, mean, sd, p_free, beta_natural):
    ll, gl = loglik_grad(theta, day, deaths, pop_millions)
    lp, gp = logprior_grad(theta, mean, sd, p_free, beta_natural)
    return ll + lp, gl + gp
