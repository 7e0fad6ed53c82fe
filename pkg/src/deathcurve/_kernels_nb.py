"""Scalar/loop numerical kernels compiled with numba.

Hot inner-loop routines: the skew-normal special-function family and the
Poisson log-likelihood with its analytic gradient.  ``deathcurve.kernels``
selects this backend at import time; ``_kernels_np`` holds the vectorized
pure-NumPy fallback with identical signatures and semantics.
"""

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)
LOG2 = math.log(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_2PI = 1.0 / (2.0 * math.pi)

# Fixed-order Gauss-Legendre panel for Owen's T on 0.7 < a <= 1; 64 nodes keep
# the quadrature error far below 1e-15 for every h that does not underflow.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


@njit(cache=True, error_model='numpy')
def norm_cdf(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit(cache=True, error_model='numpy')
def log_phi(x):
    """log of the standard normal CDF, finite for all finite x."""
    if x >= -10.0:
        return math.log(0.5 * math.erfc(-x / SQRT2))
    # Mills-ratio asymptotic series; erfc underflows near x = -37.6 but the
    # series stays accurate to ~1e-16 relative for x <= -10.
    inv_x2 = 1.0 / (x * x)
    s = 1.0
    term = 1.0
    for k in range(1, 40):
        term *= -(2.0 * k - 1.0) * inv_x2
        if abs(term) < 1e-18:
            break
        s += term
    return -0.5 * x * x - LOG_SQRT_2PI - math.log(-x) + math.log(s)


@njit(cache=True, error_model='numpy')
def zeta(x):
    """Inverse Mills ratio phi(x)/Phi(x), evaluated in log space."""
    return math.exp(-0.5 * x * x - LOG_SQRT_2PI - log_phi(x))


@njit(cache=True, error_model='numpy')
def _owens_core(h, a):
    # T(h, a) for 0 <= a <= 1, h >= 0.
    if a == 0.0:
        return 0.0
    lam = 0.5 * h * h
    if a <= 0.7:
        # Owen's power series with Poisson-CDF coefficients; truncation error
        # is bounded by a^(2n+1)/(2n+1), negligible at n = 300 for a <= 0.7.
        p = math.exp(-lam)
        c = p
        a2 = a * a
        apow = a
        s = c * apow
        sign = -1.0
        for n in range(1, 300):
            p *= lam / n
            c += p
            apow *= a2
            term = sign * c * apow / (2.0 * n + 1.0)
            s += term
            if abs(term) < 1e-18 and p < 1e-18:
                break
            sign = -sign
        return s * INV_2PI
    # Gauss-Legendre on the defining integral; the series converges too
    # slowly once a approaches 1.
    if lam > 745.0:
        return 0.0
    half = 0.5 * a
    s = 0.0
    for i in range(_GL_X.shape[0]):
        x = half * (_GL_X[i] + 1.0)
        s += _GL_W[i] * math.exp(-lam * (1.0 + x * x)) / (1.0 + x * x)
    return s * half * INV_2PI


@njit(cache=True, error_model='numpy')
def owens_t(h, a):
    """Owen's T function, absolute accuracy well under 1e-12."""
    h = abs(h)  # T(-h, a) = T(h, a)
    sign = 1.0
    if a < 0.0:  # T(h, -a) = -T(h, a)
        a = -a
        sign = -1.0
    if a <= 1.0:
        return sign * _owens_core(h, a)
    ah = a * h
    t = (
        0.5 * (norm_cdf(h) + norm_cdf(ah))
        - norm_cdf(h) * norm_cdf(ah)
        - _owens_core(ah, 1.0 / a)
    )
    return sign * t


@njit(cache=True, error_model='numpy')
def sn_logpdf_one(t, alpha, beta, eta):
    z = (t - alpha) / beta
    return LOG2 - math.log(beta) - 0.5 * z * z - LOG_SQRT_2PI + log_phi(eta * z)


@njit(cache=True, error_model='numpy')
def sn_cdf_one(t, alpha, beta, eta):
    z = (t - alpha) / beta
    g = norm_cdf(z) - 2.0 * owens_t(z, eta)
    if g < 0.0:
        return 0.0
    if g > 1.0:
        return 1.0
    return g


@njit(cache=True, error_model='numpy')
def sn_logpdf_vec(t, alpha, beta, eta):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = sn_logpdf_one(t[i], alpha, beta, eta)
    return out


@njit(cache=True, error_model='numpy')
def sn_cdf_vec(t, alpha, beta, eta):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = sn_cdf_one(t[i], alpha, beta, eta)
    return out


@njit(cache=True, error_model='numpy')
def sn_logpdf_grid(t, alpha, beta, eta):
    # rows: parameter draws, columns: time points
    out = np.empty((alpha.shape[0], t.shape[0]))
    for s in range(alpha.shape[0]):
        for i in range(t.shape[0]):
            out[s, i] = sn_logpdf_one(t[i], alpha[s], beta[s], eta[s])
    return out


@njit(cache=True, error_model='numpy')
def sn_cdf_grid(t, alpha, beta, eta):
    out = np.empty((alpha.shape[0], t.shape[0]))
    for s in range(alpha.shape[0]):
        for i in range(t.shape[0]):
            out[s, i] = sn_cdf_one(t[i], alpha[s], beta[s], eta[s])
    return out


@njit(cache=True, error_model='numpy')
def sn_quantile_one(q, alpha, beta, eta):
    """Invert the CDF: bracket by doubling around alpha +/- k*beta, then Brent."""
    k = 1.0
    lo = alpha - beta
    hi = alpha + beta
    for _ in range(200):
        if sn_cdf_one(lo, alpha, beta, eta) < q:
            break
        k *= 2.0
        lo = alpha - k * beta
    k = 1.0
    for _ in range(200):
        if sn_cdf_one(hi, alpha, beta, eta) > q:
            break
        k *= 2.0
        hi = alpha + k * beta

    a = lo
    b = hi
    fa = sn_cdf_one(a, alpha, beta, eta) - q
    fb = sn_cdf_one(b, alpha, beta, eta) - q
    c = a
    fc = fa
    d = b - a
    e = d
    for _ in range(300):
        if abs(fb) <= 1e-12:
            return b
        if abs(fc) < abs(fb):
            a = b
            b = c
            c = a
            fa = fb
            fb = fc
            fc = fa
        tol_act = 2.0 * 2.2e-16 * abs(b) + 1e-14
        m = 0.5 * (c - b)
        if abs(m) <= tol_act:
            return b
        if abs(e) < tol_act or abs(fa) <= abs(fb):
            d = m
            e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                qq = 1.0 - s
            else:
                qq = fa / fc
                r = fb / fc
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0))
                qq = (qq - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                qq = -qq
            p = abs(p)
            if 2.0 * p < min(3.0 * m * qq - abs(tol_act * qq), abs(e * qq)):
                e = d
                d = p / qq
            else:
                d = m
                e = m
        a = b
        fa = fb
        if abs(d) > tol_act:
            b += d
        else:
            b += tol_act if m > 0.0 else -tol_act
        fb = sn_cdf_one(b, alpha, beta, eta) - q
        if (fb > 0.0) == (fc > 0.0):
            c = a
            fc = fa
            d = b - a
            e = d
    return b


@njit(cache=True, error_model='numpy')
def sn_quantile_vec(q, alpha, beta, eta):
    out = np.empty(alpha.shape[0])
    for i in range(alpha.shape[0]):
        out[i] = sn_quantile_one(q, alpha[i], beta[i], eta[i])
    return out


@njit(cache=True, error_model='numpy')
def sn_mode_one(alpha, beta, eta):
    """Unique maximizer of the density via the stationarity condition.

    In standardized coordinates the score -z + eta * zeta(eta * z) is strictly
    decreasing with its root in (0, 1) for eta > 0, so bisection converges to
    machine precision (a direct golden-section search on the log density
    cannot resolve the flat maximum below ~sqrt(eps) * beta).  Negative eta
    uses the reflection symmetry of the family.
    """
    if eta == 0.0:
        return alpha
    sign = 1.0 if eta > 0.0 else -1.0
    e = abs(eta)
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if -mid + e * zeta(e * mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return alpha + sign * 0.5 * (lo + hi) * beta


@njit(cache=True, error_model='numpy')
def sn_mode_vec(alpha, beta, eta):
    out = np.empty(alpha.shape[0])
    for i in range(alpha.shape[0]):
        out[i] = sn_mode_one(alpha[i], beta[i], eta[i])
    return out


@njit(cache=True, error_model='numpy')
def loglik_grad(theta, day, deaths, pop_millions):
    """Poisson log likelihood (log y! dropped) and gradient on the sampling scale.

    theta = (log_p, log_alpha, log_beta, eta); intensity exp(log_p) * g(t) * K.
    Returns (-inf, zeros) when the intensity overflows or the data are
    impossible under the parameters; the sampler treats that as a divergence.
    """
    grad = np.zeros(4)
    log_p = theta[0]
    alpha = math.exp(theta[1])
    beta = math.exp(theta[2])
    eta = theta[3]
    log_k = math.log(pop_millions)
    ll = 0.0
    for i in range(day.shape[0]):
        z = (day[i] - alpha) / beta
        log_g = LOG2 - theta[2] - 0.5 * z * z - LOG_SQRT_2PI + log_phi(eta * z)
        log_lam = log_p + log_g + log_k
        if log_lam > 700.0 or not math.isfinite(log_lam):
            return -np.inf, np.zeros(4)
        lam = math.exp(log_lam)
        y = deaths[i]
        if y > 0.0:
            ll += y * log_lam
        ll -= lam
        r = y - lam
        zet = zeta(eta * z)
        grad[0] += r
        grad[1] += r * alpha * (z - eta * zet) / beta
        grad[2] += r * (z * z - 1.0 - z * eta * zet)
        grad[3] += r * z * zet
    if not math.isfinite(ll):
        return -np.inf, np.zeros(4)
    return ll, grad


@njit(cache=True, error_model='numpy')
def logprior_grad(theta, mean, sd, p_free, beta_natural):
    """Independent normal log prior and gradient.

    mean/sd are ordered (log_p, log_alpha, beta, eta); sd must already carry
    any inflation.  The beta component is a normal on exp(log_beta) plus the
    change-of-variables term unless beta_natural is False, in which case it
    applies to log_beta directly (the diffuse-prior definition).  p_free
    replaces the log_p component with N(0, 10^2).
    """
    grad = np.zeros(4)
    lp = 0.0

    if p_free:
        m0 = 0.0
        s0 = 10.0
    else:
        m0 = mean[0]
        s0 = sd[0]
    d = theta[0] - m0
    lp += -0.5 * (d / s0) ** 2 - math.log(s0) - LOG_SQRT_2PI
    grad[0] = -d / (s0 * s0)

    d = theta[1] - mean[1]
    lp += -0.5 * (d / sd[1]) ** 2 - math.log(sd[1]) - LOG_SQRT_2PI
    grad[1] = -d / (sd[1] * sd[1])

    if beta_natural:
        b = math.exp(theta[2])
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


@njit(cache=True, error_model='numpy')
def logpost_grad(theta, day, deaths, pop_millions, mean, sd, p_free, beta_natural):
    ll, gl = loglik_grad(theta, day, deaths, pop_millions)
    lp, gp = logprior_grad(theta, mean, sd, p_free, beta_natural)
    return ll + lp, gl + gp
