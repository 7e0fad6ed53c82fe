"""Adaptive No-U-Turn sampler over the 4-d unconstrained posterior.

One transition grows a leapfrog trajectory by doubling until the U-turn
criterion (velocity form, diagonal metric) or the maximum tree depth stops
it, selecting the next state multinomially by trajectory weight.  Warmup
interleaves dual-averaging step-size adaptation (gamma=0.05, t0=10,
kappa=0.75) with windowed diagonal inverse-mass estimation (75/25-doubling/50
schedule); both freeze for the sampling phase.  A transition whose
Hamiltonian error exceeds 1000 nats is flagged divergent and its subtree is
never selected.

Chains use independent counter-based RNG streams derived from (seed, chain),
so a DrawMatrix is a pure function of (logpost, init, config) regardless of
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from . import model as _model
from .errors import SamplerError
from .model import PARAM_NAMES, ParamVector, PriorSpec

_DELTA_MAX = 1000.0  # Hamiltonian error (nats) beyond which a step is divergent
_DA_GAMMA = 0.05
_DA_T0 = 10.0
_DA_KAPPA = 0.75


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 1000
    samples: int = 1000
    target_accept: float = 0.8
    max_tree_depth: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.chains < 1 or self.warmup < 1 or self.samples < 1:
            raise ValueError("chains, warmup and samples must be positive")
        if not (0.0 < self.target_accept < 1.0):
            raise ValueError("target_accept must lie in (0, 1)")
        if self.max_tree_depth < 1:
            raise ValueError("max_tree_depth must be positive")


@dataclass(frozen=True)
class DrawMatrix:
    """Posterior draws: values[s, c, :] = (log_p, log_alpha, beta, eta).

    The beta column is reported back-transformed to the natural scale for
    model fits.  lp holds the log posterior of each stored draw on the
    sampling scale; step_size and inv_mass record the per-chain adaptation.
    """

    values: np.ndarray
    lp: np.ndarray
    divergent: np.ndarray
    step_size: np.ndarray
    inv_mass: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_chains(self) -> int:
        return self.values.shape[1]

    def flat_values(self) -> np.ndarray:
        """Draws pooled across chains, shape (samples * chains, 4)."""
        return self.values.reshape(-1, self.values.shape[-1])


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for (seed, key...); reproducible by construction."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def sample_initials(prior: PriorSpec, chains: int, rng: np.random.Generator) -> list[ParamVector]:
    """One draw per chain from the (inflated) prior, on the unconstrained scale.

    Natural-scale beta draws are rejected until positive and then logged;
    after 1000 rejections the prior is considered pathologically wide.
    """
    sd = prior.effective_sd()
    out = []
    for _ in range(chains):
        if prior.p_free:
            log_p = rng.normal(0.0, 10.0)
        else:
            log_p = rng.normal(prior.mean[0], sd[0])
        log_alpha = rng.normal(prior.mean[1], sd[1])
        if prior.beta_natural:
            for _attempt in range(1000):
                b = rng.normal(prior.mean[2], sd[2])
                if b > 0.0:
                    break
            else:
                raise SamplerError(
                    "failed to draw a positive beta initial value in 1000 attempts"
                )
            log_beta = math.log(b)
        else:
            log_beta = rng.normal(prior.mean[2], sd[2])
        eta = rng.normal(prior.mean[3], sd[3])
        out.append(ParamVector(float(log_p), float(log_alpha), float(log_beta), float(eta)))
    return out


def _kinetic(p: np.ndarray, inv_mass: np.ndarray) -> float:
    return 0.5 * float(np.dot(p * p, inv_mass))


def _leapfrog(logpost, q, p, grad, eps, inv_mass):
    p_half = p + 0.5 * eps * grad
    q_new = q + eps * (p_half * inv_mass)
    lp_new, grad_new = logpost(q_new)
    p_new = p_half + 0.5 * eps * np.asarray(grad_new)
    return q_new, p_new, float(lp_new), np.asarray(grad_new)


def _uturn(q_minus, q_plus, p_minus, p_plus, inv_mass) -> bool:
    dq = q_plus - q_minus
    return (
        float(np.dot(dq, inv_mass * p_minus)) < 0.0
        or float(np.dot(dq, inv_mass * p_plus)) < 0.0
    )


class _Subtree:
    __slots__ = (
        "q_minus", "p_minus", "g_minus", "q_plus", "p_plus", "g_plus",
        "q_prop", "lp_prop", "g_prop", "log_sum_w", "sum_alpha", "n_alpha",
        "ok", "divergent",
    )

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _build_tree(logpost, q, p, grad, direction, depth, eps, inv_mass, h0, rng):
    if depth == 0:
        q1, p1, lp1, g1 = _leapfrog(logpost, q, p, grad, direction * eps, inv_mass)
        h1 = -lp1 + _kinetic(p1, inv_mass)
        if not math.isfinite(h1):
            return _Subtree(
                q_minus=q1, p_minus=p1, g_minus=g1, q_plus=q1, p_plus=p1, g_plus=g1,
                q_prop=q1, lp_prop=lp1, g_prop=g1, log_sum_w=-math.inf,
                sum_alpha=0.0, n_alpha=1, ok=False, divergent=True,
            )
        delta = h1 - h0
        divergent = delta > _DELTA_MAX
        return _Subtree(
            q_minus=q1, p_minus=p1, g_minus=g1, q_plus=q1, p_plus=p1, g_plus=g1,
            q_prop=q1, lp_prop=lp1, g_prop=g1, log_sum_w=-delta,
            sum_alpha=math.exp(min(0.0, -delta)), n_alpha=1,
            ok=not divergent, divergent=divergent,
        )

    first = _build_tree(logpost, q, p, grad, direction, depth - 1, eps, inv_mass, h0, rng)
    if not first.ok:
        return first
    if direction < 0:
        second = _build_tree(
            logpost, first.q_minus, first.p_minus, first.g_minus,
            direction, depth - 1, eps, inv_mass, h0, rng,
        )
        q_minus, p_minus, g_minus = second.q_minus, second.p_minus, second.g_minus
        q_plus, p_plus, g_plus = first.q_plus, first.p_plus, first.g_plus
    else:
        second = _build_tree(
            logpost, first.q_plus, first.p_plus, first.g_plus,
            direction, depth - 1, eps, inv_mass, h0, rng,
        )
        q_minus, p_minus, g_minus = first.q_minus, first.p_minus, first.g_minus
        q_plus, p_plus, g_plus = second.q_plus, second.p_plus, second.g_plus

    log_sum_w = float(np.logaddexp(first.log_sum_w, second.log_sum_w))
    # unbiased multinomial choice between the two halves
    if second.ok and math.log(rng.random()) < second.log_sum_w - log_sum_w:
        prop = second
    else:
        prop = first
    ok = (
        first.ok
        and second.ok
        and not _uturn(q_minus, q_plus, p_minus, p_plus, inv_mass)
    )
    return _Subtree(
        q_minus=q_minus, p_minus=p_minus, g_minus=g_minus,
        q_plus=q_plus, p_plus=p_plus, g_plus=g_plus,
        q_prop=prop.q_prop, lp_prop=prop.lp_prop, g_prop=prop.g_prop,
        log_sum_w=log_sum_w,
        sum_alpha=first.sum_alpha + second.sum_alpha,
        n_alpha=first.n_alpha + second.n_alpha,
        ok=ok, divergent=first.divergent or second.divergent,
    )


def _transition(logpost, q0, lp0, g0, eps, inv_mass, max_depth, rng):
    p0 = rng.standard_normal(q0.shape[0]) / np.sqrt(inv_mass)
    h0 = -lp0 + _kinetic(p0, inv_mass)

    q_minus = q0
    p_minus = p0
    g_minus = g0
    q_plus = q0
    p_plus = p0
    g_plus = g0
    q_prop, lp_prop, g_prop = q0, lp0, g0
    log_sum_w = 0.0
    sum_alpha = 0.0
    n_alpha = 0
    divergent = False

    for _depth in range(max_depth):
        direction = 1 if rng.random() < 0.5 else -1
        if direction < 0:
            tree = _build_tree(
                logpost, q_minus, p_minus, g_minus, direction, _depth, eps, inv_mass, h0, rng
            )
        else:
            tree = _build_tree(
                logpost, q_plus, p_plus, g_plus, direction, _depth, eps, inv_mass, h0, rng
            )
        sum_alpha += tree.sum_alpha
        n_alpha += tree.n_alpha
        divergent = divergent or tree.divergent
        if not tree.ok:
            break
        # biased progressive selection favours the fresh subtree
        if math.log(rng.random()) < tree.log_sum_w - log_sum_w:
            q_prop, lp_prop, g_prop = tree.q_prop, tree.lp_prop, tree.g_prop
        log_sum_w = float(np.logaddexp(log_sum_w, tree.log_sum_w))
        if direction < 0:
            q_minus, p_minus, g_minus = tree.q_minus, tree.p_minus, tree.g_minus
        else:
            q_plus, p_plus, g_plus = tree.q_plus, tree.p_plus, tree.g_plus
        if _uturn(q_minus, q_plus, p_minus, p_plus, inv_mass):
            break

    accept_stat = sum_alpha / max(n_alpha, 1)
    return q_prop, lp_prop, g_prop, accept_stat, divergent


def _find_initial_step(logpost, q, lp, grad, inv_mass, rng) -> float:
    """Double/halve the step until one leapfrog step crosses 50% acceptance."""
    p = rng.standard_normal(q.shape[0]) / np.sqrt(inv_mass)
    h0 = -lp + _kinetic(p, inv_mass)

    def energy_error(eps):
        q1, p1, lp1, _ = _leapfrog(logpost, q, p, grad, eps, inv_mass)
        h1 = -lp1 + _kinetic(p1, inv_mass)
        return h1 - h0

    eps = 1.0
    d = energy_error(eps)
    for _ in range(60):
        if math.isfinite(d):
            break
        eps *= 0.5
        d = energy_error(eps)
    else:
        raise SamplerError("could not find a finite starting step size")

    a = 1.0 if -d > math.log(0.5) else -1.0
    for _ in range(100):
        eps_next = eps * 2.0**a
        if not (1e-10 < eps_next < 1e3):
            break
        d = energy_error(eps_next)
        if not math.isfinite(d):
            break
        eps = eps_next
        if a * (-d) <= a * math.log(0.5):
            break
    return eps


class _DualAveraging:
    def __init__(self, eps0: float, target: float):
        self.mu = math.log(10.0 * eps0)
        self.log_eps = math.log(eps0)
        self.log_eps_bar = math.log(eps0)
        self.h_bar = 0.0
        self.t = 0
        self.target = target

    def update(self, accept_stat: float) -> float:
        self.t += 1
        eta = 1.0 / (self.t + _DA_T0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_stat)
        self.log_eps = self.mu - math.sqrt(self.t) / _DA_GAMMA * self.h_bar
        w = self.t ** (-_DA_KAPPA)
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar
        return math.exp(self.log_eps)

    def adapted(self) -> float:
        return math.exp(self.log_eps_bar)


def _adaptation_windows(warmup: int) -> list[tuple[int, int]]:
    """Stan-style expanding windows for diagonal mass estimation."""
    if warmup < 20:
        return []
    if warmup >= 150:
        init_buffer, term_buffer, base = 75, 50, 25
    else:
        init_buffer = max(1, int(0.15 * warmup))
        term_buffer = max(1, int(0.10 * warmup))
        base = max(1, (warmup - init_buffer - term_buffer) // 3)
    start = init_buffer
    end_middle = warmup - term_buffer
    if end_middle <= start:
        return []
    win = min(base, end_middle - start)
    windows = []
    while start + win < end_middle:
        windows.append((start, start + win))
        start += win
        win = min(2 * win, end_middle - start)
    if start < end_middle:
        windows.append((start, end_middle))
    return windows


class _Welford:
    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def add(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self.m2 = self.m2 + delta * (x - self.mean)

    def regularized_var(self) -> np.ndarray:
        # shrink toward 1e-3 as Stan does; keeps early windows well conditioned
        var = self.m2 / max(self.n - 1, 1)
        w = self.n / (self.n + 5.0)
        return w * var + (1.0 - w) * 1e-3


def _run_chain(logpost, q0: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator):
    # overflow inside a trajectory is legitimate: it surfaces as an infinite
    # Hamiltonian and the step is flagged divergent
    with np.errstate(over="ignore", invalid="ignore"):
        return _run_chain_inner(logpost, q0, cfg, rng)


def _run_chain_inner(logpost, q0: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator):
    dim = q0.shape[0]
    q = q0.copy()
    lp, grad = logpost(q)
    lp = float(lp)
    grad = np.asarray(grad, dtype=float)
    if not math.isfinite(lp):
        raise SamplerError("log posterior is not finite at an initial value")

    inv_mass = np.ones(dim)
    eps = _find_initial_step(logpost, q, lp, grad, inv_mass, rng)
    da = _DualAveraging(eps, cfg.target_accept)

    windows = _adaptation_windows(cfg.warmup)
    window_ends = {end for _, end in windows}
    accum = _Welford(dim)

    for it in range(cfg.warmup):
        q, lp, grad, accept, _div = _transition(
            logpost, q, lp, grad, eps, inv_mass, cfg.max_tree_depth, rng
        )
        eps = da.update(accept)
        if any(start <= it < end for start, end in windows):
            accum.add(q)
        if (it + 1) in window_ends:
            inv_mass = accum.regularized_var()
            accum = _Welford(dim)
            eps = da.adapted()
            da = _DualAveraging(eps, cfg.target_accept)

    eps = da.adapted()

    values = np.empty((cfg.samples, dim))
    lps = np.empty(cfg.samples)
    divs = np.zeros(cfg.samples, dtype=bool)
    for it in range(cfg.samples):
        q, lp, grad, _accept, div = _transition(
            logpost, q, lp, grad, eps, inv_mass, cfg.max_tree_depth, rng
        )
        values[it] = q
        lps[it] = lp
        divs[it] = div
    return values, lps, divs, eps, inv_mass


def nuts_sample(
    logpost: Callable[[np.ndarray], tuple[float, np.ndarray]],
    init: Sequence,
    cfg: SamplerConfig,
    transform: Callable[[np.ndarray], np.ndarray] | None = None,
) -> DrawMatrix:
    """Run ``cfg.chains`` NUTS chains and collect post-warmup draws.

    ``init`` supplies one unconstrained starting point per chain (ParamVector
    or length-d array).  ``transform`` optionally maps each stored draw to a
    reporting scale (model fits use it to return beta = exp(log_beta)).
    """
    inits = [
        p.to_array() if isinstance(p, ParamVector) else np.ascontiguousarray(p, dtype=float)
        for p in init
    ]
    if len(inits) != cfg.chains:
        raise ValueError(f"expected {cfg.chains} initial points, got {len(inits)}")
    dim = inits[0].shape[0]
    for q0 in inits:
        lp0, _ = logpost(q0)
        if not math.isfinite(float(lp0)):
            raise SamplerError("log posterior is not finite at an initial value")

    values = np.empty((cfg.samples, cfg.chains, dim))
    lps = np.empty((cfg.samples, cfg.chains))
    divs = np.zeros((cfg.samples, cfg.chains), dtype=bool)
    step_sizes = np.empty(cfg.chains)
    inv_masses = np.empty((cfg.chains, dim))

    for c in range(cfg.chains):
        rng = substream(cfg.seed, 0, c)
        v, l, d, eps, inv_mass = _run_chain(logpost, inits[c], cfg, rng)
        values[:, c, :] = v
        lps[:, c] = l
        divs[:, c] = d
        step_sizes[c] = eps
        inv_masses[c] = inv_mass

    if divs.mean() > 0.9:
        raise SamplerError(
            f"{100 * divs.mean():.0f}% of post-warmup draws diverged; "
            "the posterior geometry defeats the integrator"
        )
    if transform is not None:
        flat = values.reshape(-1, dim)
        values = np.array([transform(row) for row in flat]).reshape(values.shape)
    if np.isnan(values).any() or np.isnan(lps).any():
        raise SamplerError("NaN in stored draws")
    return DrawMatrix(values=values, lp=lps, divergent=divs,
                      step_size=step_sizes, inv_mass=inv_masses)


def _beta_to_natural(row: np.ndarray) -> np.ndarray:
    out = row.copy()
    out[2] = math.exp(out[2])
    return out


def fit_series(series, prior: PriorSpec, cfg: SamplerConfig) -> DrawMatrix:
    """Sample the model posterior for a death series under the given prior.

    Initial values are drawn from the (inflated) prior on a dedicated RNG
    substream; the returned DrawMatrix reports beta on the natural scale.
    """
    init = sample_initials(prior, cfg.chains, substream(cfg.seed, 1))
    logpost = _model.make_logpost(series, prior)
    return nuts_sample(logpost, init, cfg, transform=_beta_to_natural)


# ---------------------------------------------------------------------------
# Convergence diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostics:
    rhat: dict = field(default_factory=dict)
    ess_bulk: dict = field(default_factory=dict)
    divergences: int = 0

    def max_rhat(self) -> float:
        return max(self.rhat.values())


def _split_chains(x: np.ndarray) -> np.ndarray:
    half = x.shape[1] // 2
    return np.vstack((x[:, :half], x[:, -half:]))


def _z_scale(x: np.ndarray) -> np.ndarray:
    rank = rankdata(x, method="average").reshape(x.shape)
    return ndtri((rank - 0.5) / x.size)


def _rhat_basic(x: np.ndarray) -> float:
    n = x.shape[1]
    chain_mean = x.mean(axis=1)
    chain_var = x.var(axis=1, ddof=1)
    between = n * chain_mean.var(ddof=1)
    within = chain_var.mean()
    if within == 0.0:
        return math.nan
    return math.sqrt(((n - 1) / n * within + between / n) / within)


def _rhat_rank_normalized(x: np.ndarray) -> float:
    bulk = _rhat_basic(_z_scale(_split_chains(x)))
    folded = _rhat_basic(_z_scale(_split_chains(np.abs(x - np.median(x)))))
    return max(bulk, folded)


def _autocov(y: np.ndarray) -> np.ndarray:
    n = y.size
    m = 1 << (2 * n - 1).bit_length()
    yc = y - y.mean()
    f = np.fft.rfft(yc, m)
    return np.fft.irfft(f * np.conj(f), m)[:n].real / n


def _ess_core(x: np.ndarray) -> float:
    """Geyer initial-monotone-sequence ESS for a (chains, draws) array."""
    n_chain, n_draw = x.shape
    acov = np.array([_autocov(x[c]) for c in range(n_chain)])
    chain_mean = x.mean(axis=1)
    mean_var = acov[:, 0].mean() * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if n_chain > 1:
        var_plus += chain_mean.var(ddof=1)
    if var_plus == 0.0:
        return math.nan

    rho = np.zeros(n_draw)
    rho[0] = 1.0
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - acov[:, 1].mean()) / var_plus
    rho[1] = rho_odd
    t = 1
    while t < n_draw - 2 and (rho_even + rho_odd) >= 0.0:
        rho_even = 1.0 - (mean_var - acov[:, t + 1].mean()) / var_plus
        rho_odd = 1.0 - (mean_var - acov[:, t + 2].mean()) / var_plus
        rho[t + 1] = rho_even
        if (rho_even + rho_odd) >= 0.0:
            rho[t + 2] = rho_odd
        t += 2
    max_t = t
    t = 1
    while t <= max_t - 2:
        if (rho[t + 1] + rho[t + 2]) > (rho[t - 1] + rho[t]):
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2
    tau = -1.0 + 2.0 * rho[:max_t].sum() + rho[max_t + 1: max_t + 2].sum()
    return float(n_chain * n_draw / tau)


def _ess_bulk(x: np.ndarray) -> float:
    return _ess_core(_z_scale(_split_chains(x)))


def diagnostics(draws: DrawMatrix, names: Sequence[str] = PARAM_NAMES) -> Diagnostics:
    """Rank-normalized split R-hat and bulk ESS per parameter."""
    values = draws.values
    if values.shape[1] < 2 or values.shape[0] < 4:
        raise ValueError("diagnostics need at least 2 chains and 4 draws per chain")
    rhat = {}
    ess = {}
    for j, name in enumerate(names):
        x = values[:, :, j].T  # (chains, draws)
        rhat[name] = _rhat_rank_normalized(x)
        ess[name] = _ess_bulk(x)
    return Diagnostics(rhat=rhat, ess_bulk=ess, divergences=int(draws.divergent.sum()))
