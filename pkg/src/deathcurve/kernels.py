"""Backend selection for the numerical kernels.

The numba-compiled kernels are used by default; set ``DEATHCURVE_NO_NUMBA=1``
to force the pure-NumPy implementations (also used when numba is missing).
Both backends expose the same names and agree to floating-point roundoff;
``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

_flag = os.environ.get("DEATHCURVE_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

if NUMBA_AVAILABLE and not NUMBA_DISABLED:
    from . import _kernels_nb as _impl

    BACKEND = "numba"
else:
    from . import _kernels_np as _impl

    BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


norm_cdf = _impl.norm_cdf
log_phi = _impl.log_phi
zeta = _impl.zeta
owens_t = _impl.owens_t
sn_logpdf_one = _impl.sn_logpdf_one
sn_cdf_one = _impl.sn_cdf_one
sn_logpdf_vec = _impl.sn_logpdf_vec
sn_cdf_vec = _impl.sn_cdf_vec
sn_logpdf_grid = _impl.sn_logpdf_grid
sn_cdf_grid = _impl.sn_cdf_grid
sn_quantile_one = _impl.sn_quantile_one
sn_quantile_vec = _impl.sn_quantile_vec
sn_mode_one = _impl.sn_mode_one
sn_mode_vec = _impl.sn_mode_vec
loglik_grad = _impl.loglik_grad
logprior_grad = _impl.logprior_grad
logpost_grad = _impl.logpost_grad
