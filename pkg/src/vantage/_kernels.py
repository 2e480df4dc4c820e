"""Numerical kernel backend selection.

Imports the compiled extension (``vantage._native``) when available and
falls back to the numpy reference (``vantage._kernels_py``) otherwise.
Set ``VANTAGE_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names
the active implementation; both expose the same functions and produce
the same results up to floating-point rounding.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("VANTAGE_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

JITTER_START = _kernels_py.JITTER_START
JITTER_MAX = _kernels_py.JITTER_MAX


def _c2(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def cross_cov(a, b, ls_h, ls_v, signal_variance):
    return _impl.cross_cov(_c2(a), _c2(b), float(ls_h), float(ls_v), float(signal_variance))


def batch_cov(stack, ls_h, ls_v, signal_variance):
    return _impl.batch_cov(_c2(stack), float(ls_h), float(ls_v), float(signal_variance))


def psd_factor_stack(covs):
    return _impl.psd_factor_stack(_c2(covs))


def psd_factor(cov):
    """Factor a single symmetric PSD matrix: L with L @ L.T == cov."""
    return _impl.psd_factor_stack(_c2(cov)[None, :, :])[0]


def qucb_scores_factored(means, factors, normals, beta):
    return _impl.qucb_scores_factored(_c2(means), _c2(factors), _c2(normals), float(beta))


def qucb_scores(means, covs, normals, beta):
    return _impl.qucb_scores(_c2(means), _c2(covs), _c2(normals), float(beta))


def landscape_objective(train, test, centers, heights, widths, base_rate, rho):
    return _impl.landscape_objective(
        _c2(train),
        _c2(test),
        _c2(centers),
        np.ascontiguousarray(heights, dtype=np.float64),
        np.ascontiguousarray(widths, dtype=np.float64),
        float(base_rate),
        float(rho),
    )
