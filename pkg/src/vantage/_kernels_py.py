"""Pure-numpy implementations of the numerical hot kernels.

This is the fallback backend behind :mod:`vantage._kernels`; the compiled
extension in ``_native.pyx`` implements the same contract.  All inputs are
C-contiguous float64 arrays (the dispatch layer guarantees it).

Factorization here is an outer-product Cholesky with pivot zeroing:
posterior covariances are only positive *semi*-definite (a batch may
contain a zero-variance point), so pivots within rounding of zero produce
an exactly-zero factor column instead of failing.  Strongly negative
pivots escalate through diagonal jitter and finally raise LinAlgError.
"""

import numpy as np

# Jitter ladder for not-quite-PSD matrices, absolute values added to the
# diagonal: start tiny, escalate by 10x, give up past JITTER_MAX.
JITTER_START = 1e-10
JITTER_MAX = 1e-4

# Pivot classification, relative to the largest initial diagonal entry.
_PIVOT_POS = 1e-14
_PIVOT_NEG = 1e-10


def cross_cov(a, b, ls_h, ls_v, signal_variance):
    """Squared-exponential cross covariance between point sets.

    k(x, y) = s2 * exp(-0.5 * ((dx/ls_h)^2 + (dy/ls_v)^2)) as an
    (n, m) matrix for a of shape (n, 2) and b of shape (m, 2).
    """
    inv2h = 0.5 / (ls_h * ls_h)
    inv2v = 0.5 / (ls_v * ls_v)
    dh = a[:, 0, None] - b[None, :, 0]
    dv = a[:, 1, None] - b[None, :, 1]
    return signal_variance * np.exp(-(dh * dh * inv2h + dv * dv * inv2v))


def batch_cov(stack, ls_h, ls_v, signal_variance):
    """Prior covariance of each batch in a (R, q, 2) stack -> (R, q, q)."""
    inv2h = 0.5 / (ls_h * ls_h)
    inv2v = 0.5 / (ls_v * ls_v)
    dh = stack[:, :, None, 0] - stack[:, None, :, 0]
    dv = stack[:, :, None, 1] - stack[:, None, :, 1]
    return signal_variance * np.exp(-(dh * dh * inv2h + dv * dv * inv2v))


def _factor_one(a, scale):
    """Pivot-zeroing Cholesky of one (q, q) matrix; returns None if not PSD."""
    q = a.shape[0]
    lower = np.zeros_like(a)
    pos_tol = _PIVOT_POS * scale
    neg_tol = _PIVOT_NEG * scale
    for j in range(q):
        d = a[j, j] - lower[j, :j] @ lower[j, :j]
        if d > pos_tol:
            root = np.sqrt(d)
            lower[j, j] = root
            if j + 1 < q:
                lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / root
        elif d >= -neg_tol:
            continue  # semidefinite direction: leave the column at zero
        else:
            return None
    return lower


def _factor_stack_no_jitter(covs):
    """Vectorized pivot-zeroing Cholesky over the whole stack.

    Loops over the q columns only; returns the factors plus a mask of
    slices that hit a strongly negative pivot (not PSD).
    """
    r, q, _ = covs.shape
    lower = np.zeros_like(covs)
    scale = np.maximum(covs.diagonal(axis1=1, axis2=2).max(axis=1), 1e-300)
    pos_tol = _PIVOT_POS * scale
    neg_tol = _PIVOT_NEG * scale
    bad = np.zeros(r, dtype=bool)
    for j in range(q):
        d = covs[:, j, j] - np.einsum("rk,rk->r", lower[:, j, :j], lower[:, j, :j])
        pos = d > pos_tol
        bad |= d < -neg_tol
        root = np.sqrt(np.where(pos, d, 1.0))
        lower[:, j, j] = np.where(pos, root, 0.0)
        if j + 1 < q:
            s = covs[:, j + 1 :, j] - np.einsum("rik,rk->ri", lower[:, j + 1 :, :j], lower[:, j, :j])
            lower[:, j + 1 :, j] = np.where(pos[:, None], s / root[:, None], 0.0)
    return lower, bad


def psd_factor_stack(covs):
    """Factor every (q, q) slice of a (R, q, q) stack as L with L L^T = cov.

    Semidefinite slices succeed (zero columns for zero-variance
    directions).  Indefinite slices are retried with escalating diagonal
    jitter; LinAlgError is raised when JITTER_MAX is insufficient.
    """
    covs = np.asarray(covs, dtype=np.float64)
    out, bad = _factor_stack_no_jitter(covs)
    if not np.any(bad):
        return out
    eye = np.eye(covs.shape[1])
    for i in np.nonzero(bad)[0]:
        a = covs[i]
        scale = max(float(np.max(np.diagonal(a))), 1e-300)
        lower = None
        jitter = JITTER_START
        while lower is None and jitter <= JITTER_MAX:
            lower = _factor_one(a + jitter * eye, scale)
            jitter *= 10.0
        if lower is None:
            raise np.linalg.LinAlgError(
                f"covariance slice {i} is not positive semidefinite "
                f"(diagonal jitter up to {JITTER_MAX:g} attempted)"
            )
        out[i] = lower
    return out


def qucb_scores_factored(means, factors, normals, beta):
    """q-UCB acquisition scores from precomputed covariance factors.

    For each batch r the reparameterized draw is
    ``z = c * (L @ u)`` with ``c = sqrt(beta * pi / 2)`` and u a row of
    ``normals`` (standard-normal QMC samples, shape (S, q)); the score is
    ``mean_s max_i (means[r, i] + |z_i|)``.
    """
    c = np.sqrt(beta * np.pi / 2.0)
    # (R, S, q): per batch, per sample, per point.
    z = np.einsum("rik,sk->rsi", factors, normals)
    values = means[:, None, :] + c * np.abs(z)
    return values.max(axis=2).mean(axis=1)


def qucb_scores(means, covs, normals, beta):
    """Factor each covariance slice, then score; see qucb_scores_factored."""
    return qucb_scores_factored(means, psd_factor_stack(covs), normals, beta)


def landscape_objective(train, test, centers, heights, widths, base_rate, rho):
    """Mean clamped success probability of each train point over a test set.

    For train point t and test point g:
    ``clamp(base + (sum_b h_b exp(-|t - c_b|^2 / (2 w_b^2)))
      * exp(-|g - t|^2 / (2 rho^2)), 0, 1)``
    averaged over all g; returns shape (N,) for train of shape (N, 2).
    """
    inv2r = 0.5 / (rho * rho)
    # Quality of each train point: bump mixture evaluated at t.
    d2b = (train[:, None, 0] - centers[None, :, 0]) ** 2 + (train[:, None, 1] - centers[None, :, 1]) ** 2
    quality = (heights[None, :] * np.exp(-d2b * (0.5 / (widths * widths))[None, :])).sum(axis=1)
    out = np.empty(train.shape[0], dtype=np.float64)
    # Chunk the (N, G) decay matrix to bound peak memory on big grids.
    step = max(1, 2_000_000 // max(test.shape[0], 1))
    for lo in range(0, train.shape[0], step):
        hi = min(lo + step, train.shape[0])
        d2 = (train[lo:hi, None, 0] - test[None, :, 0]) ** 2 + (train[lo:hi, None, 1] - test[None, :, 1]) ** 2
        p = base_rate + quality[lo:hi, None] * np.exp(-d2 * inv2r)
        np.clip(p, 0.0, 1.0, out=p)
        out[lo:hi] = p.mean(axis=1)
    return out
