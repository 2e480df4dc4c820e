# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the numerical hot kernels.

Mirrors the contract of vantage._kernels_py; see that module for the
math.  The acquisition search evaluates tens of thousands of small
kernel/score problems per batch proposal, which is where these loops pay
off over numpy's per-call overhead.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()

JITTER_START = 1e-10
JITTER_MAX = 1e-4

cdef double _PIVOT_POS = 1e-14
cdef double _PIVOT_NEG = 1e-10


def cross_cov(double[:, ::1] a, double[:, ::1] b, double ls_h, double ls_v, double signal_variance):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef double inv2h = 0.5 / (ls_h * ls_h)
    cdef double inv2v = 0.5 / (ls_v * ls_v)
    cdef double dh, dv
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(m):
            dh = a[i, 0] - b[j, 0]
            dv = a[i, 1] - b[j, 1]
            out[i, j] = signal_variance * exp(-(dh * dh * inv2h + dv * dv * inv2v))
    return out_arr


def batch_cov(double[:, :, ::1] stack, double ls_h, double ls_v, double signal_variance):
    cdef Py_ssize_t r = stack.shape[0], q = stack.shape[1], k, i, j
    cdef double inv2h = 0.5 / (ls_h * ls_h)
    cdef double inv2v = 0.5 / (ls_v * ls_v)
    cdef double dh, dv, v
    out_arr = np.empty((r, q, q), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    for k in range(r):
        for i in range(q):
            out[k, i, i] = signal_variance
            for j in range(i):
                dh = stack[k, i, 0] - stack[k, j, 0]
                dv = stack[k, i, 1] - stack[k, j, 1]
                v = signal_variance * exp(-(dh * dh * inv2h + dv * dv * inv2v))
                out[k, i, j] = v
                out[k, j, i] = v
    return out_arr


cdef int _factor_one(double[:, ::1] a, double[:, ::1] lower, double jitter, double scale) noexcept:
    """Pivot-zeroing Cholesky of one slice; 0 on success, 1 if indefinite."""
    cdef Py_ssize_t q = a.shape[0], i, j, k
    cdef double pos_tol = _PIVOT_POS * scale
    cdef double neg_tol = _PIVOT_NEG * scale
    cdef double d, s, root
    for i in range(q):
        for j in range(q):
            lower[i, j] = 0.0
    for j in range(q):
        d = a[j, j] + jitter
        for k in range(j):
            d -= lower[j, k] * lower[j, k]
        if d > pos_tol:
            root = sqrt(d)
            lower[j, j] = root
            for i in range(j + 1, q):
                s = a[i, j]
                for k in range(j):
                    s -= lower[i, k] * lower[j, k]
                lower[i, j] = s / root
        elif d >= -neg_tol:
            continue
        else:
            return 1
    return 0


def psd_factor_stack(double[:, :, ::1] covs):
    cdef Py_ssize_t r = covs.shape[0], q = covs.shape[1], i, j
    cdef double scale, jitter
    cdef int bad
    out_arr = np.empty((r, q, q), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    for i in range(r):
        scale = 1e-300
        for j in range(q):
            if covs[i, j, j] > scale:
                scale = covs[i, j, j]
        bad = _factor_one(covs[i], out[i], 0.0, scale)
        jitter = JITTER_START
        while bad and jitter <= JITTER_MAX:
            bad = _factor_one(covs[i], out[i], jitter, scale)
            jitter *= 10.0
        if bad:
            raise np.linalg.LinAlgError(
                f"covariance slice {i} is not positive semidefinite "
                f"(diagonal jitter up to {JITTER_MAX:g} attempted)"
            )
    return out_arr


def qucb_scores_factored(double[:, ::1] means, double[:, :, ::1] factors,
                         double[:, ::1] normals, double beta):
    cdef Py_ssize_t r = means.shape[0], q = means.shape[1], nsamp = normals.shape[0]
    cdef Py_ssize_t i, j, k, s
    cdef double c = sqrt(beta * np.pi / 2.0)
    cdef double acc, best, z, v
    out_arr = np.empty(r, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(r):
        acc = 0.0
        for s in range(nsamp):
            best = -1e308
            for j in range(q):
                z = 0.0
                for k in range(j + 1):
                    z += factors[i, j, k] * normals[s, k]
                v = means[i, j] + c * fabs(z)
                if v > best:
                    best = v
            acc += best
        out[i] = acc / nsamp
    return out_arr


def qucb_scores(means, covs, normals, beta):
    return qucb_scores_factored(means, psd_factor_stack(covs), normals, beta)


def landscape_objective(double[:, ::1] train, double[:, ::1] test,
                        double[:, ::1] centers, double[::1] heights,
                        double[::1] widths, double base_rate, double rho):
    cdef Py_ssize_t n = train.shape[0], g = test.shape[0], nb = centers.shape[0]
    cdef Py_ssize_t i, j, b
    cdef double inv2r = 0.5 / (rho * rho)
    cdef double dh, dv, quality, p, acc
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        quality = 0.0
        for b in range(nb):
            dh = train[i, 0] - centers[b, 0]
            dv = train[i, 1] - centers[b, 1]
            quality += heights[b] * exp(-(dh * dh + dv * dv) * (0.5 / (widths[b] * widths[b])))
        acc = 0.0
        for j in range(g):
            dh = train[i, 0] - test[j, 0]
            dv = train[i, 1] - test[j, 1]
            p = base_rate + quality * exp(-(dh * dh + dv * dv) * inv2r)
            if p < 0.0:
                p = 0.0
            elif p > 1.0:
                p = 1.0
            acc += p
        out[i] = acc / g
    return out_arr
