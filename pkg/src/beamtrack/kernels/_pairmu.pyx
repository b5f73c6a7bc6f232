# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: union-bound accumulation over all hypothesis pairs.

Scalar reduction of the rank-2 quadratic-form tail probability; mirrors
kernels.ref but runs the N^2 pair loop in C.  Kept dependency-free beyond
numpy buffers so the pure-python fallback stays drop-in compatible.
"""

from libc.math cimport exp, fabs, log, log1p, sqrt

import numpy as np

IS_COMPILED = True

DEF ZERO_EIG_RTOL = 1e-10
DEF RANK_DEFICIENT_RTOL = 1e-12


cdef inline double _mu_scalar(double lam1, double lam2, double delta) nogil:
    cdef double tol = ZERO_EIG_RTOL
    cdef double m = fabs(lam1)
    if fabs(lam2) > m:
        m = fabs(lam2)
    if m > 1.0:
        tol = ZERO_EIG_RTOL * m
    cdef bint pos1 = lam1 > tol
    cdef bint neg2 = lam2 < -tol
    cdef double mu
    if pos1 and neg2:
        if delta <= 0.0:
            mu = (lam2 / (lam2 - lam1)) * exp(-delta / lam2)
        else:
            mu = 1.0 - (lam1 / (lam1 - lam2)) * exp(-delta / lam1)
    elif pos1:
        mu = 1.0 - exp(-delta / lam1) if delta > 0.0 else 0.0
    elif neg2:
        mu = exp(-delta / lam2) if delta < 0.0 else 1.0
    else:
        mu = 0.0 if delta < 0.0 else 1.0
    if mu < 0.0:
        mu = 0.0
    elif mu > 1.0:
        mu = 1.0
    return mu


def gamma_ub(prior, gram_abs2, norms_sq, double snr):
    """Union upper bound on the tracking error probability (unclamped)."""
    cdef double[::1] p = np.ascontiguousarray(prior, dtype=np.float64)
    cdef double[:, ::1] g2 = np.ascontiguousarray(gram_abs2, dtype=np.float64)
    cdef double[::1] q = np.ascontiguousarray(norms_sq, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k, j
    cdef double inv = 1.0 / snr
    cdef double total = 0.0
    cdef double pk, pj, qk, qj, ak, aj, uu, uv2, vv, trace, det, gram2
    cdef double root, lam1, lam2, delta, row_sum, lpk, ldk, scale
    cdef double cross, pos, neg, zero_tol

    with nogil:
        for k in range(n):
            pk = p[k]
            if pk <= 0.0:
                continue
            qk = q[k]
            ak = snr * snr / (1.0 + snr * qk)
            uu = qk * (qk + inv)
            scale = (qk + inv) * (qk + inv)
            lpk = log(pk)
            ldk = log1p(snr * qk)
            row_sum = 0.0
            for j in range(n):
                if j == k:
                    continue
                pj = p[j]
                if pj <= 0.0:
                    continue
                qj = q[j]
                gram2 = g2[k, j]
                aj = snr * snr / (1.0 + snr * qj)
                uv2 = scale * gram2
                vv = gram2 + qj * inv
                pos = ak * uu
                neg = aj * vv
                trace = pos - neg
                cross = uu * vv - uv2
                if cross <= RANK_DEFICIENT_RTOL * uu * vv:
                    # aligned directions: cancellation noise in cross would be
                    # sqrt-amplified into spurious eigenvalues
                    zero_tol = pos if pos > neg else neg
                    if zero_tol < 1.0:
                        zero_tol = 1.0
                    zero_tol *= ZERO_EIG_RTOL
                    if fabs(trace) <= zero_tol:
                        lam1 = 0.0
                        lam2 = 0.0
                    elif trace > 0.0:
                        lam1 = trace
                        lam2 = 0.0
                    else:
                        lam1 = 0.0
                        lam2 = trace
                else:
                    if cross < 0.0:
                        cross = 0.0
                    det = -ak * aj * cross
                    root = sqrt(trace * trace - 4.0 * det)
                    lam1 = 0.5 * (trace + root)
                    lam2 = 0.5 * (trace - root)
                delta = log(pj) - lpk + ldk - log1p(snr * qj)
                row_sum += _mu_scalar(lam1, lam2, delta)
            total += pk * row_sum
    return total
