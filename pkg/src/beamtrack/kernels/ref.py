"""Pure-numpy implementation of the pairwise misdetection kernel.

Given the sensing matrix Gram data (squared column norms and squared pairwise
inner products), a prior over grid hypotheses, and the linear training SNR,
this evaluates the union upper bound on the tracking error probability.

The rank-2 quadratic form behind each hypothesis pair reduces to scalars:
with q_k = ||s_k||^2, q_n = ||s_n||^2, g2 = |s_k^H s_n|^2 and
a = snr^2/(1 + snr*q_k), b = snr^2/(1 + snr*q_n), the two nonzero
eigenvalues of the whitened difference form are the eigenvalues of the 2x2
matrix with trace T = a*uu - b*vv and determinant D = -a*b*(uu*vv - uv2),
where uu = q_k*(q_k + 1/snr), uv2 = (q_k + 1/snr)^2 * g2 and
vv = g2 + q_n/snr.  D <= 0 by Cauchy-Schwarz, so one eigenvalue is >= 0 and
the other <= 0.
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False

# Relative threshold below which an eigenvalue counts as zero for the
# four-way case dispatch.
ZERO_EIG_RTOL = 1e-10
# Relative threshold on the Gram cross term (Cauchy-Schwarz gap) below which
# the product of the two rank-1 directions is treated as rank deficient.
# Cancellation noise in the gap would otherwise be sqrt-amplified into a
# spurious nonzero eigenvalue pair.
RANK_DEFICIENT_RTOL = 1e-12


def pair_eigenvalues_scalar(q_k: float, q_n: float, g2: float, snr: float):
    """Extreme eigenvalues of the whitened difference form for one pair."""
    inv = 1.0 / snr
    a = snr * snr / (1.0 + snr * q_k)
    b = snr * snr / (1.0 + snr * q_n)
    uu = q_k * (q_k + inv)
    uv2 = (q_k + inv) ** 2 * g2
    vv = g2 + q_n * inv
    pos = a * uu
    neg = b * vv
    cross = uu * vv - uv2  # >= 0 by Cauchy-Schwarz
    if cross <= RANK_DEFICIENT_RTOL * uu * vv:
        # aligned directions: at most one nonzero eigenvalue, equal to the trace
        trace = pos - neg
        if abs(trace) <= ZERO_EIG_RTOL * max(1.0, pos, neg):
            return 0.0, 0.0
        return (trace, 0.0) if trace > 0 else (0.0, trace)
    trace = pos - neg
    det = -a * b * cross
    root = np.sqrt(trace * trace - 4.0 * det)
    return 0.5 * (trace + root), 0.5 * (trace - root)


def mu_cases(lam1: np.ndarray, lam2: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Closed-form P(lam1*E1 + lam2*E2 <= delta), E_i iid unit exponentials.

    Vectorized four-way dispatch on the signs of (lam1, lam2); lam1 >= 0 and
    lam2 <= 0 are assumed.  delta may be +-inf.
    """
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    delta = np.asarray(delta, dtype=float)
    tol = ZERO_EIG_RTOL * np.maximum(1.0, np.maximum(np.abs(lam1), np.abs(lam2)))
    pos1 = lam1 > tol
    neg2 = lam2 < -tol

    mu = np.empty(np.broadcast(lam1, lam2, delta).shape, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # both nonzero
        m_lo = np.where(lam2 < 0, (lam2 / (lam2 - lam1)) * np.exp(-delta / lam2), 0.0)
        m_hi = 1.0 - np.where(
            lam1 > 0, (lam1 / (lam1 - lam2)) * np.exp(-delta / lam1), 0.0
        )
        case1 = np.where(delta <= 0, m_lo, m_hi)
        # lam1 > 0 only
        case2 = np.where(delta > 0, 1.0 - np.where(lam1 > 0, np.exp(-delta / lam1), 0.0), 0.0)
        # lam2 < 0 only
        case3 = np.where(delta < 0, np.where(lam2 < 0, np.exp(-delta / lam2), 1.0), 1.0)
        # both zero: the form is identically 0, so P(0 <= delta)
        case4 = np.where(delta < 0, 0.0, 1.0)

    mu = np.where(
        pos1 & neg2, case1, np.where(pos1, case2, np.where(neg2, case3, case4))
    )
    return np.clip(mu, 0.0, 1.0)


def pair_terms(
    prior: np.ndarray, gram_abs2: np.ndarray, norms_sq: np.ndarray, snr: float
):
    """Per-pair (lam1, lam2, delta, mu) matrices for all hypothesis pairs.

    Row index is the true hypothesis, column index the competitor.  Entries
    on the diagonal and in rows with zero prior are set to mu = 0.
    """
    prior = np.asarray(prior, dtype=float)
    q = np.asarray(norms_sq, dtype=float)
    n = prior.shape[0]
    inv = 1.0 / snr

    a = snr * snr / (1.0 + snr * q)  # (N,)
    uu = q * (q + inv)
    uv2 = (q + inv)[:, None] ** 2 * gram_abs2
    vv = gram_abs2 + (q * inv)[None, :]

    pos = (a * uu)[:, None] * np.ones_like(vv)
    neg = a[None, :] * vv
    cross = uu[:, None] * vv - uv2
    trace = pos - neg
    det = -(a[:, None] * a[None, :]) * np.maximum(cross, 0.0)
    root = np.sqrt(trace * trace - 4.0 * det)
    lam1 = 0.5 * (trace + root)
    lam2 = 0.5 * (trace - root)
    # Rank-deficient pairs (aligned directions): the quadratic would turn
    # cancellation noise in cross into spurious sqrt-amplified eigenvalues.
    aligned = cross <= RANK_DEFICIENT_RTOL * uu[:, None] * vv
    if aligned.any():
        both_zero = aligned & (np.abs(trace) <= ZERO_EIG_RTOL * np.maximum(1.0, np.maximum(pos, neg)))
        lam1 = np.where(aligned, np.maximum(trace, 0.0), lam1)
        lam2 = np.where(aligned, np.minimum(trace, 0.0), lam2)
        lam1 = np.where(both_zero, 0.0, lam1)
        lam2 = np.where(both_zero, 0.0, lam2)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_prior = np.log(prior)
        logdet = np.log1p(snr * q)  # log|Sigma| up to the common -M*log(snr) term
        delta = (log_prior[None, :] - log_prior[:, None]) + (
            logdet[:, None] - logdet[None, :]
        )

    mu = mu_cases(lam1, lam2, delta)
    mu[prior[None, :].repeat(n, axis=0) == 0.0] = 0.0
    np.fill_diagonal(mu, 0.0)
    return lam1, lam2, delta, mu


def gamma_ub(
    prior: np.ndarray, gram_abs2: np.ndarray, norms_sq: np.ndarray, snr: float
) -> float:
    """Union upper bound on the tracking error probability (unclamped)."""
    prior = np.asarray(prior, dtype=float)
    support = prior > 0.0
    if support.all():
        _, _, _, mu = pair_terms(prior, gram_abs2, norms_sq, snr)
        return float(prior @ mu.sum(axis=1))
    # Restrict to the prior's support; zero-prior rows contribute nothing and
    # zero-prior competitors have mu = 0.
    idx = np.flatnonzero(support)
    sub = pair_terms(
        prior[idx], gram_abs2[np.ix_(idx, idx)], norms_sq[idx], snr
    )[3]
    return float(prior[idx] @ sub.sum(axis=1))
