"""Closed forms for rank-one-plus-scaled-identity covariances.

For Sigma = s s^H + (1/snr) I the inverse and determinant follow from the
Sherman-Morrison identity and the matrix determinant lemma:

    Sigma^{-1} = snr*I - snr^2 * s s^H / (1 + snr*||s||^2)
    |Sigma|    = snr^{-M} * (1 + snr*||s||^2)
"""

from __future__ import annotations

import numpy as np


def covariance(s: np.ndarray, snr: float) -> np.ndarray:
    s = np.asarray(s)
    return np.outer(s, s.conj()) + np.eye(len(s)) / snr


def covariance_inverse(s: np.ndarray, snr: float) -> np.ndarray:
    s = np.asarray(s)
    norm_sq = float(np.vdot(s, s).real)
    return snr * np.eye(len(s)) - (snr * snr / (1.0 + snr * norm_sq)) * np.outer(
        s, s.conj()
    )

def covariance_logdet(s: np.ndarray, snr: float) -> float:
    s = np.asarray(s)
    m = len(s)
    norm_sq = float(np.vdot(s, s).real)
    return float(np.log1p(snr * norm_sq) - m * np.log(snr))


def covariance_det(s: np.ndarray, snr: float) -> float:
    return float(np.exp(covariance_logdet(s, snr)))
