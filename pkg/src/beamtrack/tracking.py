"""Recursive MAP tracking of the grid-quantized angle of departure.

One tracking period: propagate the previous posterior through the Markov
chain, transmit M training beams, and update the belief from the received
pilot vector.  All likelihood algebra uses the rank-one covariance closed
forms from :mod:`beamtrack.linalg` and runs in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .arraymodel import ChannelState, Codebook, MarkovModel, draw_gain, evolve_state

__all__ = [
    "DegenerateBeliefError",
    "BeamMatrix",
    "SensingMatrix",
    "Belief",
    "PilotObservation",
    "sensing_matrix",
    "simulate_observation",
    "propagate_prior",
    "log_likelihood_scores",
    "posterior",
    "map_estimate",
    "TrackStep",
    "track_frame",
]


class DegenerateBeliefError(ValueError):
    """Raised when a belief update starts from an all-zero prior."""


@dataclass(frozen=True)
class BeamMatrix:
    """n_tx x M training beams; every entry has modulus 1/sqrt(n_tx)."""

    phases: np.ndarray
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        phases = np.atleast_2d(np.asarray(self.phases, dtype=float))
        object.__setattr__(self, "phases", phases)
        n_tx = phases.shape[0]
        object.__setattr__(self, "matrix", np.exp(1j * phases) / np.sqrt(n_tx))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "BeamMatrix":
        matrix = np.atleast_2d(np.asarray(matrix))
        n_tx = matrix.shape[0]
        moduli = np.abs(matrix) * np.sqrt(n_tx)
        if not np.allclose(moduli, 1.0, atol=1e-9):
            raise ValueError("beam entries must all have modulus 1/sqrt(n_tx)")
        return cls(phases=np.angle(matrix))

    @property
    def n_tx(self) -> int:
        return self.phases.shape[0]

    @property
    def m_beams(self) -> int:
        return self.phases.shape[1]


@dataclass(frozen=True)
class SensingMatrix:
    """M x N map from the grid indicator to the noiseless pilot vector."""

    matrix: np.ndarray

    @property
    def m_beams(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_points(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def col_norms_sq(self) -> np.ndarray:
        return np.sum(np.abs(self.matrix) ** 2, axis=0)

    @cached_property
    def gram_abs2(self) -> np.ndarray:
        gram = self.matrix.conj().T @ self.matrix
        return np.abs(gram) ** 2


def sensing_matrix(beams: BeamMatrix, codebook: Codebook) -> SensingMatrix:
    """sqrt(n_tx) * F^H * A for training beams F and codebook A."""
    if beams.n_tx != codebook.n_tx:
        raise ValueError(
            f"beam rows ({beams.n_tx}) do not match codebook rows ({codebook.n_tx})"
        )
    return SensingMatrix(
        matrix=np.sqrt(codebook.n_tx) * beams.matrix.conj().T @ codebook.matrix
    )


@dataclass(frozen=True)
class Belief:
    """Probability vector over grid indices."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise ValueError("belief must be a vector")
        if np.any(probs < 0) or not np.isfinite(probs).all():
            raise ValueError("belief entries must be finite and nonnegative")
        total = probs.sum()
        if total <= 0:
            raise DegenerateBeliefError("belief has no mass")
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"belief must sum to 1, got {total}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, n_points: int, index: int) -> "Belief":
        probs = np.zeros(n_points)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n_points: int) -> "Belief":
        return cls(np.full(n_points, 1.0 / n_points))

    @property
    def n_points(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class PilotObservation:
    """Received pilot vector and the linear training SNR it was taken at."""

    y: np.ndarray
    snr: float

    def __post_init__(self):
        y = np.asarray(self.y)
        if not np.isfinite(y).all():
            raise ValueError("observation entries must be finite")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        object.__setattr__(self, "y", y)


def simulate_observation(
    state: ChannelState,
    beams: BeamMatrix,
    codebook: Codebook,
    snr: float,
    rng: np.random.Generator,
    noiseless: bool = False,
) -> PilotObservation:
    """y = gain * s_kappa + noise, noise ~ CN(0, (1/snr) I)."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    sensing = sensing_matrix(beams, codebook)
    return observe_with_sensing(state, sensing, snr, rng, noiseless=noiseless)


def observe_with_sensing(
    state: ChannelState,
    sensing: SensingMatrix,
    snr: float,
    rng: np.random.Generator,
    noiseless: bool = False,
) -> PilotObservation:
    m = sensing.m_beams
    y = state.gain * sensing.matrix[:, state.grid_index]
    if not noiseless:
        re_im = rng.standard_normal(2 * m)
        noise = (re_im[:m] + 1j * re_im[m:]) * np.sqrt(0.5 / snr)
        y = y + noise
    return PilotObservation(y=y, snr=snr)


def propagate_prior(posterior_prev: Belief, model: MarkovModel) -> Belief:
    """One Markov step of the belief: prior_k = sum_i P(k|i) * post_i."""
    if posterior_prev.n_points != model.n_points:
        raise ValueError("belief and model dimensions differ")
    probs = posterior_prev.probs @ model.transition
    return Belief(probs / probs.sum())


def log_likelihood_scores(obs: PilotObservation, sensing: SensingMatrix) -> np.ndarray:
    """Per-hypothesis log-likelihoods of y, up to a common additive constant.

    For hypothesis k the observation is CN(0, s_k s_k^H + (1/snr) I); the
    Sherman-Morrison closed forms give
    -y^H Sigma_k^{-1} y - log|Sigma_k|
      = -snr*||y||^2 + snr^2 |s_k^H y|^2 / (1 + snr*q_k) - log(1 + snr*q_k)
    up to the hypothesis-independent M*log(snr) term.
    """
    snr = obs.snr
    q = sensing.col_norms_sq
    corr_sq = np.abs(sensing.matrix.conj().T @ obs.y) ** 2
    y_sq = float(np.vdot(obs.y, obs.y).real)
    one_plus = 1.0 + snr * q
    return -snr * y_sq + snr * snr * corr_sq / one_plus - np.log(one_plus)


def posterior(prior: Belief, obs: PilotObservation, sensing: SensingMatrix) -> Belief:
    """Bayes update of the belief from one pilot vector, in the log domain."""
    if prior.n_points != sensing.n_points:
        raise ValueError("belief and sensing dimensions differ")
    support = prior.probs > 0
    if not support.any():
        raise DegenerateBeliefError("prior has no support")
    scores = log_likelihood_scores(obs, sensing)
    with np.errstate(divide="ignore"):
        log_post = np.log(prior.probs) + scores
    log_post -= log_post[support].max()
    probs = np.exp(log_post)
    probs[~support] = 0.0
    return Belief(probs / probs.sum())


def map_estimate(belief: Belief) -> int:
    """Argmax grid index; ties resolve to the lowest index."""
    return int(np.argmax(belief.probs))


@dataclass(frozen=True)
class TrackStep:
    tti: int
    true_index: int
    est_index: int
    prior: Belief
    posterior: Belief


BeamProvider = Callable[[int, Belief, int], BeamMatrix]


def track_frame(
    model: MarkovModel,
    codebook: Codebook,
    beam_schedule: Sequence[BeamMatrix] | BeamProvider,
    initial_index: int,
    snr: float,
    p_ttis: int,
    rng: np.random.Generator,
    noiseless: bool = False,
    noise_rng_for_tti: Callable[[int], np.random.Generator] | None = None,
) -> list[TrackStep]:
    """Simulate one frame: known angle in the first period, tracking after.

    ``beam_schedule`` is either one BeamMatrix per tracked period (periods
    2..p_ttis) or a callable ``(tti, prior, prev_estimate) -> BeamMatrix``.
    The estimate feedback to the transmitter is ideal and instantaneous.
    """
    if p_ttis < 2:
        raise ValueError("p_ttis must be >= 2")
    if not callable(beam_schedule):
        schedule = list(beam_schedule)
        if len(schedule) != p_ttis - 1:
            raise ValueError(
                f"schedule must provide {p_ttis - 1} beam matrices, got {len(schedule)}"
            )
        beam_schedule = lambda tti, prior, prev: schedule[tti - 2]

    n = model.n_points
    belief = Belief.point_mass(n, initial_index)
    state = ChannelState(grid_index=initial_index, gain=draw_gain(rng))
    prev_est = initial_index
    steps: list[TrackStep] = []
    for tti in range(2, p_ttis + 1):
        state = evolve_state(state, model, rng)
        prior = propagate_prior(belief, model)
        beams = beam_schedule(tti, prior, prev_est)
        sensing = sensing_matrix(beams, codebook)
        noise_rng = noise_rng_for_tti(tti) if noise_rng_for_tti else rng
        obs = observe_with_sensing(state, sensing, snr, noise_rng, noiseless=noiseless)
        belief = posterior(prior, obs, sensing)
        est = map_estimate(belief)
        steps.append(
            TrackStep(
                tti=tti,
                true_index=state.grid_index,
                est_index=est,
                prior=prior,
                posterior=belief,
            )
        )
        prev_est = est
    return steps
