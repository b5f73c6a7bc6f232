"""Training-beam design: particle-swarm search and the directional baseline.

The search space is the raw phase matrix of the beams, so the per-entry
modulus constraint holds by construction.  The objective is the union upper
bound on the tracking error probability for the design prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import kernels
from .arraymodel import Codebook, MarkovModel
from .tracking import Belief, BeamMatrix, SensingMatrix, sensing_matrix

__all__ = [
    "PsaConfig",
    "OptimizationResult",
    "DesignedBeams",
    "beam_objective",
    "optimize_beams",
    "select_directional_pair",
    "steering_phases",
    "BeamScheduler",
]

# Exhaustive codeword-subset search refuses beyond this many candidates.
MAX_EXHAUSTIVE_CANDIDATES = 1_000_000


@dataclass(frozen=True)
class PsaConfig:
    """Swarm hyperparameters; standard constriction-equivalent defaults."""

    swarm_size: int = 50
    max_iters: int = 200
    inertia: float = 0.72
    cognitive_coeff: float = 1.49
    social_coeff: float = 1.49
    velocity_clamp: float = np.pi
    seed: int = 0
    stall_iters: int = 30
    stall_tol: float = 1e-8

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.inertia <= 1.0:
            raise ValueError("inertia must lie in (0, 1]")
        if self.cognitive_coeff <= 0 or self.social_coeff <= 0:
            raise ValueError("acceleration coefficients must be positive")
        if self.velocity_clamp <= 0:
            raise ValueError("velocity_clamp must be positive")


@dataclass(frozen=True)
class OptimizationResult:
    beams: BeamMatrix
    score: float
    history: tuple[float, ...]
    evaluations: int


def _objective_from_phases(
    phases: np.ndarray, codebook_matrix: np.ndarray, prior: np.ndarray, snr: float
) -> float:
    n_tx = codebook_matrix.shape[0]
    beams = np.exp(1j * phases.reshape(n_tx, -1)) / np.sqrt(n_tx)
    sensing = np.sqrt(n_tx) * beams.conj().T @ codebook_matrix
    norms_sq = np.sum(np.abs(sensing) ** 2, axis=0)
    gram_abs2 = np.abs(sensing.conj().T @ sensing) ** 2
    return float(kernels.gamma_ub(prior, gram_abs2, norms_sq, snr))


def beam_objective(
    beams: BeamMatrix, codebook: Codebook, prior: Belief, snr: float
) -> float:
    """Union-bound score of a beam matrix against a design prior."""
    return _objective_from_phases(beams.phases, codebook.matrix, prior.probs, snr)


def steering_phases(codebook: Codebook, indices) -> np.ndarray:
    """Phase matrix of the codebook steering vectors at the given indices."""
    angles = codebook.grid.angles[np.asarray(indices, dtype=int)]
    return np.outer(np.arange(codebook.n_tx), angles)


def select_directional_pair(
    prior: Belief,
    codebook: Codebook,
    snr: float,
    m_beams: int,
    mode: str = "exhaustive",
) -> tuple[tuple[int, ...], float]:
    """Best size-``m_beams`` codeword subset under the union-bound score.

    Exhaustive over all subsets by default; ties resolve to the
    lexicographically smallest index set.  ``mode="greedy"`` adds one
    codeword at a time and is the fallback when the candidate count exceeds
    the exhaustive budget.
    """
    n = codebook.n_points
    if not 1 <= m_beams <= n:
        raise ValueError("m_beams must lie in [1, n_points]")
    gram = codebook.matrix.conj().T @ codebook.matrix
    scaled = np.sqrt(codebook.n_tx) * gram  # row i = sensing row of codeword i

    def score(subset) -> float:
        s = scaled[np.asarray(subset, dtype=int), :]
        norms_sq = np.sum(np.abs(s) ** 2, axis=0)
        gram_abs2 = np.abs(s.conj().T @ s) ** 2
        return float(kernels.gamma_ub(prior.probs, gram_abs2, norms_sq, snr))

    if mode == "exhaustive":
        if comb(n, m_beams) > MAX_EXHAUSTIVE_CANDIDATES:
            raise ValueError(
                "exhaustive subset search exceeds the candidate budget; "
                "use mode='greedy'"
            )
        best_subset, best_score = None, np.inf
        for subset in combinations(range(n), m_beams):
            val = score(subset)
            if val < best_score:
                best_subset, best_score = subset, val
        return tuple(best_subset), best_score
    if mode == "greedy":
        chosen: list[int] = []
        for _ in range(m_beams):
            best_idx, best_score = None, np.inf
            for cand in range(n):
                if cand in chosen:
                    continue
                val = score(chosen + [cand])
                if val < best_score:
                    best_idx, best_score = cand, val
            chosen.append(best_idx)
        return tuple(chosen), score(chosen)
    raise ValueError(f"unknown mode {mode!r}")


def optimize_beams(
    prior: Belief,
    codebook: Codebook,
    snr: float,
    m_beams: int,
    config: PsaConfig,
    seed_phases: list[np.ndarray] | None = None,
    seed_directional: bool = True,
) -> OptimizationResult:
    """Particle-swarm minimization of the union bound over beam phases.

    The swarm is seeded with the directional-codeword baseline and with
    steering vectors at the prior's strongest modes, so the result never
    scores worse than either candidate.  Deterministic given ``config.seed``.
    """
    if m_beams < 1:
        raise ValueError("m_beams must be >= 1")
    n_tx = codebook.n_tx
    dim = n_tx * m_beams
    rng = np.random.default_rng(config.seed)

    seeds: list[np.ndarray] = []
    if seed_phases:
        seeds.extend(np.asarray(s, dtype=float).reshape(dim) for s in seed_phases)
    if seed_directional:
        indices, _ = select_directional_pair(prior, codebook, snr, m_beams)
        seeds.append(steering_phases(codebook, indices).reshape(dim))
    top_modes = np.argsort(prior.probs, kind="stable")[::-1][:m_beams]
    if len(top_modes) == m_beams:
        seeds.append(steering_phases(codebook, np.sort(top_modes)).reshape(dim))
    seeds = seeds[: config.swarm_size]

    positions = rng.uniform(0.0, 2.0 * np.pi, size=(config.swarm_size, dim))
    for i, s in enumerate(seeds):
        positions[i] = s
    velocities = rng.uniform(
        -config.velocity_clamp, config.velocity_clamp, size=(config.swarm_size, dim)
    )
    velocities[: len(seeds)] = 0.0

    def evaluate(x: np.ndarray) -> float:
        return _objective_from_phases(x, codebook.matrix, prior.probs, snr)

    scores = np.array([evaluate(x) for x in positions])
    evaluations = config.swarm_size
    best_positions = positions.copy()
    best_scores = scores.copy()
    g = int(np.argmin(best_scores))
    global_best = best_positions[g].copy()
    global_score = float(best_scores[g])
    history = [global_score]

    stall = 0
    for _ in range(config.max_iters):
        r1 = rng.uniform(size=(config.swarm_size, dim))
        r2 = rng.uniform(size=(config.swarm_size, dim))
        velocities = (
            config.inertia * velocities
            + config.cognitive_coeff * r1 * (best_positions - positions)
            + config.social_coeff * r2 * (global_best[None, :] - positions)
        )
        np.clip(velocities, -config.velocity_clamp, config.velocity_clamp, out=velocities)
        positions = positions + velocities
        scores = np.array([evaluate(x) for x in positions])
        evaluations += config.swarm_size

        improved = scores < best_scores
        best_positions[improved] = positions[improved]
        best_scores[improved] = scores[improved]
        g = int(np.argmin(best_scores))
        if best_scores[g] < global_score - config.stall_tol:
            stall = 0
        else:
            stall += 1
        if best_scores[g] < global_score:
            global_score = float(best_scores[g])
            global_best = best_positions[g].copy()
        history.append(global_score)
        if stall >= config.stall_iters:
            break

    beams = BeamMatrix(phases=global_best.reshape(n_tx, m_beams))
    return OptimizationResult(
        beams=beams,
        score=global_score,
        history=tuple(history),
        evaluations=evaluations,
    )


@dataclass(frozen=True)
class DesignedBeams:
    """A beam design bundled with its sensing matrix and bound score."""

    beams: BeamMatrix
    sensing: SensingMatrix
    score: float
    codeword_indices: tuple[int, ...] | None = None


class BeamScheduler:
    """Per-period beam design with caching.

    Designs are keyed by a fingerprint of the design prior (and implicitly
    the SNR fixed at construction).  For the wrap-around Markov model the
    design problem is circularly shift-invariant, so designs for the prior
    propagated from a point estimate are derived from a single base design
    by a per-element phase ramp.
    """

    def __init__(
        self,
        model: MarkovModel,
        codebook: Codebook,
        snr: float,
        m_beams: int,
        policy: str,
        psa_config: PsaConfig | None = None,
    ):
        if policy not in ("psa_optimized", "directional_tep"):
            raise ValueError(f"unknown design policy {policy!r}")
        if model.n_points != codebook.n_points:
            raise ValueError("model and codebook grids differ")
        self.model = model
        self.codebook = codebook
        self.snr = float(snr)
        self.m_beams = int(m_beams)
        self.policy = policy
        self.psa_config = psa_config or PsaConfig()
        self.design_count = 0
        self._prior_cache: dict[bytes, DesignedBeams] = {}
        self._index_cache: dict[int, DesignedBeams] = {}

    def _design(self, prior: Belief) -> DesignedBeams:
        self.design_count += 1
        if self.policy == "directional_tep":
            indices, score = select_directional_pair(
                prior, self.codebook, self.snr, self.m_beams
            )
            beams = BeamMatrix(phases=steering_phases(self.codebook, indices))
            return DesignedBeams(
                beams=beams,
                sensing=sensing_matrix(beams, self.codebook),
                score=score,
                codeword_indices=indices,
            )
        result = optimize_beams(
            prior, self.codebook, self.snr, self.m_beams, self.psa_config
        )
        return DesignedBeams(
            beams=result.beams,
            sensing=sensing_matrix(result.beams, self.codebook),
            score=result.score,
        )

    def beams_for_prior(self, prior: Belief) -> DesignedBeams:
        key = np.round(prior.probs, 12).tobytes()
        cached = self._prior_cache.get(key)
        if cached is None:
            cached = self._design(prior)
            self._prior_cache[key] = cached
        return cached

    def _shift(self, base: DesignedBeams, offset: int) -> DesignedBeams:
        n = self.model.n_points
        ramp = 2.0 * np.pi * offset / n * np.arange(self.codebook.n_tx)
        beams = BeamMatrix(phases=base.beams.phases + ramp[:, None])
        indices = None
        if base.codeword_indices is not None:
            indices = tuple(sorted((i + offset) % n for i in base.codeword_indices))
        return DesignedBeams(
            beams=beams,
            sensing=sensing_matrix(beams, self.codebook),
            score=base.score,
            codeword_indices=indices,
        )

    def beams_for_index(self, index: int) -> DesignedBeams:
        """Design for the prior propagated from a point estimate at ``index``."""
        cached = self._index_cache.get(index)
        if cached is not None:
            return cached
        if self.model.edge_mode == "wrap":
            base = self._index_cache.get(0)
            if base is None:
                base = self.beams_for_prior(Belief(self.model.transition[0]))
                self._index_cache[0] = base
            designed = base if index == 0 else self._shift(base, index)
        else:
            designed = self.beams_for_prior(Belief(self.model.transition[index]))
        self._index_cache[index] = designed
        return designed
