"""Beam tracking for grid-quantized mmWave MISO channels.

Recursive MAP tracking of a Markov-evolving angle of departure, a closed-form
union upper bound on the tracking error probability, and particle-swarm
design of unit-modulus training beam sequences that minimize that bound.
"""

from . import kernels
from .arraymodel import (
    AngleGrid,
    ChannelState,
    Codebook,
    MarkovModel,
    build_codebook,
    build_grid,
    build_markov,
    evolve_state,
    physical_to_normalized,
    steering_vector,
)
from .harness import ExperimentConfig, SummaryRow, TrialRecord, run_experiment, sweep
from .optimizer import (
    BeamScheduler,
    OptimizationResult,
    PsaConfig,
    optimize_beams,
    select_directional_pair,
)
from .tepbound import PairTerm, TepBreakdown, mu_pair, pair_eigenvalues, tep_upper_bound
from .tracking import (
    Belief,
    BeamMatrix,
    DegenerateBeliefError,
    PilotObservation,
    SensingMatrix,
    map_estimate,
    posterior,
    propagate_prior,
    sensing_matrix,
    simulate_observation,
    track_frame,
)

__version__ = "0.1.0"
