"""Angular grid, steering vectors, codebook, and Markov AoD dynamics.

The transmitter is a uniform linear array with ``n_tx`` elements.  Directions
are handled as normalized angles (phase progression per element, radians);
the map from a physical departure angle is ``physical_to_normalized``.  The
angle of departure lives on a uniform grid of ``n_points`` angles and hops
between grid points following a banded Markov chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AngleGrid",
    "Codebook",
    "MarkovModel",
    "ChannelState",
    "steering_vector",
    "build_grid",
    "build_codebook",
    "physical_to_normalized",
    "build_markov",
    "circular_index_distance",
    "evolve_state",
    "draw_gain",
]


def steering_vector(theta: float, n_tx: int) -> np.ndarray:
    """Unit-norm array response for normalized angle ``theta``.

    Entry k is exp(j*k*theta)/sqrt(n_tx), k = 0..n_tx-1.
    """
    if n_tx < 1:
        raise ValueError(f"n_tx must be >= 1, got {n_tx}")
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    return np.exp(1j * theta * np.arange(n_tx)) / np.sqrt(n_tx)


def physical_to_normalized(phi: float, spacing_ratio: float = 0.5) -> float:
    """Map a physical departure angle in [0, pi] to its normalized angle.

    With half-wavelength spacing (``spacing_ratio = 0.5``) this is
    pi*cos(phi), spanning [-pi, pi].
    """
    if not 0.0 <= phi <= np.pi:
        raise ValueError(f"phi must lie in [0, pi], got {phi}")
    if spacing_ratio <= 0:
        raise ValueError("spacing_ratio must be positive")
    return 2.0 * np.pi * spacing_ratio * np.cos(phi)


def _wrap_angle(theta: np.ndarray) -> np.ndarray:
    return np.mod(theta + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class AngleGrid:
    """Uniform grid of ``n_points`` normalized angles, wrapped to [-pi, pi).

    Index order follows the raw grid (pi/N, pi/N + 2pi/N, ...), so adjacent
    indices are angular neighbours circularly.
    """

    n_points: int
    angles: np.ndarray

    def __post_init__(self):
        if self.n_points != len(self.angles):
            raise ValueError("n_points does not match angles length")


def build_grid(n_points: int) -> AngleGrid:
    """Grid angles pi/N + 2*pi*n/N for n = 0..N-1, wrapped to [-pi, pi)."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    raw = np.pi / n_points + 2.0 * np.pi * np.arange(n_points) / n_points
    return AngleGrid(n_points=n_points, angles=_wrap_angle(raw))


@dataclass(frozen=True)
class Codebook:
    """Steering vectors at all grid angles, stacked as columns (n_tx x N)."""

    n_tx: int
    grid: AngleGrid
    matrix: np.ndarray

    @property
    def n_points(self) -> int:
        return self.grid.n_points


def build_codebook(grid: AngleGrid, n_tx: int) -> Codebook:
    cols = np.stack([steering_vector(th, n_tx) for th in grid.angles], axis=1)
    return Codebook(n_tx=n_tx, grid=grid, matrix=cols)


def circular_index_distance(i: int, k: int, n_points: int) -> int:
    d = abs(int(k) - int(i)) % n_points
    return min(d, n_points - d)


@dataclass(frozen=True)
class MarkovModel:
    """Banded row-stochastic transition matrix over grid indices.

    Within a window of ``sigma`` index steps the hop probability decays as
    beta**distance; outside the window it is zero.  ``edge_mode`` controls
    whether index distance wraps around the grid ("wrap") or the window is
    clipped at the edges with per-row renormalization ("truncate").
    """

    beta: float
    sigma: int
    transition: np.ndarray
    edge_mode: str = "wrap"

    @property
    def n_points(self) -> int:
        return self.transition.shape[0]


def build_markov(
    n_points: int, beta: float, sigma: int, edge_mode: str = "wrap"
) -> MarkovModel:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if n_points < 2 * sigma + 1:
        raise ValueError(
            f"n_points={n_points} too small for sigma={sigma} (window self-overlap)"
        )
    if edge_mode not in ("wrap", "truncate"):
        raise ValueError(f"unknown edge_mode {edge_mode!r}")

    idx = np.arange(n_points)
    if edge_mode == "wrap":
        dist = np.abs(idx[None, :] - idx[:, None])
        dist = np.minimum(dist, n_points - dist)
    else:
        dist = np.abs(idx[None, :] - idx[:, None])

    # 0**0 == 1: beta = 0 yields the identity chain.
    if beta == 0.0:
        weights = (dist == 0).astype(float)
    else:
        weights = np.where(dist <= sigma, float(beta) ** dist, 0.0)
    transition = weights / weights.sum(axis=1, keepdims=True)
    return MarkovModel(beta=beta, sigma=sigma, transition=transition, edge_mode=edge_mode)


@dataclass(frozen=True)
class ChannelState:
    """One path: grid index of the departure angle plus its complex gain."""

    grid_index: int
    gain: complex


def draw_gain(rng: np.random.Generator) -> complex:
    """Standard circularly-symmetric complex Gaussian gain, CN(0, 1)."""
    re, im = rng.standard_normal(2)
    return complex(re, im) / np.sqrt(2.0)


def evolve_state(
    state: ChannelState, model: MarkovModel, rng: np.random.Generator
) -> ChannelState:
    """One Markov step of the grid index plus a fresh independent gain."""
    row = model.transition[state.grid_index]
    new_index = int(rng.choice(model.n_points, p=row))
    return ChannelState(grid_index=new_index, gain=draw_gain(rng))
