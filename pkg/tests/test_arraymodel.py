"""Grid, steering vector, codebook, and Markov dynamics tests."""

import numpy as np
import pytest

from beamtrack.arraymodel import (
    ChannelState,
    build_codebook,
    build_grid,
    build_markov,
    circular_index_distance,
    draw_gain,
    evolve_state,
    physical_to_normalized,
    steering_vector,
)


class TestSteeringVector:
    def test_zero_phase(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), 0.5 * np.ones(4))

    def test_alternating_sign(self):
        np.testing.assert_allclose(
            steering_vector(np.pi, 2), np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-15
        )

    def test_elementwise_definition(self):
        # independent elementwise evaluation
        theta, n_tx = np.pi / 64, 32
        expected = np.array([np.exp(1j * k * theta) for k in range(n_tx)]) / np.sqrt(n_tx)
        np.testing.assert_allclose(steering_vector(theta, n_tx), expected, atol=1e-15)

    def test_unit_norm(self):
        v = steering_vector(1.234, 17)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            steering_vector(0.0, 0)


class TestGrid:
    def test_first_raw_value(self):
        grid = build_grid(64)
        # raw value pi/64 is inside [-pi, pi) already
        assert grid.angles[0] == pytest.approx(np.pi / 64)

    def test_n4_values(self):
        grid = build_grid(4)
        raw = np.array([np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4])
        wrapped = np.mod(raw + np.pi, 2 * np.pi) - np.pi
        np.testing.assert_allclose(grid.angles, wrapped)

    def test_n2_values(self):
        grid = build_grid(2)
        np.testing.assert_allclose(
            np.sort(grid.angles), np.sort([np.pi / 2, 3 * np.pi / 2 - 2 * np.pi])
        )

    def test_sorted_distinct(self):
        grid = build_grid(64)
        s = np.sort(grid.angles)
        assert np.all(np.diff(s) > 0)
        assert np.all(grid.angles >= -np.pi) and np.all(grid.angles < np.pi)

    def test_invalid(self):
        with pytest.raises(ValueError):
            build_grid(1)


class TestPhysicalToNormalized:
    @pytest.mark.parametrize(
        "phi,expected",
        [(np.pi / 2, 0.0), (0.0, np.pi), (np.pi / 3, np.pi / 2)],
    )
    def test_values(self, phi, expected):
        assert physical_to_normalized(phi, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_monotone_decreasing(self):
        phis = np.linspace(0, np.pi, 50)
        vals = [physical_to_normalized(p, 0.5) for p in phis]
        assert np.all(np.diff(vals) < 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            physical_to_normalized(-0.1)


class TestCodebook:
    def test_columns_and_moduli(self):
        grid = build_grid(64)
        cb = build_codebook(grid, 32)
        np.testing.assert_allclose(np.abs(cb.matrix), 1 / np.sqrt(32), atol=1e-12)
        np.testing.assert_allclose(
            np.linalg.norm(cb.matrix, axis=0), 1.0, atol=1e-12
        )
        for n in (0, 7, 63):
            np.testing.assert_allclose(
                cb.matrix[:, n], steering_vector(grid.angles[n], 32)
            )


class TestMarkov:
    def test_beta_zero_identity(self):
        model = build_markov(64, 0.0, 5)
        np.testing.assert_allclose(model.transition, np.eye(64))

    def test_beta_one_uniform_window(self):
        model = build_markov(64, 1.0, 5)
        row = model.transition[10]
        window = [(10 + d) % 64 for d in range(-5, 6)]
        np.testing.assert_allclose(row[window], 1 / 11)
        assert row.sum() == pytest.approx(1.0)

    def test_normalization_value(self):
        # hand-computed: C0 = 1/(1 + 2*(0.5 + 0.25)) = 0.4
        model = build_markov(64, 0.5, 2)
        assert model.transition[0, 0] == pytest.approx(0.4, abs=1e-12)

    @pytest.mark.parametrize("beta", np.round(np.arange(0, 1.01, 0.1), 2).tolist())
    @pytest.mark.parametrize("sigma", [0, 1, 2, 5])
    def test_row_sums(self, beta, sigma):
        model = build_markov(64, float(beta), sigma)
        np.testing.assert_allclose(model.transition.sum(axis=1), 1.0, atol=1e-12)

    def test_window_zeros_and_proportionality(self):
        model = build_markov(32, 0.3, 3)
        for i in range(32):
            for k in range(32):
                d = circular_index_distance(i, k, 32)
                if d > 3:
                    assert model.transition[i, k] == 0.0
                else:
                    ratio = model.transition[i, k] / model.transition[i, i]
                    assert ratio == pytest.approx(0.3**d, rel=1e-12)

    def test_truncate_mode(self):
        model = build_markov(16, 0.5, 2, edge_mode="truncate")
        np.testing.assert_allclose(model.transition.sum(axis=1), 1.0, atol=1e-12)
        # no wraparound: first row has no mass at the far end
        assert model.transition[0, -1] == 0.0
        assert model.transition[0, -2] == 0.0

    def test_window_self_overlap(self):
        with pytest.raises(ValueError):
            build_markov(10, 0.5, 5)


class TestEvolve:
    def test_beta_zero_stationary(self):
        model = build_markov(16, 0.0, 3)
        rng = np.random.default_rng(0)
        state = ChannelState(grid_index=5, gain=1.0)
        for _ in range(50):
            state = evolve_state(state, model, rng)
            assert state.grid_index == 5

    def test_uniform_window_wraparound(self):
        model = build_markov(8, 1.0, 1)
        rng = np.random.default_rng(1)
        counts = np.zeros(8)
        n = 6000
        for _ in range(n):
            counts[evolve_state(ChannelState(0, 1.0), model, rng).grid_index] += 1
        freqs = counts / n
        se = np.sqrt((1 / 3) * (2 / 3) / n)
        for idx in (7, 0, 1):
            assert abs(freqs[idx] - 1 / 3) < 3 * se
        assert counts[[2, 3, 4, 5, 6]].sum() == 0

    def test_stays_within_window(self):
        model = build_markov(32, 0.9, 4)
        rng = np.random.default_rng(2)
        state = ChannelState(grid_index=0, gain=1.0)
        for _ in range(2000):
            new = evolve_state(state, model, rng)
            assert circular_index_distance(state.grid_index, new.grid_index, 32) <= 4
            state = new

    def test_empirical_transition_frequencies(self):
        model = build_markov(8, 0.5, 2)
        rng = np.random.default_rng(3)
        n_steps = 100_000
        counts = np.zeros((8, 8))
        state = ChannelState(grid_index=0, gain=1.0)
        for _ in range(n_steps):
            new = evolve_state(state, model, rng)
            counts[state.grid_index, new.grid_index] += 1
            state = new
        for i in range(8):
            row_n = counts[i].sum()
            freqs = counts[i] / row_n
            se = np.sqrt(model.transition[i] * (1 - model.transition[i]) / row_n)
            assert np.all(np.abs(freqs - model.transition[i]) <= 3 * se + 1e-12)

    def test_gain_moments(self):
        rng = np.random.default_rng(4)
        n = 100_000
        gains = np.array([draw_gain(rng) for _ in range(n)])
        assert abs(gains.mean()) <= 3 / np.sqrt(n)
        assert abs(np.mean(np.abs(gains) ** 2) - 1.0) <= 3 * np.sqrt(2 / n)
