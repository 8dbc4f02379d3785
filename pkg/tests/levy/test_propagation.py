"""
tests/levy/test_propagation.py
------------------------------
Spectral evolution, transition densities and the real-space generator.

Grids here are sized so both resolution checks pass: n=256 on a box of 40
gives u_max ≈ 20, where e^{η} is already below 1e-7 for the unit-mass kernel.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from services.levy.errors import DomainError, ResolutionError, ShapeError
from services.levy.levy_core import dispersion_energy, eta_relativistic, gaussian_exponent
from services.levy.propagation import (
    WaveState,
    dispersion_probe,
    evolve,
    evolve_steps,
    gaussian_packet,
    generator_apply,
    make_grid,
    norm,
    plane_wave,
    propagator_multiplier,
    transition_density,
    transition_density_direct,
)


@pytest.fixture
def grid():
    return make_grid(256, 40.0)


@pytest.fixture
def dual_grid():
    # dual spacing 2π/L = 0.25
    return make_grid(64, 8.0 * math.pi)


# ---------------------------------------------------------------------------
# Grid and states
# ---------------------------------------------------------------------------


class TestGrid:
    @pytest.mark.parametrize("n", [4, 100, 0])
    def test_size_must_be_power_of_two(self, n: int) -> None:
        with pytest.raises(DomainError):
            make_grid(n, 10.0)

    def test_positions_centred(self, grid) -> None:
        assert grid.x[grid.n // 2] == 0.0
        assert grid.x[0] == pytest.approx(-20.0)

    def test_nyquist(self, grid) -> None:
        assert grid.u_max == pytest.approx(math.pi * 256 / 40.0)

    def test_shape_mismatch_raises(self, grid) -> None:
        with pytest.raises(ShapeError):
            WaveState(grid=grid, amplitudes=np.zeros(10))

    def test_plane_wave_needs_dual_wavenumber(self, dual_grid) -> None:
        with pytest.raises(DomainError):
            plane_wave(dual_grid, 0.3)

    def test_states_are_unit_norm(self, grid, dual_grid) -> None:
        assert norm(plane_wave(dual_grid, 0.75)) == pytest.approx(1.0, abs=1e-13)
        assert norm(gaussian_packet(grid, sigma=1.5, u0=1.0)) == pytest.approx(1.0, abs=1e-13)


# ---------------------------------------------------------------------------
# Multiplier and evolution
# ---------------------------------------------------------------------------


class TestMultiplier:
    def test_zero_step_is_identity(self, grid, unit_exponent) -> None:
        assert np.array_equal(propagator_multiplier(unit_exponent, 0.0, grid), np.ones(grid.n))

    def test_unimodular(self, grid, unit_exponent) -> None:
        multiplier = propagator_multiplier(unit_exponent, 0.7, grid)
        assert np.allclose(np.abs(multiplier), 1.0, atol=1e-15)

    def test_semigroup(self, grid, unit_exponent) -> None:
        a = propagator_multiplier(unit_exponent, 0.3, grid)
        b = propagator_multiplier(unit_exponent, 0.5, grid)
        ab = propagator_multiplier(unit_exponent, 0.8, grid)
        assert np.allclose(a * b, ab, atol=1e-12)


class TestEvolve:
    def test_plane_wave_acquires_kinetic_phase(self, dual_grid, unit_exponent) -> None:
        state = plane_wave(dual_grid, 2.0)
        after = evolve(state, 0.5, unit_exponent)
        expected = state.amplitudes * np.exp(-1j * dispersion_energy(2.0, 1.0) * 0.5)
        assert np.allclose(after.amplitudes, expected, atol=1e-12)
        assert after.time == 0.5

    def test_rest_phase_gives_total_energy(self, dual_grid, unit_exponent) -> None:
        state = plane_wave(dual_grid, 2.0)
        after = evolve(state, 0.5, unit_exponent, include_rest_phase=True)
        expected = state.amplitudes * np.exp(-1j * math.sqrt(5.0) * 0.5)
        assert np.allclose(after.amplitudes, expected, atol=1e-12)

    def test_rest_phase_needs_a_mass(self, dual_grid) -> None:
        with pytest.raises(DomainError):
            evolve(plane_wave(dual_grid, 0.0), 0.1, gaussian_exponent(1.0), include_rest_phase=True)

    def test_norm_is_conserved_over_many_steps(self, grid, unit_exponent) -> None:
        snapshots = evolve_steps(gaussian_packet(grid, u0=2.0), 0.05, 100, unit_exponent)
        assert len(snapshots) == 101
        assert snapshots[-1].time == pytest.approx(5.0)
        assert abs(norm(snapshots[-1]) - 1.0) <= 1e-8

    def test_steps_compose(self, grid, unit_exponent) -> None:
        state = gaussian_packet(grid, x0=-2.0, u0=1.0)
        two_step = evolve(evolve(state, 0.4, unit_exponent), 0.6, unit_exponent)
        one_step = evolve(state, 1.0, unit_exponent)
        assert np.max(np.abs(two_step.amplitudes - one_step.amplitudes)) <= 1e-10

    def test_semigroup_at_random_times(self, grid, unit_exponent, rng) -> None:
        state = gaussian_packet(grid, x0=1.0, sigma=1.5, u0=-0.5)
        for t, s in rng.uniform(0.01, 2.0, size=(6, 2)):
            composed = evolve(evolve(state, t, unit_exponent), s, unit_exponent)
            direct = evolve(state, t + s, unit_exponent)
            assert composed.time == pytest.approx(direct.time)
            assert np.max(np.abs(composed.amplitudes - direct.amplitudes)) <= 1e-10

    def test_foreign_multiplier_shape_rejected(self, grid, unit_exponent) -> None:
        with pytest.raises(ShapeError):
            evolve(gaussian_packet(grid), 0.1, unit_exponent, multiplier=np.ones(8))


# ---------------------------------------------------------------------------
# Transition densities
# ---------------------------------------------------------------------------


class TestTransitionDensity:
    def test_gaussian_kind_is_the_normal_law(self, grid) -> None:
        density = transition_density(gaussian_exponent(1.0), 1.0, grid)
        assert np.max(np.abs(density.values - stats.norm.pdf(grid.x))) <= 1e-8

    def test_integrates_to_one(self, grid, unit_exponent) -> None:
        density = transition_density(unit_exponent, 1.0, grid)
        assert density.integral() == pytest.approx(1.0, abs=1e-12)
        assert density.correction_factor == pytest.approx(1.0, abs=1e-6)

    def test_non_negative_after_clipping(self, grid, unit_exponent) -> None:
        density = transition_density(unit_exponent, 1.0, grid)
        assert density.values.min() >= -2e-12

    def test_agrees_with_direct_quadrature(self, grid, unit_exponent) -> None:
        density = transition_density(unit_exponent, 1.0, grid)
        points = grid.x[::16]
        direct = transition_density_direct(unit_exponent, 1.0, points)
        assert np.max(np.abs(density.values[::16] - direct)) <= 1e-6

    def test_unresolved_spectrum_raises(self, unit_exponent) -> None:
        with pytest.raises(ResolutionError):
            transition_density(unit_exponent, 1.0, make_grid(16, 40.0))

    def test_small_box_raises(self, unit_exponent) -> None:
        with pytest.raises(ResolutionError):
            transition_density(unit_exponent, 1.0, make_grid(256, 4.0))

    def test_direct_density_is_symmetric(self, unit_exponent) -> None:
        left = transition_density_direct(unit_exponent, 0.5, -1.3)
        right = transition_density_direct(unit_exponent, 0.5, 1.3)
        assert left == pytest.approx(right, rel=1e-12)


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


class TestGenerator:
    def test_annihilates_constants(self, dual_grid, unit_exponent) -> None:
        state = WaveState(grid=dual_grid, amplitudes=np.ones(dual_grid.n))
        assert np.allclose(generator_apply(state, unit_exponent).amplitudes, 0.0, atol=1e-12)

    @pytest.mark.parametrize("u", [0.75, 2.0])
    def test_plane_wave_is_an_eigenfunction(self, dual_grid, unit_exponent, u: float) -> None:
        state = plane_wave(dual_grid, u)
        applied = generator_apply(state, unit_exponent)
        expected = dispersion_energy(u, 1.0) * state.amplitudes
        assert np.max(np.abs(applied.amplitudes - expected)) <= 1e-5

    @pytest.mark.slow
    def test_eigenvalue_at_random_dual_wavenumbers(self, dual_grid, unit_exponent, rng) -> None:
        # dual wavenumbers are multiples of 0.25
        for u in 0.25 * rng.integers(-16, 17, size=8):
            state = plane_wave(dual_grid, float(u))
            applied = generator_apply(state, unit_exponent)
            expected = dispersion_energy(float(u), 1.0) * state.amplitudes
            assert np.max(np.abs(applied.amplitudes - expected)) <= 1e-5

    def test_gaussian_part_is_the_laplacian(self, dual_grid) -> None:
        state = plane_wave(dual_grid, 1.5)
        applied = generator_apply(state, gaussian_exponent(2.0))
        assert np.allclose(applied.amplitudes, 0.5 * 4.0 * 1.5**2 * state.amplitudes, atol=1e-12)

    def test_matches_spectral_multiplier_on_packet(self, unit_exponent) -> None:
        grid = make_grid(128, 40.0)
        state = gaussian_packet(grid, sigma=1.0, u0=0.5)
        applied = generator_apply(state, unit_exponent)
        spectral = np.fft.ifft(-eta_relativistic(grid.u, 1.0) * np.fft.fft(state.amplitudes))
        assert np.max(np.abs(applied.amplitudes - spectral)) <= 1e-6


# ---------------------------------------------------------------------------
# Dispersion probe
# ---------------------------------------------------------------------------


def test_dispersion_probe_at_rest(dual_grid, unit_exponent) -> None:
    assert dispersion_probe(unit_exponent, 0.0, 0.1, dual_grid) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("u", [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0])
def test_dispersion_probe_recovers_kinetic_energy(dual_grid, unit_exponent, u: float) -> None:
    expected = math.sqrt(1.0 + u * u) - 1.0
    assert dispersion_probe(unit_exponent, u, 0.1, dual_grid) == pytest.approx(expected, abs=1e-6)


def test_dispersion_probe_rejects_off_grid_wavenumber(dual_grid, unit_exponent) -> None:
    with pytest.raises(DomainError):
        dispersion_probe(unit_exponent, 0.3, 0.1, dual_grid)
