"""
tests/levy/test_levy_core.py
----------------------------
Exponents, densities and the Lévy–Khintchin cross-validation: the closed-form
relativistic η against quadrature over its Bessel-kernel measure.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from services.levy import levy_core
from services.levy.errors import ConvergenceError, DomainError
from services.levy.levy_core import (
    LevyDensity,
    dispersion_energy,
    eta,
    eta_from_measure,
    eta_gaussian,
    eta_relativistic,
    gaussian_exponent,
    levy_density_1d,
    levy_density_3d,
    measure_exponent,
    relativistic_density,
    relativistic_exponent,
    stationary_energy,
    validate_levy_measure,
)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


class TestConstructors:
    def test_relativistic_time_scale_is_inverse_mass(self) -> None:
        exponent = relativistic_exponent(2.0)
        assert exponent.tau == 0.5
        assert exponent.kind == "relativistic"

    @pytest.mark.parametrize("m", [0.0, -1.0, float("inf")])
    def test_non_positive_mass_rejected(self, m: float) -> None:
        with pytest.raises(DomainError):
            relativistic_exponent(m)

    def test_drift_rejected(self, exponential_density) -> None:
        with pytest.raises(DomainError):
            measure_exponent(exponential_density, drift=0.1)

    def test_negative_beta_rejected(self) -> None:
        with pytest.raises(DomainError):
            gaussian_exponent(-1.0)

    def test_relativistic_measure_built_on_demand(self) -> None:
        density = relativistic_exponent(1.0).measure()
        assert density is not None
        assert density.singularity_order == 2.0
        assert density.tail_scale == 1.0


# ---------------------------------------------------------------------------
# Closed-form exponents
# ---------------------------------------------------------------------------


class TestEtaRelativistic:
    def test_zero_at_origin(self) -> None:
        assert eta_relativistic(0.0, 3.7) == 0.0

    def test_unit_mass_at_one(self) -> None:
        assert eta_relativistic(1.0, 1.0) == pytest.approx(1.0 - math.sqrt(2.0), abs=1e-15)

    def test_symmetric(self) -> None:
        u = np.linspace(-5, 5, 11)
        assert np.array_equal(eta_relativistic(u, 0.8), eta_relativistic(-u, 0.8))

    def test_non_positive(self) -> None:
        u = np.linspace(-50, 50, 401)
        assert np.all(eta_relativistic(u, 1.3) <= 0.0)

    def test_small_u_without_cancellation(self) -> None:
        # η ≈ −u²/(2m²) for u ≪ m
        assert eta_relativistic(1e-9, 1.0) == pytest.approx(-5e-19, rel=1e-12)


def test_eta_gaussian_value() -> None:
    assert eta_gaussian(2.0, 1.0) == -2.0


def test_eta_dispatch_uses_closed_forms() -> None:
    assert eta(relativistic_exponent(1.0), 1.0) == eta_relativistic(1.0, 1.0)
    assert eta(gaussian_exponent(1.0), 2.0) == -2.0


# ---------------------------------------------------------------------------
# Lévy–Khintchin quadrature
# ---------------------------------------------------------------------------


class TestEtaFromMeasure:
    def test_zero_wavenumber_is_exactly_zero(self, unit_exponent) -> None:
        assert eta_from_measure(0.0, unit_exponent).value == 0.0

    def test_pure_gaussian_term(self) -> None:
        estimate = eta_from_measure(2.0, gaussian_exponent(1.0))
        assert estimate.value == -2.0
        assert estimate.panels == 0

    def test_matches_closed_form_at_one(self, unit_exponent) -> None:
        assert eta_from_measure(1.0, unit_exponent).value == pytest.approx(1.0 - math.sqrt(2.0), abs=1e-6)

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
    def test_levy_khintchin_identity_on_64_points(self, m: float) -> None:
        u = np.linspace(-10.0, 10.0, 64)
        estimate = eta_from_measure(u, relativistic_exponent(m))
        assert np.max(np.abs(estimate.value - eta_relativistic(u, m))) <= 1e-6

    def test_gaussian_part_adds_to_jumps(self) -> None:
        exponent = measure_exponent(relativistic_density(1.0), beta=0.5, tau=1.0)
        value = eta_from_measure(2.0, exponent).value
        assert value == pytest.approx(eta_relativistic(2.0, 1.0) - 0.5, abs=1e-6)

    def test_dispatch_integrates_measure_kind(self, exponential_density) -> None:
        # 2∫(cos ux − 1)e^{−x}dx = 2(1/(1+u²) − 1)
        exponent = measure_exponent(exponential_density)
        assert eta(exponent, 1.0) == pytest.approx(-1.0, abs=1e-9)

    def test_partial_estimate_on_failure_is_scaled_like_the_result(self, monkeypatch, exponential_density) -> None:
        def fail(*_args, **_kwargs):
            raise ConvergenceError("budget", estimate=np.array([-0.25, -0.5]), error_estimate=0.1, worst_index=1)

        monkeypatch.setattr(levy_core, "integrate_half_line", fail)
        exponent = measure_exponent(exponential_density, beta=1.0)
        with pytest.raises(ConvergenceError) as info:
            eta_from_measure(np.array([1.0, 2.0]), exponent)
        # −β²u²/2 + 2·(raw half-line value)
        assert np.allclose(info.value.estimate, [-1.0, -3.0])
        assert info.value.error_estimate == pytest.approx(0.2)
        assert info.value.worst_index == 1

    def test_scalar_partial_estimate_stays_scalar(self, monkeypatch, exponential_density) -> None:
        def fail(*_args, **_kwargs):
            raise ConvergenceError("budget", estimate=np.array([-0.25]), error_estimate=0.1)

        monkeypatch.setattr(levy_core, "integrate_half_line", fail)
        with pytest.raises(ConvergenceError) as info:
            eta_from_measure(1.0, measure_exponent(exponential_density))
        assert info.value.estimate == -0.5
        assert isinstance(info.value.estimate, float)


class TestExponentShape:
    @pytest.fixture(params=["relativistic", "gaussian", "measure"])
    def exponent(self, request, exponential_density):
        if request.param == "relativistic":
            return relativistic_exponent(1.3)
        if request.param == "gaussian":
            return gaussian_exponent(0.7, tau=2.0)
        return measure_exponent(exponential_density, beta=0.3)

    def test_zero_at_origin(self, exponent) -> None:
        assert eta(exponent, 0.0) == 0.0

    def test_non_positive(self, exponent) -> None:
        u = np.linspace(-20.0, 20.0, 41)
        assert np.all(np.asarray(eta(exponent, u)) <= 0.0)

    def test_even(self, exponent) -> None:
        u = np.array([0.3, 1.0, 2.5, 7.0])
        assert np.allclose(eta(exponent, u), eta(exponent, -u), rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


class TestDensity1D:
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_symmetric_and_positive(self, x: float) -> None:
        assert levy_density_1d(-x, 1.0) == levy_density_1d(x, 1.0) > 0

    def test_small_x_limit(self) -> None:
        x = 1e-5
        assert levy_density_1d(x, 1.0) * x * x == pytest.approx(1.0 / math.pi, abs=1e-6)

    def test_large_x_asymptotics(self) -> None:
        x = 10.0
        asymptotic = math.exp(-x) * math.sqrt(math.pi / (2 * x)) / (math.pi * x)
        assert 0.95 <= levy_density_1d(x, 1.0) / asymptotic <= 1.05

    def test_singular_at_origin(self) -> None:
        with pytest.raises(DomainError):
            levy_density_1d(0.0, 1.0)


class TestDensity3D:
    def test_small_r_limit(self) -> None:
        r = 1e-4
        assert levy_density_3d(r, 1.0) * r**4 == pytest.approx(1.0 / math.pi**2, rel=1e-5)

    def test_monotone_decreasing(self) -> None:
        values = levy_density_3d(np.linspace(0.1, 20.0, 100), 1.0)
        assert np.all(np.diff(values) < 0)

    def test_scale_covariance(self) -> None:
        r, m = 0.5, 2.0
        assert levy_density_3d(r, m) == pytest.approx(m**3 * levy_density_3d(m * r, 1.0), rel=1e-13)


class TestValidateMeasure:
    def test_relativistic_density_is_valid(self) -> None:
        report = validate_levy_measure(relativistic_density(1.0))
        assert report.ok
        assert report.small_jump_mass > 0 and report.tail_mass > 0

    def test_cubic_singularity_is_rejected(self) -> None:
        density = LevyDensity(evaluate=lambda x: x**-3.0, singularity_order=3.0, tail_scale=1.0, name="x^-3")
        report = validate_levy_measure(density)
        assert not report.ok
        assert "small-jump" in report.diagnostic

    def test_exponential_tail_mass(self, exponential_density) -> None:
        report = validate_levy_measure(exponential_density)
        assert report.ok
        assert report.tail_mass == pytest.approx(2.0 / math.e, abs=1e-8)

    def test_reciprocal_tail_is_rejected(self) -> None:
        # ∫₁^X dx/x = log X never settles
        density = LevyDensity(
            evaluate=lambda x: np.where(x < 1.0, 1.0, 1.0 / np.maximum(x, 1.0)),
            singularity_order=0.0,
            tail_scale=1.0,
            name="1/x",
        )
        report = validate_levy_measure(density)
        assert not report.ok
        assert report.tail_mass == math.inf
        assert "tail" in report.diagnostic

    def test_power_tail_with_finite_mass_is_accepted(self) -> None:
        # ∫₁^∞ x⁻³ dx = 1/2
        density = LevyDensity(
            evaluate=lambda x: np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** -3.0),
            singularity_order=0.0,
            tail_scale=1.0,
            name="x^-3 tail",
        )
        report = validate_levy_measure(density)
        assert report.ok
        assert report.tail_mass == pytest.approx(1.0, rel=1e-7)


# ---------------------------------------------------------------------------
# Dispersion
# ---------------------------------------------------------------------------


class TestDispersion:
    def test_rest(self) -> None:
        assert dispersion_energy(0.0, 2.0) == 0.0

    def test_pythagorean_case(self) -> None:
        assert dispersion_energy(0.75, 1.0) == 0.25

    def test_identity_with_exponent(self) -> None:
        p, m = 2.3, 1.7
        assert dispersion_energy(p, m) == pytest.approx(-m * eta_relativistic(p, m), abs=1e-12)

    def test_stationary_energy_relativistic(self) -> None:
        assert stationary_energy(2.0, relativistic_exponent(1.0)) == pytest.approx(math.sqrt(5.0) - 1.0, abs=1e-14)

    def test_stationary_energy_gaussian_is_schroedinger(self) -> None:
        # τ = 1, β = 1 and α = mβ²/τ with m = 2: E₀ = p²/(2m)
        energy = stationary_energy(3.0, gaussian_exponent(1.0), alpha=2.0)
        assert energy == pytest.approx(9.0 / 4.0, rel=1e-14)

    def test_non_relativistic_limit(self, rng) -> None:
        for m in (0.5, 1.0, 40.0):
            p = rng.uniform(-0.01 * m, 0.01 * m, size=200)
            gap = np.abs(dispersion_energy(p, m) - p * p / (2.0 * m))
            # plus a few ulps of p²/2m for the smallest samples
            assert np.all(gap <= p**4 / m**3 + 4e-16 * p * p / m)
