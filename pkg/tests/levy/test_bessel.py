"""
tests/levy/test_bessel.py
-------------------------
K_ν against scipy.special.kv (independent oracle), the integral representation,
and the small/large argument asymptotics.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from services.levy.bessel import SERIES_LIMIT, bessel_k, bessel_k_array, bessel_k_integral
from services.levy.errors import DomainError

ARGUMENTS = [1e-6, 1e-3, 0.5, 1.0, 1.999, SERIES_LIMIT, 2.001, 5.0, 20.0, 100.0, 600.0]


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


class TestAgainstScipy:
    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_matches_kv_across_both_regimes(self, order: int) -> None:
        z = np.array(ARGUMENTS)
        assert np.allclose(bessel_k_array(order, z), special.kv(order, z), rtol=1e-12, atol=0.0)

    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_scaled_matches_kve(self, order: int) -> None:
        z = np.array(ARGUMENTS)
        assert np.allclose(bessel_k_array(order, z, scaled=True), special.kve(order, z), rtol=1e-12)

    def test_continuity_at_regime_boundary(self) -> None:
        below = bessel_k_array(1, np.nextafter(SERIES_LIMIT, 0.0))
        above = bessel_k_array(1, np.nextafter(SERIES_LIMIT, 3.0))
        assert above == pytest.approx(below, rel=1e-13)


class TestBesselK:
    def test_k1_at_one(self) -> None:
        assert bessel_k(1, 1.0).value == pytest.approx(0.6019072302, abs=1e-9)

    def test_k1_small_argument_limit(self) -> None:
        z = 1e-6
        assert z * bessel_k(1, z).value == pytest.approx(1.0, abs=1e-8)

    def test_k2_large_argument_asymptotics(self) -> None:
        z = 10.0
        asymptotic = math.sqrt(math.pi / (2 * z)) * math.exp(-z) * (1 + 15 / (8 * z))
        assert bessel_k(2, z).value == pytest.approx(asymptotic, rel=1e-2)

    @pytest.mark.parametrize("z", [0.0, -1.0, float("nan")])
    def test_non_positive_argument_rejected(self, z: float) -> None:
        with pytest.raises(DomainError):
            bessel_k(1, z)

    def test_order_outside_supported_set(self) -> None:
        with pytest.raises(DomainError):
            bessel_k(0, 1.0)

    def test_underflow_is_flagged(self) -> None:
        result = bessel_k(1, 800.0)
        assert result.value == 0.0
        assert result.underflow is True

    def test_no_underflow_flag_in_range(self) -> None:
        assert bessel_k(2, 50.0).underflow is False
        assert float(bessel_k(2, 50.0)) > 0


# ---------------------------------------------------------------------------
# Integral representation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("order", [0, 1, 2])
@pytest.mark.parametrize("z", [0.1, 1.0, 3.0, 10.0])
def test_integral_representation_agrees(order: int, z: float) -> None:
    assert bessel_k_integral(order, z) == pytest.approx(float(bessel_k_array(order, z)), rel=1e-10)


@pytest.mark.parametrize("z", [0.1, 1.0, 2.5, 10.0])
def test_recurrence_against_integral_oracle(z: float) -> None:
    k0, k1 = bessel_k_integral(0, z), bessel_k_integral(1, z)
    assert float(bessel_k_array(2, z)) == pytest.approx(k0 + 2.0 * k1 / z, rel=1e-10)


@pytest.mark.parametrize("z", [0.1, 1.0, 10.0])
def test_recurrence_holds_within_the_implementation(z: float) -> None:
    # K₂ = K₀ + (2/z)K₁ across the series and asymptotic regimes
    k0, k1, k2 = (float(bessel_k_array(order, z)) for order in (0, 1, 2))
    assert k2 == pytest.approx(k0 + 2.0 * k1 / z, rel=1e-11)
