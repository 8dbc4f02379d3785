"""Natural (ħ = c = 1, energies in MeV) ↔ SI-style unit conversion.

Only the CLI converts. With ``--units si`` masses, energies and momenta are
given in MeV (MeV/c², MeV/c), lengths in fm and times in fm/c on input;
the library then sees natural units with 1 MeV as the energy unit, i.e.
lengths in MeV⁻¹ and times in MeV⁻¹.
"""

from __future__ import annotations

from typing import Literal

UnitSystem = Literal["natural", "si"]

# ħc in MeV·fm (CODATA 2018).
HBAR_C_MEV_FM = 197.3269804

# Dimension of each CLI quantity in powers of energy: mass = 1, length = −1.
DIMENSIONS = {
    "mass": 1,
    "energy": 1,
    "momentum": 1,
    "length": -1,
    "time": -1,
    "wavenumber": 1,
}


def to_natural(value: float, quantity: str, units: UnitSystem) -> float:
    """Convert a CLI input into natural units."""
    if units == "natural":
        return value
    power = DIMENSIONS[quantity]
    if power == -1:
        return value / HBAR_C_MEV_FM
    if quantity == "wavenumber":
        return value * HBAR_C_MEV_FM
    return value


def from_natural(value: float, quantity: str, units: UnitSystem) -> float:
    """Convert a natural-unit result back for output."""
    if units == "natural":
        return value
    power = DIMENSIONS[quantity]
    if power == -1:
        return value * HBAR_C_MEV_FM
    if quantity == "wavenumber":
        return value / HBAR_C_MEV_FM
    return value


def unit_label(quantity: str, units: UnitSystem) -> str:
    if units == "natural":
        return "natural"
    return {
        "mass": "MeV/c^2",
        "energy": "MeV",
        "momentum": "MeV/c",
        "length": "fm",
        "time": "fm/c",
        "wavenumber": "fm^-1",
    }[quantity]
