"""
tests/levy/conftest.py
----------------------
Shared fixtures for the levylab suites: the unit-mass relativistic exponent,
the worked (4, 9) cutoff and a seeded generator for property-style sampling.
"""

from __future__ import annotations

import numpy as np
import pytest

from services.levy.levy_core import LevyDensity, relativistic_exponent
from services.levy.spectrum import CutoffPolynomial


@pytest.fixture
def unit_exponent():
    return relativistic_exponent(1.0)


@pytest.fixture
def worked_cutoff() -> CutoffPolynomial:
    """g(x) − 1 = −(x − 1)(x − 4)(x − 9)."""
    return CutoffPolynomial(-37.0, 50.0, -14.0, 1.0)


@pytest.fixture
def triple_cutoff() -> CutoffPolynomial:
    return CutoffPolynomial(-2.0, 4.0, -3.0, 1.0)


@pytest.fixture
def exponential_density() -> LevyDensity:
    return LevyDensity(evaluate=lambda x: np.exp(-x), singularity_order=0.0, tail_scale=1.0, name="exp")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
