"""Modified Bessel functions of the second kind, K_0, K_1 and K_2.

Two regimes, vectorized over the argument:
  - z <= 2: ascending series (DLMF 10.31) for K_0 and K_1.
  - z > 2:  Steed/Temme continued fraction for the exponentially scaled pair
            e^z K_0, e^z K_1.
K_2 follows from the recurrence K_2 = K_0 + 2 K_1 / z.

``bessel_k_integral`` evaluates the integral representation
K_ν(z) = ∫_0^∞ e^{−z cosh t} cosh(νt) dt by adaptive quadrature and is the
independent oracle the tests cross-check against.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from models.levy import QuadratureSpec
from services.levy.errors import DomainError
from services.levy.quadrature import integrate

logger = logging.getLogger(__name__)

SERIES_LIMIT = 2.0
_SERIES_TERMS = 30
_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_EULER_GAMMA = 0.57721566490153286061
# exp(-z) underflows to zero beyond this argument.
UNDERFLOW_Z = 745.0


@dataclass(frozen=True, slots=True)
class BesselValue:
    """Scalar K_ν(z) with the underflow flag."""

    value: float
    underflow: bool = False

    def __float__(self) -> float:
        return self.value


def _series_k0_k1(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = 0.25 * z * z
    log_half = np.log(0.5 * z)
    term0 = np.ones_like(z)       # (z²/4)^k / (k!)²
    term1 = np.ones_like(z)       # (z²/4)^k / (k!(k+1)!)
    i0 = np.zeros_like(z)
    i1_sum = np.zeros_like(z)
    k0_sum = np.zeros_like(z)
    k1_sum = np.zeros_like(z)
    harmonic = 0.0
    for k in range(_SERIES_TERMS):
        if k > 0:
            harmonic += 1.0 / k
            term0 = term0 * q / (k * k)
            term1 = term1 * q / (k * (k + 1))
        i0 += term0
        i1_sum += term1
        k0_sum += harmonic * term0
        # psi(k+1) + psi(k+2) = -2γ + 2H_k + 1/(k+1)
        k1_sum += (-2.0 * _EULER_GAMMA + 2.0 * harmonic + 1.0 / (k + 1)) * term1
    i1 = 0.5 * z * i1_sum
    k0 = -(log_half + _EULER_GAMMA) * i0 + k0_sum
    k1 = 1.0 / z + log_half * i1 - 0.25 * z * k1_sum
    return k0, k1


def _cf_scaled_k0_k1(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """e^z K_0(z), e^z K_1(z) for z >= 2 via Steed's continued fraction."""
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(z)
    q2 = np.ones_like(z)
    a1 = 0.25
    q = np.full_like(z, a1)
    c = np.full_like(z, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _CF_MAX_ITER):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels / s) < _CF_EPS):
            break
    h = a1 * h
    k0 = np.sqrt(math.pi / (2.0 * z)) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1


def bessel_k_array(order: int, z: np.ndarray, *, scaled: bool = False) -> np.ndarray:
    """Vectorized K_order(z) for order in {0, 1, 2}; ``scaled`` returns e^z K.

    Arguments must be strictly positive; the caller owns that check on hot paths.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"order must be 0, 1 or 2, got {order}")
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z).ravel()
    k0 = np.empty_like(flat)
    k1 = np.empty_like(flat)

    small = flat <= SERIES_LIMIT
    if small.any():
        zs = flat[small]
        s0, s1 = _series_k0_k1(zs)
        if scaled:
            s0, s1 = s0 * np.exp(zs), s1 * np.exp(zs)
        k0[small], k1[small] = s0, s1
    large = ~small
    if large.any():
        zl = flat[large]
        c0, c1 = _cf_scaled_k0_k1(zl)
        if not scaled:
            decay = np.exp(-zl)
            c0, c1 = c0 * decay, c1 * decay
        k0[large], k1[large] = c0, c1

    if order == 0:
        out = k0
    elif order == 1:
        out = k1
    else:
        out = k0 + 2.0 * k1 / flat
    return out.reshape(z.shape) if z.ndim else out[0]


def bessel_k(order: int, z: float) -> BesselValue:
    """K_ν(z) for ν in {1, 2} with relative error near 1e-15.

    Raises ``DomainError`` for z <= 0. Beyond the double-precision underflow
    point the value is 0 and ``underflow`` is set.
    """
    if order not in (1, 2):
        raise DomainError(f"bessel_k supports orders 1 and 2, got {order}")
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"bessel_k needs z > 0, got {z}")
    value = float(bessel_k_array(order, np.asarray(z)))
    if value == 0.0 or z > UNDERFLOW_Z:
        logger.debug("[bessel] K_%d(%g) underflows", order, z)
        return BesselValue(value=0.0, underflow=True)
    return BesselValue(value=value)


def bessel_k_integral(order: int, z: float, spec: QuadratureSpec | None = None) -> float:
    """K_ν(z) from ∫_0^∞ e^{−z cosh t} cosh(νt) dt (independent oracle)."""
    if not z > 0:
        raise DomainError(f"bessel_k_integral needs z > 0, got {z}")
    # e^{-z cosh t} < 1e-300 once z cosh t > 690.
    t_max = math.acosh(max(1.0, 700.0 / z)) + 1.0
    spec = spec or QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13)
    result = integrate(
        lambda t: np.exp(-z * np.cosh(t)) * np.cosh(order * t),
        [0.0, t_max],
        spec,
    )
    return float(result.value)
