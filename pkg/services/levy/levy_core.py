"""
services/levy/levy_core.py
--------------------------
Symmetric infinitely divisible exponents η(u), their Lévy measures, and the
relativistic dispersion they encode. Natural units ħ = c = 1 throughout.

Only the symmetric Lévy–Khintchin form is representable:
    η(u) = −β²u²/2 + ∫ (cos ux − 1) W(x) dx
A drift is rejected at construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from models.levy import QuadratureSpec
from services.levy.bessel import bessel_k_array
from services.levy.errors import ConvergenceError, require
from services.levy.quadrature import integrate, integrate_half_line

logger = logging.getLogger(__name__)

ExponentKind = Literal["relativistic", "gaussian", "measure"]

# Tail certification: cut at 1 + L·scale, then ×2, ×4, ... until one doubling
# adds less than this fraction of the running total.
_MAX_TAIL_DOUBLINGS = 48
_TAIL_SETTLE_REL = 1e-9


@dataclass(frozen=True, slots=True)
class LevyDensity:
    """Symmetric, absolutely continuous Lévy measure W(x) dx.

    ``evaluate`` is called on positive arrays only; symmetry supplies x < 0.
    ``singularity_order`` s: W(x)·|x|^s has a finite nonzero limit at 0.
    ``tail_scale``: decay length of the exponential tail.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    singularity_order: float
    tail_scale: float
    name: str = "custom"

    def __call__(self, x: np.ndarray | float) -> np.ndarray | float:
        arr = np.abs(np.asarray(x, dtype=float))
        out = self.evaluate(arr)
        return out if arr.ndim else float(out)


@dataclass(frozen=True, slots=True)
class LevyExponent:
    """Logarithmic characteristic η(u) of a symmetric law with time scale τ."""

    kind: ExponentKind
    tau: float
    mass: Optional[float] = None
    beta: float = 0.0
    density: Optional[LevyDensity] = None

    def measure(self) -> Optional[LevyDensity]:
        """The jump density, built on demand for the relativistic kind."""
        if self.kind == "relativistic":
            return relativistic_density(self.mass)
        return self.density


@dataclass(frozen=True, slots=True)
class EtaEstimate:
    """η(u) from quadrature with its error estimate."""

    value: float | np.ndarray
    error: float
    panels: int


@dataclass(frozen=True, slots=True)
class MeasureReport:
    small_jump_mass: float
    tail_mass: float
    ok: bool
    diagnostic: str = ""


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def _check_mass(m: float) -> None:
    require(m is not None and math.isfinite(m) and m > 0, f"mass must be positive, got {m}")


def relativistic_exponent(m: float) -> LevyExponent:
    """η(u) = 1 − √(1 + u²/m²) with τ = 1/m."""
    _check_mass(m)
    return LevyExponent(kind="relativistic", tau=1.0 / m, mass=float(m))


def gaussian_exponent(beta: float, tau: float = 1.0) -> LevyExponent:
    """Pure Wiener exponent η(u) = −β²u²/2."""
    require(math.isfinite(beta) and beta >= 0, f"beta must be non-negative, got {beta}")
    require(math.isfinite(tau) and tau > 0, f"tau must be positive, got {tau}")
    return LevyExponent(kind="gaussian", tau=float(tau), beta=float(beta))


def measure_exponent(
    density: LevyDensity,
    *,
    beta: float = 0.0,
    tau: float = 1.0,
    drift: float = 0.0,
) -> LevyExponent:
    """Exponent defined by a Gaussian part and a symmetric jump density."""
    require(drift == 0.0, "drifted (asymmetric) exponents are not representable")
    require(math.isfinite(beta) and beta >= 0, f"beta must be non-negative, got {beta}")
    require(math.isfinite(tau) and tau > 0, f"tau must be positive, got {tau}")
    return LevyExponent(kind="measure", tau=float(tau), beta=float(beta), density=density)


def relativistic_density(m: float) -> LevyDensity:
    """The Bessel-kernel density W(x) = K₁(m|x|)/(π|x|)."""
    _check_mass(m)
    return LevyDensity(
        evaluate=lambda x: bessel_k_array(1, m * x) / (math.pi * x),
        singularity_order=2.0,
        tail_scale=1.0 / m,
        name=f"relativistic(m={m:g})",
    )


# ---------------------------------------------------------------------------
# Closed-form exponents
# ---------------------------------------------------------------------------


def eta_relativistic(u: float | np.ndarray, m: float) -> float | np.ndarray:
    """1 − √(1 + u²/m²), written without cancellation for small u."""
    _check_mass(m)
    s = (np.asarray(u, dtype=float) / m) ** 2
    out = -s / (1.0 + np.sqrt(1.0 + s))
    return out if out.ndim else float(out)


def eta_gaussian(u: float | np.ndarray, beta: float) -> float | np.ndarray:
    out = -0.5 * beta * beta * np.asarray(u, dtype=float) ** 2
    return out if out.ndim else float(out)


def eta_from_measure(
    u: float | np.ndarray,
    exponent: LevyExponent,
    quad: QuadratureSpec | None = None,
) -> EtaEstimate:
    """η(u) = −β²u²/2 + 2∫₀^∞ (cos ux − 1) W(x) dx by adaptive quadrature.

    The integrand is written as −2 sin²(ux/2) W(x), which is continuous at 0
    (limit −u²x²W/2) and free of cancellation. Vector ``u`` is integrated as one
    vector-valued integrand.
    """
    quad = quad or QuadratureSpec()
    u_arr = np.asarray(u, dtype=float)
    gaussian_part = -0.5 * exponent.beta**2 * u_arr**2
    density = exponent.measure()
    if density is None:
        value = gaussian_part if u_arr.ndim else float(gaussian_part)
        return EtaEstimate(value=value, error=0.0, panels=0)

    u_vec = np.atleast_1d(u_arr)
    if not np.any(u_vec):
        zero = np.zeros_like(u_arr) if u_arr.ndim else 0.0
        return EtaEstimate(value=zero, error=0.0, panels=0)

    def integrand(x: np.ndarray) -> np.ndarray:
        w = density.evaluate(x)
        return -2.0 * np.sin(0.5 * np.outer(x, u_vec)) ** 2 * w[:, None]

    try:
        result = integrate_half_line(integrand, quad, decay_length=density.tail_scale)
    except ConvergenceError as exc:
        logger.warning("[levy-core] eta quadrature failed for %s", density.name)
        partial = None
        if exc.estimate is not None:
            raw = 2.0 * np.asarray(exc.estimate, dtype=float)
            partial = gaussian_part + (raw if u_arr.ndim else raw.reshape(-1)[0])
            if not u_arr.ndim:
                partial = float(partial)
        raise ConvergenceError(
            exc.message,
            estimate=partial,
            error_estimate=None if exc.error_estimate is None else 2.0 * exc.error_estimate,
            worst_index=exc.worst_index,
        ) from exc
    jumps = 2.0 * np.asarray(result.value)
    value = gaussian_part + (jumps if u_arr.ndim else jumps[0])
    if not u_arr.ndim:
        value = float(value)
    return EtaEstimate(value=value, error=2.0 * result.error, panels=result.panels)


def eta(exponent: LevyExponent, u: float | np.ndarray, quad: QuadratureSpec | None = None) -> float | np.ndarray:
    """η(u) for any kind: closed form where one exists, quadrature otherwise."""
    if exponent.kind == "relativistic":
        return eta_relativistic(u, exponent.mass)
    if exponent.kind == "gaussian":
        return eta_gaussian(u, exponent.beta)
    return eta_from_measure(u, exponent, quad).value


# ---------------------------------------------------------------------------
# Lévy densities
# ---------------------------------------------------------------------------


def levy_density_1d(x: float | np.ndarray, m: float) -> float | np.ndarray:
    """W(x) = K₁(m|x|)/(π|x|); singular at x = 0."""
    _check_mass(m)
    ax = np.abs(np.asarray(x, dtype=float))
    require(bool(np.all(ax > 0)), "levy_density_1d is singular at x = 0")
    out = bessel_k_array(1, m * ax) / (math.pi * ax)
    return out if out.ndim else float(out)


def levy_density_3d(r: float | np.ndarray, m: float) -> float | np.ndarray:
    """W(r) = m K₂(m r)/(2π² r²), pointwise only."""
    _check_mass(m)
    r_arr = np.asarray(r, dtype=float)
    require(bool(np.all(r_arr > 0)), "levy_density_3d needs r > 0")
    out = m * bessel_k_array(2, m * r_arr) / (2.0 * math.pi**2 * r_arr**2)
    return out if out.ndim else float(out)


def validate_levy_measure(density: LevyDensity, quad: QuadratureSpec | None = None) -> MeasureReport:
    """Certify ∫(x² ∧ 1) W dx < ∞ by estimating both halves separately."""
    quad = quad or QuadratureSpec()
    try:
        small = integrate(lambda x: x * x * density.evaluate(x), [0.0, 1.0], quad)
    except ConvergenceError as exc:
        logger.warning("[levy-core] small-jump integral diverges for %s: %s", density.name, exc)
        return MeasureReport(
            small_jump_mass=math.inf,
            tail_mass=math.nan,
            ok=False,
            diagnostic=f"small-jump integral did not converge: {exc.message}",
        )

    try:
        tail_value = _tail_only(density, quad)
    except ConvergenceError as exc:
        logger.warning("[levy-core] tail integral failed for %s: %s", density.name, exc)
        return MeasureReport(
            small_jump_mass=2.0 * float(small.value),
            tail_mass=math.inf,
            ok=False,
            diagnostic=f"tail integral did not converge: {exc.message}",
        )

    small_mass = 2.0 * float(small.value)
    tail_mass = 2.0 * tail_value
    ok = math.isfinite(small_mass) and math.isfinite(tail_mass)
    return MeasureReport(small_jump_mass=small_mass, tail_mass=tail_mass, ok=ok)


def _tail_only(density: LevyDensity, quad: QuadratureSpec) -> float:
    """∫₁^∞ W dx, extending the cut by doubling until the increment settles."""

    def piece(a: float, b: float) -> float:
        # x = e^t; a power-law tail is smooth in t
        result = integrate(
            lambda t: density.evaluate(np.exp(t)) * np.exp(t),
            [math.log(a), math.log(b)],
            quad,
        )
        return float(result.value)

    x_hi = 1.0 + quad.tail_decay_lengths * density.tail_scale
    total = piece(1.0, x_hi)
    step = total
    for _ in range(_MAX_TAIL_DOUBLINGS):
        step = piece(x_hi, 2.0 * x_hi)
        total += step
        x_hi *= 2.0
        if abs(step) <= max(quad.abs_tol, _TAIL_SETTLE_REL * abs(total)):
            return total
    raise ConvergenceError(
        f"tail mass still growing at x={x_hi:.3g} (last doubling added {step:.3g})",
        estimate=total,
        error_estimate=abs(step),
    )


# ---------------------------------------------------------------------------
# Dispersion
# ---------------------------------------------------------------------------


def dispersion_energy(p: float | np.ndarray, m: float) -> float | np.ndarray:
    """Kinetic energy E₀(p) = √(m² + p²) − m = −m·η(p; m)."""
    _check_mass(m)
    p_arr = np.asarray(p, dtype=float)
    out = p_arr * p_arr / (m + np.sqrt(m * m + p_arr * p_arr))
    return out if out.ndim else float(out)


def stationary_energy(
    u: float | np.ndarray,
    exponent: LevyExponent,
    *,
    alpha: float = 1.0,
    quad: QuadratureSpec | None = None,
) -> float | np.ndarray:
    """E₀ = −(α/τ)·η(p/α) for the plane wave e^{ipx/α} of any symmetric exponent."""
    require(alpha > 0, f"alpha must be positive, got {alpha}")
    values = eta(exponent, np.asarray(u, dtype=float) / alpha, quad)
    out = -(alpha / exponent.tau) * np.asarray(values)
    return out if out.ndim else float(out)
