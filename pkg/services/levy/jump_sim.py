"""
services/levy/jump_sim.py
-------------------------
Monte-Carlo sampling of terminal increments X(t) of a symmetric pure-jump
Lévy process by the compound-Poisson approximation:

  - jumps with |x| > ε arrive at rate Λ(ε) = 2∫_ε^∞ W(x) dx · (t/τ), sizes drawn
    by inverse CDF from a log-spaced table of the tail, signs by a fair coin;
  - jumps with |x| ≤ ε are replaced by N(0, σ²(ε)·t/τ) when compensation is on;
  - a Gaussian part β² of the exponent adds N(0, β²·t/τ).

Each path draws from its own counter-based Philox stream keyed by
(seed, path index), so an ensemble does not depend on the order paths run in.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from models.levy import JumpSimConfig, QuadratureSpec
from services.levy.errors import BudgetError, ConvergenceError, DomainError, require
from services.levy.levy_core import LevyDensity, LevyExponent, eta, validate_levy_measure
from services.levy.quadrature import cumulative_integral, integrate

logger = logging.getLogger(__name__)

# u-step for the curvature of η at the origin, in units of 1/tail_scale
_CURVATURE_STEP = 1e-2


@dataclass(frozen=True, slots=True)
class JumpTable:
    """Inverse-CDF table of the normalized tail density on |x| > ε.

    ``log_knots`` are log-spaced abscissae (stored as log x) and ``cdf`` the
    normalized cumulative tail mass at each knot.
    """

    epsilon: float
    tail_mass: float
    log_knots: np.ndarray
    cdf: np.ndarray

    @property
    def x_max(self) -> float:
        return float(math.exp(self.log_knots[-1]))

    def intensity(self, horizon: float, tau: float) -> float:
        """Λ(ε): expected number of jumps above ε in both directions over ``horizon``."""
        return 2.0 * self.tail_mass * horizon / tau

    def sample(self, uniforms: np.ndarray) -> np.ndarray:
        """Jump magnitudes for uniforms in [0, 1)."""
        return np.exp(np.interp(uniforms, self.cdf, self.log_knots))


@dataclass(frozen=True, slots=True)
class PathEnsemble:
    increments: np.ndarray
    config: JumpSimConfig
    exponent_kind: str
    tau: float
    intensity: float
    compensation_variance: float
    jump_count_mean: float
    jump_count_max: int

    @property
    def n_paths(self) -> int:
        return int(self.increments.size)

    @property
    def jump_count_stats(self) -> dict[str, float]:
        return {"mean": self.jump_count_mean, "max": float(self.jump_count_max)}


@dataclass(frozen=True, slots=True)
class CharacteristicEstimate:
    """Empirical E[e^{iuX}] per u with standard errors of each component."""

    u: np.ndarray
    values: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray


# ---------------------------------------------------------------------------
# Small-jump variance and the tail table
# ---------------------------------------------------------------------------


def small_jump_variance(density: LevyDensity, epsilon: float, quad: QuadratureSpec | None = None) -> float:
    """σ²(ε) = ∫_{|x|<ε} x² W(x) dx."""
    require(math.isfinite(epsilon) and epsilon > 0, f"epsilon must be positive, got {epsilon}")
    quad = quad or QuadratureSpec()
    try:
        result = integrate(lambda x: x * x * density.evaluate(x), [0.0, epsilon], quad)
    except ConvergenceError as exc:
        raise DomainError(
            f"small-jump variance of {density.name} diverges below epsilon={epsilon:g}; not a Lévy measure"
        ) from exc
    return 2.0 * float(result.value)


def jump_tail_table(
    density: LevyDensity,
    epsilon: float,
    quad: QuadratureSpec | None = None,
    *,
    knots: int = 4096,
) -> JumpTable:
    """Tail mass ∫_ε^∞ W and the inverse-CDF table of the normalized tail.

    The cumulative mass is integrated in s = log x, where the knots are uniform.
    """
    require(math.isfinite(epsilon) and epsilon > 0, f"epsilon must be positive, got {epsilon}")
    quad = quad or QuadratureSpec()
    x_max = epsilon + quad.tail_decay_lengths * density.tail_scale
    log_knots = np.linspace(math.log(epsilon), math.log(x_max), knots)

    def integrand(s: np.ndarray) -> np.ndarray:
        x = np.exp(s)
        return density.evaluate(x) * x

    try:
        cumulative = cumulative_integral(integrand, log_knots, quad)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"tail table for {density.name} did not converge at epsilon={epsilon:g}",
            estimate=exc.estimate,
            error_estimate=exc.error_estimate,
        ) from exc

    tail_mass = float(cumulative[-1])
    if not (math.isfinite(tail_mass) and tail_mass > 0):
        raise ConvergenceError(f"tail mass of {density.name} above epsilon={epsilon:g} is {tail_mass}")

    cdf = cumulative / tail_mass
    # Far-tail increments can round to zero; np.interp needs increasing abscissae.
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    logger.debug("[jump-sim] tail table eps=%g mass=%.6g knots=%d", epsilon, tail_mass, int(keep.sum()))
    return JumpTable(epsilon=float(epsilon), tail_mass=tail_mass, log_knots=log_knots[keep], cdf=cdf[keep])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _path_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed + (index << 64)))


def sample_increments(
    exponent: LevyExponent,
    config: JumpSimConfig,
    quad: QuadratureSpec | None = None,
) -> PathEnsemble:
    """Terminal values X(t) for ``config.n_paths`` independent paths."""
    density = exponent.measure()
    if density is None:
        raise DomainError("sampling needs an exponent with a jump measure")
    report = validate_levy_measure(density, quad)
    if not report.ok:
        raise DomainError(f"invalid Lévy measure: {report.diagnostic}")

    rate = config.horizon / exponent.tau
    table = jump_tail_table(density, config.epsilon, quad, knots=config.table_knots)
    intensity = table.intensity(config.horizon, exponent.tau)
    if intensity > config.max_jumps_per_path:
        raise BudgetError(
            f"epsilon={config.epsilon:g} needs {intensity:.3g} jumps per path "
            f"(budget {config.max_jumps_per_path:.3g}); raise epsilon"
        )

    comp_var = small_jump_variance(density, config.epsilon, quad) * rate if config.gaussian_compensation else 0.0
    gauss_sd = math.sqrt(comp_var + exponent.beta**2 * rate)

    increments = np.empty(config.n_paths)
    counts = np.empty(config.n_paths, dtype=np.int64)
    for k in range(config.n_paths):
        rng = _path_stream(config.seed, k)
        n_jumps = int(rng.poisson(intensity))
        sizes = table.sample(rng.random(n_jumps))
        signs = np.where(rng.random(n_jumps) < 0.5, -1.0, 1.0)
        increments[k] = float(np.sum(signs * sizes)) + gauss_sd * rng.standard_normal()
        counts[k] = n_jumps

    logger.debug(
        "[jump-sim] %d paths, Λ=%.4g, mean jumps %.2f, compensation var %.3e",
        config.n_paths,
        intensity,
        float(counts.mean()),
        comp_var,
    )
    return PathEnsemble(
        increments=increments,
        config=config,
        exponent_kind=exponent.kind,
        tau=exponent.tau,
        intensity=intensity,
        compensation_variance=comp_var,
        jump_count_mean=float(counts.mean()),
        jump_count_max=int(counts.max()),
    )


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def empirical_cf(ensemble: PathEnsemble, u_values: np.ndarray) -> CharacteristicEstimate:
    """(1/n)Σ e^{iuX_k} with standard errors of the real and imaginary means."""
    u = np.atleast_1d(np.asarray(u_values, dtype=float))
    n = ensemble.n_paths
    require(n >= 1, "ensemble is empty")
    phase = np.outer(ensemble.increments, u)
    cos, sin = np.cos(phase), np.sin(phase)
    ddof = 1 if n > 1 else 0
    return CharacteristicEstimate(
        u=u,
        values=cos.mean(axis=0) + 1j * sin.mean(axis=0),
        stderr_real=cos.std(axis=0, ddof=ddof) / math.sqrt(n),
        stderr_imag=sin.std(axis=0, ddof=ddof) / math.sqrt(n),
    )


def empirical_variance(ensemble: PathEnsemble) -> tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""
    x = ensemble.increments
    n = x.size
    require(n >= 2, "variance needs at least two paths")
    centred = x - x.mean()
    var = float(np.sum(centred**2) / (n - 1))
    m4 = float(np.mean(centred**4))
    return var, math.sqrt(max(m4 - var * var, 0.0) / n)


def reference_cf(exponent: LevyExponent, horizon: float, u: np.ndarray, quad: QuadratureSpec | None = None) -> np.ndarray:
    """e^{(t/τ)η(u)}, the exact characteristic function of X(t)."""
    values = np.asarray(eta(exponent, np.asarray(u, dtype=float), quad))
    return np.exp((horizon / exponent.tau) * values)


def reference_variance(
    exponent: LevyExponent,
    horizon: float,
    quad: QuadratureSpec | None = None,
) -> float:
    """−η''(0)·t/τ, the exact variance of X(t), for any kind of exponent.

    η is even with η(0) = 0, so the central difference collapses to
    −2η(h)/h². The step is a fixed fraction of the wavenumber scale of the
    jump measure (1 for a pure Gaussian exponent).
    """
    require(math.isfinite(horizon) and horizon > 0, f"horizon must be positive, got {horizon}")
    density = exponent.measure()
    h = _CURVATURE_STEP / (density.tail_scale if density is not None else 1.0)
    curvature = -2.0 * float(eta(exponent, h, quad)) / (h * h)
    return (horizon / exponent.tau) * curvature
