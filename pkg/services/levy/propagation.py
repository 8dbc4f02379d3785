"""
services/levy/propagation.py
----------------------------
Fourier-multiplier evolution of the free Lévy–Schrödinger particle on a
uniform periodic grid, transition densities by FFT inversion, and a real-space
quadrature of the integro-differential right-hand side used as an independent
oracle for the spectral generator.

Conventions:
  - positions x_j = (j − n/2)·dx, wavenumbers in numpy FFT order u = 2π·fftfreq(n, dx);
  - evolution uses the kinetic energy only (the rest-mass phase e^{−imt} is
    absorbed); ``include_rest_phase`` puts it back for total-energy comparisons;
  - discrete norm ‖ψ‖² = dx·Σ|ψ_j|².
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from models.levy import QuadratureSpec
from services.levy.errors import ConvergenceError, DomainError, ResolutionError, ShapeError, require
from services.levy.levy_core import LevyExponent, eta
from services.levy.quadrature import integrate, integrate_half_line

logger = logging.getLogger(__name__)

EDGE_MASS_LIMIT = 1e-6
SPECTRAL_EDGE_LIMIT = 1e-6
RINGING_FLOOR = -1e-12
# Fraction of spectral power above half the Nyquist wavenumber tolerated before
# generator_apply warns that the state is not smooth on the grid scale.
BANDLIMIT_WARNING = 1e-10


@dataclass(frozen=True, slots=True)
class Grid1D:
    n: int
    length: float

    def __post_init__(self) -> None:
        require(
            isinstance(self.n, (int, np.integer)) and self.n >= 8 and (self.n & (self.n - 1)) == 0,
            f"grid size must be a power of two >= 8, got {self.n}",
        )
        require(math.isfinite(self.length) and self.length > 0, f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def u(self) -> np.ndarray:
        """Dual wavenumbers 2πj/L in FFT order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def u_max(self) -> float:
        return math.pi / self.dx

    def on_dual_grid(self, u: float, tol: float = 1e-9) -> bool:
        j = u * self.length / (2.0 * math.pi)
        return abs(j - round(j)) < tol and -self.n // 2 <= round(j) < self.n // 2


@dataclass(frozen=True, slots=True)
class WaveState:
    grid: Grid1D
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n,):
            raise ShapeError(f"amplitudes shape {amps.shape} does not match grid n={self.grid.n}")
        require(bool(np.all(np.isfinite(amps))), "amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True, slots=True)
class TransitionDensity:
    grid: Grid1D
    values: np.ndarray
    horizon: float
    correction_factor: float = 1.0
    clipped_points: int = 0
    min_raw_value: float = 0.0
    edge_mass: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(self.grid.dx * np.sum(self.values))


# ---------------------------------------------------------------------------
# Grids and states
# ---------------------------------------------------------------------------


def make_grid(n: int, length: float) -> Grid1D:
    return Grid1D(n=int(n), length=float(length))


def plane_wave(grid: Grid1D, u: float) -> WaveState:
    """e^{iux}, normalized to unit discrete norm; u must be a dual wavenumber."""
    if not grid.on_dual_grid(u):
        raise DomainError(f"u={u} is not on the dual grid of spacing {2 * math.pi / grid.length:g}")
    amps = np.exp(1j * u * grid.x) / math.sqrt(grid.length)
    return WaveState(grid=grid, amplitudes=amps)


def gaussian_packet(grid: Grid1D, x0: float = 0.0, sigma: float = 1.0, u0: float = 0.0) -> WaveState:
    require(sigma > 0, f"sigma must be positive, got {sigma}")
    amps = np.exp(-((grid.x - x0) ** 2) / (4.0 * sigma**2) + 1j * u0 * grid.x)
    state = WaveState(grid=grid, amplitudes=amps)
    return replace(state, amplitudes=state.amplitudes / norm(state))


def norm(state: WaveState) -> float:
    return math.sqrt(state.grid.dx * float(np.sum(np.abs(state.amplitudes) ** 2)))


def _eta_on_grid(exponent: LevyExponent, grid: Grid1D, quad: QuadratureSpec | None) -> np.ndarray:
    return np.asarray(eta(exponent, grid.u, quad), dtype=float)


# ---------------------------------------------------------------------------
# Transition density
# ---------------------------------------------------------------------------


def transition_density(
    exponent: LevyExponent,
    dt: float,
    grid: Grid1D,
    quad: QuadratureSpec | None = None,
) -> TransitionDensity:
    """p(x, dt) = (1/2π)∫ e^{(dt/τ)η(u)} e^{−iux} du by inverse FFT.

    Raises ``ResolutionError`` if the characteristic function has not decayed
    at the Nyquist wavenumber or if the density carries mass at the grid edge.
    """
    require(dt > 0, f"dt must be positive, got {dt}")
    spectrum = np.exp((dt / exponent.tau) * _eta_on_grid(exponent, grid, quad))
    nyquist_level = float(np.max(np.abs(spectrum[np.abs(grid.u) >= 0.95 * grid.u_max])))
    if nyquist_level > SPECTRAL_EDGE_LIMIT:
        raise ResolutionError(
            f"characteristic function is {nyquist_level:.2e} at the Nyquist wavenumber; refine dx"
        )

    raw = np.fft.fftshift(np.real(np.fft.ifft(spectrum))) * (grid.n / grid.length)
    edge = max(1, grid.n // 16)
    edge_mass = grid.dx * float(np.sum(np.abs(raw[:edge])) + np.sum(np.abs(raw[-edge:])))
    if edge_mass > EDGE_MASS_LIMIT:
        raise ResolutionError(f"tail mass {edge_mass:.2e} at the grid edge; enlarge the box")

    min_raw = float(raw.min())
    clipped = int(np.count_nonzero(raw < RINGING_FLOOR))
    values = np.maximum(raw, RINGING_FLOOR)
    if clipped:
        logger.warning("[propagation] clipped %d ringing points (min %.3e)", clipped, min_raw)

    total = grid.dx * float(np.sum(values))
    correction = 1.0 / total
    values = values * correction
    logger.debug("[propagation] transition density dt=%g correction=%.3e edge=%.2e", dt, correction, edge_mass)
    return TransitionDensity(
        grid=grid,
        values=values,
        horizon=float(dt),
        correction_factor=correction,
        clipped_points=clipped,
        min_raw_value=min_raw,
        edge_mass=edge_mass,
        diagnostics={"nyquist_level": nyquist_level},
    )


def transition_density_direct(
    exponent: LevyExponent,
    dt: float,
    x: float | np.ndarray,
    quad: QuadratureSpec | None = None,
) -> float | np.ndarray:
    """Brute-force (1/π)∫₀^∞ cos(ux)·e^{(dt/τ)η(u)} du at the given points."""
    require(dt > 0, f"dt must be positive, got {dt}")
    quad = quad or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    rate = dt / exponent.tau

    # Walk out until the characteristic function is below 1e-17.
    u_max = 1.0
    while math.exp(rate * float(eta(exponent, u_max, quad))) > 1e-17:
        u_max *= 2.0
        if u_max > 1e8:
            raise ResolutionError("characteristic function does not decay; density is not resolvable")

    def integrand(u: np.ndarray) -> np.ndarray:
        cf = np.exp(rate * np.asarray(eta(exponent, u, quad)))
        return np.cos(np.outer(u, x_arr)) * cf[:, None]

    result = integrate(integrand, np.linspace(0.0, u_max, 9), quad)
    values = np.asarray(result.value) / math.pi
    return values if np.ndim(x) else float(values[0])


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------


def propagator_multiplier(
    exponent: LevyExponent,
    dt: float,
    grid: Grid1D,
    quad: QuadratureSpec | None = None,
) -> np.ndarray:
    """φ(u_j)^{i·dt/τ} = exp(i·dt·η(u_j)/τ), FFT order; unimodular for real η."""
    require(math.isfinite(dt), f"dt must be finite, got {dt}")
    return np.exp(1j * (dt / exponent.tau) * _eta_on_grid(exponent, grid, quad))


def evolve(
    state: WaveState,
    dt: float,
    exponent: LevyExponent,
    *,
    include_rest_phase: bool = False,
    quad: QuadratureSpec | None = None,
    multiplier: np.ndarray | None = None,
) -> WaveState:
    """Advance ψ by dt: FFT, multiply, inverse FFT.

    ``multiplier`` may be passed in to reuse one precomputed array over many steps.
    """
    grid = state.grid
    if multiplier is None:
        multiplier = propagator_multiplier(exponent, dt, grid, quad)
    elif multiplier.shape != (grid.n,):
        raise ShapeError(f"multiplier shape {multiplier.shape} does not match grid n={grid.n}")
    amps = np.fft.ifft(np.fft.fft(state.amplitudes) * multiplier)
    if include_rest_phase:
        require(exponent.mass is not None, "rest phase needs an exponent with a mass")
        amps = amps * np.exp(-1j * exponent.mass * dt)
    return WaveState(grid=grid, amplitudes=amps, time=state.time + dt)


def evolve_steps(
    state: WaveState,
    dt: float,
    steps: int,
    exponent: LevyExponent,
    quad: QuadratureSpec | None = None,
) -> list[WaveState]:
    """Snapshots after each of ``steps`` equal steps (the initial state first)."""
    multiplier = propagator_multiplier(exponent, dt, state.grid, quad)
    snapshots = [state]
    for _ in range(steps):
        snapshots.append(evolve(snapshots[-1], dt, exponent, multiplier=multiplier))
    drift = abs(norm(snapshots[-1]) - norm(state))
    logger.debug("[propagation] %d steps of dt=%g, norm drift %.2e", steps, dt, drift)
    return snapshots


def generator_apply(
    state: WaveState,
    exponent: LevyExponent,
    quad: QuadratureSpec | None = None,
) -> WaveState:
    """Right-hand side −(β²/2τ)ψ'' − (1/τ)∫[ψ(x+y) − ψ(x)] W(y) dy by quadrature in y.

    The ±y panels are paired into ψ(x+y) + ψ(x−y) − 2ψ(x), which vanishes like
    y² and cancels the y⁻² singularity of W. Off-grid shifts are evaluated by
    trigonometric interpolation. The result is a state at the same time.
    """
    quad = quad or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9)
    grid = state.grid
    u = grid.u
    psi_hat = np.fft.fft(state.amplitudes)

    power = np.abs(psi_hat) ** 2
    high = float(power[np.abs(u) > 0.5 * grid.u_max].sum()) / max(float(power.sum()), 1e-300)
    if high > BANDLIMIT_WARNING:
        logger.warning("[propagation] state is not band-limited (%.2e of power above u_max/2)", high)

    out_hat = np.zeros_like(psi_hat)
    if exponent.beta:
        out_hat += (exponent.beta**2 / (2.0 * exponent.tau)) * u * u * psi_hat

    density = exponent.measure()
    if density is not None:

        def integrand(y: np.ndarray) -> np.ndarray:
            kernel = 2.0 * np.cos(np.outer(y, u)) - 2.0
            paired = np.fft.ifft(kernel * psi_hat[None, :], axis=1)
            return paired * density.evaluate(y)[:, None]

        try:
            result = integrate_half_line(integrand, quad, decay_length=density.tail_scale)
        except ConvergenceError as exc:
            where = grid.x[exc.worst_index] if exc.worst_index is not None else float("nan")
            raise ConvergenceError(
                f"generator quadrature did not converge; worst grid point x={where:g}",
                estimate=exc.estimate,
                error_estimate=exc.error_estimate,
                worst_index=exc.worst_index,
            ) from exc
        jumps = -np.asarray(result.value) / exponent.tau
    else:
        jumps = np.zeros(grid.n, dtype=complex)

    amps = np.fft.ifft(out_hat) + jumps
    return WaveState(grid=grid, amplitudes=amps, time=state.time)


def dispersion_probe(
    exponent: LevyExponent,
    u: float,
    dt: float,
    grid: Grid1D,
    quad: QuadratureSpec | None = None,
) -> float:
    """Measured E₀(u) from the phase a dual-grid plane wave acquires in one step.

    The rotation per step must stay below π (|E₀·dt| < π) to be unambiguous.
    """
    require(dt != 0 and math.isfinite(dt), f"dt must be finite and nonzero, got {dt}")
    state = plane_wave(grid, u)
    after = evolve(state, dt, exponent, quad=quad)
    overlap = np.vdot(state.amplitudes, after.amplitudes)
    return -float(np.angle(overlap)) / dt
