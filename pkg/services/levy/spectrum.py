"""
services/levy/spectrum.py
-------------------------
Modified energy–momentum relation E² = p² + m²·g⁻¹(1) with g(x) = x − f(x)
for a cubic cutoff f, the three-root structure of g(x) = 1 and the mass
spectrum it implies.

f(1) = 0 is built into every cutoff, so x = 1 (the unmodified mass) is always
a root; the other two come from the quadratic factor
    λ₃x² + (λ₂ + λ₃)x + (λ₁ + λ₂ + λ₃ − 1) = 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import optimize

from services.levy.errors import DegreeError, DomainError, require
from services.levy.levy_core import LevyExponent, relativistic_exponent

logger = logging.getLogger(__name__)

RootStatus = Literal["real_positive", "rejected_complex", "rejected_nonpositive", "rejected_residual"]

RESIDUAL_TOL = 1e-10
SCAN_PANELS = 1024
# Roots closer than this (relative) count as one with multiplicity.
_COINCIDENCE = 1e-7
# |Δ| within this many ulps of the sum of its term magnitudes is zero.
_DISCRIMINANT_ULPS = 64.0
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True, slots=True)
class CutoffPolynomial:
    """f(x) = λ₀ + λ₁x + λ₂x² + λ₃x³ with f(1) = 0."""

    lambda0: float
    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self) -> None:
        coeffs = self.coefficients
        require(all(math.isfinite(c) for c in coeffs), f"cutoff coefficients must be finite, got {coeffs}")
        scale = max(1.0, sum(abs(c) for c in coeffs))
        require(
            abs(math.fsum(coeffs)) <= 1e-12 * scale,
            f"cutoff must satisfy f(1) = 0, got f(1) = {math.fsum(coeffs):.3e}",
        )

    @classmethod
    def from_coefficients(cls, lambda1: float, lambda2: float, lambda3: float) -> "CutoffPolynomial":
        return cls(
            lambda0=-(lambda1 + lambda2 + lambda3),
            lambda1=float(lambda1),
            lambda2=float(lambda2),
            lambda3=float(lambda3),
        )

    @classmethod
    def zero(cls) -> "CutoffPolynomial":
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.lambda0, self.lambda1, self.lambda2, self.lambda3)

    @property
    def degree(self) -> int:
        for d in (3, 2, 1):
            if self.coefficients[d] != 0.0:
                return d
        return 0

    def evaluate(self, x):
        return ((self.lambda3 * x + self.lambda2) * x + self.lambda1) * x + self.lambda0

    def derivative(self, x):
        return (3.0 * self.lambda3 * x + 2.0 * self.lambda2) * x + self.lambda1

    def g(self, x):
        """g(x) = x − f(x)."""
        return x - self.evaluate(x)

    def magnitude(self, x: float) -> float:
        """Σ|λᵢ||x|ⁱ + |x|: the size of the terms cancelling in g(x) − 1."""
        ax = abs(x)
        return abs(self.lambda0) + ax * (abs(self.lambda1) + ax * (abs(self.lambda2) + ax * abs(self.lambda3))) + ax + 1.0


@dataclass(frozen=True, slots=True)
class Root:
    label: str
    value: complex | float
    status: RootStatus
    residual: float = math.nan
    multiplicity: int = 1

    @property
    def accepted(self) -> bool:
        return self.status == "real_positive"


@dataclass(frozen=True, slots=True)
class RootSet:
    roots: tuple[Root, ...]
    discriminant: float
    triple: bool = False

    @property
    def accepted(self) -> tuple[Root, ...]:
        return tuple(r for r in self.roots if r.accepted)

    @property
    def rejected(self) -> tuple[Root, ...]:
        return tuple(r for r in self.roots if not r.accepted)

    def values(self) -> list[float]:
        """Accepted root values, ascending."""
        return sorted(float(r.value) for r in self.accepted)


@dataclass(frozen=True, slots=True)
class MassSpectrum:
    m_base: float
    masses: tuple[float, ...]
    provenance: tuple[str, ...]
    rejected: tuple[Root, ...] = ()
    degenerate: bool = False

    @property
    def complete(self) -> bool:
        return len(self.masses) == 3 and not self.rejected


# ---------------------------------------------------------------------------
# Cutoff ↔ roots
# ---------------------------------------------------------------------------


def g_value(x, cutoff: CutoffPolynomial):
    return cutoff.g(x)


def cutoff_from_roots(x_plus: float, x_minus: float, lambda3: float) -> CutoffPolynomial:
    """The cutoff with g(x) − 1 = −λ₃(x − 1)(x − x₊)(x − x₋)."""
    if lambda3 == 0 or not math.isfinite(lambda3):
        raise DegreeError(f"lambda3 must be finite and nonzero, got {lambda3}")
    require(x_plus > 0 and x_minus > 0, f"roots must be positive, got {x_plus}, {x_minus}")
    lambda2 = -lambda3 * (1.0 + x_plus + x_minus)
    lambda1 = 1.0 + lambda3 * (x_plus + x_minus + x_plus * x_minus)
    return CutoffPolynomial.from_coefficients(lambda1, lambda2, lambda3)


def _polish(cutoff: CutoffPolynomial, x: float) -> tuple[float, float]:
    """One Newton step on g(x) − 1; returns the root and its relative residual."""
    h = x - 1.0 - cutoff.evaluate(x)
    dh = 1.0 - cutoff.derivative(x)
    if dh != 0.0 and math.isfinite(h / dh):
        step = h / dh
        # Near a multiple root Newton can overshoot; keep the step only if it helps.
        candidate = x - step
        h_new = candidate - 1.0 - cutoff.evaluate(candidate)
        if abs(h_new) <= abs(h):
            x, h = candidate, h_new
    return x, abs(h) / cutoff.magnitude(x)


def roots_from_cutoff(cutoff: CutoffPolynomial) -> RootSet:
    """{1, x₊, x₋} from the closed form, each polished and classified."""
    l1, l2, l3 = cutoff.lambda1, cutoff.lambda2, cutoff.lambda3
    if l3 == 0:
        raise DegreeError("roots_from_cutoff needs a cubic cutoff (lambda3 != 0)")
    delta = (l2 - l3) ** 2 - 4.0 * l1 * l3 - 4.0 * l3 * l3 + 4.0 * l3
    delta_scale = (l2 - l3) ** 2 + 4.0 * abs(l1 * l3) + 4.0 * l3 * l3 + 4.0 * abs(l3)
    if delta != 0.0 and abs(delta) <= _DISCRIMINANT_ULPS * _EPS * delta_scale:
        logger.debug("[spectrum] Δ=%.3g is rounding noise (scale %.3g); treating as a double root", delta, delta_scale)
        delta = 0.0

    a, b, c = l3, l2 + l3, l1 + l2 + l3 - 1.0
    if delta < 0:
        sq = math.sqrt(-delta)
        x_plus_c = complex(-b, sq) / (2.0 * a)
        x_minus_c = complex(-b, -sq) / (2.0 * a)
        logger.debug("[spectrum] complex pair, Δ=%.6g", delta)
        roots = (
            _classify(cutoff, "one", 1.0),
            Root(label="x_plus", value=x_plus_c, status="rejected_complex"),
            Root(label="x_minus", value=x_minus_c, status="rejected_complex"),
        )
        return RootSet(roots=roots, discriminant=delta)

    sq = math.sqrt(delta)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        x_plus = x_minus = 0.0
    elif b >= 0:
        x_minus, x_plus = q / a, c / q
    else:
        x_plus, x_minus = q / a, c / q

    values = {"one": 1.0, "x_plus": x_plus, "x_minus": x_minus}
    multiplicity = {
        label: sum(1 for other in values.values() if _coincide(x, other)) for label, x in values.items()
    }
    roots = tuple(_classify(cutoff, label, x, multiplicity[label]) for label, x in values.items())
    triple = all(m == 3 for m in multiplicity.values())
    if triple:
        logger.debug("[spectrum] triple root at x=1")
    return RootSet(roots=roots, discriminant=delta, triple=triple)


def _coincide(x: float, y: float) -> bool:
    return abs(x - y) <= _COINCIDENCE * max(1.0, abs(x), abs(y))


def _classify(cutoff: CutoffPolynomial, label: str, x: float, multiplicity: int = 1) -> Root:
    if label == "one":
        residual = abs(math.fsum(cutoff.coefficients)) / cutoff.magnitude(1.0)
        return Root(label=label, value=1.0, status="real_positive", residual=residual, multiplicity=multiplicity)
    if multiplicity == 1:
        x, residual = _polish(cutoff, x)
    else:
        residual = abs(x - 1.0 - cutoff.evaluate(x)) / cutoff.magnitude(x)
    if x <= 0:
        logger.warning("[spectrum] root %s=%.6g is not positive; rejected", label, x)
        return Root(label=label, value=x, status="rejected_nonpositive", residual=residual, multiplicity=multiplicity)
    if multiplicity == 1 and residual > RESIDUAL_TOL:
        logger.warning("[spectrum] root %s=%.6g residual %.2e; rejected", label, x, residual)
        return Root(label=label, value=x, status="rejected_residual", residual=residual, multiplicity=multiplicity)
    return Root(label=label, value=x, status="real_positive", residual=residual, multiplicity=multiplicity)


# ---------------------------------------------------------------------------
# Masses and dispersion
# ---------------------------------------------------------------------------


def mass_spectrum(m: float, cutoff: CutoffPolynomial) -> MassSpectrum:
    """Masses m·√x for the accepted roots, ascending, with the root each came from."""
    require(math.isfinite(m) and m > 0, f"mass must be positive, got {m}")
    root_set = roots_from_cutoff(cutoff)
    pairs = sorted((m * math.sqrt(float(r.value)), r.label) for r in root_set.accepted)
    if root_set.rejected:
        logger.warning(
            "[spectrum] partial spectrum: rejected %s",
            ", ".join(f"{r.label}={r.value}" for r in root_set.rejected),
        )
    return MassSpectrum(
        m_base=float(m),
        masses=tuple(mass for mass, _ in pairs),
        provenance=tuple(label for _, label in pairs),
        rejected=root_set.rejected,
        degenerate=root_set.triple or any(r.multiplicity > 1 for r in root_set.roots),
    )


def modified_dispersion(
    p: float | np.ndarray,
    m: float,
    cutoff: CutoffPolynomial,
    branch_x: float,
    *,
    kinetic: bool = False,
) -> float | np.ndarray:
    """E(p) = √(m²x + p²) on the branch x = g⁻¹(1); ``kinetic`` subtracts M = m√x."""
    if not (math.isfinite(branch_x) and branch_x > 0):
        raise DomainError(f"branch_x must be positive, got {branch_x}")
    require(math.isfinite(m) and m > 0, f"mass must be positive, got {m}")
    residual = abs(branch_x - 1.0 - cutoff.evaluate(branch_x)) / cutoff.magnitude(branch_x)
    require(residual <= 1e-8, f"branch_x={branch_x} does not solve g(x) = 1 (residual {residual:.2e})")

    p_arr = np.asarray(p, dtype=float)
    rest2 = m * m * branch_x
    energy = np.sqrt(rest2 + p_arr * p_arr)
    if kinetic:
        energy = p_arr * p_arr / (math.sqrt(rest2) + energy)
    return energy if energy.ndim else float(energy)


def branch_exponent(m: float, branch_x: float) -> LevyExponent:
    """Relativistic exponent of the particle on branch x, mass M = m√x."""
    if not (math.isfinite(branch_x) and branch_x > 0):
        raise DomainError(f"branch_x must be positive, got {branch_x}")
    return relativistic_exponent(m * math.sqrt(branch_x))


# ---------------------------------------------------------------------------
# Generic g(x) = 1
# ---------------------------------------------------------------------------


def _evaluate_on(f: Callable, nodes: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(f(nodes), dtype=float)
        if values.shape == nodes.shape:
            return values
    except (TypeError, ValueError):
        pass
    return np.array([float(f(x)) for x in nodes])


def scan_roots(
    h: Callable,
    lo: float,
    hi: float,
    *,
    panels: int = SCAN_PANELS,
    accept: Callable[[float], bool] | None = None,
) -> list[float]:
    """Sign-change roots of ``h`` on [lo, hi], polished with Brent's method.

    A node where ``h`` is exactly zero is itself a root; the panels on either
    side then show no strict sign change and are skipped. Nodes where ``h`` is
    not finite break the scan locally. ``accept`` filters polished roots.
    """
    nodes = np.linspace(lo, hi, panels + 1)
    values = _evaluate_on(h, nodes)

    roots: list[float] = [float(x) for x in nodes[values == 0.0]]
    finite = np.isfinite(values)
    crossings = np.nonzero((values[:-1] * values[1:] < 0) & finite[:-1] & finite[1:])[0]
    for i in crossings:
        a, b = float(nodes[i]), float(nodes[i + 1])
        root = optimize.brentq(lambda x: float(h(x)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        if accept is None or accept(root):
            roots.append(root)
    return sorted(roots)


def _dedupe(roots: list[float], tolerance: float) -> list[float]:
    deduped: list[float] = []
    for r in roots:
        if not deduped or abs(r - deduped[-1]) > tolerance * max(1.0, abs(r)):
            deduped.append(r)
    return deduped


def g_solve(
    f: Callable,
    search_interval: tuple[float, float],
    tolerance: float = RESIDUAL_TOL,
    *,
    panels: int = SCAN_PANELS,
) -> list[float]:
    """All sign-change roots of g(x) = x − f(x) = 1 on the interval, ascending.

    Roots whose residual |g(x) − 1| exceeds ``tolerance`` (relative to the size
    of the terms) are dropped: a sign change across a discontinuity is not a root.
    """
    lo, hi = (float(v) for v in search_interval)
    require(lo < hi, f"search interval must have lo < hi, got ({lo}, {hi})")
    require(tolerance > 0, f"tolerance must be positive, got {tolerance}")

    def h(x):
        return x - f(x) - 1.0

    def small_residual(x: float) -> bool:
        residual = abs(float(h(x)))
        if residual <= tolerance * max(1.0, abs(x), abs(float(f(x)))):
            return True
        logger.warning("[spectrum] sign change near x=%g is not a root (residual %.2e)", x, residual)
        return False

    roots = _dedupe(scan_roots(h, lo, hi, panels=panels, accept=small_residual), tolerance)
    logger.debug("[spectrum] g_solve on [%g, %g]: %d roots", lo, hi, len(roots))
    return roots
