"""
services/levy/loop_qft.py
-------------------------
Momentum-space propagators with the modified mass M(p²) = m√(1 + f(p²/m²)),
power counting of the one-loop self-energy C = Ã·p̂ + B̃, its Euclidean
estimate, the geometric resummation 1/(p̂ − M − C) and its poles.

Dirac quantities never materialize gamma matrices: every value is a pair
(a, b) standing for (a·p̂ + b)/D with p̂² = p², and the identities
γ^μγ_μ = 4, γ^μk̂γ_μ = −2k̂ reduce the loop numerator to the same form.

Euclidean convention: k⁰ → ik⁴, p² → −p_E², f evaluated at −k_E²/m²,
measure d⁴k_E = k³dk · sin²θ dθ · 4π.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from models.levy import QuadratureSpec, SelfEnergyScheme
from services.levy.errors import BranchError, DegenerateError, DomainError, require
from services.levy.quadrature import integrate
from services.levy.spectrum import CutoffPolynomial, scan_roots

logger = logging.getLogger(__name__)

# Convergent power counts need both radial exponents below this.
CONVERGENCE_THRESHOLD = -1


@dataclass(frozen=True, slots=True)
class PropagatorValue:
    """(vector_coeff·p̂ + scalar_part) / denominator at fixed p²."""

    vector_coeff: complex
    scalar_part: complex
    denominator: complex
    p2: float

    @classmethod
    def operator(cls, vector_coeff: complex, scalar_part: complex, p2: float) -> "PropagatorValue":
        return cls(vector_coeff=vector_coeff, scalar_part=scalar_part, denominator=1.0, p2=p2)

    @property
    def coefficients(self) -> tuple[complex, complex]:
        """(a, b) with the denominator divided out."""
        return self.vector_coeff / self.denominator, self.scalar_part / self.denominator

    def _check(self, other: "PropagatorValue") -> None:
        require(self.p2 == other.p2, f"cannot combine values at p2={self.p2} and p2={other.p2}")

    def multiply(self, other: "PropagatorValue") -> "PropagatorValue":
        self._check(other)
        a1, b1, a2, b2 = self.vector_coeff, self.scalar_part, other.vector_coeff, other.scalar_part
        return PropagatorValue(
            vector_coeff=a1 * b2 + b1 * a2,
            scalar_part=a1 * a2 * self.p2 + b1 * b2,
            denominator=self.denominator * other.denominator,
            p2=self.p2,
        )

    def add(self, other: "PropagatorValue") -> "PropagatorValue":
        self._check(other)
        d1, d2 = self.denominator, other.denominator
        return PropagatorValue(
            vector_coeff=self.vector_coeff * d2 + other.vector_coeff * d1,
            scalar_part=self.scalar_part * d2 + other.scalar_part * d1,
            denominator=d1 * d2,
            p2=self.p2,
        )

    def inverse(self) -> "PropagatorValue":
        """(a·p̂ + b)⁻¹ = (a·p̂ − b)/(a²p² − b²)."""
        a, b = self.vector_coeff, self.scalar_part
        det = a * a * self.p2 - b * b
        if det == 0:
            raise DegenerateError(f"pair ({a}, {b}) is singular at p2={self.p2}")
        return PropagatorValue(
            vector_coeff=a * self.denominator,
            scalar_part=-b * self.denominator,
            denominator=det,
            p2=self.p2,
        )

    def is_identity(self, tol: float = 1e-12) -> bool:
        a, b = self.coefficients
        return abs(a) <= tol and abs(b - 1.0) <= tol


@dataclass(frozen=True, slots=True)
class PowerCount:
    degree_f: int
    exponent_A: int
    exponent_B: int
    convergent: bool
    failing: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class SelfEnergy:
    """Ã and B̃ at one external p², with the Λ-doubling diagnostic.

    ``A_tilde``/``B_tilde`` are the integrals truncated at Λ and the
    ``*_doubled`` fields the same at 2Λ. ``stability`` is
    |B̃(2Λ) − B̃(Λ)|/|B̃(Λ)| on those truncated values. ``*_corrected`` add
    the power-law tail beyond Λ when the count is convergent and the scheme
    asks for it.
    """

    A_tilde: complex
    B_tilde: complex
    coupling: float
    scheme: SelfEnergyScheme
    p2: float = math.nan
    A_tilde_doubled: complex = 0.0
    B_tilde_doubled: complex = 0.0
    stability: float = math.nan
    tail_A: complex = 0.0
    tail_B: complex = 0.0
    convergent: bool = False
    panels: int = 0
    error: float = 0.0
    complex_branch_used: bool = False

    @property
    def A_tilde_corrected(self) -> complex:
        return self.A_tilde + self.tail_A

    @property
    def B_tilde_corrected(self) -> complex:
        return self.B_tilde + self.tail_B

    @classmethod
    def constant(cls, A_tilde: complex, B_tilde: complex, coupling: float = 0.0) -> "SelfEnergy":
        """Fixed Ã, B̃ supplied by the caller (no integration)."""
        return cls(A_tilde=A_tilde, B_tilde=B_tilde, coupling=coupling, scheme=SelfEnergyScheme())


@dataclass(frozen=True, slots=True)
class PoleSolution:
    x: float
    p2: float
    residue_sign: int
    accepted: bool
    flag: str = ""


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------


def _mass_factor(p2, m: float, cutoff: CutoffPolynomial):
    """1 + f(p²/m²)."""
    return 1.0 + cutoff.evaluate(np.asarray(p2, dtype=float) / (m * m))


def kg_propagator(p2: float, m: float, cutoff: CutoffPolynomial, epsilon: float) -> complex:
    """1/(p² − m²[1 + f(p²/m²)] + iε)."""
    require(m > 0, f"mass must be positive, got {m}")
    require(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    s = float(_mass_factor(p2, m, cutoff))
    return 1.0 / complex(p2 - m * m * s, epsilon)


def dirac_propagator(
    p2: float,
    m: float,
    cutoff: CutoffPolynomial,
    epsilon: float,
    *,
    complex_branch: bool = False,
) -> PropagatorValue:
    """(p̂ + M)/(p² − M² + iε) with M = m√(1 + f(p²/m²)); shares the KG denominator."""
    require(m > 0, f"mass must be positive, got {m}")
    require(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    s = float(_mass_factor(p2, m, cutoff))
    mass = _branch_mass(m, s, complex_branch, where=f"p2={p2:g}")
    return PropagatorValue(vector_coeff=1.0, scalar_part=mass, denominator=complex(p2 - m * m * s, epsilon), p2=p2)


def _branch_mass(m: float, s: float, complex_branch: bool, *, where: str) -> complex | float:
    if s >= 0:
        return m * math.sqrt(s)
    if not complex_branch:
        raise BranchError(f"1 + f = {s:.6g} < 0 at {where}; enable the complex branch to continue")
    logger.warning("[loop] complex branch of sqrt(1+f) taken at %s", where)
    return m * complex(0.0, math.sqrt(-s))


def cutoff_degree(cutoff: CutoffPolynomial) -> int:
    return cutoff.degree


# ---------------------------------------------------------------------------
# Power counting
# ---------------------------------------------------------------------------


def superficial_degree(degree_f: int) -> PowerCount:
    """Large-k radial exponents of the A and B parts, k³ measure included.

    M(k²) ~ k^d, so the loop denominator grows like k^{2·max(1,d)} and the
    exchanged line like k².
    """
    require(isinstance(degree_f, (int, np.integer)) and degree_f >= 0, f"degree must be a non-negative integer, got {degree_f}")
    d = int(degree_f)
    exponent_B = 3 + d - 2 * max(1, d) - 2
    exponent_A = 3 + 1 - 2 * max(1, d) - 2
    failing = tuple(
        name
        for name, e in (("A", exponent_A), ("B", exponent_B))
        if e >= CONVERGENCE_THRESHOLD
    )
    return PowerCount(
        degree_f=d,
        exponent_A=exponent_A,
        exponent_B=exponent_B,
        convergent=not failing,
        failing=failing,
    )


# ---------------------------------------------------------------------------
# Euclidean self-energy
# ---------------------------------------------------------------------------


def _polar_kernels(k: np.ndarray, p: float, scheme: SelfEnergyScheme) -> tuple[np.ndarray, np.ndarray]:
    """4π∫sin²θ/(p² + k² − 2pk cosθ) dθ and the same with the (k cosθ/p) projection."""
    if scheme.polar == "analytic":
        big = np.maximum(p * p, k * k)
        small = np.minimum(p * p, k * k)
        kernel_b = 4.0 * math.pi * (0.5 * math.pi) / big
        kernel_a = 4.0 * math.pi * (k / p) * math.pi * small / (4.0 * p * np.maximum(k, 1e-300) * big)
        return kernel_b * np.ones_like(k), kernel_a

    nodes, weights = np.polynomial.legendre.leggauss(scheme.n_polar)
    theta = 0.5 * math.pi * (nodes + 1.0)
    w = 0.5 * math.pi * weights * np.sin(theta) ** 2
    cos = np.cos(theta)
    denom = p * p + k[:, None] ** 2 - 2.0 * p * k[:, None] * cos[None, :]
    kernel_b = 4.0 * math.pi * (w[None, :] / denom).sum(axis=1)
    kernel_a = 4.0 * math.pi * (w[None, :] * (k[:, None] * cos[None, :] / p) / denom).sum(axis=1)
    return kernel_b, kernel_a


def _radial_integrand(p: float, m: float, cutoff: CutoffPolynomial, scheme: SelfEnergyScheme):
    def integrand(k: np.ndarray) -> np.ndarray:
        s = 1.0 + cutoff.evaluate(-(k * k) / (m * m))
        if np.any(s < 0):
            if not scheme.complex_branch:
                worst = float(k[np.argmin(s)])
                raise BranchError(f"1 + f(-k²/m²) < 0 at k_E={worst:g}; enable the complex branch to continue")
            mass = m * np.sqrt(s.astype(complex))
        else:
            mass = m * np.sqrt(s)
        denom = k * k + m * m * s
        kernel_b, kernel_a = _polar_kernels(k, p, scheme)
        radial = k**3 / denom
        return np.stack([radial * mass * kernel_b, radial * kernel_a], axis=1)

    return integrand


def self_energy_estimate(
    p2: float,
    m: float,
    cutoff: CutoffPolynomial,
    coupling: float,
    scheme: SelfEnergyScheme | None = None,
) -> SelfEnergy:
    """Euclidean one-loop Ã(p²), B̃(p²) at spacelike p² < 0.

    The radial integral runs to Λ and on to 2Λ; both values are returned and
    their relative change is the stability diagnostic. For convergent power
    counts the tail beyond the cutoff is added from the leading power law.
    """
    scheme = scheme or SelfEnergyScheme()
    require(m > 0, f"mass must be positive, got {m}")
    if not (math.isfinite(p2) and p2 < 0):
        raise DomainError(f"the Euclidean estimate needs spacelike p2 < 0, got {p2}")
    p = math.sqrt(-p2)
    cutoff_radius = scheme.cutoff_radius
    count = superficial_degree(cutoff.degree)
    quad = QuadratureSpec(abs_tol=scheme.abs_tol, rel_tol=scheme.rel_tol, max_panels=scheme.max_panels)
    integrand = _radial_integrand(p, m, cutoff, scheme)

    cuts = sorted({0.0, cutoff_radius, *(c for c in (p, m) if 0.0 < c < cutoff_radius)})
    inner = integrate(integrand, cuts, quad)
    outer = integrate(integrand, [cutoff_radius, 2.0 * cutoff_radius], quad)
    at_cut = np.asarray(inner.value)
    at_double = at_cut + np.asarray(outer.value)

    tail_cut = np.zeros(2, dtype=complex)
    if count.convergent and scheme.tail_correction:
        exponents = np.array([count.exponent_B, count.exponent_A], dtype=float)
        edge = integrand(np.array([cutoff_radius]))
        tail_cut = edge[0] * cutoff_radius / -(exponents + 1.0)

    factor = scheme.normalization * 4.0 * math.pi * coupling * coupling
    b_cut, a_cut = 4.0 * factor * at_cut[0], -2.0 * factor * at_cut[1]
    b_dbl, a_dbl = 4.0 * factor * at_double[0], -2.0 * factor * at_double[1]
    # truncated integrals only; the tail estimate never enters the diagnostic
    stability = abs(b_dbl - b_cut) / abs(b_cut) if b_cut != 0 else 0.0

    complex_used = bool(np.iscomplexobj(at_cut) and scheme.complex_branch and np.any(np.imag(at_cut) != 0))
    logger.debug(
        "[loop] self-energy p2=%g Λ=%g panels=%d stability=%.2e convergent=%s",
        p2,
        cutoff_radius,
        inner.panels + outer.panels,
        stability,
        count.convergent,
    )
    return SelfEnergy(
        A_tilde=_real_if_possible(a_cut),
        B_tilde=_real_if_possible(b_cut),
        coupling=coupling,
        scheme=scheme,
        p2=p2,
        A_tilde_doubled=_real_if_possible(a_dbl),
        B_tilde_doubled=_real_if_possible(b_dbl),
        stability=float(stability),
        tail_A=_real_if_possible(-2.0 * factor * tail_cut[1]),
        tail_B=_real_if_possible(4.0 * factor * tail_cut[0]),
        convergent=count.convergent,
        panels=inner.panels + outer.panels,
        error=abs(factor) * (inner.error + outer.error),
        complex_branch_used=complex_used,
    )


def _real_if_possible(value) -> complex | float:
    value = complex(value)
    return value.real if value.imag == 0 else value


# ---------------------------------------------------------------------------
# Resummation
# ---------------------------------------------------------------------------


def resummed_propagator(
    p2: float,
    m: float,
    cutoff: CutoffPolynomial,
    self_energy: SelfEnergy,
    *,
    epsilon: float = 0.0,
    complex_branch: bool = False,
) -> PropagatorValue:
    """1/((1 − Ã)p̂ − M − B̃) = ((1 − Ã)p̂ + M + B̃)/((1 − Ã)²p² − (M + B̃)² + iε)."""
    a = 1.0 - self_energy.A_tilde
    if a == 0:
        raise DegenerateError("1 - A_tilde = 0: the resummed propagator has no vector part")
    s = float(_mass_factor(p2, m, cutoff))
    mass = _branch_mass(m, s, complex_branch, where=f"p2={p2:g}")
    b_tilde = self_energy.B_tilde
    # (M + B̃)² expanded; B̃ = 0 gives the free m²(1 + f) exactly.
    mass2 = m * m * s + 2.0 * mass * b_tilde + b_tilde * b_tilde
    denominator = (p2 if a == 1 else a * a * p2) - mass2 + 1j * epsilon
    return PropagatorValue(vector_coeff=a, scalar_part=mass + b_tilde, denominator=denominator, p2=p2)


def resummed_series(
    p2: float,
    m: float,
    cutoff: CutoffPolynomial,
    self_energy: SelfEnergy,
    terms: int = 3,
    *,
    complex_branch: bool = False,
) -> PropagatorValue:
    """S₀ + S₀CS₀ + S₀CS₀CS₀ + … (``terms`` terms) with S₀ = 1/(p̂ − M), C = Ãp̂ + B̃."""
    require(terms >= 1, f"terms must be at least 1, got {terms}")
    s = float(_mass_factor(p2, m, cutoff))
    mass = _branch_mass(m, s, complex_branch, where=f"p2={p2:g}")
    free = PropagatorValue.operator(1.0, -mass, p2).inverse()
    insertion = PropagatorValue.operator(self_energy.A_tilde, self_energy.B_tilde, p2)

    term = free
    total = free
    for _ in range(terms - 1):
        term = term.multiply(insertion).multiply(free)
        total = total.add(term)
    return total


# ---------------------------------------------------------------------------
# Poles
# ---------------------------------------------------------------------------


def pole_search(
    m: float,
    cutoff: CutoffPolynomial,
    A_tilde: float,
    B_tilde: float,
    interval: tuple[float, float],
    *,
    panels: int = 1024,
) -> list[PoleSolution]:
    """Solutions x = p²/m² of (1 − Ã)²x − (√(1 + f(x)) + B̃/m)² = 0.

    With B̃ = 0 the equation is the polynomial (1 − Ã)²x − 1 − f(x); with
    Ã = B̃ = 0 it is g(x) = 1 exactly. Candidates where 1 + f < 0 are returned
    with ``accepted=False``. ``residue_sign`` is the sign of the left side's
    x-derivative at the root.
    """
    require(m > 0, f"mass must be positive, got {m}")
    lo, hi = (float(v) for v in interval)
    require(lo < hi, f"interval must have lo < hi, got ({lo}, {hi})")
    a2 = (1.0 - A_tilde) ** 2
    if a2 == 0:
        raise DegenerateError("1 - A_tilde = 0: pole equation is degenerate")
    b = B_tilde / m

    def left_side(x):
        s = 1.0 + cutoff.evaluate(x)
        if b == 0:
            return a2 * x - s
        with np.errstate(invalid="ignore"):
            return a2 * x - s - 2.0 * b * np.sqrt(s) - b * b

    def slope(x: float) -> float:
        s = 1.0 + float(cutoff.evaluate(x))
        fp = float(cutoff.derivative(x))
        if b == 0:
            return a2 - fp
        return a2 - fp - (b * fp / math.sqrt(s) if s > 0 else math.inf)

    solutions: list[PoleSolution] = []
    for x in scan_roots(left_side, lo, hi, panels=panels):
        s = 1.0 + float(cutoff.evaluate(x))
        sign = int(np.sign(slope(x)))
        if s < 0:
            logger.warning("[loop] pole candidate x=%.6g has 1+f=%.3g < 0; rejected", x, s)
            solutions.append(PoleSolution(x=x, p2=m * m * x, residue_sign=sign, accepted=False, flag="branch"))
            continue
        solutions.append(PoleSolution(x=x, p2=m * m * x, residue_sign=sign, accepted=True))
    logger.debug("[loop] pole search on [%g, %g]: %d candidates", lo, hi, len(solutions))
    return solutions


def pole_shift_estimate(cutoff: CutoffPolynomial, m: float, A_tilde: float, B_tilde: float, root: float = 1.0) -> float:
    """First-order displacement of a classical root x₀ of g(x) = 1.

    dx ≈ (2x₀Ã + 2√x₀·B̃/m) / g'(x₀), using 1 + f(x₀) = x₀ on a classical root.
    """
    g_prime = 1.0 - float(cutoff.derivative(root))
    if g_prime == 0:
        raise DegenerateError(f"g'({root}) = 0: multiple root, no first-order shift")
    return (2.0 * root * A_tilde + 2.0 * math.sqrt(root) * B_tilde / m) / g_prime
