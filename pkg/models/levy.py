"""Pydantic parameter models shared by the library and the CLI."""

from __future__ import annotations

import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

TailTransform = Literal["exponential", "none"]
PolarScheme = Literal["quadrature", "analytic"]
OutputFormat = Literal["csv", "json"]


class QuadratureSpec(BaseModel):
    """Tolerances and panel plumbing for the adaptive Gauss–Kronrod engine."""

    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(default=1e-11, gt=0)
    rel_tol: float = Field(default=1e-10, gt=0)
    split_points: List[float] = Field(
        default_factory=lambda: [1.0],
        description="Panel boundaries on the positive half-line (singularity / compensation splits)",
    )
    tail_transform: TailTransform = Field(
        default="exponential",
        description="Map for the last semi-infinite panel: x = split * exp(t)",
    )
    tail_decay_lengths: float = Field(
        default=50.0, gt=0, description="Tail truncation in units of the density's decay length"
    )
    max_panels: int = Field(default=2000, ge=1)

    @field_validator("split_points")
    @classmethod
    def _positive_sorted(cls, value: List[float]) -> List[float]:
        if any(not math.isfinite(v) or v <= 0 for v in value):
            raise ValueError("split points must be finite and positive")
        return sorted(set(value))


class JumpSimConfig(BaseModel):
    """Compound-Poisson sampling parameters."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=1e-3, gt=0, description="Small-jump truncation level")
    n_paths: int = Field(default=1000, ge=1)
    horizon: float = Field(default=1.0, gt=0, description="Terminal time t")
    seed: int = Field(default=0, ge=0, lt=2**64)
    gaussian_compensation: bool = True
    table_knots: int = Field(default=4096, ge=16)
    max_jumps_per_path: float = Field(default=1e7, gt=0)


class SelfEnergyScheme(BaseModel):
    """Quadrature metadata for the Euclidean self-energy integral."""

    model_config = ConfigDict(frozen=True)

    cutoff_radius: float = Field(default=50.0, gt=0, description="Euclidean radius Λ")
    polar: PolarScheme = "quadrature"
    n_polar: int = Field(default=96, ge=8)
    rel_tol: float = Field(default=1e-9, gt=0)
    abs_tol: float = Field(default=1e-13, gt=0)
    max_panels: int = Field(default=4000, ge=1)
    complex_branch: bool = Field(
        default=False, description="Take the principal branch of sqrt(1+f) where 1+f < 0"
    )
    tail_correction: bool = Field(
        default=True, description="Add the power-law tail beyond Λ for convergent cutoffs"
    )
    normalization: float = Field(
        default=1.0 / (2.0 * math.pi) ** 4, description="Overall factor multiplying d^4k_E"
    )
    convention: str = "wick k0->i k4, p2->-pE2, f at -kE2/m2, d4k_E measure"


class RunConfig(BaseModel):
    """One CLI invocation, echoed into every output header."""

    model_config = ConfigDict(frozen=True)

    subcommand: str
    params: Dict[str, Any] = Field(default_factory=dict)
    output: Optional[str] = None
    format: OutputFormat = "csv"
    seed: int = 0
    units: Literal["natural", "si"] = "natural"
