"""Lévy–Schrödinger numerical laboratory: exponents, propagation, jump sampling,
cutoff mass spectrum and the self-energy loop."""

from __future__ import annotations

__version__ = "0.1.0"

__all__: tuple[str, ...] = ("__version__",)
