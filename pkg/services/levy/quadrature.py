"""
services/levy/quadrature.py
---------------------------
Adaptive Gauss–Kronrod (G7/K15) integration, vectorized over panels.

Every integrand is called with a 1-D array of nodes and must return either an
array of the same length (scalar integrand) or an array of shape
``(len(nodes), n)`` (vector integrand, e.g. one component per grid point).

Panels are refined globally: each pass splits every panel whose error exceeds
its width-proportional share of the tolerance, until all panels pass or the
panel budget is spent. A spent budget is retried with a doubled budget (up to
three attempts) before ``ConvergenceError`` is raised with the partial sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from models.levy import QuadratureSpec
from services.levy.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

ESCALATION_ATTEMPTS = 3
# Panels narrower than this fraction of the span mark a non-integrable point.
_MIN_RELATIVE_WIDTH = 1e-13

# Kronrod abscissae on [0, 1) in decreasing order, then the centre node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
])
_WGK_CENTRE = 0.209482141084727828012999174891714
# Gauss weights live on the odd Kronrod nodes (0.949.., 0.741.., 0.405..) and the centre.
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
])
_WG_CENTRE = 0.417959183673469387755102040816327

_NODES = np.concatenate([-_XGK, [0.0], _XGK[::-1]])
_W_KRONROD = np.concatenate([_WGK, [_WGK_CENTRE], _WGK[::-1]])
_gauss_half = np.zeros(7)
_gauss_half[1::2] = _WG
_W_GAUSS = np.concatenate([_gauss_half, [_WG_CENTRE], _gauss_half[::-1]])


@dataclass(frozen=True, slots=True)
class QuadratureResult:
    """Integral value (scalar or vector), error estimate and panel count.

    ``panel_lefts``/``panel_values`` keep the converged panels sorted by left
    edge; sums of results drop them.
    """

    value: object
    error: float
    panels: int
    panel_lefts: np.ndarray | None = None
    panel_values: np.ndarray | None = None

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            value=self.value + other.value,
            error=self.error + other.error,
            panels=self.panels + other.panels,
        )


def compensated_sum(values: np.ndarray) -> object:
    """Order-independent panel reduction (fsum per real component)."""
    values = np.asarray(values)
    if values.ndim == 1:
        if np.iscomplexobj(values):
            return complex(math.fsum(values.real), math.fsum(values.imag))
        return math.fsum(values)
    if np.iscomplexobj(values):
        return np.array(
            [complex(math.fsum(col.real), math.fsum(col.imag)) for col in values.T]
        )
    return np.array([math.fsum(col) for col in values.T])


def _gk_panels(f: Integrand, lefts: np.ndarray, rights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """K15 value and |K15 − G7| error for each panel, one vectorized call."""
    half = 0.5 * (rights - lefts)
    centre = 0.5 * (rights + lefts)
    x = (centre[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    n_panels = lefts.size
    if fx.ndim == 1:
        fx = fx.reshape(n_panels, _NODES.size)
        kronrod = half * (fx @ _W_KRONROD)
        gauss = half * (fx @ _W_GAUSS)
        err = np.abs(kronrod - gauss)
    else:
        fx = fx.reshape(n_panels, _NODES.size, -1)
        kronrod = half[:, None] * np.einsum("pnc,n->pc", fx, _W_KRONROD)
        gauss = half[:, None] * np.einsum("pnc,n->pc", fx, _W_GAUSS)
        err = np.abs(kronrod - gauss)
    return kronrod, err


def _adaptive(
    f: Integrand,
    breakpoints: Sequence[float],
    *,
    abs_tol: float,
    rel_tol: float,
    max_panels: int,
) -> QuadratureResult:
    edges = np.asarray(breakpoints, dtype=float)
    lefts, rights = edges[:-1], edges[1:]
    span = float(edges[-1] - edges[0])

    done_vals: list[np.ndarray] = []
    done_errs: list[np.ndarray] = []
    done_lefts: list[np.ndarray] = []
    total_panels = lefts.size

    while True:
        vals, errs = _gk_panels(f, lefts, rights)
        everything = np.concatenate(done_vals + [vals]) if done_vals else vals
        estimate = compensated_sum(everything)
        tol = max(abs_tol, rel_tol * float(np.max(np.abs(estimate))))

        panel_err = errs if errs.ndim == 1 else errs.max(axis=1)
        share = tol * (rights - lefts) / span
        ok = panel_err <= share
        done_vals.append(vals[ok])
        done_errs.append(errs[ok])
        done_lefts.append(lefts[ok])

        if ok.all():
            break
        bad_l, bad_r = lefts[~ok], rights[~ok]
        if total_panels + bad_l.size > max_panels:
            done_vals.append(vals[~ok])
            done_errs.append(errs[~ok])
            done_lefts.append(bad_l)
            partial = _assemble(done_vals, done_errs, done_lefts)
            worst = None
            if np.ndim(partial.value) > 0:
                worst = int(np.argmax(np.concatenate(done_errs).sum(axis=0)))
            raise ConvergenceError(
                f"panel budget {max_panels} exhausted on [{edges[0]:g}, {edges[-1]:g}]",
                estimate=partial.value,
                error_estimate=partial.error,
                worst_index=worst,
            )
        if np.any(bad_r - bad_l < _MIN_RELATIVE_WIDTH * span):
            partial = _assemble(done_vals + [vals[~ok]], done_errs + [errs[~ok]], done_lefts + [bad_l])
            where = float(bad_l[np.argmin(bad_r - bad_l)])
            raise ConvergenceError(
                f"panel width underflow near x={where:g}; integrand not integrable there",
                estimate=partial.value,
                error_estimate=partial.error,
            )
        mid = 0.5 * (bad_l + bad_r)
        lefts = np.concatenate([bad_l, mid])
        rights = np.concatenate([mid, bad_r])
        total_panels += bad_l.size

    result = _assemble(done_vals, done_errs, done_lefts)
    logger.debug("[quadrature] [%g, %g] converged with %d panels", edges[0], edges[-1], result.panels)
    return result


def _assemble(vals: list[np.ndarray], errs: list[np.ndarray], lefts: list[np.ndarray]) -> QuadratureResult:
    order = np.argsort(np.concatenate(lefts), kind="stable")
    v = np.concatenate(vals)[order]
    e = np.concatenate(errs)
    err = float(e.sum()) if e.ndim == 1 else float(e.sum(axis=0).max())
    return QuadratureResult(
        value=compensated_sum(v),
        error=err,
        panels=int(order.size),
        panel_lefts=np.concatenate(lefts)[order],
        panel_values=v,
    )


def integrate(
    f: Integrand,
    breakpoints: Sequence[float],
    spec: QuadratureSpec | None = None,
    *,
    max_panels: int | None = None,
) -> QuadratureResult:
    """Adaptive integral of ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    Interior breakpoints seed the initial panels. The panel budget doubles on
    each retry; the last ``ConvergenceError`` propagates with its partial sum.
    """
    spec = spec or QuadratureSpec()
    edges = [float(b) for b in breakpoints]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise DomainError(f"breakpoints must be strictly increasing, got {edges}")
    budget = max_panels or spec.max_panels

    for attempt in Retrying(
        stop=stop_after_attempt(ESCALATION_ATTEMPTS),
        retry=retry_if_exception_type(ConvergenceError),
        reraise=True,
    ):
        with attempt:
            n = attempt.retry_state.attempt_number
            if n > 1:
                logger.warning("[quadrature] escalating panel budget to %d (attempt %d)", budget * 2 ** (n - 1), n)
            return _adaptive(
                f,
                edges,
                abs_tol=spec.abs_tol,
                rel_tol=spec.rel_tol,
                max_panels=budget * 2 ** (n - 1),
            )
    raise AssertionError("unreachable")  # pragma: no cover


def integrate_half_line(
    f: Integrand,
    spec: QuadratureSpec | None = None,
    *,
    decay_length: float = 1.0,
    splits: Sequence[float] | None = None,
) -> QuadratureResult:
    """Integral of ``f`` over (0, ∞) for integrands with an exponential tail.

    Panels run from 0 through the split points; beyond the last split the tail
    is integrated up to ``split + tail_decay_lengths * decay_length``, through
    the map x = split·e^t when the spec asks for it.
    """
    spec = spec or QuadratureSpec()
    cuts = sorted(splits) if splits is not None else list(spec.split_points)
    body = integrate(f, [0.0, *cuts], spec)

    last = cuts[-1]
    x_max = last + spec.tail_decay_lengths * decay_length
    if spec.tail_transform == "exponential":
        t_max = math.log(x_max / last)

        def mapped(t: np.ndarray) -> np.ndarray:
            x = last * np.exp(t)
            fx = np.asarray(f(x))
            return fx * (x if fx.ndim == 1 else x[:, None])

        tail = integrate(mapped, [0.0, t_max], spec)
    else:
        tail = integrate(f, [last, x_max], spec)
    return body + tail


def cumulative_integral(
    f: Integrand,
    breakpoints: Sequence[float],
    spec: QuadratureSpec | None = None,
) -> np.ndarray:
    """∫ from ``breakpoints[0]`` to each breakpoint, for a scalar integrand.

    Every breakpoint seeds a panel, so refinement never straddles one and the
    converged panels bin exactly into the given intervals.
    """
    edges = np.asarray(breakpoints, dtype=float)
    spec = spec or QuadratureSpec()
    budget = max(spec.max_panels, 4 * edges.size)
    result = integrate(f, edges, spec, max_panels=budget)
    bins = np.searchsorted(edges, result.panel_lefts, side="right") - 1
    per_interval = np.bincount(bins, weights=result.panel_values, minlength=edges.size - 1)
    return np.concatenate([[0.0], np.cumsum(per_interval)])
