"""
routes/cli.py
-------------
Batch front end: one subcommand per library operation group, each writing a
table (CSV or JSON) with a metadata header.

Subcommands:
  exponent    η(u) closed form, optionally against the Lévy–Khintchin quadrature
  density     Lévy densities W(x) in one and three dimensions
  evolve      wave-packet snapshots under the Fourier-multiplier evolution
  transition  transition densities by FFT inversion (optionally checked by direct quadrature)
  simulate    Monte-Carlo ensembles compared with the exact characteristic function
  spectrum    cutoff ↔ roots ↔ masses
  propagator  KG and Dirac propagator scans in p²
  powercount  superficial degree table by cutoff degree
  selfenergy  Euclidean Ã, B̃ estimates over cutoff radii
  poles       poles of the resummed propagator

Exit codes:
  0   -- success
  2   -- validation error (bad physical parameter, branch or degree violation)
  3   -- numerical error (non-convergence, resolution or budget diagnostics)
  64  -- usage error (unknown subcommand or flag)
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from models.levy import JumpSimConfig, RunConfig, SelfEnergyScheme
from services.levy import __version__
from services.levy import jump_sim, levy_core, loop_qft, propagation, spectrum
from services.levy.errors import LevyLabError, require
from utils.output import ResultTable, render, write_atomic
from utils.settings import configure_logging, load_settings
from utils.units import from_natural, to_natural, unit_label

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

COMMON_KEYS = ("subcommand", "format", "output", "seed", "units")

CONVENTIONS = [
    "natural units hbar = c = 1",
    "evolution uses kinetic energy E0 = sqrt(m^2 + p^2) - m; rest phase absorbed",
    "eta(u) = 1 - sqrt(1 + u^2/m^2), tau = 1/m",
    "x_j = (j - n/2) dx, u_j = 2 pi j / L",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting with 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Shared argument helpers
# ---------------------------------------------------------------------------


def _nat(args: argparse.Namespace, value: float, quantity: str) -> float:
    return to_natural(value, quantity, args.units)


def _out(args: argparse.Namespace, value: float, quantity: str) -> float:
    return from_natural(value, quantity, args.units)


def _count(value: int, flag: str, minimum: int = 1) -> int:
    require(value >= minimum, f"{flag} must be >= {minimum}, got {value}")
    return value


def _positive(value: float, flag: str) -> float:
    require(math.isfinite(value) and value > 0, f"{flag} must be positive, got {value}")
    return value


def _cutoff(args: argparse.Namespace) -> spectrum.CutoffPolynomial:
    if getattr(args, "lambdas", None):
        return spectrum.CutoffPolynomial(*args.lambdas)
    if getattr(args, "roots", None):
        return spectrum.cutoff_from_roots(args.roots[0], args.roots[1], args.lambda3)
    return spectrum.CutoffPolynomial.zero()


def _add_cutoff_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--lambdas", type=float, nargs=4, metavar=("L0", "L1", "L2", "L3"))
    group.add_argument("--roots", type=float, nargs=2, metavar=("XPLUS", "XMINUS"))
    p.add_argument("--lambda3", type=float, default=1.0, help="overall scale when --roots is given")


def _exponent(args: argparse.Namespace) -> levy_core.LevyExponent:
    if getattr(args, "kind", "relativistic") == "gaussian":
        return levy_core.gaussian_exponent(args.beta, _nat(args, args.tau, "time"))
    return levy_core.relativistic_exponent(_nat(args, args.m, "mass"))


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_exponent(args: argparse.Namespace) -> ResultTable:
    m = _nat(args, args.m, "mass")
    u = np.linspace(0.0, _nat(args, _positive(args.umax, "--umax"), "wavenumber"), _count(args.n, "--n"))
    closed = levy_core.eta_relativistic(u, m)
    if not args.check_quadrature:
        rows = [(_out(args, ui, "wavenumber"), ci) for ui, ci in zip(u, closed)]
        return ResultTable(columns=("u", "eta_closed"), rows=rows)

    measured = levy_core.measure_exponent(levy_core.relativistic_density(m), tau=1.0 / m)
    estimate = levy_core.eta_from_measure(u, measured)
    diff = np.abs(np.asarray(estimate.value) - closed)
    rows = [
        (_out(args, ui, "wavenumber"), ci, qi, di)
        for ui, ci, qi, di in zip(u, closed, np.asarray(estimate.value), diff)
    ]
    summary = {"max_abs_diff": float(diff.max()), "quadrature_error": estimate.error, "panels": estimate.panels}
    logger.info("[cli] exponent check: max |diff| = %.3e", summary["max_abs_diff"])
    return ResultTable(columns=("u", "eta_closed", "eta_quad", "abs_diff"), rows=rows, summary=summary)


def _cmd_density(args: argparse.Namespace) -> ResultTable:
    m = _nat(args, args.m, "mass")
    require(args.xmax > _positive(args.xmin, "--xmin"), f"--xmax must exceed --xmin, got {args.xmax} <= {args.xmin}")
    x = np.geomspace(_nat(args, args.xmin, "length"), _nat(args, args.xmax, "length"), _count(args.n, "--n"))
    if args.dim == 3:
        values = levy_core.levy_density_3d(x, m)
        summary: dict[str, Any] = {}
    else:
        values = levy_core.levy_density_1d(x, m)
        report = levy_core.validate_levy_measure(levy_core.relativistic_density(m))
        summary = {
            "small_jump_mass": report.small_jump_mass,
            "tail_mass": report.tail_mass,
            "measure_ok": report.ok,
        }
    rows = [(_out(args, xi, "length"), wi) for xi, wi in zip(x, values)]
    return ResultTable(columns=("x", "W"), rows=rows, summary=summary)


def _grid(args: argparse.Namespace) -> propagation.Grid1D:
    return propagation.make_grid(args.n, _nat(args, args.length, "length"))


def _cmd_evolve(args: argparse.Namespace) -> ResultTable:
    exponent = _exponent(args)
    grid = _grid(args)
    state = propagation.gaussian_packet(
        grid,
        x0=_nat(args, args.x0, "length"),
        sigma=_nat(args, args.sigma, "length"),
        u0=_nat(args, args.u0, "wavenumber"),
    )
    dt = _nat(args, args.dt, "time")
    _count(args.every, "--every")
    snapshots = propagation.evolve_steps(state, dt, _count(args.steps, "--steps", 0), exponent)
    rows = []
    for k, snap in enumerate(snapshots):
        if k % args.every and k != args.steps:
            continue
        for xi, amp in zip(grid.x, snap.amplitudes):
            rows.append((_out(args, snap.time, "time"), _out(args, xi, "length"), amp.real, amp.imag, abs(amp) ** 2))
    drift = abs(propagation.norm(snapshots[-1]) - propagation.norm(state))
    return ResultTable(columns=("t", "x", "re", "im", "abs2"), rows=rows, summary={"norm_drift": drift})


def _cmd_transition(args: argparse.Namespace) -> ResultTable:
    exponent = _exponent(args)
    grid = _grid(args)
    dt = _nat(args, args.dt, "time")
    density = propagation.transition_density(exponent, dt, grid)
    summary: dict[str, Any] = {
        "correction_factor": density.correction_factor,
        "clipped_points": density.clipped_points,
        "edge_mass": density.edge_mass,
        "integral": density.integral(),
    }
    if _count(args.check_direct, "--check-direct", 0):
        idx = np.linspace(grid.n // 4, 3 * grid.n // 4, args.check_direct).astype(int)
        direct = propagation.transition_density_direct(exponent, dt, grid.x[idx])
        summary["max_direct_diff"] = float(np.max(np.abs(direct - density.values[idx])))
    rows = [(_out(args, xi, "length"), pi) for xi, pi in zip(grid.x, density.values)]
    return ResultTable(columns=("x", "p"), rows=rows, summary=summary)


def _cmd_simulate(args: argparse.Namespace) -> ResultTable:
    exponent = _exponent(args)
    config = JumpSimConfig(
        epsilon=_nat(args, args.epsilon, "length"),
        n_paths=args.paths,
        horizon=_nat(args, args.t, "time"),
        seed=args.seed,
        gaussian_compensation=not args.no_compensation,
    )
    ensemble = jump_sim.sample_increments(exponent, config)
    u = np.asarray([_nat(args, v, "wavenumber") for v in args.u])
    ecf = jump_sim.empirical_cf(ensemble, u)
    exact = jump_sim.reference_cf(exponent, config.horizon, u)
    var, var_err = jump_sim.empirical_variance(ensemble) if ensemble.n_paths > 1 else (float("nan"), float("nan"))
    rows = [
        (_out(args, ui, "wavenumber"), v.real, v.imag, sr, si, ex)
        for ui, v, sr, si, ex in zip(u, ecf.values, ecf.stderr_real, ecf.stderr_imag, exact)
    ]
    summary = {
        "mean": float(ensemble.increments.mean()),
        "variance": var,
        "variance_stderr": var_err,
        "intensity": ensemble.intensity,
        "jump_count": ensemble.jump_count_stats,
        "compensation_variance": ensemble.compensation_variance,
    }
    return ResultTable(columns=("u", "ecf_re", "ecf_im", "stderr_re", "stderr_im", "exact"), rows=rows, summary=summary)


def _cmd_spectrum(args: argparse.Namespace) -> ResultTable:
    if not (args.lambdas or args.roots):
        raise UsageError("spectrum needs --lambdas or --roots")
    cutoff = _cutoff(args)
    m = _nat(args, args.m, "mass")
    roots = spectrum.roots_from_cutoff(cutoff)
    masses = spectrum.mass_spectrum(m, cutoff)
    rows = [
        (
            r.label,
            r.value if r.accepted else complex(r.value),
            r.status,
            _out(args, m * float(r.value) ** 0.5, "mass") if r.accepted else float("nan"),
        )
        for r in roots.roots
    ]
    summary = {
        "lambdas": list(cutoff.coefficients),
        "discriminant": roots.discriminant,
        "roots": roots.values(),
        "masses": [_out(args, v, "mass") for v in masses.masses],
        "provenance": list(masses.provenance),
        "degenerate": masses.degenerate,
        "triple": roots.triple,
    }
    return ResultTable(columns=("root", "x", "status", "mass"), rows=rows, summary=summary)


def _cmd_propagator(args: argparse.Namespace) -> ResultTable:
    cutoff = _cutoff(args)
    m = _nat(args, args.m, "mass")
    rows = []
    for p2 in np.linspace(args.p2min, args.p2max, _count(args.n, "--n")):
        kg = loop_qft.kg_propagator(float(p2), m, cutoff, args.epsilon)
        dirac = loop_qft.dirac_propagator(float(p2), m, cutoff, args.epsilon, complex_branch=args.complex_branch)
        mass = complex(dirac.scalar_part)
        rows.append((float(p2), kg.real, kg.imag, mass.real, mass.imag, dirac.denominator.real, dirac.denominator.imag))
    return ResultTable(columns=("p2", "kg_re", "kg_im", "M_re", "M_im", "den_re", "den_im"), rows=rows)


def _cmd_powercount(args: argparse.Namespace) -> ResultTable:
    rows = []
    for d in range(_count(args.max_degree, "--max-degree", 0) + 1):
        count = loop_qft.superficial_degree(d)
        verdict = "convergent" if count.convergent else "divergent"
        rows.append((d, count.exponent_A, count.exponent_B, verdict, "+".join(count.failing)))
    return ResultTable(columns=("degree", "exponent_A", "exponent_B", "verdict", "failing"), rows=rows)


def _cmd_selfenergy(args: argparse.Namespace) -> ResultTable:
    cutoff = _cutoff(args)
    m = _nat(args, args.m, "mass")
    rows = []
    for radius in args.cutoff_radius:
        scheme = SelfEnergyScheme(
            cutoff_radius=_nat(args, radius, "mass"),
            polar=args.polar,
            n_polar=args.n_polar,
            complex_branch=args.complex_branch,
            tail_correction=not args.no_tail_correction,
        )
        se = loop_qft.self_energy_estimate(args.p2, m, cutoff, args.coupling, scheme)
        a, b, bc = complex(se.A_tilde), complex(se.B_tilde), complex(se.B_tilde_corrected)
        rows.append((radius, a.real, a.imag, b.real, b.imag, bc.real, bc.imag, se.stability))
    count = loop_qft.superficial_degree(cutoff.degree)
    summary = {
        "degree": cutoff.degree,
        "convergent": count.convergent,
        "normalization": SelfEnergyScheme().normalization,
        "convention": SelfEnergyScheme().convention,
    }
    columns = ("cutoff_radius", "A_re", "A_im", "B_re", "B_im", "B_corrected_re", "B_corrected_im", "stability")
    return ResultTable(columns=columns, rows=rows, summary=summary)


def _cmd_poles(args: argparse.Namespace) -> ResultTable:
    cutoff = _cutoff(args)
    m = _nat(args, args.m, "mass")
    poles = loop_qft.pole_search(m, cutoff, args.A, _nat(args, args.B, "mass"), tuple(args.interval))
    rows = [(p.x, p.p2, p.residue_sign, p.accepted, p.flag) for p in poles]
    summary = {"accepted": [p.x for p in poles if p.accepted]}
    return ResultTable(columns=("x", "p2", "residue_sign", "accepted", "flag"), rows=rows, summary=summary)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default=None, help="output file ('-' for stdout)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--units", choices=("natural", "si"), default="natural")

    parser = _Parser(
        prog="levylab",
        description="Lévy–Schrödinger numerical laboratory",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Exit codes:" + __doc__.split("Exit codes:")[1],
    )
    parser.add_argument("--version", action="version", version=f"levylab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name: str, handler: Callable[[argparse.Namespace], ResultTable], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    def mass_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--m", type=float, default=1.0)

    def kind_args(p: argparse.ArgumentParser) -> None:
        mass_arg(p)
        p.add_argument("--kind", choices=("relativistic", "gaussian"), default="relativistic")
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--tau", type=float, default=1.0)

    def grid_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int, default=256)
        p.add_argument("--length", type=float, default=40.0)

    p = add("exponent", _cmd_exponent, "eta(u) curves")
    mass_arg(p)
    p.add_argument("--umax", type=float, default=10.0)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--check-quadrature", action="store_true")

    p = add("density", _cmd_density, "Lévy density tables")
    mass_arg(p)
    p.add_argument("--dim", type=int, choices=(1, 3), default=1)
    p.add_argument("--xmin", type=float, default=0.01)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--n", type=int, default=100)

    p = add("evolve", _cmd_evolve, "wave-packet snapshots")
    kind_args(p)
    grid_args(p)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--u0", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--every", type=int, default=5)

    p = add("transition", _cmd_transition, "transition densities")
    kind_args(p)
    grid_args(p)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--check-direct", type=int, default=0, metavar="K")

    p = add("simulate", _cmd_simulate, "Monte-Carlo ensembles")
    mass_arg(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--no-compensation", action="store_true")
    p.add_argument("--u", type=float, nargs="+", default=[0.5, 1.0, 2.0])

    p = add("spectrum", _cmd_spectrum, "cutoff, roots and masses")
    mass_arg(p)
    _add_cutoff_args(p)

    p = add("propagator", _cmd_propagator, "propagator scans")
    mass_arg(p)
    _add_cutoff_args(p)
    p.add_argument("--p2min", type=float, default=-4.0)
    p.add_argument("--p2max", type=float, default=4.0)
    p.add_argument("--n", type=int, default=81)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--complex-branch", action="store_true")

    p = add("powercount", _cmd_powercount, "superficial degree table")
    p.add_argument("--max-degree", type=int, default=4)

    p = add("selfenergy", _cmd_selfenergy, "Euclidean self-energy estimates")
    mass_arg(p)
    _add_cutoff_args(p)
    p.add_argument("--p2", type=float, default=-1.0)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--cutoff-radius", type=float, nargs="+", default=[50.0])
    p.add_argument("--polar", choices=("quadrature", "analytic"), default="quadrature")
    p.add_argument("--n-polar", type=int, default=96)
    p.add_argument("--complex-branch", action="store_true")
    p.add_argument("--no-tail-correction", action="store_true")

    p = add("poles", _cmd_poles, "poles of the resummed propagator")
    mass_arg(p)
    _add_cutoff_args(p)
    p.add_argument("--A", type=float, default=0.0)
    p.add_argument("--B", type=float, default=0.0)
    p.add_argument("--interval", type=float, nargs=2, default=[0.0, 20.0])

    return parser


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _metadata(config: RunConfig) -> dict[str, Any]:
    return {
        "tool": "levylab",
        "version": __version__,
        "seed": config.seed,
        "config": config.model_dump(),
        "conventions": CONVENTIONS,
        "units": {q: unit_label(q, config.units) for q in ("mass", "length", "time", "wavenumber")},
    }


def argv_from_config(config: RunConfig | dict[str, Any]) -> list[str]:
    """Rebuild the command line from a RunConfig echoed in an output header."""
    if not isinstance(config, RunConfig):
        config = RunConfig.model_validate(config)
    argv = [config.subcommand]
    for dest, value in config.params.items():
        flag = "--" + dest.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv.extend([flag, *(str(v) for v in value)])
        else:
            argv.extend([flag, str(value)])
    argv.extend(["--format", config.format, "--seed", str(config.seed), "--units", config.units])
    if config.output is not None:
        argv.extend(["--output", config.output])
    return argv


def _target(config: RunConfig, output_dir: Path) -> Optional[Path]:
    if config.output == "-":
        return None
    if config.output:
        return Path(config.output)
    return output_dir / f"{config.subcommand}.{config.format}"


def run(argv: Optional[Sequence[str]] = None) -> int:
    settings = load_settings()
    configure_logging(settings.log_level)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"levylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    if args.seed is None:
        args.seed = settings.default_seed

    try:
        params = {k: v for k, v in vars(args).items() if k not in COMMON_KEYS and k != "handler"}
        config = RunConfig(
            subcommand=args.subcommand,
            params=params,
            output=args.output,
            format=args.format,
            seed=args.seed,
            units=args.units,
        )
        table = args.handler(args)
    except UsageError as exc:
        print(f"levylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        logger.error("[cli] invalid parameters: %s", exc)
        return EXIT_VALIDATION
    except LevyLabError as exc:
        logger.error("[cli] %s failed: %s", args.subcommand, exc)
        return EXIT_VALIDATION if exc.is_validation else EXIT_NUMERICAL

    text = render(table, _metadata(config), config.format)
    target = _target(config, settings.output_dir)
    if target is None:
        sys.stdout.write(text)
    else:
        write_atomic(target, text)
    return EXIT_OK
