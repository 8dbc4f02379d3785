"""Desk-scale acceptance harness for levylab.

Runs every acceptance check end to end against the library (and, for the
determinism check, the CLI), prints a PASS/FAIL line per assertion and writes
an evidence file.

Usage:
  python -m scripts.acceptance_harness
  python -m scripts.acceptance_harness --quick          # 1e4 Monte-Carlo paths
  python -m scripts.acceptance_harness --only 1 2 6     # subset by number

Checks:
  1. Lévy–Khintchin identity, 64 points, m in {0.5, 1, 2}, within 1e-6
  2. Dispersion probe at 8 dual-grid momenta within 1e-6
  3. 100-step norm drift <= 1e-8, step composition within 1e-10
  4. FFT transition density vs direct quadrature at 16 points (1e-6);
     Gaussian kind vs the normal density (1e-8)
  5. Monte-Carlo CF within 3 stderr at >= 7 of 8 momenta; variance within 4 stderr
  6. Cutoff/roots/masses round trip on 1000 random instances; worked (4, 9) example
  7. Power counting table; log growth for f = 0; <= 1e-3 stability of the
     truncated cubic integrals at Λ = 2000
  8. Pole search with Ã = B̃ = 0 matches the closed-form roots on 100 cutoffs (1e-9)
  9. Two identical simulate runs are byte-identical

Evidence:
  $LEVYLAB_OUTPUT_DIR/evidence/acceptance.json

Exit codes:
  0   -- all assertions passed
  5   -- one or more assertions failed
  99  -- unhandled exception
  130 -- interrupted
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from models.levy import JumpSimConfig, SelfEnergyScheme  # noqa: E402
from routes.cli import EXIT_OK, run as cli_run  # noqa: E402
from services.levy import jump_sim, levy_core, loop_qft, propagation, spectrum  # noqa: E402
from services.levy.errors import BranchError  # noqa: E402
from utils.output import write_atomic  # noqa: E402
from utils.settings import load_settings  # noqa: E402

logger = logging.getLogger("acceptance_harness")

Assertion = dict[str, Any]

WORKED = spectrum.CutoffPolynomial(-37.0, 50.0, -14.0, 1.0)
ROUND_TRIP_REL = 1e-11


def _check(label: str, result: bool, **detail: Any) -> Assertion:
    return {"check": label, "result": bool(result), **detail}


def _random_cutoffs(rng: np.random.Generator, count: int):
    produced = 0
    while produced < count:
        x_plus, x_minus = rng.uniform(0.2, 5.0, size=2)
        if min(abs(x_plus - x_minus), abs(x_plus - 1.0), abs(x_minus - 1.0)) < 0.5:
            continue
        lambda3 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 3.0)
        produced += 1
        yield float(x_plus), float(x_minus), spectrum.cutoff_from_roots(x_plus, x_minus, lambda3)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_levy_khintchin(args: argparse.Namespace) -> list[Assertion]:
    u = np.linspace(-10.0, 10.0, 64)
    out = []
    for m in (0.5, 1.0, 2.0):
        estimate = levy_core.eta_from_measure(u, levy_core.relativistic_exponent(m))
        diff = float(np.max(np.abs(estimate.value - levy_core.eta_relativistic(u, m))))
        out.append(_check(f"Lévy–Khintchin identity m={m}", diff <= 1e-6, max_abs_diff=diff))
    return out


def check_dispersion_probe(args: argparse.Namespace) -> list[Assertion]:
    grid = propagation.make_grid(64, 8.0 * math.pi)
    exponent = levy_core.relativistic_exponent(1.0)
    worst = 0.0
    for u in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0):
        measured = propagation.dispersion_probe(exponent, u, 0.1, grid)
        worst = max(worst, abs(measured - float(levy_core.dispersion_energy(u, 1.0))))
    return [_check("dispersion probe at 8 momenta", worst <= 1e-6, max_abs_diff=worst)]


def check_unitarity(args: argparse.Namespace) -> list[Assertion]:
    grid = propagation.make_grid(256, 40.0)
    exponent = levy_core.relativistic_exponent(1.0)
    snapshots = propagation.evolve_steps(propagation.gaussian_packet(grid, u0=2.0), 0.05, 100, exponent)
    drift = abs(propagation.norm(snapshots[-1]) - 1.0)

    state = propagation.gaussian_packet(grid, x0=-2.0, u0=1.0)
    two = propagation.evolve(propagation.evolve(state, 0.4, exponent), 0.6, exponent)
    one = propagation.evolve(state, 1.0, exponent)
    gap = float(np.max(np.abs(two.amplitudes - one.amplitudes)))
    return [
        _check("100-step norm drift", drift <= 1e-8, drift=drift),
        _check("step composition", gap <= 1e-10, sup_norm=gap),
    ]


def check_transition_density(args: argparse.Namespace) -> list[Assertion]:
    from scipy import stats

    grid = propagation.make_grid(256, 40.0)
    exponent = levy_core.relativistic_exponent(1.0)
    density = propagation.transition_density(exponent, 1.0, grid)
    direct = propagation.transition_density_direct(exponent, 1.0, grid.x[::16])
    gap = float(np.max(np.abs(density.values[::16] - direct)))

    normal = propagation.transition_density(levy_core.gaussian_exponent(1.0), 1.0, grid)
    normal_gap = float(np.max(np.abs(normal.values - stats.norm.pdf(grid.x))))
    return [
        _check("FFT vs direct quadrature at 16 points", gap <= 1e-6, max_abs_diff=gap),
        _check("Gaussian kind vs normal density", normal_gap <= 1e-8, max_abs_diff=normal_gap),
    ]


def check_monte_carlo(args: argparse.Namespace) -> list[Assertion]:
    exponent = levy_core.relativistic_exponent(1.0)
    n_paths = 10_000 if args.quick else 100_000
    ensemble = jump_sim.sample_increments(exponent, JumpSimConfig(epsilon=1e-3, n_paths=n_paths, seed=args.seed))
    u = np.linspace(0.25, 2.0, 8)
    estimate = jump_sim.empirical_cf(ensemble, u)
    expected = jump_sim.reference_cf(exponent, 1.0, u)
    within = int(np.sum(np.abs(estimate.values.real - expected) <= 3.0 * estimate.stderr_real))

    var, stderr = jump_sim.empirical_variance(ensemble)
    reference = jump_sim.reference_variance(exponent, 1.0)
    return [
        _check(f"empirical CF within 3 stderr ({n_paths} paths)", within >= 7, within=within, of=8),
        _check("empirical variance within 4 stderr", abs(var - reference) <= 4.0 * stderr,
               variance=var, reference=reference, stderr=stderr),
    ]


def check_spectrum_round_trip(args: argparse.Namespace) -> list[Assertion]:
    rng = np.random.default_rng(args.seed)
    failures = 0
    for x_plus, x_minus, cutoff in _random_cutoffs(rng, 1000):
        expected = np.sort([1.0, x_plus, x_minus])
        roots = np.array(spectrum.roots_from_cutoff(cutoff).values())
        masses = np.array(spectrum.mass_spectrum(1.0, cutoff).masses)
        if roots.shape != (3,) or not np.allclose(roots, expected, rtol=ROUND_TRIP_REL, atol=0.0):
            failures += 1
        elif not np.allclose(masses, np.sqrt(expected), rtol=ROUND_TRIP_REL, atol=0.0):
            failures += 1

    rebuilt = spectrum.cutoff_from_roots(4.0, 9.0, 1.0)
    worked = spectrum.mass_spectrum(1.0, rebuilt)
    worked_ok = (
        rebuilt == WORKED
        and spectrum.roots_from_cutoff(rebuilt).discriminant == 25.0
        and np.allclose(worked.masses, (1.0, 2.0, 3.0), atol=1e-12)
    )
    return [
        _check("round trip on 1000 random cutoffs", failures == 0, failures=failures),
        _check("worked (4, 9) cutoff gives λ=(−37, 50, −14, 1), Δ=25, masses (1, 2, 3)", worked_ok),
    ]


def check_finiteness(args: argparse.Namespace) -> list[Assertion]:
    table_ok = all(not loop_qft.superficial_degree(d).convergent for d in (0, 1, 2))
    table_ok = table_ok and loop_qft.superficial_degree(3).convergent

    zero = spectrum.CutoffPolynomial.zero()
    b = [
        loop_qft.self_energy_estimate(-1.0, 1.0, zero, 1.0, SelfEnergyScheme(cutoff_radius=r)).B_tilde
        for r in (10.0, 20.0, 40.0)
    ]
    first, second = b[1].real - b[0].real, b[2].real - b[1].real
    log_growth = first > 0 and abs(second - first) <= 0.05 * abs(first)

    try:
        loop_qft.self_energy_estimate(-1.0, 1.0, WORKED, 1.0)
        branch_guarded = False
    except BranchError:
        branch_guarded = True
    cubic = loop_qft.self_energy_estimate(
        -1.0, 1.0, WORKED, 1.0, SelfEnergyScheme(cutoff_radius=2000.0, complex_branch=True, tail_correction=False)
    )
    return [
        _check("power count divergent for d<3, convergent for d=3", table_ok),
        _check("f=0 self-energy grows logarithmically", log_growth, increments=[first, second]),
        _check("cubic cutoff refuses the real branch", branch_guarded),
        _check("cubic cutoff stable under Λ doubling at Λ=2000", cubic.stability <= 1e-3, stability=cubic.stability),
    ]


def check_pole_equivalence(args: argparse.Namespace) -> list[Assertion]:
    rng = np.random.default_rng(args.seed + 1)
    worst = 0.0
    mismatched = 0
    for _, _, cutoff in _random_cutoffs(rng, 100):
        poles = [p.x for p in loop_qft.pole_search(1.0, cutoff, 0.0, 0.0, (0.05, 6.0))]
        roots = spectrum.roots_from_cutoff(cutoff).values()
        if len(poles) != len(roots):
            mismatched += 1
            continue
        worst = max(worst, float(np.max(np.abs(np.array(poles) - np.array(roots)))))
    return [_check("free poles match classical roots on 100 cutoffs", mismatched == 0 and worst <= 1e-9,
                   mismatched=mismatched, max_abs_diff=worst)]


def check_determinism(args: argparse.Namespace) -> list[Assertion]:
    # same target both times: the echoed config includes the output path
    target = load_settings().output_dir / "evidence" / "determinism.csv"
    digests = []
    for _ in range(2):
        code = cli_run(["simulate", "--paths", "500", "--epsilon", "0.01", "--seed", str(args.seed),
                        "--output", str(target)])
        if code != EXIT_OK:
            return [_check("simulate runs succeed", False, exit_code=code)]
        digests.append(target.read_bytes())
    target.unlink()
    return [_check("identical seeds give byte-identical simulate output", digests[0] == digests[1])]


CHECKS: dict[int, tuple[str, Callable[[argparse.Namespace], list[Assertion]]]] = {
    1: ("levy-khintchin", check_levy_khintchin),
    2: ("dispersion-probe", check_dispersion_probe),
    3: ("unitarity", check_unitarity),
    4: ("transition-density", check_transition_density),
    5: ("monte-carlo", check_monte_carlo),
    6: ("spectrum-round-trip", check_spectrum_round_trip),
    7: ("finiteness", check_finiteness),
    8: ("pole-equivalence", check_pole_equivalence),
    9: ("determinism", check_determinism),
}


# ---------------------------------------------------------------------------
# Evidence
# ---------------------------------------------------------------------------


def _write_evidence(args: argparse.Namespace, status: str, sections: list[dict[str, Any]]) -> Path:
    target = load_settings().output_dir / "evidence" / "acceptance.json"
    payload = {
        "schema_version": "levylab-acceptance-v1",
        "status": status,
        "seed": args.seed,
        "quick": args.quick,
        "sections": sections,
    }
    write_atomic(target, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, default=float) + "\n")
    print(f"[acceptance_harness] evidence written: {target}")
    return target


def run_checks(args: argparse.Namespace) -> int:
    selected = args.only or sorted(CHECKS)
    sections: list[dict[str, Any]] = []
    for number in selected:
        name, check = CHECKS[number]
        started = time.monotonic()
        assertions = check(args)
        elapsed = time.monotonic() - started
        sections.append({"number": number, "name": name, "duration_sec": round(elapsed, 2), "assertions": assertions})
        logger.info("[acceptance_harness] %d %s done in %.1fs", number, name, elapsed)

    all_passed = all(a["result"] for s in sections for a in s["assertions"])
    status = "PASSED" if all_passed else "FAILED"
    print(f"\n[acceptance_harness] acceptance {status}")
    for section in sections:
        for a in section["assertions"]:
            icon = "PASS" if a["result"] else "FAIL"
            print(f"  [{icon}] {section['number']}. {a['check']}")

    _write_evidence(args, status, sections)
    return 0 if all_passed else 5


def parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(
        description="levylab acceptance harness.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    p.add_argument("--quick", action="store_true", help="Use 1e4 instead of 1e5 Monte-Carlo paths.")
    p.add_argument("--seed", type=int, default=2024, help="Seed for sampling and random cutoffs.")
    p.add_argument("--only", type=int, nargs="+", choices=sorted(CHECKS), help="Run only these checks.")
    return p.parse_args()


def main() -> int:
    settings = load_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="[%(asctime)s] %(levelname)s %(message)s",
        datefmt="%H:%M:%S",
    )
    args = parse_args()
    try:
        return run_checks(args)
    except KeyboardInterrupt:
        print("\n[acceptance_harness] interrupted")
        return 130
    except Exception:
        logging.exception("[acceptance_harness] unhandled exception")
        return 99


if __name__ == "__main__":
    raise SystemExit(main())
