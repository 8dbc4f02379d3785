"""
tests/levy/test_cli.py
----------------------
End-to-end runs of the levylab front end through ``run(argv)``: output
layout, determinism, exit codes and environment-driven defaults.
"""

from __future__ import annotations

import json

import pytest

from routes.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, argv_from_config, run
from utils.output import read_metadata

WORKED = ["--lambdas", "-37", "50", "-14", "1"]


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    monkeypatch.delenv("LEVYLAB_DEFAULT_SEED", raising=False)
    monkeypatch.setenv("LEVYLAB_OUTPUT_DIR", str(tmp_path))


def _json_stdout(capsys, argv: list[str]) -> dict:
    assert run([*argv, "--format", "json", "--output", "-"]) == EXIT_OK
    return json.loads(capsys.readouterr().out)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


class TestSpectrumCommand:
    def test_worked_cutoff_masses(self, capsys) -> None:
        payload = _json_stdout(capsys, ["spectrum", *WORKED])
        assert payload["summary"]["masses"] == pytest.approx([1.0, 2.0, 3.0], abs=1e-12)
        assert payload["summary"]["lambdas"] == [-37.0, 50.0, -14.0, 1.0]
        assert payload["summary"]["discriminant"] == 25.0
        assert payload["columns"] == ["root", "x", "status", "mass"]

    def test_roots_input_rebuilds_cutoff(self, capsys) -> None:
        payload = _json_stdout(capsys, ["spectrum", "--roots", "4", "9", "--lambda3", "1", "--m", "2"])
        assert payload["summary"]["lambdas"] == [-37.0, 50.0, -14.0, 1.0]
        assert payload["summary"]["masses"] == pytest.approx([2.0, 4.0, 6.0], abs=1e-12)

    def test_complex_roots_are_reported(self, capsys) -> None:
        payload = _json_stdout(capsys, ["spectrum", "--lambdas", "-2", "1", "0", "1"])
        statuses = [row[2] for row in payload["rows"]]
        assert statuses.count("rejected_complex") == 2
        assert payload["summary"]["masses"] == [1.0]

    def test_missing_cutoff_is_a_usage_error(self) -> None:
        assert run(["spectrum"]) == EXIT_USAGE


# ---------------------------------------------------------------------------
# Other subcommands
# ---------------------------------------------------------------------------


def test_exponent_quadrature_check(capsys) -> None:
    payload = _json_stdout(capsys, ["exponent", "--m", "1", "--umax", "10", "--n", "64", "--check-quadrature"])
    assert payload["summary"]["max_abs_diff"] <= 1e-6
    assert len(payload["rows"]) == 64


def test_powercount_csv_layout(tmp_path) -> None:
    assert run(["powercount", "--max-degree", "3"]) == EXIT_OK
    lines = (tmp_path / "powercount.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "degree,exponent_A,exponent_B,verdict,failing"
    assert lines[-1] == "3,-4,-2,convergent,"


def test_poles_command(capsys) -> None:
    payload = _json_stdout(capsys, ["poles", *WORKED, "--interval", "0.5", "12"])
    assert payload["summary"]["accepted"] == pytest.approx([1.0, 4.0, 9.0], abs=1e-10)


def test_selfenergy_reports_raw_and_corrected_values(capsys) -> None:
    argv = ["selfenergy", *WORKED, "--complex-branch", "--cutoff-radius", "25"]
    with_tail = _json_stdout(capsys, argv)
    without = _json_stdout(capsys, [*argv, "--no-tail-correction"])
    assert with_tail["columns"][-3:] == ["B_corrected_re", "B_corrected_im", "stability"]
    row, raw = with_tail["rows"][0], without["rows"][0]
    # same truncated integrals and diagnostic; only the corrected columns differ
    assert row[1:5] == raw[1:5] and row[-1] == raw[-1]
    assert raw[5] == raw[3]
    assert row[5] != row[3]


def test_si_units_are_labelled(capsys) -> None:
    payload = _json_stdout(capsys, ["density", "--dim", "3", "--n", "4", "--units", "si"])
    assert payload["metadata"]["units"]["length"] == "fm"
    assert payload["rows"][0][0] == pytest.approx(0.01)


# ---------------------------------------------------------------------------
# Determinism and file handling
# ---------------------------------------------------------------------------


def test_simulate_is_byte_identical_across_runs(tmp_path) -> None:
    target = tmp_path / "sim.csv"
    argv = ["simulate", "--paths", "200", "--epsilon", "0.05", "--seed", "5", "--output", str(target)]
    assert run(argv) == EXIT_OK
    first = target.read_bytes()
    assert run(argv) == EXIT_OK
    assert target.read_bytes() == first


def test_default_seed_from_environment(monkeypatch, tmp_path) -> None:
    monkeypatch.setenv("LEVYLAB_DEFAULT_SEED", "42")
    assert run(["simulate", "--paths", "10", "--epsilon", "0.05"]) == EXIT_OK
    assert read_metadata(tmp_path / "simulate.csv")["seed"] == 42


def test_write_leaves_no_temporary_files(tmp_path) -> None:
    assert run(["powercount", "--output", str(tmp_path / "table.json"), "--format", "json"]) == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == ["table.json"]


def test_failed_run_writes_nothing(tmp_path) -> None:
    target = tmp_path / "transition.csv"
    assert run(["transition", "--n", "16", "--output", str(target)]) == EXIT_NUMERICAL
    assert not target.exists()


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv, code",
    [
        (["exponent", "--m", "-1"], EXIT_VALIDATION),
        (["simulate", "--paths", "0"], EXIT_VALIDATION),
        (["propagator", *WORKED, "--p2min", "0", "--p2max", "0", "--n", "1"], EXIT_VALIDATION),
        (["transition", "--n", "16"], EXIT_NUMERICAL),
        (["simulate", "--epsilon", "1e-9", "--paths", "1"], EXIT_NUMERICAL),
        (["nonsense"], EXIT_USAGE),
        (["evolve", "--every", "0"], EXIT_VALIDATION),
        (["evolve", "--steps", "-1"], EXIT_VALIDATION),
        (["density", "--xmin", "0"], EXIT_VALIDATION),
        (["density", "--xmin", "2", "--xmax", "1"], EXIT_VALIDATION),
        (["exponent", "--n", "0", "--check-quadrature"], EXIT_VALIDATION),
        (["exponent", "--umax", "nan"], EXIT_VALIDATION),
        (["propagator", "--n", "0"], EXIT_VALIDATION),
        (["powercount", "--max-degree", "-1"], EXIT_VALIDATION),
        (["powercount", "--bogus"], EXIT_USAGE),
        ([], EXIT_USAGE),
    ],
)
def test_exit_codes(argv: list[str], code: int) -> None:
    assert run(argv) == code


@pytest.mark.parametrize("flag", ["--help", "--version"])
def test_informational_flags_return_success(capsys, flag: str) -> None:
    assert run([flag]) == EXIT_OK
    assert "levylab" in capsys.readouterr().out


def test_subcommand_help_returns_success(capsys) -> None:
    assert run(["selfenergy", "--help"]) == EXIT_OK
    assert "--cutoff-radius" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# Reproduction from the echoed configuration
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--roots", "4", "9", "--lambda3", "-2", "--m", "1.5"],
        ["simulate", "--paths", "50", "--epsilon", "0.05", "--u", "0.5", "1.5", "--no-compensation", "--seed", "9"],
        ["exponent", "--umax", "4", "--n", "8", "--check-quadrature"],
        ["density", "--dim", "3", "--n", "4", "--units", "si"],
        ["poles", *WORKED, "--A", "0.1", "--interval", "0.5", "12"],
    ],
)
def test_rerun_from_echoed_config_is_byte_identical(tmp_path, argv: list[str]) -> None:
    target = tmp_path / "first.json"
    assert run([*argv, "--format", "json", "--output", str(target)]) == EXIT_OK
    first = target.read_bytes()
    rebuilt = argv_from_config(read_metadata(target)["config"])
    target.unlink()
    assert run(rebuilt) == EXIT_OK
    assert target.read_bytes() == first
