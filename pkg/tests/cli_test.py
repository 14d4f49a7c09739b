"""Tests to verify the CLI functionality of the Ekman slab laboratory."""

from pathlib import Path

import pytest
from typer.testing import CliRunner

from ekman_slab import __version__
from ekman_slab.cli import cli
from ekman_slab.models import LambdaRegime, SweepReport, SweepRow, Verdict, VerdictStatus
from ekman_slab.reporting import emit_report

EPILOG = "Ekman slab laboratory"

TINY_CONFIG = """\
geometry:
  nh: 8
  nv: 5
regime:
  n_min: 2
  n_max: 3
"""


@pytest.fixture
def runner() -> CliRunner:
    """Provide a CLI test runner fixture."""
    return CliRunner()


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    """Provide a YAML configuration of a tiny sequence."""
    path = tmp_path / "run.yaml"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return path


def test_cli_epilog(runner: CliRunner) -> None:
    """Check epilog shown."""
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    assert EPILOG in result.output
    assert __version__ in result.output


def test_cli_info(runner: CliRunner) -> None:
    """Check the effective settings are printed."""
    result = runner.invoke(cli, ["info"])
    assert result.exit_code == 0
    assert '"log_level"' in result.output


def test_cli_check_data(runner: CliRunner, config_file: Path) -> None:
    """Check every member of the sequence is reported as admissible."""
    result = runner.invoke(cli, ["check-data", str(config_file)])
    assert result.exit_code == 0
    assert "admissibility" in result.output
    assert "yes" in result.output


def test_cli_check_data_fails_on_rejected_data(runner: CliRunner, tmp_path: Path) -> None:
    """Check rejected data exit with code 1 and name the hypothesis."""
    path = tmp_path / "rejected.yaml"
    path.write_text(
        "geometry:\n  nh: 8\n  nv: 5\nregime:\n  n_min: 2\n  n_max: 2\ndata:\n  energy_cap: 1.0e-6\n", encoding="utf-8"
    )
    result = runner.invoke(cli, ["check-data", str(path)])
    assert result.exit_code == 1
    assert "energy_bound" in result.output


def test_cli_fails_on_invalid_config(runner: CliRunner, tmp_path: Path) -> None:
    """Check an invalid configuration is reported instead of raised."""
    path = tmp_path / "invalid.yaml"
    path.write_text("geometry:\n  nv: 6\n", encoding="utf-8")
    result = runner.invoke(cli, ["check-data", str(path)])
    assert result.exit_code == 1
    assert "Error" in result.output


def test_cli_report(runner: CliRunner, tmp_path: Path) -> None:
    """Check an emitted report is printed with its verdicts."""
    report = SweepReport(
        lambda_regime=LambdaRegime.ZERO,
        lambda_limit=0.0,
        rows=[SweepRow(n=2, epsilon=0.5, ell=0.5, alpha=0.0, quantities={"mean_velocity": 0.1})],
        verdicts={"energy_inequality": Verdict(status=VerdictStatus.PASS, detail="min_slack=0")},
    )
    emit_report(report, tmp_path / "report")
    result = runner.invoke(cli, ["report", str(tmp_path / "report")])
    assert result.exit_code == 0
    assert "energy_inequality" in result.output
    assert "pass" in result.output


def test_cli_report_missing(runner: CliRunner, tmp_path: Path) -> None:
    """Check a directory without a report exits with code 1."""
    result = runner.invoke(cli, ["report", str(tmp_path)])
    assert result.exit_code == 1
