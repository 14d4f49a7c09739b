"""Tests of the report files of a sweep."""

import json
from pathlib import Path

import pytest

from ekman_slab.errors import ReportError
from ekman_slab.models import FitResult, LambdaRegime, SweepReport, SweepRow, Verdict, VerdictStatus
from ekman_slab.reporting import emit_report, load_report, quantity_names, read_quantity


@pytest.fixture
def report() -> SweepReport:
    """Provide a two-run report with one fit and one verdict."""
    rows = [
        SweepRow(n=2, epsilon=0.5, ell=0.5, alpha=0.5, quantities={"vertical_velocity": 0.2, "columnarity": 0.1}),
        SweepRow(n=4, epsilon=0.25, ell=0.25, alpha=0.25, quantities={"vertical_velocity": 0.1, "limit_error": 0.05}),
    ]
    return SweepReport(
        lambda_regime=LambdaRegime.FINITE,
        lambda_limit=1.0,
        rows=rows,
        fits={"vertical_velocity": FitResult(exponent=1.0, constant=0.4, residual=0.0, half_width=0.0, points=3)},
        verdicts={"energy_inequality": Verdict(status=VerdictStatus.PASS, detail="min_slack=1e-3")},
        steps=12,
    )


def test_quantity_names_in_first_seen_order(report: SweepReport) -> None:
    """Every measured quantity appears once."""
    assert quantity_names(report) == ["vertical_velocity", "columnarity", "limit_error"]


def test_emit_and_reload(report: SweepReport, tmp_path: Path) -> None:
    """The emitted files describe the report and reload to an equal model."""
    destination = tmp_path / "report"
    written = emit_report(report, destination)
    names = {path.name for path in written}
    assert names == {
        "summary.txt",
        "vertical_velocity.csv",
        "columnarity.csv",
        "limit_error.csv",
        "verdicts.json",
        "report.json",
    }
    assert load_report(destination) == report
    summary = (destination / "summary.txt").read_text(encoding="utf-8")
    assert "lambda_regime = finite" in summary
    assert "verdict.energy_inequality = pass" in summary
    verdicts = json.loads((destination / "verdicts.json").read_text(encoding="utf-8"))
    assert verdicts["energy_inequality"]["status"] == "pass"


def test_quantity_files(report: SweepReport, tmp_path: Path) -> None:
    """Each quantity file has the header ell,epsilon,value and one line per run that measured it."""
    emit_report(report, tmp_path)
    assert (tmp_path / "vertical_velocity.csv").read_text(encoding="utf-8").splitlines()[0] == "ell,epsilon,value"
    assert read_quantity(tmp_path / "vertical_velocity.csv") == [(0.5, 0.5, 0.2), (0.25, 0.25, 0.1)]
    assert read_quantity(tmp_path / "limit_error.csv") == [(0.25, 0.25, 0.05)]


def test_foreign_csv_is_refused(tmp_path: Path) -> None:
    """A CSV with another header is not a quantity file."""
    path = tmp_path / "other.csv"
    path.write_text("t,value\n0,1\n", encoding="utf-8")
    with pytest.raises(ReportError):
        read_quantity(path)


def test_empty_sweep_and_missing_report(tmp_path: Path) -> None:
    """Nothing is emitted for an empty sweep and nothing loads from an empty directory."""
    with pytest.raises(ReportError):
        emit_report(SweepReport(lambda_regime=LambdaRegime.ZERO, rows=[]), tmp_path)
    with pytest.raises(ReportError):
        load_report(tmp_path / "missing")
