"""Report files of a sweep."""

from __future__ import annotations

import csv
import json
import logging
from typing import TYPE_CHECKING

from .errors import ReportError
from .models import SweepReport

if TYPE_CHECKING:
    from pathlib import Path

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.txt"
VERDICTS_FILE = "verdicts.json"
REPORT_FILE = "report.json"
QUANTITY_HEADER = ("ell", "epsilon", "value")


def quantity_names(report: SweepReport) -> list[str]:
    """Names of all quantities measured in the sweep, in first-seen order.

    Returns:
        list[str]: The names.
    """
    names: list[str] = []
    for row in report.rows:
        names.extend(name for name in row.quantities if name not in names)
    return names


def _summary_lines(report: SweepReport) -> list[str]:
    lines = [
        f"lambda_regime = {report.lambda_regime}",
        f"lambda_limit = {report.lambda_limit}",
        f"runs = {len(report.rows)}",
        f"steps = {report.steps}",
    ]
    for name, fit in report.fits.items():
        lines.append(f"fit.{name}.exponent = {fit.exponent:.6g}")
        lines.append(f"fit.{name}.half_width = {fit.half_width:.6g}")
        lines.append(f"fit.{name}.residual = {fit.residual:.6g}")
    for name, constant in report.constants.items():
        lines.append(f"constant.{name}.min = {constant.minimum:.6g}")
        lines.append(f"constant.{name}.max = {constant.maximum:.6g}")
    lines.extend(f"verdict.{name} = {verdict.status}" for name, verdict in report.verdicts.items())
    return lines


def emit_report(report: SweepReport, destination: Path) -> list[Path]:
    """Write ``summary.txt``, one ``<quantity>.csv`` per quantity, ``verdicts.json`` and ``report.json``.

    Args:
        report: The sweep report.
        destination: Directory to write to; created when missing.

    Returns:
        list[Path]: The written files.

    Raises:
        ReportError: For a sweep without runs.
    """
    if not report.rows:
        msg = "refusing to emit the report of an empty sweep"
        raise ReportError(msg)
    destination.mkdir(parents=True, exist_ok=True)
    written = []

    summary = destination / SUMMARY_FILE
    summary.write_text("\n".join(_summary_lines(report)) + "\n", encoding="utf-8")
    written.append(summary)

    for name in quantity_names(report):
        path = destination / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream)
            writer.writerow(QUANTITY_HEADER)
            writer.writerows(
                (repr(row.ell), repr(row.epsilon), repr(row.quantities[name]))
                for row in report.rows
                if name in row.quantities
            )
        written.append(path)

    verdicts = destination / VERDICTS_FILE
    payload = {name: verdict.model_dump(mode="json") for name, verdict in report.verdicts.items()}
    verdicts.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    written.append(verdicts)

    full = destination / REPORT_FILE
    full.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    written.append(full)
    logger.info("report written directory=%s files=%d", destination, len(written))
    return written


def read_quantity(path: Path) -> list[tuple[float, float, float]]:
    """Parse a per-quantity CSV back into ``(ell, epsilon, value)`` rows.

    Returns:
        list: The rows in file order.

    Raises:
        ReportError: If the header is not ``ell,epsilon,value``.
    """
    with path.open(newline="", encoding="utf-8") as stream:
        reader = csv.reader(stream)
        header = tuple(next(reader, ()))
        if header != QUANTITY_HEADER:
            msg = f"{path} has header {header}, expected {QUANTITY_HEADER}"
            raise ReportError(msg)
        return [(float(ell), float(epsilon), float(value)) for ell, epsilon, value in reader]


def load_report(directory: Path) -> SweepReport:
    """Reload a report written by :func:`emit_report`.

    Returns:
        SweepReport: The report.

    Raises:
        ReportError: If ``directory`` holds no report.
    """
    path = directory / REPORT_FILE
    if not path.is_file():
        msg = f"no {REPORT_FILE} in {directory}"
        raise ReportError(msg)
    return SweepReport.model_validate_json(path.read_text(encoding="utf-8"))
