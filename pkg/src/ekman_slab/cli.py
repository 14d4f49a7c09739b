"""CLI (Command Line Interface) of the Ekman slab laboratory."""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from .constants import __version__
from .errors import EkmanSlabError
from .models import SweepReport, VerdictStatus
from .reporting import emit_report, load_report
from .service import Service, load_config
from .settings import Settings

cli = typer.Typer(name="Command Line Interface of the Ekman slab laboratory")
_console = Console()
_settings = Settings()  # pyright: ignore[reportCallIssue] - false positive
_service = Service(_settings)

ConfigArgument = Annotated[
    Path, typer.Argument(help="YAML run configuration", exists=True, dir_okay=False, readable=True)
]


@cli.callback()
def main() -> None:
    """Rotating thin-slab fluid laboratory."""
    logging.basicConfig(
        level=_settings.log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=False)],
        force=True,
    )


@contextmanager
def _failures() -> Iterator[None]:
    """Print errors of the laboratory and of configuration parsing, then exit with code 1.

    Raises:
        typer.Exit: With code 1 on any handled error.
    """
    try:
        yield
    except (EkmanSlabError, ValidationError, yaml.YAMLError, OSError) as exc:
        _console.print(f"[red]Error:[/red] {escape(str(exc))}")
        raise typer.Exit(code=1) from exc


def _quantity_table(title: str, quantities: dict[str, float]) -> Table:
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for name, value in quantities.items():
        table.add_row(name, f"{value:.6g}")
    return table


def _verdict_table(report: SweepReport) -> Table:
    table = Table(title="verdicts")
    table.add_column("check")
    table.add_column("status")
    table.add_column("detail")
    colors = {VerdictStatus.PASS: "green", VerdictStatus.FAIL: "red", VerdictStatus.SKIPPED: "yellow"}
    for name, verdict in report.verdicts.items():
        table.add_row(name, f"[{colors[verdict.status]}]{verdict.status}[/]", verdict.detail)
    return table


@cli.command()
def info() -> None:
    """Print the effective settings."""
    _console.print_json(_service.info())


@cli.command()
def run3d(
    config: ConfigArgument,
    n: Annotated[int | None, typer.Option(help="Run eps = 1/n instead of the finest member")] = None,
) -> None:
    """Run the rotating slab system for one member of the sequence."""
    with _failures():
        result = _service.run_single(load_config(config), n)
    regime = result.regime
    _console.print(_quantity_table(f"eps={regime.epsilon:.6g} ell={regime.ell:.6g}", result.quantities))
    holds = all(row.budget_slack >= 0 for row in result.ledger)
    _console.print(f"steps={result.steps} energy_inequality={'holds' if holds else 'violated'}")


@cli.command()
def run2d(config: ConfigArgument) -> None:
    """Run the limit system from the matched data of the finest member."""
    with _failures():
        state, rows = _service.run_limit(load_config(config))
    _console.print(
        f"t={state.t:.6g} energy={state.energy():.6g} enstrophy={state.enstrophy():.6g} samples={len(rows)}"
    )


@cli.command()
def sweep(
    config: ConfigArgument,
    report_dir: Annotated[
        Path | None, typer.Option(help="Where to emit the report; defaults to <output.directory>/report")
    ] = None,
) -> None:
    """Run the whole sequence in parallel and emit the sweep report."""
    with _failures():
        run_config = load_config(config)
        report = _service.run_sweep(run_config)
        destination = report_dir or (
            run_config.output.directory / "report" if run_config.output.directory is not None else None
        )
        if destination is not None:
            emit_report(report, destination)
            _console.print(f"report written to {destination}")
    _console.print(_verdict_table(report))
    if any(verdict.status == VerdictStatus.FAIL for verdict in report.verdicts.values()):
        raise typer.Exit(code=1)


@cli.command(name="check-data")
def check_data(config: ConfigArgument) -> None:
    """Run the admissibility suite on the data of every member of the sequence."""
    with _failures():
        reports = _service.check_data(load_config(config))
    table = Table(title="admissibility")
    table.add_column("n", justify="right")
    table.add_column("accepted")
    table.add_column("violations")
    for n, report in reports.items():
        violations = ", ".join(v.name for v in report.violations)
        table.add_row(str(n), "yes" if report.accepted else "[red]no[/red]", violations)
    _console.print(table)
    if not all(report.accepted for report in reports.values()):
        raise typer.Exit(code=1)


@cli.command()
def report(directory: Annotated[Path, typer.Argument(help="Directory of an emitted report")]) -> None:
    """Print a previously emitted sweep report."""
    with _failures():
        loaded = load_report(directory)
    for name, fit in loaded.fits.items():
        _console.print(f"{name}: exponent={fit.exponent:.4f} +- {fit.half_width:.4f} (residual {fit.residual:.3g})")
    _console.print(_verdict_table(loaded))


def _apply_cli_settings(cli: typer.Typer, epilog: str) -> None:
    """Add epilog to all typers in the tree and configure default behavior."""
    cli.info.epilog = epilog
    cli.info.no_args_is_help = True
    for command in cli.registered_commands:
        command.epilog = cli.info.epilog


_apply_cli_settings(
    cli,
    f"Ekman slab laboratory v{__version__}",
)


if __name__ == "__main__":
    cli()
