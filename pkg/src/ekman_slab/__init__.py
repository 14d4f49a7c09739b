"""Pseudo-spectral laboratory for rotating fluids on thin slabs and their two-dimensional limit."""

from .constants import (
    __project_name__,
    __project_path__,
    __version__,
)
from .errors import (
    AdmissibilityError,
    ConvergenceError,
    DensityBoundError,
    EkmanSlabError,
    FitError,
    GeometryError,
    ParameterError,
    ReportError,
    RunFailedError,
    ScalingLawError,
    SnapshotFormatError,
    TimeStepRejectedError,
    TrajectoryError,
)
from .geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry, make_regime_sequence, vertical_average
from .initial_data import InitialData, check_initial_data, gen_initial_data
from .models import RegimeParams, RunConfig, SweepReport
from .rates import fit_rate
from .reporting import emit_report, load_report
from .service import RunResult, Service, run_limit, run_single
from .solver2d import State2D, step2d
from .solver3d import EnergyLedger, State3D, Trajectory, step_imex

__all__ = [
    "AdmissibilityError",
    "ConvergenceError",
    "DensityBoundError",
    "EkmanSlabError",
    "EnergyLedger",
    "Field2D",
    "Field3D",
    "FitError",
    "GeometryError",
    "HorizontalGrid",
    "InitialData",
    "ParameterError",
    "RegimeParams",
    "ReportError",
    "RunConfig",
    "RunFailedError",
    "RunResult",
    "ScalingLawError",
    "Service",
    "SlabGeometry",
    "SnapshotFormatError",
    "State2D",
    "State3D",
    "SweepReport",
    "TimeStepRejectedError",
    "Trajectory",
    "TrajectoryError",
    "__project_name__",
    "__project_path__",
    "__version__",
    "check_initial_data",
    "emit_report",
    "fit_rate",
    "gen_initial_data",
    "load_report",
    "make_regime_sequence",
    "run_limit",
    "run_single",
    "step2d",
    "step_imex",
    "vertical_average",
]
