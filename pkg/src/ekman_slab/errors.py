"""Exceptions raised by the Ekman slab laboratory.

Errors carrying extra attributes define ``__reduce__`` so that they cross the process pool of a sweep intact.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .models import HypothesisCheck


class EkmanSlabError(Exception):
    """Base class of all errors raised by this package."""


class GeometryError(EkmanSlabError):
    """Fields or grids that do not fit together."""


class ParameterError(EkmanSlabError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class ScalingLawError(ParameterError):
    """A scaling law does not drive the slab thickness to zero."""


class TimeStepRejectedError(EkmanSlabError):
    """The requested time step violates the advective CFL limit."""

    def __init__(self, dt: float, admissible_dt: float, courant: float) -> None:
        """Initialize with the rejected and the admissible time step.

        Args:
            dt: The rejected time step.
            admissible_dt: Largest time step the CFL limit allows.
            courant: Courant number of the rejected step.
        """
        super().__init__(f"time step dt={dt:.3e} rejected (courant={courant:.3f}), admissible dt={admissible_dt:.3e}")
        self.dt = dt
        self.admissible_dt = admissible_dt
        self.courant = courant

    def __reduce__(self) -> tuple[type, tuple[float, float, float]]:  # noqa: D105
        return type(self), (self.dt, self.admissible_dt, self.courant)


class ConvergenceError(EkmanSlabError):
    """The rotation-projection inner loop did not converge."""

    def __init__(self, residual: float, iterations: int) -> None:
        """Initialize with the last residual.

        Args:
            residual: Relative fixed-point increment at the last iteration.
            iterations: Number of iterations performed.
        """
        super().__init__(f"inner loop not converged after {iterations} iterations, residual={residual:.3e}")
        self.residual = residual
        self.iterations = iterations

    def __reduce__(self) -> tuple[type, tuple[float, int]]:  # noqa: D105
        return type(self), (self.residual, self.iterations)


class DensityBoundError(EkmanSlabError):
    """The density left the interval spanned by its initial values."""

    def __init__(self, message: str, state: Any = None) -> None:  # noqa: ANN401
        """Initialize with the offending state for the diagnostic dump.

        Args:
            message: Description of the violation.
            state: The state that violated the bound.
        """
        super().__init__(message)
        self.state = state

    def __reduce__(self) -> tuple[type, tuple[str, Any]]:  # noqa: D105
        return type(self), (str(self), self.state)


class AdmissibilityError(EkmanSlabError):
    """Initial data violate one or more named hypotheses."""

    def __init__(self, violations: Sequence[HypothesisCheck]) -> None:
        """Initialize with the violated hypotheses.

        Args:
            violations: The failed checks of the suite.
        """
        names = ", ".join(v.name for v in violations)
        super().__init__(f"initial data rejected: {names}")
        self.violations = list(violations)

    def __reduce__(self) -> tuple[type, tuple[list[HypothesisCheck]]]:  # noqa: D105
        return type(self), (self.violations,)

    @property
    def hypotheses(self) -> list[str]:
        """Names of the violated hypotheses."""
        return [v.name for v in self.violations]


class TrajectoryError(EkmanSlabError):
    """A sampled trajectory cannot be used for the requested diagnostic."""


class FitError(EkmanSlabError, ValueError):
    """Data handed to a rate fit are unusable."""


class ReportError(EkmanSlabError):
    """A sweep report cannot be emitted."""


class SnapshotFormatError(EkmanSlabError):
    """A snapshot file is not in the expected format."""


class RunFailedError(EkmanSlabError):
    """A solver failure inside a run, tagged with where it happened."""

    def __init__(self, epsilon: float, step: int, cause: Exception) -> None:
        """Initialize.

        Args:
            epsilon: Rossby parameter of the failing run.
            step: Step number at failure.
            cause: The underlying solver error.
        """
        super().__init__(f"run eps={epsilon:.6g} failed at step {step}: {cause}")
        self.epsilon = epsilon
        self.step = step
        self.cause = cause

    def __reduce__(self) -> tuple[type, tuple[float, int, Exception]]:  # noqa: D105
        return type(self), (self.epsilon, self.step, self.cause)
