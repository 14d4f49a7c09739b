"""Models used throughout the Ekman slab laboratory."""

from __future__ import annotations

import math
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import (
    EPSILON_STEP_FACTOR,
    INNER_DAMPING,
    INNER_MAX_ITERATIONS,
    INNER_TOL,
    JENSEN_TOL,
)


class ScalingLaw(BaseModel):
    """Power law ``c * eps**a`` tying a geometric parameter to the Rossby number."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    coefficient: float = Field(1.0, ge=0, description="Prefactor c of the law.", examples=[1.0])
    exponent: float = Field(1.0, description="Exponent a of the law.", examples=[1.0, 2.0])

    def __call__(self, epsilon: float) -> float:
        """Evaluate the law.

        Args:
            epsilon: The Rossby parameter.

        Returns:
            float: ``coefficient * epsilon**exponent``.
        """
        return self.coefficient * epsilon**self.exponent


class RegimeParams(BaseModel):
    """Parameters of one member of the singular family."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilon: float = Field(..., gt=0, le=1, description="Rossby-scale parameter.", examples=[0.25])
    ell: float = Field(..., gt=0, description="Half thickness of the slab.", examples=[0.25])
    alpha: float = Field(..., ge=0, description="Navier-slip coefficient.", examples=[0.25])

    @property
    def lam(self) -> float:
        """Ekman ratio ``alpha / ell``, recomputed on every access."""
        return self.alpha / self.ell


class LambdaRegime(StrEnum):
    """Asymptotic behaviour of ``alpha / ell`` along a regime sequence."""

    FINITE = "finite"
    ZERO = "zero"
    DIVERGENT = "divergent"


class RegimeSequence(BaseModel):
    """Ordered regimes ``eps_n = 1/n`` together with the classification of their Ekman ratio."""

    model_config = ConfigDict(frozen=True)

    regimes: list[RegimeParams]
    lambda_regime: LambdaRegime
    lambda_limit: float | None = Field(None, description="Limit of the Ekman ratio when it stays finite.")
    indices: list[int] = Field(default_factory=list, description="The n of each regime.")


class GeometryConfig(BaseModel):
    """Grid of the slab. The thickness comes from the regime."""

    model_config = ConfigDict(extra="forbid")

    horizontal_period: float = Field(2 * math.pi, gt=0, description="Side length L of the periodic square.")
    nh: int = Field(32, ge=8, multiple_of=2, description="Horizontal grid points per direction.")
    nv: int = Field(17, ge=5, description="Vertical Chebyshev-Gauss-Lobatto points (odd).")

    @model_validator(mode="after")
    def _odd_vertical(self) -> Self:
        if self.nv % 2 == 0:
            msg = f"nv must be odd, got {self.nv}"
            raise ValueError(msg)
        return self


class RegimeConfig(BaseModel):
    """Range of the Rossby sequence and the laws for thickness and slip."""

    model_config = ConfigDict(extra="forbid")

    n_min: int = Field(4, ge=1, description="First n of eps_n = 1/n.")
    n_max: int = Field(24, ge=1, description="Last n of eps_n = 1/n.")
    ell_law: ScalingLaw = Field(default_factory=ScalingLaw, description="Law for the half thickness.")
    alpha_law: ScalingLaw = Field(default_factory=ScalingLaw, description="Law for the slip coefficient.")

    @model_validator(mode="after")
    def _ordered(self) -> Self:
        if self.n_max < self.n_min:
            msg = f"n_max={self.n_max} is smaller than n_min={self.n_min}"
            raise ValueError(msg)
        return self


class DensityProfile(StrEnum):
    """Reference densities available in the generator registry."""

    CONSTANT = "constant"
    PRODUCT_SINE = "product_sine"


class PerturbationProfile(StrEnum):
    """Density perturbations available in the generator registry."""

    ZERO = "zero"
    CONSTANT = "constant"
    SINE = "sine"
    LAYERED_SINE = "layered_sine"


class VelocityProfile(StrEnum):
    """Initial velocities available in the generator registry."""

    REST = "rest"
    SHEAR = "shear"
    LAYERED_SHEAR = "layered_shear"
    TAYLOR_GREEN = "taylor_green"
    RANDOM = "random"


class DensitySpec(BaseModel):
    """Reference density ``rho0(x_h)``."""

    model_config = ConfigDict(extra="forbid")

    profile: DensityProfile = DensityProfile.CONSTANT
    value: float = Field(1.0, gt=0, description="Mean level of the reference density.")
    amplitude: float = Field(0.5, ge=0, description="Amplitude of the product_sine modulation.")


class PerturbationSpec(BaseModel):
    """Density perturbation ``r_in``, possibly depending on x3."""

    model_config = ConfigDict(extra="forbid")

    profile: PerturbationProfile = PerturbationProfile.SINE
    amplitude: float = Field(1.0, description="Amplitude (or constant value).")
    layering: float = Field(0.5, ge=0, description="Relative weight of the x3-dependent part.")


class VelocitySpec(BaseModel):
    """Initial velocity; the momentum is ``rho_in * u_in``."""

    model_config = ConfigDict(extra="forbid")

    profile: VelocityProfile = VelocityProfile.TAYLOR_GREEN
    amplitude: float = Field(1.0, description="Velocity amplitude.")
    layering: float = Field(0.5, ge=0, description="Relative weight of the x3-dependent part.")
    modes: int = Field(4, ge=1, description="Highest wavenumber of the random profile.")


class DataConfig(BaseModel):
    """Initial data and the thresholds of the admissibility suite."""

    model_config = ConfigDict(extra="forbid")

    rho0: DensitySpec = Field(default_factory=DensitySpec)
    perturbation: PerturbationSpec = Field(default_factory=PerturbationSpec)
    velocity: VelocitySpec = Field(default_factory=VelocitySpec)
    seed: int = Field(0, description="Seed of every random profile.")
    rho_star: float | None = Field(None, gt=0, description="Upper density level; defaults to max of rho0.")
    energy_cap: float = Field(1e3, gt=0, description="Largest admissible averaged initial energy.")
    perturbation_cap: float = Field(1e2, gt=0, description="Largest admissible sup and H^-2 norm of the mean r_in.")
    vacuum_delta: float = Field(0.1, gt=0, description="Level delta of the near-vacuum integrability proxy.")
    vacuum_cap: float = Field(1e3, gt=0, description="Largest admissible near-vacuum integral.")
    nondegeneracy_threshold: float = Field(
        0.05, gt=0, le=1, description="Largest admissible area fraction at the smallest delta of the sweep."
    )


class SolverConfig(BaseModel):
    """Time stepping and diagnostics cadence."""

    model_config = ConfigDict(extra="forbid")

    t_final: float = Field(0.5, gt=0, description="Final time T.")
    dt_max: float = Field(1e-2, gt=0, description="Upper bound of the time step.")
    cfl_number: float = Field(0.5, gt=0, le=1, description="Target Courant number of the time step rule.")
    max_courant: float = Field(1.0, gt=0, description="Courant number above which a step is rejected.")
    epsilon_factor: float = Field(EPSILON_STEP_FACTOR, gt=0, description="c in dt <= c * eps.")
    diag_stride: int = Field(10, ge=1, description="Solver steps between diagnostic samples.")
    cutoff_levels: list[int] = Field(default_factory=lambda: [2, 3], description="Levels M of the cutoff S_M.")
    theta: float = Field(0.5, gt=0, lt=1, description="Exponent of the decomposition of the averaged momentum.")
    wave_diagnostics: bool = Field(True, description="Evaluate the wave-system residuals.")
    coriolis: bool = Field(True, description="Include the Coriolis term.")
    damping: float = Field(INNER_DAMPING, gt=0, le=1, description="Damping of the rotation-projection loop.")
    max_iterations: int = Field(INNER_MAX_ITERATIONS, ge=1, description="Cap of the rotation-projection loop.")
    tolerance: float = Field(INNER_TOL, gt=0, description="Tolerance of the rotation-projection loop.")

    @model_validator(mode="after")
    def _levels_present(self) -> Self:
        if self.wave_diagnostics and not self.cutoff_levels:
            msg = "cutoff_levels must not be empty when wave diagnostics are enabled"
            raise ValueError(msg)
        if any(m < 0 for m in self.cutoff_levels):
            msg = "cutoff levels must be non-negative"
            raise ValueError(msg)
        return self


class OutputConfig(BaseModel):
    """Where run artifacts go."""

    model_config = ConfigDict(extra="forbid")

    directory: Path | None = Field(None, description="Output directory; nothing is written when unset.")
    snapshot_every: int = Field(0, ge=0, description="Solver steps between checkpoints; 0 disables them.")


class ChecksConfig(BaseModel):
    """Closed-form and scaling checks a sweep runs next to its members."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = Field(True, description="Run the checks with every sweep.")
    ells: list[float] = Field(
        default_factory=lambda: [0.2, 0.1, 0.05, 0.025],
        description="Half thicknesses of the Poincare and averaging-defect scaling.",
    )
    lams: list[float] = Field(
        default_factory=lambda: [0.0, 0.5, 2.0], description="Ekman coefficients of the damping-rate check."
    )
    damping_dt: float = Field(1e-3, gt=0, description="Time step of the damping-rate check.")
    damping_t_final: float = Field(0.2, gt=0, description="Final time of the damping-rate check.")
    commutator_nh: int = Field(512, ge=8, multiple_of=2, description="Grid of the commutator check.")
    commutator_levels: list[int] = Field(
        default_factory=lambda: [2, 3, 4, 5, 6, 7], description="Cutoff levels M of the commutator check."
    )

    @model_validator(mode="after")
    def _resolvable(self) -> Self:
        if len(set(self.ells)) < 3 or any(ell <= 0 for ell in self.ells):  # noqa: PLR2004
            msg = "at least three distinct positive thicknesses are needed"
            raise ValueError(msg)
        if any(lam < 0 for lam in self.lams):
            msg = "Ekman coefficients must be non-negative"
            raise ValueError(msg)
        if len(set(self.commutator_levels)) < 3 or min(self.commutator_levels) < 0:  # noqa: PLR2004
            msg = "at least three distinct non-negative commutator levels are needed"
            raise ValueError(msg)
        if 2 ** (max(self.commutator_levels) + 1) > self.commutator_nh // 2:
            msg = f"level {max(self.commutator_levels)} is not resolved on nh={self.commutator_nh}"
            raise ValueError(msg)
        return self


class RunConfig(BaseModel):
    """Complete configuration of a run or sweep."""

    model_config = ConfigDict(extra="forbid")

    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    regime: RegimeConfig = Field(default_factory=RegimeConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    checks: ChecksConfig = Field(default_factory=ChecksConfig)


class HypothesisCheck(BaseModel):
    """Outcome of one hypothesis of the admissibility suite."""

    name: str = Field(..., description="Name of the hypothesis.", examples=["density_bounds"])
    passed: bool
    value: float | None = Field(None, description="Measured quantity.")
    threshold: float | None = Field(None, description="Threshold it was compared against.")
    detail: str = ""


class AdmissibilityReport(BaseModel):
    """All checks run on one set of initial data."""

    checks: list[HypothesisCheck]
    nondegeneracy_fractions: dict[float, float] = Field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        """True when every hypothesis holds."""
        return all(check.passed for check in self.checks)

    @property
    def violations(self) -> list[HypothesisCheck]:
        """The failed checks."""
        return [check for check in self.checks if not check.passed]


class NormPair(BaseModel):
    """A norm of the vertical average next to the vertical average of the norm."""

    norm_of_average: float = Field(..., ge=0)
    average_of_norm: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _jensen(self) -> Self:
        slack = JENSEN_TOL * max(1.0, self.average_of_norm)
        if self.norm_of_average > self.average_of_norm + slack:
            msg = (
                f"norm of the average {self.norm_of_average:.17g} "
                f"exceeds average of the norm {self.average_of_norm:.17g}"
            )
            raise ValueError(msg)
        return self


class DiagnosticsRecord(BaseModel):
    """Diagnostics of one sampled time."""

    t: float
    norms: dict[str, NormPair] = Field(default_factory=dict)
    residuals: dict[str, float] = Field(default_factory=dict)
    traces: dict[str, float] = Field(default_factory=dict)


class LedgerRow(BaseModel):
    """One row of the discrete energy ledger."""

    t: float
    kinetic: float
    dissipation: float
    boundary: float
    budget_slack: float


class LimitRow(BaseModel):
    """One row of the limit-system log."""

    t: float
    energy: float
    enstrophy: float
    r0_min: float
    r0_max: float


class FitResult(BaseModel):
    """Least-squares power law ``error = constant * scale**exponent``."""

    exponent: float
    constant: float
    residual: float = Field(..., ge=0, description="Root mean square of the log-log residuals.")
    half_width: float = Field(..., ge=0, description="95% confidence half-width of the exponent.")
    points: int = Field(..., ge=3)


class BoundConstant(BaseModel):
    """Measured constants of one bound along a sweep."""

    values: list[float]

    @property
    def minimum(self) -> float:
        """Smallest measured constant."""
        return min(self.values)

    @property
    def maximum(self) -> float:
        """Largest measured constant."""
        return max(self.values)

    @property
    def spread(self) -> float:
        """Ratio of the largest to the smallest measured constant."""
        return self.maximum / self.minimum if self.minimum > 0 else math.inf


class VerdictStatus(StrEnum):
    """Outcome of an acceptance check."""

    PASS = "pass"  # noqa: S105
    FAIL = "fail"
    SKIPPED = "skipped"


class Verdict(BaseModel):
    """Verdict of one acceptance check."""

    status: VerdictStatus
    detail: str = ""


class SweepRow(BaseModel):
    """Quantities measured by one run of a sweep."""

    n: int
    epsilon: float
    ell: float
    alpha: float
    quantities: dict[str, float] = Field(default_factory=dict)

    @property
    def lam(self) -> float:
        """Ekman ratio of the run."""
        return self.alpha / self.ell


class DampingRate(BaseModel):
    """Measured and closed-form energy decay rate of a single vorticity mode of the limit system."""

    lam: float = Field(..., ge=0)
    measured: float
    expected: float = Field(..., gt=0)

    @property
    def relative_error(self) -> float:
        """``|measured - expected| / expected``."""
        return abs(self.measured - self.expected) / self.expected


class SweepReport(BaseModel):
    """Everything a sweep measured, fitted and decided."""

    lambda_regime: LambdaRegime
    lambda_limit: float | None = None
    rows: list[SweepRow]
    fits: dict[str, FitResult] = Field(default_factory=dict)
    constants: dict[str, BoundConstant] = Field(default_factory=dict)
    damping: list[DampingRate] = Field(default_factory=list)
    verdicts: dict[str, Verdict] = Field(default_factory=dict)
    steps: Annotated[int, Field(ge=0, description="Total solver steps over all runs.")] = 0
