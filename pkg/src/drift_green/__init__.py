"""Green's functions of the Dirichlet Laplacian with singular radial drift."""

from __future__ import annotations

from .bounds import (
    BoundReport,
    UpperBoundStatus,
    derivative_lower_bound,
    interior_lower_bound,
    upper_bound_status,
)
from .const import DOMAIN
from .drift import (
    DriftFamily,
    DriftSpec,
    drift_integral,
    limiting_bound_holds,
    radial_component,
)
from .errors import (
    ConfigurationError,
    DomainError,
    GreenLabError,
    NumericalError,
)
from .experiments import (
    SweepConfig,
    run_beta_sweep,
    run_blowup,
    run_c_sweep,
    run_fd_check,
    run_m_sweep,
    run_verify,
)
from .fd import (
    BallGrid,
    FdScheme,
    SolverConfig,
    assemble,
    poisson_blowup_experiment,
    radial_symmetry_deviation,
    solve,
)
from .radial import (
    QuadratureConfig,
    RadialGreenProfile,
    build_profile,
    green_derivative,
    green_value,
)
from .report import ExperimentReport, ReportKind
from .verifier import (
    RadialTestFunction,
    identity_residual,
    normalization_search,
)

__all__ = [
    "DOMAIN",
    "BallGrid",
    "BoundReport",
    "ConfigurationError",
    "DomainError",
    "DriftFamily",
    "DriftSpec",
    "ExperimentReport",
    "FdScheme",
    "GreenLabError",
    "NumericalError",
    "QuadratureConfig",
    "RadialGreenProfile",
    "RadialTestFunction",
    "ReportKind",
    "SolverConfig",
    "SweepConfig",
    "UpperBoundStatus",
    "assemble",
    "build_profile",
    "derivative_lower_bound",
    "drift_integral",
    "green_derivative",
    "green_value",
    "identity_residual",
    "interior_lower_bound",
    "limiting_bound_holds",
    "normalization_search",
    "poisson_blowup_experiment",
    "radial_component",
    "radial_symmetry_deviation",
    "run_beta_sweep",
    "run_blowup",
    "run_c_sweep",
    "run_fd_check",
    "run_m_sweep",
    "run_verify",
    "solve",
    "upper_bound_status",
]
