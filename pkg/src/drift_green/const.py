"""Constants for the singular-drift Green's function laboratory."""

from __future__ import annotations

from typing import Final

# Project identity
DOMAIN: Final = "drift_green"

# Drift families (JSON "family" values)
FAMILY_TRUNCATED_INVERSE: Final = "truncated_inverse"
FAMILY_POWER_REGULARIZED: Final = "power_regularized"
FAMILY_SMALL_CONSTANT: Final = "small_constant"
FAMILY_TABULATED: Final = "tabulated"

# Smallest admissible truncation level
MIN_TRUNCATION: Final = 3

# Sign of the transport term in the weak form and in the 3-D operator.
# -1 means L u = -Lap u - B.grad u, whose radial reduction is
# G'' + (n-1)/r G' + b G' = 0.
TRANSPORT_SIGN: Final = -1

# Relative slack when comparing sup (1-r)|b(r)| with the nominal constant
LIMITING_BOUND_SLACK: Final = 1e-12

# Quadrature defaults
DEFAULT_REL_TOL: Final = 1e-10
DEFAULT_ABS_TOL: Final = 1e-14
DEFAULT_MAX_SUBDIVISIONS: Final = 10_000
DEFAULT_BOUNDARY_GRADING: Final = 3.0
# Accepted ratio between the summed error estimate and the requested tolerance
QUAD_ACCEPT_FACTOR: Final = 10.0
# Panels shrink geometrically toward r = 1 down to this distance
PANEL_FLOOR: Final = 1e-12
PANEL_RATIO: Final = 0.5

# Radial mesh
MIN_MESH_SIZE: Final = 16
MESH_INNER_RADIUS: Final = 1e-3
BOUNDARY_LAYER_POINTS: Final = 20

# Distributional identity
IDENTITY_ACCEPT: Final = 1e-6
BUMP_RADII: Final = (0.3, 0.6, 0.8)
BUMP_POWERS: Final = (2, 3, 4)
PLATEAU_INNER: Final = 0.4
PLATEAU_OUTER: Final = 0.7
REFERENCE_BUMP_RADIUS: Final = 0.8
REFERENCE_BUMP_POWER: Final = 3

# Bound probes: r in {2^-k / 2}, a in {2^-k / 4}
PROBE_LEVELS: Final = 16
DERIVATIVE_PROBE_LEVELS: Final = 12
# NoUniformUpper when r^{n-2} G grows by this factor across the sweep
UPPER_BOUND_GROWTH_FACTOR: Final = 2.0

# Finite differences
FD_DIMENSION: Final = 3
DEFAULT_FD_TOL: Final = 1e-8
DEFAULT_FD_MAX_ITER: Final = 5000
# scipy's sparse Krylov solvers and matvecs run on the calling thread
FD_SOLVE_THREADS: Final = 1
MIN_RHO_CELLS: Final = 2.0
PECLET_GUARD: Final = 0.5
MAX_PRINCIPLE_FLOOR: Final = -1e-10
# Below this cell Peclet number the fitted weights use their Taylor limit
FITTED_SMALL_PECLET: Final = 1e-5
FITTED_MAX_PECLET: Final = 500.0
POLE_EXCLUSION_FACTOR: Final = 2.0
BOUNDARY_EXCLUSION_CELLS: Final = 3.0
FLUX_RADIUS: Final = 0.3
BLOWUP_CENTER: Final = (0.5, 0.0, 0.0)
BLOWUP_RADIUS: Final = 0.1
FD_ACCEPT: Final = 0.10
FD_CROSS_CHECK_RANGE: Final = (0.15, 0.7)
MIN_GRID_POINTS: Final = 5
GMRES_RESTART: Final = 50
ILU_DROP_TOL: Final = 1e-4
SHELL_FIT_CELLS: Final = 3.0
MIN_CUT_FRACTION: Final = 1e-8

# Experiments
DEFAULT_R_EVAL: Final = 0.5
FIT_MIN_ROWS: Final = 4
FIT_R2_TARGET: Final = 0.999
FIT_DROPPED_ROWS: Final = 2
CAUCHY_ACCEPT: Final = 0.02
SWEEP_WORKERS: Final = 4
# Slope of G_m(1/2) against log m for C < 1, as a fraction of 1/omega
SUBCRITICAL_SLOPE_FRACTION: Final = 0.05
CRITICAL_SLOPE_TOLERANCE: Final = 0.02
C0_UNIFORMITY: Final = 0.01
BETA_ONE_CONTINUITY: Final = 0.30
BETA_ONE_PROBE: Final = 0.99
DEFAULT_RHO_CELLS: Final = 4.0
DEFAULT_MESH_SIZE: Final = 256

# Output formats
FLOAT_FORMAT: Final = ".17g"
REPORT_JSON: Final = "report.json"
ROWS_CSV: Final = "rows.csv"
SOLUTION_CSV: Final = "solution.csv"
SOLUTION_JSON: Final = "solution.json"
PROFILE_CSV_HEADER: Final = ("r", "G", "Gprime")
SOLUTION_CSV_HEADER: Final = ("x", "y", "z", "u")
SWEEP_CSV_HEADER: Final = ("m", "C", "n", "r", "G", "r_pow_n2_times_G")

# CLI exit codes
EXIT_OK: Final = 0
EXIT_USAGE: Final = 2
EXIT_NUMERICAL: Final = 3
EXIT_ACCEPTANCE: Final = 4
