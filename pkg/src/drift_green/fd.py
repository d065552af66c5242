"""Finite-difference cross-check on the unit ball in three dimensions.

The operator is -Laplace(u) + s B.grad(u) with s the transport sign, the
same sign the weak-form verifier uses. Each axis contributes a three-point
stencil; the default weights are exponentially fitted (exact for 1, x and
the one-dimensional boundary-layer exponential) with Shortley-Weller
spacing at the sphere, so the assembled matrix is an M-matrix for every m.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, bicgstab, gmres, spilu

from .const import (
    BLOWUP_CENTER,
    BLOWUP_RADIUS,
    BOUNDARY_EXCLUSION_CELLS,
    DEFAULT_FD_MAX_ITER,
    DEFAULT_FD_TOL,
    FD_CROSS_CHECK_RANGE,
    FD_DIMENSION,
    FD_SOLVE_THREADS,
    FITTED_MAX_PECLET,
    FITTED_SMALL_PECLET,
    FLOAT_FORMAT,
    FLUX_RADIUS,
    GMRES_RESTART,
    ILU_DROP_TOL,
    MAX_PRINCIPLE_FLOOR,
    MIN_CUT_FRACTION,
    MIN_GRID_POINTS,
    MIN_RHO_CELLS,
    PECLET_GUARD,
    POLE_EXCLUSION_FACTOR,
    SHELL_FIT_CELLS,
    SOLUTION_CSV,
    SOLUTION_CSV_HEADER,
    SOLUTION_JSON,
    TRANSPORT_SIGN,
)
from .drift import DriftFamily, DriftSpec, drift_integral, is_bounded, radial_component_array
from .errors import (
    ConfigurationError,
    MaximumPrincipleError,
    ResolutionError,
    SolverError,
    UnsupportedDriftError,
)
from .radial import (
    QuadratureConfig,
    adaptive_quad,
    green_value,
    mollified_green_value,
    mollified_mass_factor,
    sphere_area,
)
from .report import write_json

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class BallGrid:
    """Uniform N^3 grid on [-1, 1]^3 with the origin on the middle node."""

    N: int
    h: float = field(init=False)
    index: npt.NDArray[np.int64] = field(init=False, repr=False)
    ijk: npt.NDArray[np.int64] = field(init=False, repr=False)
    points: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.N < MIN_GRID_POINTS or self.N % 2 == 0:
            raise ConfigurationError(f"N must be odd and >= {MIN_GRID_POINTS}, got {self.N}")
        h = 2.0 / (self.N - 1)
        axis = np.linspace(-1.0, 1.0, self.N)
        X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
        inside = X**2 + Y**2 + Z**2 < 1.0
        index = np.full(inside.shape, -1, dtype=np.int64)
        index[inside] = np.arange(int(inside.sum()))
        ijk = np.argwhere(inside)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "ijk", ijk)
        object.__setattr__(self, "points", axis[ijk])

    @property
    def size(self) -> int:
        """Number of interior nodes."""
        return len(self.ijk)

    @property
    def radii(self) -> FloatArray:
        return np.linalg.norm(self.points, axis=1)

    @property
    def center_index(self) -> int:
        c = (self.N - 1) // 2
        return int(self.index[c, c, c])

    @property
    def interior_mask(self) -> npt.NDArray[np.bool_]:
        return self.index >= 0


@dataclass(frozen=True)
class FdScheme:
    """Discretization choices for the convection term and the sphere."""

    convection: Literal["exponential", "upwind"] = "exponential"
    boundary: Literal["shortley_weller", "first_order"] = "shortley_weller"

    def __post_init__(self) -> None:
        if self.convection not in ("exponential", "upwind"):
            raise ConfigurationError(f"unknown convection scheme: {self.convection}")
        if self.boundary not in ("shortley_weller", "first_order"):
            raise ConfigurationError(f"unknown boundary scheme: {self.boundary}")

    def to_dict(self) -> dict[str, Any]:
        return {"convection": self.convection, "boundary": self.boundary}


@dataclass(frozen=True)
class SolverConfig:
    """Krylov method, preconditioner and stopping rule."""

    method: Literal["bicgstab", "gmres"] = "bicgstab"
    preconditioner: Literal["jacobi", "ilu", "none"] = "jacobi"
    tol: float = DEFAULT_FD_TOL
    max_iter: int = DEFAULT_FD_MAX_ITER

    def __post_init__(self) -> None:
        if self.method not in ("bicgstab", "gmres"):
            raise ConfigurationError(f"unknown Krylov method: {self.method}")
        if self.preconditioner not in ("jacobi", "ilu", "none"):
            raise ConfigurationError(f"unknown preconditioner: {self.preconditioner}")
        if not 0.0 < self.tol < 1.0:
            raise ConfigurationError("solver tolerance must lie in (0, 1)")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "preconditioner": self.preconditioner,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


@dataclass(eq=False)
class FdSystem:
    grid: BallGrid
    spec: DriftSpec
    scheme: FdScheme
    matrix: sp.csr_matrix
    laplacian: sp.csr_matrix
    rhs: FloatArray
    mollifier_radius: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def discrete_mass(self) -> float:
        return float(self.rhs.sum() * self.grid.h**3)


def drift_field(spec: DriftSpec, points: FloatArray) -> FloatArray:
    """B(x) = b(|x|) x/|x| at each point, zero at the origin."""
    radii = np.linalg.norm(points, axis=1)
    b = radial_component_array(spec, radii)
    unit = np.zeros_like(points)
    nonzero = radii > 0.0
    unit[nonzero] = points[nonzero] / radii[nonzero, None]
    return b[:, None] * unit


def _axis_spacing(
    grid: BallGrid, axis: int, boundary: str
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], FloatArray, FloatArray]:
    """Neighbour indices (-1 outside) and arm lengths along one axis."""
    h = grid.h
    x = grid.points[:, axis]
    excess = np.sum(grid.points**2, axis=1) - 1.0
    root = np.sqrt(np.maximum(x**2 - excess, 0.0))

    neighbours = []
    arms = []
    for step, sign in ((1, 1.0), (-1, -1.0)):
        shifted = grid.ijk.copy()
        shifted[:, axis] += step
        nb = grid.index[shifted[:, 0], shifted[:, 1], shifted[:, 2]]
        arm = np.full(grid.size, h)
        if boundary == "shortley_weller":
            cut = -sign * x + root
            outside = nb < 0
            arm[outside] = np.clip(cut[outside], MIN_CUT_FRACTION * h, h)
        neighbours.append(nb)
        arms.append(arm)
    return neighbours[0], neighbours[1], arms[0], arms[1]


def _axis_weights(
    v: FloatArray, h_minus: FloatArray, h_plus: FloatArray, convection: str
) -> tuple[FloatArray, FloatArray]:
    """Off-diagonal weights (alpha_minus, alpha_plus) of -u'' + v u'."""
    span = h_plus + h_minus
    if convection == "upwind":
        alpha_plus = -2.0 / (h_plus * span) + np.minimum(v, 0.0) / h_plus
        alpha_minus = -2.0 / (h_minus * span) - np.maximum(v, 0.0) / h_minus
        return alpha_minus, alpha_plus

    reach = np.maximum(h_plus, h_minus)
    v = np.clip(v, -FITTED_MAX_PECLET / reach, FITTED_MAX_PECLET / reach)
    small = np.abs(v) * reach < FITTED_SMALL_PECLET

    taylor_plus = (-2.0 + v * h_minus) / (h_plus * span)
    taylor_minus = (-2.0 - v * h_plus) / (h_minus * span)

    v_fit = np.where(small, 1.0, v)
    e_plus = np.expm1(v_fit * h_plus)
    e_minus = -np.expm1(-v_fit * h_minus)
    fitted_plus = v_fit * e_minus / (h_plus * e_minus - h_minus * e_plus)
    fitted_minus = fitted_plus * e_plus / e_minus
    return (
        np.where(small, taylor_minus, fitted_minus),
        np.where(small, taylor_plus, fitted_plus),
    )


def _operator(
    grid: BallGrid, velocity: FloatArray, scheme: FdScheme
) -> sp.csr_matrix:
    size = grid.size
    nodes = np.arange(size)
    diagonal = np.zeros(size)
    rows, cols, vals = [], [], []
    for axis in range(FD_DIMENSION):
        nb_plus, nb_minus, h_plus, h_minus = _axis_spacing(grid, axis, scheme.boundary)
        alpha_minus, alpha_plus = _axis_weights(velocity[:, axis], h_minus, h_plus, scheme.convection)
        diagonal -= alpha_minus + alpha_plus
        for nb, alpha in ((nb_plus, alpha_plus), (nb_minus, alpha_minus)):
            # exterior neighbours carry the zero Dirichlet value
            inside = nb >= 0
            rows.append(nodes[inside])
            cols.append(nb[inside])
            vals.append(alpha[inside])
    rows.append(nodes)
    cols.append(nodes)
    vals.append(diagonal)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )


def _check_drift(spec: DriftSpec) -> None:
    if not is_bounded(spec):
        raise UnsupportedDriftError(
            f"{spec.label} is unbounded on the closed ball; the grid operator needs bounded drift"
        )


def _peclet_warnings(spec: DriftSpec, grid: BallGrid) -> list[str]:
    if spec.family is not DriftFamily.TRUNCATED_INVERSE or spec.m is None:
        return []
    limit = PECLET_GUARD / (spec.C * grid.h)
    if spec.m <= limit:
        return []
    message = f"m={spec.m} exceeds the Peclet guard {limit:.4g} for h={grid.h:.4g}"
    logger.warning(message)
    return [message]


def assemble_with_source(
    spec: DriftSpec,
    grid: BallGrid,
    source: FloatArray | Callable[[FloatArray], FloatArray],
    scheme: FdScheme | None = None,
) -> FdSystem:
    """Operator for spec with an arbitrary nodal source.

    Raises:
        UnsupportedDriftError: if the drift is unbounded near the sphere.
    """
    _check_drift(spec)
    scheme = scheme or FdScheme()
    velocity = TRANSPORT_SIGN * drift_field(spec, grid.points)
    rhs = np.asarray(source(grid.points) if callable(source) else source, dtype=float)
    if rhs.shape != (grid.size,):
        raise ConfigurationError(f"source has shape {rhs.shape}, expected ({grid.size},)")
    system = FdSystem(
        grid=grid,
        spec=spec,
        scheme=scheme,
        matrix=_operator(grid, velocity, scheme),
        laplacian=_operator(grid, np.zeros_like(velocity), scheme),
        rhs=rhs,
        warnings=_peclet_warnings(spec, grid),
    )
    logger.debug("assembled %d unknowns, %d nonzeros", grid.size, system.matrix.nnz)
    return system


def mollified_delta(grid: BallGrid, rho: float) -> FloatArray:
    """Indicator of B(0, rho) scaled to unit discrete mass h^3 * sum = 1."""
    if rho < MIN_RHO_CELLS * grid.h * (1.0 - 1e-12):
        raise ResolutionError(
            f"mollifier radius {rho} is below {MIN_RHO_CELLS:g} grid cells (h={grid.h:.4g})"
        )
    inside = grid.radii < rho
    return inside / (inside.sum() * grid.h**3)


def assemble(
    spec: DriftSpec, grid: BallGrid, rho: float, scheme: FdScheme | None = None
) -> FdSystem:
    """Operator for spec with the mollified delta of radius rho as source.

    Raises:
        ResolutionError: if rho < 2h.
        UnsupportedDriftError: if the drift is unbounded near the sphere.
    """
    system = assemble_with_source(spec, grid, mollified_delta(grid, rho), scheme)
    system.mollifier_radius = rho
    return system


@dataclass(eq=False)
class FdSolution:
    system: FdSystem
    u: FloatArray
    iterations: int
    residual: float
    residual_history: list[float]
    config: SolverConfig

    @property
    def grid(self) -> BallGrid:
        return self.system.grid

    @property
    def center_value(self) -> float:
        return float(self.u[self.grid.center_index])

    def full_field(self) -> FloatArray:
        """u on the whole N^3 grid, zero outside the ball."""
        field_ = np.zeros(self.grid.index.shape)
        field_[self.grid.interior_mask] = self.u
        return field_


def _preconditioner(matrix: sp.csr_matrix, kind: str) -> LinearOperator | None:
    if kind == "none":
        return None
    if kind == "ilu":
        ilu = spilu(matrix.tocsc(), drop_tol=ILU_DROP_TOL)
        return LinearOperator(matrix.shape, ilu.solve)
    inverse_diagonal = 1.0 / matrix.diagonal()
    return LinearOperator(matrix.shape, lambda x: inverse_diagonal * x)


def solve(system: FdSystem, config: SolverConfig | None = None) -> FdSolution:
    """Krylov solve of the assembled system.

    Raises:
        SolverError: on breakdown or when max_iter is exhausted.
        MaximumPrincipleError: if a nonnegative source yields a node below -1e-10.
    """
    config = config or SolverConfig()
    A, b = system.matrix, system.rhs
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return FdSolution(system, np.zeros_like(b), 0, 0.0, [], config)

    history: list[float] = []
    M = _preconditioner(A, config.preconditioner)
    if config.method == "bicgstab":

        def record(xk: FloatArray) -> None:
            history.append(float(np.linalg.norm(b - A @ xk)) / b_norm)

        u, info = bicgstab(A, b, rtol=config.tol, atol=0.0, maxiter=config.max_iter, M=M, callback=record)
    else:

        def record_norm(rnorm: float) -> None:
            history.append(float(rnorm))

        u, info = gmres(
            A,
            b,
            rtol=config.tol,
            atol=0.0,
            restart=GMRES_RESTART,
            maxiter=config.max_iter,
            M=M,
            callback=record_norm,
            callback_type="pr_norm",
        )

    residual = float(np.linalg.norm(b - A @ u)) / b_norm
    if info != 0:
        reason = "did not converge" if info > 0 else "broke down"
        raise SolverError(
            f"{config.method} {reason} after {len(history)} iterations (residual {residual:.3g})",
            history,
        )

    solution = FdSolution(system, u, len(history), residual, history, config)
    logger.debug("%s converged in %d iterations, residual %.3g", config.method, len(history), residual)
    if np.all(b >= 0.0):
        minimum = float(u.min())
        if minimum < MAX_PRINCIPLE_FLOOR:
            raise MaximumPrincipleError(minimum)
    return solution


def _bin_indices(radii: FloatArray, width: float) -> npt.NDArray[np.int64]:
    return np.floor(radii / width).astype(np.int64)


def radial_symmetry_deviation(
    u: FloatArray, grid: BallGrid, rho: float = 0.0
) -> float:
    """Largest within-shell spread of u relative to the shell's mean |u|.

    Shells have width h. Inside each shell the best quadratic in r is
    removed first, so only the angular variation is measured. Shells with
    r < 2 rho or r > 1 - 3h are skipped.
    """
    radii = grid.radii
    keep = (radii >= POLE_EXCLUSION_FACTOR * rho) & (radii <= 1.0 - BOUNDARY_EXCLUSION_CELLS * grid.h)
    keep &= radii > 0.0
    bins = _bin_indices(radii, grid.h)
    deviation = 0.0
    for k in np.unique(bins[keep]):
        selected = keep & (bins == k)
        rr, uu = radii[selected], u[selected]
        scale = float(np.mean(np.abs(uu)))
        if len(uu) < 2 or scale == 0.0:
            continue
        distinct = len(np.unique(np.round(rr, 12)))
        degree = min(2, distinct - 1)
        if degree > 0:
            coeffs = np.polyfit(rr - rr.mean(), uu, degree)
            uu = uu - np.polyval(coeffs, rr - rr.mean())
        deviation = max(deviation, float(np.ptp(uu)) / scale)
    return deviation


@dataclass(frozen=True)
class ShellProfile:
    radii: FloatArray
    values: FloatArray
    counts: npt.NDArray[np.int64]


def shell_average(solution: FdSolution, bin_width: float | None = None) -> ShellProfile:
    """Mean radius and mean u of each nonempty shell."""
    width = bin_width or solution.grid.h
    radii = solution.grid.radii
    bins = _bin_indices(radii, width)
    _, inverse, counts = np.unique(bins, return_inverse=True, return_counts=True)
    mean_r = np.bincount(inverse, weights=radii) / counts
    mean_u = np.bincount(inverse, weights=solution.u) / counts
    return ShellProfile(radii=mean_r, values=mean_u, counts=counts)


def shell_flux(solution: FdSolution, radius: float = FLUX_RADIUS) -> float:
    """-omega r^2 u'(r) e^{-D(0, r)} from a quadratic fit of shell averages.

    For r outside the mollifier this tracks omega Q_rho, which tends to 1 as
    rho shrinks.
    """
    spec = solution.system.spec
    shells = shell_average(solution)
    window = np.abs(shells.radii - radius) <= SHELL_FIT_CELLS * solution.grid.h
    if window.sum() < 3:
        raise ConfigurationError(f"too few shells around r={radius} for a flux estimate")
    coeffs = np.polyfit(shells.radii[window] - radius, shells.values[window], 2)
    slope = coeffs[1]
    return float(
        -sphere_area(FD_DIMENSION) * radius**2 * slope * math.exp(-drift_integral(spec, 0.0, radius))
    )


@dataclass(frozen=True)
class CrossValidation:
    radii: FloatArray
    fd_values: FloatArray
    reference: FloatArray

    @property
    def errors(self) -> FloatArray:
        return np.abs(self.fd_values - self.reference) / np.abs(self.reference)

    @property
    def max_error(self) -> float:
        return float(self.errors.max())


def cross_validate(
    solution: FdSolution,
    q: QuadratureConfig | None = None,
    r_min: float = FD_CROSS_CHECK_RANGE[0],
    r_max: float = FD_CROSS_CHECK_RANGE[1],
) -> CrossValidation:
    """Shell averages against the radial mollified solution on r_min < r < r_max."""
    rho = solution.system.mollifier_radius
    if rho is None:
        raise ConfigurationError("cross-validation needs a system assembled with a mollifier")
    spec = solution.system.spec
    q = q or QuadratureConfig()
    shells = shell_average(solution)
    window = (shells.radii > r_min) & (shells.radii < r_max)
    radii = shells.radii[window]
    factor = mollified_mass_factor(spec, FD_DIMENSION, rho, q)
    reference = np.array(
        [
            factor * green_value(spec, FD_DIMENSION, float(r), q)
            if r >= rho
            else mollified_green_value(spec, FD_DIMENSION, rho, float(r), q)
            for r in radii
        ]
    )
    return CrossValidation(radii=radii, fd_values=shells.values[window], reference=reference)


def blowup_source(
    grid: BallGrid,
    center: Sequence[float] = BLOWUP_CENTER,
    radius: float = BLOWUP_RADIUS,
    amplitude: float = 1.0,
) -> FloatArray:
    """amplitude times the indicator of B(center, radius) at interior nodes."""
    offset = grid.points - np.asarray(center, dtype=float)
    return amplitude * (np.linalg.norm(offset, axis=1) < radius).astype(float)


def radial_comparator(
    spec: DriftSpec,
    center_distance: float = BLOWUP_CENTER[0],
    radius: float = BLOWUP_RADIUS,
    q: QuadratureConfig | None = None,
) -> float:
    """int G(|y|) 1_{B(c, radius)}(y) dy with |c| = center_distance.

    The sphere |y| = s meets the ball in a cap of area pi s (radius^2 - (d - s)^2) / d.
    """
    q = q or QuadratureConfig()
    d = center_distance

    def integrand(s: float) -> float:
        cap = math.pi * s * (radius**2 - (d - s) ** 2) / d
        return green_value(spec, FD_DIMENSION, s, q) * cap

    value, _ = adaptive_quad(integrand, d - radius, d + radius, q)
    return value


@dataclass(frozen=True)
class BlowupRow:
    m: int
    u_center: float
    iterations: int
    residual: float
    radial_comparator: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "u_center": self.u_center,
            "iterations": self.iterations,
            "residual": self.residual,
            "radial_comparator": self.radial_comparator,
            "peclet_warning": bool(self.warnings),
        }


def poisson_blowup_experiment(
    C: float,
    m_list: Sequence[int],
    N: int,
    n: int = FD_DIMENSION,
    amplitude: float = 1.0,
    scheme: FdScheme | None = None,
    config: SolverConfig | None = None,
    q: QuadratureConfig | None = None,
) -> list[BlowupRow]:
    """u_m(0) for the indicator source of B((1/2, 0, 0), 0.1), one row per m."""
    if n != FD_DIMENSION:
        raise ConfigurationError(f"the grid solver is three-dimensional, got n={n}")
    if not m_list or any(b <= a for a, b in zip(m_list, m_list[1:], strict=False)):
        raise ConfigurationError("m_list must be nonempty and strictly increasing")
    grid = BallGrid(N)
    source = blowup_source(grid, amplitude=amplitude)
    rows = []
    for m in m_list:
        spec = DriftSpec.truncated_inverse(C, m)
        solution = solve(assemble_with_source(spec, grid, source, scheme), config)
        comparator = amplitude * radial_comparator(spec, q=q) if amplitude else 0.0
        rows.append(
            BlowupRow(
                m=m,
                u_center=solution.center_value,
                iterations=solution.iterations,
                residual=solution.residual,
                radial_comparator=comparator,
                warnings=tuple(solution.system.warnings),
            )
        )
        logger.info("blowup C=%g m=%d: u(0)=%.6g", C, m, solution.center_value)
    return rows


def solution_summary(solution: FdSolution) -> dict[str, Any]:
    system = solution.system
    rho = system.mollifier_radius
    return {
        "N": system.grid.N,
        "h": system.grid.h,
        "rho": rho,
        "m": system.spec.m,
        "C": system.spec.C,
        "iters": solution.iterations,
        "residual": solution.residual,
        "symmetry_deviation": radial_symmetry_deviation(solution.u, system.grid, rho or 0.0),
        "scheme": system.scheme.to_dict(),
        "solver": solution.config.to_dict(),
        "threads": FD_SOLVE_THREADS,
    }


def write_solution(solution: FdSolution, directory: Path) -> tuple[Path, Path]:
    """Interior nodes as "x,y,z,u" rows plus a JSON summary."""
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / SOLUTION_CSV
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SOLUTION_CSV_HEADER)
        for (x, y, z), value in zip(solution.grid.points, solution.u, strict=True):
            writer.writerow(format(v, FLOAT_FORMAT) for v in (x, y, z, value))
    json_path = write_json(solution_summary(solution), directory / SOLUTION_JSON)
    logger.info("wrote solution to %s", directory)
    return csv_path, json_path
