"""Experiment runners behind the green_lab command line."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .bounds import (
    UpperBoundStatus,
    divergence_lower_bound,
    interior_lower_bound,
    upper_bound_status,
)
from .const import (
    BETA_ONE_CONTINUITY,
    BETA_ONE_PROBE,
    C0_UNIFORMITY,
    CAUCHY_ACCEPT,
    CRITICAL_SLOPE_TOLERANCE,
    DEFAULT_MESH_SIZE,
    DEFAULT_R_EVAL,
    DEFAULT_RHO_CELLS,
    FD_ACCEPT,
    FD_DIMENSION,
    FIT_DROPPED_ROWS,
    FIT_MIN_ROWS,
    FIT_R2_TARGET,
    FLUX_RADIUS,
    IDENTITY_ACCEPT,
    SHELL_FIT_CELLS,
    SUBCRITICAL_SLOPE_FRACTION,
    SWEEP_CSV_HEADER,
    SWEEP_WORKERS,
)
from .drift import DriftSpec, regime
from .errors import ConfigurationError
from .fd import (
    BallGrid,
    FdScheme,
    SolverConfig,
    assemble,
    cross_validate,
    poisson_blowup_experiment,
    radial_symmetry_deviation,
    shell_flux,
    solution_summary,
    solve,
)
from .radial import (
    QuadratureConfig,
    RadialGreenProfile,
    build_profile,
    green_value,
    mollified_mass_factor,
    sphere_area,
    zero_drift_green,
)
from .report import ExperimentReport, LogFit, ReportKind
from .verifier import (
    certified_family,
    normalization_search,
    sobolev_integrals,
    verification_report,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepConfig:
    """Concurrency and profile resolution shared by the sweeps."""

    workers: int = SWEEP_WORKERS
    mesh_size: int = DEFAULT_MESH_SIZE

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        return {"workers": self.workers, "mesh_size": self.mesh_size}


def _parallel_map[T, R](func: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Map in a thread pool; results come back in input order."""
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _sorted_unique(values: Sequence[float], what: str) -> list[Any]:
    if not values:
        raise ConfigurationError(f"{what} must not be empty")
    ordered = sorted(values)
    if len(set(ordered)) != len(ordered):
        raise ConfigurationError(f"{what} contains duplicates")
    return ordered


def fit_log_slope(m_values: Sequence[float], G_values: Sequence[float]) -> LogFit:
    """Least squares G = slope * log(m) + intercept.

    When r^2 falls below 0.999 the two smallest m are dropped once, provided
    at least three points remain.
    """
    if len(m_values) != len(G_values) or len(m_values) < 2:
        raise ConfigurationError("fit needs at least two matching (m, G) pairs")
    order = np.argsort(m_values)
    x = np.log(np.asarray(m_values, dtype=float)[order])
    y = np.asarray(G_values, dtype=float)[order]

    def fit(x: np.ndarray, y: np.ndarray, dropped: int) -> LogFit:
        slope, intercept = np.polyfit(x, y, 1)
        residual = float(np.sum((y - (slope * x + intercept)) ** 2))
        total = float(np.sum((y - y.mean()) ** 2))
        r_squared = 1.0 - residual / total if total > 0.0 else 1.0
        return LogFit(float(slope), float(intercept), r_squared, dropped)

    result = fit(x, y, 0)
    if result.r_squared < FIT_R2_TARGET and len(x) - FIT_DROPPED_ROWS >= 3:
        logger.warning(
            "log fit r^2=%.5f below %.3f; dropping the %d smallest m",
            result.r_squared,
            FIT_R2_TARGET,
            FIT_DROPPED_ROWS,
        )
        result = fit(x[FIT_DROPPED_ROWS:], y[FIT_DROPPED_ROWS:], FIT_DROPPED_ROWS)
    return result


def run_m_sweep(
    C: float,
    n: int,
    m_list: Sequence[int],
    r_eval: float = DEFAULT_R_EVAL,
    q: QuadratureConfig | None = None,
    sweep: SweepConfig | None = None,
) -> ExperimentReport:
    """G_m(r_eval) across truncation levels, with the log-divergence fit.

    Args:
        C: drift strength of the truncated inverse family.
        n: dimension.
        m_list: at least four truncation levels, any order.
        r_eval: evaluation radius.
        q: quadrature tolerances.
        sweep: concurrency and mesh settings.

    Returns:
        An MSweep report whose rows are ordered by m.
    """
    q = q or QuadratureConfig()
    sweep = sweep or SweepConfig()
    ms = _sorted_unique(m_list, "m_list")
    if len(ms) < FIT_MIN_ROWS:
        raise ConfigurationError(f"an m-sweep needs at least {FIT_MIN_ROWS} values of m")

    def build(m: int) -> RadialGreenProfile:
        logger.info("m-sweep point C=%g m=%d", C, m)
        return build_profile(DriftSpec.truncated_inverse(C, m), n, sweep.mesh_size, q)

    profiles = _parallel_map(build, ms, sweep.workers)
    bound_reports = _parallel_map(interior_lower_bound, profiles, sweep.workers)

    rows = []
    for m, profile, bound in zip(ms, profiles, bound_reports, strict=True):
        value = profile.value(r_eval)
        rows.append(
            {
                "m": m,
                "C": C,
                "n": n,
                "r": r_eval,
                "G": value,
                "r_pow_n2_times_G": r_eval ** (n - 2) * value,
                "c0_empirical": bound.c0_empirical,
                "derivative_c0": bound.derivative_c0,
                "divergence_lower_bound": (
                    divergence_lower_bound(bound.derivative_c0, n, m, q) if C >= 1.0 else None
                ),
            }
        )

    G_values = [row["G"] for row in rows]
    fit = fit_log_slope(ms, G_values)
    status = upper_bound_status(profiles, r_eval)
    reference_slope = 1.0 / sphere_area(n)
    c0 = [row["c0_empirical"] for row in rows]
    c0_spread = (max(c0) - min(c0)) / min(c0)

    checks: dict[str, bool] = {
        "c0_positive": min(c0) > 0.0,
        "c0_m_uniform": c0_spread <= C0_UNIFORMITY,
    }
    if C >= 1.0:
        checks["diverges"] = status.status is UpperBoundStatus.NO_UNIFORM_UPPER and all(
            b > a for a, b in zip(G_values, G_values[1:], strict=False)
        )
        checks["divergence_bound"] = all(
            row["G"] >= row["divergence_lower_bound"] for row in rows
        )
    if C == 1.0:
        checks["slope_matches"] = (
            abs(fit.slope - reference_slope) <= CRITICAL_SLOPE_TOLERANCE * reference_slope
            and fit.r_squared > FIT_R2_TARGET
        )
    if C < 1.0:
        checks["slope_vanishes"] = abs(fit.slope) < SUBCRITICAL_SLOPE_FRACTION * reference_slope
        checks["cauchy"] = abs(G_values[-1] - G_values[-2]) < CAUCHY_ACCEPT * G_values[-2]

    return ExperimentReport(
        kind=ReportKind.M_SWEEP,
        columns=(*SWEEP_CSV_HEADER, "c0_empirical", "derivative_c0", "divergence_lower_bound"),
        rows=rows,
        config_echo={
            "C": C,
            "n": n,
            "m_list": ms,
            "r_eval": r_eval,
            "quadrature": q.to_dict(),
            "sweep": sweep.to_dict(),
        },
        fit=fit,
        summary={
            "slope": fit.slope,
            "reference_slope": reference_slope,
            "upper_bound": status.to_dict(),
            "c0_spread": c0_spread,
        },
        checks=checks,
    )


def run_c_sweep(
    m: int,
    C_list: Sequence[float],
    n: int,
    r_eval: float = DEFAULT_R_EVAL,
    q: QuadratureConfig | None = None,
    sweep: SweepConfig | None = None,
) -> ExperimentReport:
    """G(r_eval) across drift strengths at fixed m, labelled by regime."""
    q = q or QuadratureConfig()
    sweep = sweep or SweepConfig()
    Cs = _sorted_unique(C_list, "C_list")
    specs = [DriftSpec.truncated_inverse(C, m) for C in Cs]
    values = _parallel_map(lambda spec: green_value(spec, n, r_eval, q), specs, sweep.workers)
    rows = [
        {
            "m": m,
            "C": spec.C,
            "n": n,
            "r": r_eval,
            "G": value,
            "r_pow_n2_times_G": r_eval ** (n - 2) * value,
            "regime": regime(spec),
        }
        for spec, value in zip(specs, values, strict=True)
    ]
    return ExperimentReport(
        kind=ReportKind.C_SWEEP,
        columns=(*SWEEP_CSV_HEADER, "regime"),
        rows=rows,
        config_echo={
            "m": m,
            "C_list": Cs,
            "n": n,
            "r_eval": r_eval,
            "quadrature": q.to_dict(),
            "sweep": sweep.to_dict(),
        },
        summary={"regimes": sorted({row["regime"] for row in rows})},
        checks={
            "finite": all(math.isfinite(v) for v in values),
            "monotone_in_C": all(b > a for a, b in zip(values, values[1:], strict=False)),
        },
    )


def run_beta_sweep(
    C: float,
    n: int,
    beta_list: Sequence[float],
    r_eval: float = DEFAULT_R_EVAL,
    q: QuadratureConfig | None = None,
    sweep: SweepConfig | None = None,
) -> ExperimentReport:
    """G(r_eval) for the power-regularized family, compared with its beta = 1 limit.

    At beta = 1 the drift is the constant -C, which is represented exactly
    by a tabulated drift.
    """
    q = q or QuadratureConfig()
    sweep = sweep or SweepConfig()
    betas = _sorted_unique(beta_list, "beta_list")
    specs = [DriftSpec.power_regularized(C, beta) for beta in betas]
    values = _parallel_map(lambda spec: green_value(spec, n, r_eval, q), specs, sweep.workers)
    limit = green_value(DriftSpec.tabulated((0.0, 1.0), (-C, -C)), n, r_eval, q)
    laplace = zero_drift_green(n, r_eval)

    rows = [
        {
            "beta": beta,
            "C": C,
            "n": n,
            "r": r_eval,
            "G": value,
            "zero_drift_G": laplace,
            "beta_one_limit": limit,
        }
        for beta, value in zip(betas, values, strict=True)
    ]
    checks = {
        "finite": all(math.isfinite(v) for v in values),
        "monotone_in_beta": all(b < a for a, b in zip(values, values[1:], strict=False)),
    }
    if betas[-1] >= BETA_ONE_PROBE:
        checks["beta_one_continuity"] = abs(values[-1] - limit) <= BETA_ONE_CONTINUITY * limit
    return ExperimentReport(
        kind=ReportKind.BETA_SWEEP,
        columns=("beta", "C", "n", "r", "G", "zero_drift_G", "beta_one_limit"),
        rows=rows,
        config_echo={
            "C": C,
            "n": n,
            "beta_list": betas,
            "r_eval": r_eval,
            "quadrature": q.to_dict(),
            "sweep": sweep.to_dict(),
        },
        summary={"beta_one_limit": limit, "zero_drift_G": laplace},
        checks=checks,
    )


def run_verify(
    spec: DriftSpec,
    n: int,
    mis_scale: float = 1.0,
    q: QuadratureConfig | None = None,
    sweep: SweepConfig | None = None,
) -> ExperimentReport:
    """Identity residuals over the certified family; mis_scale rescales the profile."""
    q = q or QuadratureConfig()
    sweep = sweep or SweepConfig()
    profile = build_profile(spec, n, sweep.mesh_size, q)
    if mis_scale != 1.0:
        profile = profile.rescaled(mis_scale)
    family = certified_family()
    report = verification_report(profile, family, q)
    lam = normalization_search(spec, n, q)
    sobolev = sobolev_integrals(profile, q=q)

    rows = [
        {"phi": tf.name, "phi_at_0": tf.phi_at_0, "R": value}
        for tf, (_, value) in zip(family, report.residuals, strict=True)
    ]
    return ExperimentReport(
        kind=ReportKind.VERIFY,
        columns=("phi", "phi_at_0", "R"),
        rows=rows,
        config_echo={
            "spec": spec.to_dict(),
            "n": n,
            "mis_scale": mis_scale,
            "quadrature": q.to_dict(),
            "sweep": sweep.to_dict(),
        },
        summary={
            "max_abs_residual": report.max_abs_residual,
            "normalization": lam,
            "flux_deviation": profile.flux_deviation(),
            "gradient_l1": sobolev.gradient_l1,
            "gradient_l2_squared": sobolev.gradient_l2_squared,
            "verification": report.to_dict(),
        },
        checks={
            "identity": report.max_abs_residual <= IDENTITY_ACCEPT,
            "normalization": abs(lam - 1.0) <= IDENTITY_ACCEPT,
            "sobolev_finite": sobolev.finite,
        },
    )


def run_fd_check(
    C: float,
    m: int,
    N: int,
    rho: float | None = None,
    scheme: FdScheme | None = None,
    solver: SolverConfig | None = None,
    q: QuadratureConfig | None = None,
) -> ExperimentReport:
    """Grid solve with a mollified delta, checked against the radial solution."""
    q = q or QuadratureConfig()
    scheme = scheme or FdScheme()
    solver = solver or SolverConfig()
    grid = BallGrid(N)
    rho = DEFAULT_RHO_CELLS * grid.h if rho is None else rho
    spec = DriftSpec.truncated_inverse(C, m)

    solution = solve(assemble(spec, grid, rho, scheme), solver)
    validation = cross_validate(solution, q)
    symmetry = radial_symmetry_deviation(solution.u, grid, rho)
    expected_flux = mollified_mass_factor(spec, FD_DIMENSION, rho, q)

    checks = {
        "cross_validation": validation.max_error <= FD_ACCEPT,
        "radial_symmetry": symmetry <= FD_ACCEPT,
    }
    flux = None
    if rho + SHELL_FIT_CELLS * grid.h < FLUX_RADIUS:
        flux = shell_flux(solution, FLUX_RADIUS)
        checks["mass_flux"] = abs(flux - expected_flux) <= FD_ACCEPT * expected_flux

    rows = [
        {"r": r, "u_fd": u, "u_radial": ref, "rel_error": err}
        for r, u, ref, err in zip(
            validation.radii,
            validation.fd_values,
            validation.reference,
            validation.errors,
            strict=True,
        )
    ]
    summary = solution_summary(solution)
    summary.update(
        {
            "max_error": validation.max_error,
            "flux": flux,
            "expected_flux": expected_flux,
            "u_min": float(solution.u.min()),
        }
    )
    return ExperimentReport(
        kind=ReportKind.FD_CHECK,
        columns=("r", "u_fd", "u_radial", "rel_error"),
        rows=rows,
        config_echo={
            "C": C,
            "m": m,
            "N": N,
            "rho": rho,
            "scheme": scheme.to_dict(),
            "solver": solver.to_dict(),
            "quadrature": q.to_dict(),
        },
        summary=summary,
        checks=checks,
        warnings=list(solution.system.warnings),
    )


def run_blowup(
    C: float,
    m_list: Sequence[int],
    N: int,
    amplitude: float = 1.0,
    scheme: FdScheme | None = None,
    solver: SolverConfig | None = None,
    q: QuadratureConfig | None = None,
) -> ExperimentReport:
    """u_m(0) for a source away from the pole as m grows."""
    scheme = scheme or FdScheme()
    solver = solver or SolverConfig()
    q = q or QuadratureConfig()
    ms = _sorted_unique(m_list, "m_list")
    results = poisson_blowup_experiment(
        C, ms, N, amplitude=amplitude, scheme=scheme, config=solver, q=q
    )
    rows = [{"C": C, **row.to_dict()} for row in results]
    u = [row.u_center for row in results]
    increments = [b - a for a, b in zip(u, u[1:], strict=False)]

    checks: dict[str, bool] = {}
    if amplitude == 0.0:
        checks["zero_source"] = all(value == 0.0 for value in u)
    elif C >= 1.0:
        checks["increasing"] = all(step > 0.0 for step in increments)
    elif len(increments) >= 2:
        checks["flattening"] = increments[-1] < increments[0]

    warnings = sorted({w for row in results for w in row.warnings})
    return ExperimentReport(
        kind=ReportKind.BLOWUP,
        columns=(
            "m",
            "C",
            "u_center",
            "radial_comparator",
            "iterations",
            "residual",
            "peclet_warning",
        ),
        rows=rows,
        config_echo={
            "C": C,
            "m_list": ms,
            "N": N,
            "amplitude": amplitude,
            "scheme": scheme.to_dict(),
            "solver": solver.to_dict(),
            "quadrature": q.to_dict(),
        },
        summary={"u_center": u, "increments": increments},
        checks=checks,
        warnings=warnings,
    )

