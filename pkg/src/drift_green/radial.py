"""Radial Green's function with pole at the origin.

The radial equation G'' + ((n-1)/r) G' + b(r) G' = 0 is a conservation law
after multiplying by the integrating factor e^{int_1^r b}:

    r^{n-1} G'(r) e^{D(r,1)} = K.

The constant is fixed by the pole normalization r^{n-1} G'(r) -> -1/omega
as r -> 0, which gives r^{n-1} G'(r) = -exp(D(0, r)) / omega. Every
exponential below is an exponential of a difference of D values.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.integrate import quad
from scipy.special import gammaln

from .const import (
    BOUNDARY_LAYER_POINTS,
    DEFAULT_ABS_TOL,
    DEFAULT_BOUNDARY_GRADING,
    DEFAULT_MAX_SUBDIVISIONS,
    DEFAULT_MESH_SIZE,
    DEFAULT_REL_TOL,
    FLOAT_FORMAT,
    MESH_INNER_RADIUS,
    MIN_MESH_SIZE,
    PANEL_FLOOR,
    PANEL_RATIO,
    PROFILE_CSV_HEADER,
    QUAD_ACCEPT_FACTOR,
)
from .drift import (
    DriftFamily,
    DriftSpec,
    branch_points,
    drift_integral,
    radial_component,
)
from .errors import (
    ConfigurationError,
    DomainError,
    LogSpaceOverflowError,
    QuadratureError,
)

logger = logging.getLogger(__name__)

LOG_FLOAT_MAX: float = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and grading for boundary-layer quadrature."""

    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS
    boundary_grading: float = DEFAULT_BOUNDARY_GRADING

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ConfigurationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ConfigurationError("max_subdivisions must be at least 1")
        if self.boundary_grading < 1.0:
            raise ConfigurationError("boundary grading must be >= 1")

    def tightened(self, factor: float = 0.5) -> QuadratureConfig:
        """Same configuration with both tolerances scaled by factor."""
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_subdivisions": self.max_subdivisions,
            "boundary_grading": self.boundary_grading,
        }


def sphere_area(n: int) -> float:
    """Surface area omega_{n-1} = 2 pi^{n/2} / Gamma(n/2) of the unit sphere in R^n."""
    return float(np.exp(np.log(2.0) + 0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def _check_dimension(n: int) -> None:
    if int(n) != n or n < 3:
        raise ConfigurationError(f"dimension n must be an integer >= 3, got {n}")


def boundary_flux_is_finite(spec: DriftSpec) -> bool:
    """Whether D(0, 1), hence G'(1), is finite."""
    return spec.family is not DriftFamily.SMALL_CONSTANT


def log_shift(spec: DriftSpec) -> float:
    """Reference value subtracted from D(0, s) inside integrands."""
    if boundary_flux_is_finite(spec):
        return drift_integral(spec, 0.0, 1.0)
    return 0.0


def _log_abs_derivative(spec: DriftSpec, n: int, r: float) -> float:
    return -math.log(sphere_area(n)) - (n - 1) * math.log(r) + drift_integral(spec, 0.0, r)


def exp_checked(log_value: float, what: str) -> float:
    if log_value > LOG_FLOAT_MAX:
        raise LogSpaceOverflowError(f"{what} overflows: log value {log_value:.1f}")
    return math.exp(log_value)


def log_abs_green_derivative(spec: DriftSpec, n: int, r: float) -> float:
    """log |G'(r)|, finite for every 0 < r < 1."""
    _check_dimension(n)
    if not 0.0 < r < 1.0:
        raise DomainError(f"radius must lie in (0, 1), got {r}")
    return _log_abs_derivative(spec, n, r)


def green_derivative(spec: DriftSpec, n: int, r: float) -> float:
    """G'(r) = -(1/omega) r^{-(n-1)} exp(D(0, r)).

    Raises:
        DomainError: if r lies outside (0, 1).
        LogSpaceOverflowError: if |G'(r)| is not representable.
    """
    return -exp_checked(log_abs_green_derivative(spec, n, r), "G'(r)")


def pole_flux(spec: DriftSpec, n: int, r: float = MESH_INNER_RADIUS) -> float:
    """r^{n-1} G'(r) e^{-D(0, r)}, read off green_derivative near the pole.

    The integrating factor makes this independent of r; it equals -1/omega
    under the pole normalization.
    """
    slope = green_derivative(spec, n, r)
    log_value = math.log(abs(slope)) + (n - 1) * math.log(r) - drift_integral(spec, 0.0, r)
    return math.copysign(math.exp(log_value), slope)


def panel_breaks(spec: DriftSpec, lo: float, hi: float) -> list[float]:
    """Breakpoints for [lo, hi]: branch points plus geometric grading toward 1."""
    points = {lo, hi}
    points.update(p for p in branch_points(spec) if lo < p < hi)

    knee = spec.branch_point
    floor = 1.0 - knee if knee is not None else PANEL_FLOOR
    gap = 1.0 - lo
    while True:
        gap *= PANEL_RATIO
        if gap < floor:
            break
        x = 1.0 - gap
        if x >= hi:
            break
        if x > lo:
            points.add(x)

    if knee is not None and spec.C > 1.0 and hi > knee:
        # e^{-Cm(1-s)} drops by e^{-C} across the layer; one subpanel per unit of C
        pieces = math.ceil(spec.C)
        start = max(lo, knee)
        for k in range(1, pieces):
            x = knee + k * (1.0 - knee) / pieces
            if start < x < hi:
                points.add(x)
    return sorted(points)


def adaptive_quad(
    func: Callable[[float], float], a: float, b: float, q: QuadratureConfig, **kwargs: Any
) -> tuple[float, float]:
    result = quad(
        func,
        a,
        b,
        epsabs=q.abs_tol,
        epsrel=q.rel_tol,
        limit=q.max_subdivisions,
        full_output=1,
        **kwargs,
    )
    return float(result[0]), float(result[1])


def integrate_panels(
    func: Callable[[float], float],
    breaks: list[float],
    q: QuadratureConfig,
    what: str,
    end_singularity: tuple[Callable[[float], float], float] | None = None,
) -> float:
    """Sum adaptive quadrature over consecutive panels.

    ``end_singularity=(smooth, alpha)`` replaces the integrand on a final
    panel ending at 1 by smooth(s) * (1 - s)^alpha, integrated with an
    algebraic weight.

    Raises:
        QuadratureError: if the summed error estimate exceeds the tolerance.
    """
    total = 0.0
    error = 0.0
    for left, right in zip(breaks, breaks[1:], strict=False):
        if right == 1.0 and end_singularity is not None:
            smooth, alpha = end_singularity
            value, err = adaptive_quad(smooth, left, right, q, weight="alg", wvar=(0.0, alpha))
        else:
            value, err = adaptive_quad(func, left, right, q)
        total += value
        error += err

    accepted = QUAD_ACCEPT_FACTOR * max(q.abs_tol, q.rel_tol * abs(total))
    if not math.isfinite(total) or error > accepted:
        raise QuadratureError(f"quadrature of {what} did not converge", error)
    logger.debug("%s: %d panels, error estimate %.3g", what, len(breaks) - 1, error)
    return total


def _shifted_flux_integral(
    spec: DriftSpec, n: int, lo: float, hi: float, q: QuadratureConfig
) -> float:
    """int_lo^hi s^{1-n} exp(D(0,s) - shift) ds, summed over smooth panels."""
    if hi <= lo:
        return 0.0
    shift = log_shift(spec)

    def integrand(s: float) -> float:
        return s ** (1 - n) * math.exp(drift_integral(spec, 0.0, s) - shift)

    end: tuple[Callable[[float], float], float] | None = None
    if spec.family is DriftFamily.SMALL_CONSTANT:
        # e^{D(0,s)} = (1 - s)^{-epsilon} exactly
        assert spec.epsilon is not None
        end = (lambda s: s ** (1 - n), -spec.epsilon)
    return integrate_panels(
        integrand,
        panel_breaks(spec, lo, hi),
        q,
        f"G' over [{lo}, {hi}] for {spec.label}",
        end_singularity=end,
    )


def _flux_integral(spec: DriftSpec, n: int, lo: float, hi: float, q: QuadratureConfig) -> float:
    """int_lo^hi |G'(s)| ds in physical units."""
    shifted = _shifted_flux_integral(spec, n, lo, hi, q)
    if shifted == 0.0:
        return 0.0
    log_value = log_shift(spec) + math.log(shifted) - math.log(sphere_area(n))
    return exp_checked(log_value, "G increment")


def green_value(spec: DriftSpec, n: int, r: float, q: QuadratureConfig | None = None) -> float:
    """G(r) = int_r^1 -G'(s) ds, with G(1) = 0 exactly.

    Raises:
        DomainError: if r lies outside (0, 1].
        QuadratureError: if the panel sum misses the requested tolerance.
    """
    _check_dimension(n)
    if not 0.0 < r <= 1.0:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    if r == 1.0:
        return 0.0
    return _flux_integral(spec, n, r, 1.0, q or QuadratureConfig())


def graded_mesh(spec: DriftSpec, mesh_size: int, grading: float = DEFAULT_BOUNDARY_GRADING) -> npt.NDArray[np.float64]:
    """Radii in (0, 1], geometric toward 0 and clustered as 1 - u^grading toward 1."""
    if mesh_size < MIN_MESH_SIZE:
        raise ConfigurationError(f"mesh_size must be at least {MIN_MESH_SIZE}")
    n_inner = mesh_size // 2
    inner = np.geomspace(MESH_INNER_RADIUS, 0.5, n_inner, endpoint=False)
    u = np.linspace(1.0, 0.0, mesh_size - n_inner)
    outer = 1.0 - 0.5 * u**grading
    parts = [inner, outer]

    knee = spec.branch_point
    if knee is not None:
        layer = np.linspace(knee, 1.0, BOUNDARY_LAYER_POINTS + 2)[:-1]
        parts.append(layer)
    return np.unique(np.concatenate(parts))


@dataclass(frozen=True, eq=False)
class RadialGreenProfile:
    """Tabulated G and G' on a graded mesh, with exact evaluators.

    ``flux_constant`` is r^{n-1} G'(r) e^{D(r, flux_reference)}, constant
    over the mesh. ``flux_reference`` is 1 unless D(0, 1) diverges, in which
    case it is the largest mesh radius below 1. The evaluators derive G and
    G' from the flux constant, so a mis-scaled constant shows up everywhere.
    """

    spec: DriftSpec
    n: int
    mesh: npt.NDArray[np.float64]
    G: npt.NDArray[np.float64]
    Gprime: npt.NDArray[np.float64]
    flux_constant: float
    flux_reference: float = 1.0
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def _log_abs_flux(self, r: float) -> float:
        """log |r^{n-1} G'(r)| from the flux constant."""
        if r <= self.flux_reference:
            offset = -drift_integral(self.spec, r, self.flux_reference)
        else:
            offset = drift_integral(self.spec, self.flux_reference, r)
        return math.log(abs(self.flux_constant)) + offset

    def radial_flux(self, r: float) -> float:
        """r^{n-1} G'(r) at any 0 <= r < 1; tends to -1/omega at the pole when normalized."""
        if not 0.0 <= r < 1.0:
            raise DomainError(f"radius must lie in [0, 1), got {r}")
        if self.flux_constant == 0.0:
            return 0.0
        return math.copysign(exp_checked(self._log_abs_flux(r), "r^{n-1} G'(r)"), self.flux_constant)

    @property
    def normalization(self) -> float:
        """-omega times the pole flux; 1 for a correctly normalized profile."""
        return -sphere_area(self.n) * self.radial_flux(0.0)

    def value(self, r: float) -> float:
        """G(r) at any 0 < r <= 1."""
        return self.normalization * green_value(self.spec, self.n, r, self.quadrature)

    def derivative(self, r: float) -> float:
        """G'(r) at any 0 < r < 1."""
        if not 0.0 < r < 1.0:
            raise DomainError(f"radius must lie in (0, 1), got {r}")
        if self.flux_constant == 0.0:
            return 0.0
        log_value = self._log_abs_flux(r) - (self.n - 1) * math.log(r)
        return math.copysign(exp_checked(log_value, "G'(r)"), self.flux_constant)

    def rescaled(self, factor: float) -> RadialGreenProfile:
        """The same profile multiplied by factor; factor != 1 gives a mis-normalized copy."""
        return replace(
            self,
            G=self.G * factor,
            Gprime=self.Gprime * factor,
            flux_constant=self.flux_constant * factor,
        )

    def flux_values(self) -> npt.NDArray[np.float64]:
        """r^{n-1} G'(r) e^{D(r, flux_reference)} at mesh radii up to the reference."""
        values = []
        for r, gp in zip(self.mesh, self.Gprime, strict=True):
            if r > self.flux_reference or gp == 0.0:
                continue
            log_value = (
                (self.n - 1) * math.log(r)
                + math.log(-gp)
                + drift_integral(self.spec, float(r), self.flux_reference)
            )
            values.append(-exp_checked(log_value, "flux"))
        return np.asarray(values)

    def flux_deviation(self) -> float:
        """Max relative deviation of the conserved flux from flux_constant."""
        values = self.flux_values()
        return float(np.max(np.abs(values - self.flux_constant)) / abs(self.flux_constant))

    def csv_rows(self) -> Iterator[tuple[str, str, str]]:
        """Rows of (r, G, G') in strictly decreasing r, 17 significant digits.

        The r = 1 row is left out when G'(1) diverges.
        """
        for r, g, gp in zip(self.mesh[::-1], self.G[::-1], self.Gprime[::-1], strict=True):
            if not math.isfinite(gp):
                continue
            yield (format(r, FLOAT_FORMAT), format(g, FLOAT_FORMAT), format(gp, FLOAT_FORMAT))


def build_profile(
    spec: DriftSpec,
    n: int,
    mesh_size: int = DEFAULT_MESH_SIZE,
    q: QuadratureConfig | None = None,
) -> RadialGreenProfile:
    """Tabulate G and G' on a graded mesh.

    G is accumulated inward from G(1) = 0 by quadrature between consecutive
    mesh radii, so every value carries the panel-sum tolerance.
    """
    _check_dimension(n)
    q = q or QuadratureConfig()
    mesh = graded_mesh(spec, mesh_size, q.boundary_grading)

    shift = log_shift(spec)
    log_scale = shift - math.log(sphere_area(n))
    shifted = np.zeros_like(mesh)
    for k in range(len(mesh) - 2, -1, -1):
        shifted[k] = shifted[k + 1] + _shifted_flux_integral(
            spec, n, float(mesh[k]), float(mesh[k + 1]), q
        )
    with np.errstate(divide="ignore"):
        log_G = np.log(shifted) + log_scale
    if np.any(log_G > LOG_FLOAT_MAX):
        raise LogSpaceOverflowError(f"G overflows for {spec.label}")
    G = np.exp(log_G)
    G[-1] = 0.0

    Gprime = np.empty_like(mesh)
    for k, r in enumerate(mesh):
        if r < 1.0:
            Gprime[k] = green_derivative(spec, n, float(r))
        elif boundary_flux_is_finite(spec):
            Gprime[k] = -exp_checked(_log_abs_derivative(spec, n, 1.0), "G'(1)")
        else:
            Gprime[k] = -math.inf

    reference = 1.0 if boundary_flux_is_finite(spec) else float(mesh[-2])
    pole = pole_flux(spec, n)
    log_flux = math.log(abs(pole)) + drift_integral(spec, 0.0, reference)
    flux_constant = math.copysign(exp_checked(log_flux, "flux constant"), pole)
    for arr in (mesh, G, Gprime):
        arr.setflags(write=False)

    logger.debug("built profile for %s, n=%d on %d radii", spec.label, n, len(mesh))
    return RadialGreenProfile(
        spec=spec,
        n=n,
        mesh=mesh,
        G=G,
        Gprime=Gprime,
        flux_constant=flux_constant,
        flux_reference=reference,
        quadrature=q,
    )


def zero_drift_green(n: int, r: float) -> float:
    """Closed form (r^{2-n} - 1) / (omega (n-2)) of the Laplacian Green's function."""
    return (r ** (2 - n) - 1.0) / (sphere_area(n) * (n - 2))


def ode_residual(
    spec: DriftSpec,
    n: int,
    radii: npt.ArrayLike,
    h: float,
    q: QuadratureConfig | None = None,
) -> npt.NDArray[np.float64]:
    """Scaled centered residual of G'' + ((n-1)/r + b) G' at each radius.

    The differences G(r+h) - G(r) and G(r) - G(r-h) come straight from
    quadrature of G', so their accuracy is relative to the increment itself.
    """
    _check_dimension(n)
    q = q or QuadratureConfig()
    residuals = []
    for r in np.asarray(radii, dtype=float):
        if not (0.0 < r - h and r + h < 1.0):
            raise DomainError(f"stencil [{r - h}, {r + h}] leaves (0, 1)")
        ahead = -_flux_integral(spec, n, r, r + h, q)
        behind = -_flux_integral(spec, n, r - h, r, q)
        second = (ahead - behind) / h**2
        first = (ahead + behind) / (2.0 * h)
        residual = second + ((n - 1) / r + radial_component(spec, float(r))) * first
        scale = abs(green_derivative(spec, n, float(r))) * (n - 1) / r
        residuals.append(residual / scale)
    return np.asarray(residuals)


def mollified_mass_factor(spec: DriftSpec, n: int, rho: float, q: QuadratureConfig | None = None) -> float:
    """omega Q_rho with Q_rho = |B_rho|^{-1} int_0^rho s^{n-1} e^{-D(0,s)} ds.

    Outside the mollifier the mollified solution equals this factor times G;
    it tends to 1 as rho -> 0.
    """
    q = q or QuadratureConfig()
    if not 0.0 < rho < 1.0:
        raise DomainError(f"mollifier radius must lie in (0, 1), got {rho}")
    integral, _ = adaptive_quad(
        lambda s: s ** (n - 1) * math.exp(-drift_integral(spec, 0.0, s)), 0.0, rho, q
    )
    return n * integral / rho**n


def mollified_green_value(
    spec: DriftSpec,
    n: int,
    rho: float,
    r: float,
    q: QuadratureConfig | None = None,
) -> float:
    """Radial solution with source 1_{B(0,rho)} / |B(0,rho)| and zero boundary data."""
    _check_dimension(n)
    q = q or QuadratureConfig()
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"radius must lie in [0, 1], got {r}")
    factor = mollified_mass_factor(spec, n, rho, q)
    if r >= rho:
        return factor * green_value(spec, n, r, q) if r > 0.0 else 0.0

    omega = sphere_area(n)

    def enclosed(s: float) -> float:
        """omega Q(s) for s <= rho."""
        inner, _ = adaptive_quad(
            lambda t: t ** (n - 1) * math.exp(-drift_integral(spec, 0.0, t)), 0.0, s, q
        )
        return n * inner / rho**n

    def integrand(s: float) -> float:
        if s == 0.0:
            return 0.0
        return math.exp(drift_integral(spec, 0.0, s)) * s ** (1 - n) * enclosed(s) / omega

    inside, _ = adaptive_quad(integrand, r, rho, q)
    return factor * green_value(spec, n, rho, q) + inside


def write_profile_csv(profile: RadialGreenProfile, path: Path) -> Path:
    """Export "r,G,Gprime" rows in strictly decreasing r."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PROFILE_CSV_HEADER)
        writer.writerows(profile.csv_rows())
    logger.info("wrote profile to %s", path)
    return path
