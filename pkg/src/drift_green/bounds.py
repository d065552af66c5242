"""Empirical constants of the pointwise Green's function bounds."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any

from .const import (
    DEFAULT_R_EVAL,
    DERIVATIVE_PROBE_LEVELS,
    PROBE_LEVELS,
    SWEEP_CSV_HEADER,
    UPPER_BOUND_GROWTH_FACTOR,
)
from .drift import DriftSpec
from .errors import ConfigurationError, DomainError
from .radial import QuadratureConfig, RadialGreenProfile, integrate_panels, panel_breaks
from .report import write_json, write_rows_csv

logger = logging.getLogger(__name__)


def default_probe_radii() -> tuple[float, ...]:
    """r = 2^{-k} / 2, descending from 1/2."""
    return tuple(0.5 / 2**k for k in range(PROBE_LEVELS))


def default_derivative_radii() -> tuple[float, ...]:
    """a = 2^{-k} / 4, descending from 1/4."""
    return tuple(0.25 / 2**k for k in range(DERIVATIVE_PROBE_LEVELS))


def _check_radii(radii: Sequence[float], upper: float) -> None:
    if not radii:
        raise ConfigurationError("probe radii must not be empty")
    for r in radii:
        if not 0.0 < r <= upper:
            raise DomainError(f"probe radius {r} outside (0, {upper}]")


@dataclass
class BoundReport:
    spec: DriftSpec
    n: int
    c0_empirical: float
    C2_empirical: float
    derivative_c0: float
    probes: list[tuple[float, float]] = field(default_factory=list)

    @property
    def lower_bound_holds(self) -> bool:
        return self.c0_empirical > 0.0 and all(value > 0.0 for _, value in self.probes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "n": self.n,
            "c0_empirical": self.c0_empirical,
            "C2_empirical": self.C2_empirical,
            "derivative_c0": self.derivative_c0,
            "lower_bound_holds": self.lower_bound_holds,
            "probes": [{"r": r, "value": value} for r, value in self.probes],
        }


def interior_lower_bound(
    profile: RadialGreenProfile, radii: Sequence[float] | None = None
) -> BoundReport:
    """min and max of r^{n-2} G(r) over probe radii in (0, 1/2].

    Args:
        profile: radial Green's function.
        radii: probe radii, default a dyadic grid descending from 1/2.

    Returns:
        The report, including the derivative constant on the default grid.

    Raises:
        ConfigurationError: if radii is empty.
        DomainError: if a radius falls outside (0, 1/2].
    """
    radii = default_probe_radii() if radii is None else radii
    _check_radii(radii, 0.5)
    probes = [(float(r), r ** (profile.n - 2) * profile.value(float(r))) for r in radii]
    values = [value for _, value in probes]
    report = BoundReport(
        spec=profile.spec,
        n=profile.n,
        c0_empirical=min(values),
        C2_empirical=max(values),
        derivative_c0=derivative_lower_bound(profile),
        probes=probes,
    )
    if not report.lower_bound_holds:
        logger.warning("nonpositive r^(n-2) G(r) for %s", profile.spec.label)
    return report


def derivative_lower_bound(
    profile: RadialGreenProfile, inner_radii: Sequence[float] | None = None
) -> float:
    """min of a^{n-1} |G'(a)| over inner radii in (0, 1/4]."""
    inner_radii = default_derivative_radii() if inner_radii is None else inner_radii
    _check_radii(inner_radii, 0.25)
    return min(a ** (profile.n - 1) * abs(profile.derivative(float(a))) for a in inner_radii)


class UpperBoundStatus(StrEnum):
    UNIFORM_UPPER = "UniformUpper"
    NO_UNIFORM_UPPER = "NoUniformUpper"


@dataclass(frozen=True)
class UpperBoundResult:
    status: UpperBoundStatus
    C2_empirical: float
    growth: float
    values: tuple[tuple[float | None, float], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": str(self.status),
            "C2_empirical": self.C2_empirical,
            "growth": self.growth,
            "values": [{"m": m, "value": value} for m, value in self.values],
        }


def upper_bound_status(
    profiles: Sequence[RadialGreenProfile], r: float = DEFAULT_R_EVAL
) -> UpperBoundResult:
    """Classify an m-sweep by growth of r^{n-2} G_m(r).

    The family has no uniform upper bound when the value at the largest m
    is at least twice the value at the smallest m.
    """
    if len(profiles) < 2:
        raise ConfigurationError("upper bound status needs at least two profiles")
    first = profiles[0]
    for profile in profiles[1:]:
        if profile.n != first.n or profile.spec.family is not first.spec.family:
            raise ConfigurationError("profiles must share the drift family and dimension")
        if profile.spec.C != first.spec.C or profile.spec.epsilon != first.spec.epsilon:
            raise ConfigurationError("profiles must share the drift constant")

    ordered = sorted(profiles, key=lambda p: p.spec.m if p.spec.m is not None else 0)
    values = tuple(
        (float(p.spec.m) if p.spec.m is not None else None, r ** (p.n - 2) * p.value(r))
        for p in ordered
    )
    growth = values[-1][1] / values[0][1]
    status = (
        UpperBoundStatus.NO_UNIFORM_UPPER
        if growth >= UPPER_BOUND_GROWTH_FACTOR
        else UpperBoundStatus.UNIFORM_UPPER
    )
    C2 = max(value for _, value in values)
    logger.info("upper bound status %s (growth %.4g)", status, growth)
    return UpperBoundResult(status=status, C2_empirical=C2, growth=growth, values=values)


@dataclass(frozen=True)
class GrowthBracket:
    lower: float
    difference: float
    upper: float

    @property
    def holds(self) -> bool:
        tol = 1e-9 * abs(self.difference)
        return self.lower - tol <= self.difference <= self.upper + tol


def growth_bracket(profile: RadialGreenProfile, p: float, a: float) -> GrowthBracket:
    """Bracket G(p) - G(a) through the extremes of s^{n-1}|G'(s)| on [p, a].

    s^{n-1}|G'(s)| = exp(D(0, s)) / omega is nondecreasing since b <= 0, so
    its extremes sit at the end points.
    """
    if not 0.0 < p < a < 1.0:
        raise DomainError(f"need 0 < p < a < 1, got p={p}, a={a}")
    n = profile.n
    theta_lo = abs(profile.radial_flux(p))
    theta_hi = abs(profile.radial_flux(a))
    span = (p ** (2 - n) - a ** (2 - n)) / (n - 2)
    return GrowthBracket(
        lower=theta_lo * span,
        difference=profile.value(p) - profile.value(a),
        upper=theta_hi * span,
    )


def divergence_lower_bound(
    c0: float, n: int, m: int, q: QuadratureConfig | None = None
) -> float:
    """c0 * int_{1/2}^{1-1/m} dr / (2 r^{n-1} (1 - r)), growing like (c0/2) log m."""
    if c0 <= 0.0:
        raise DomainError("the derivative constant must be positive")
    q = q or QuadratureConfig()
    layer = DriftSpec.truncated_inverse(1.0, m)
    knee = 1.0 - 1.0 / m
    integral = integrate_panels(
        lambda r: 1.0 / (2.0 * r ** (n - 1) * (1.0 - r)),
        panel_breaks(layer, 0.5, knee),
        q,
        f"divergence bound for m={m}",
    )
    return c0 * integral


def sweep_summary_rows(
    profiles: Sequence[RadialGreenProfile], r: float = DEFAULT_R_EVAL
) -> list[dict[str, Any]]:
    """Rows "m,C,n,r,G,r_pow_n2_times_G" for an m-sweep, ordered by m."""
    rows = []
    for profile in sorted(profiles, key=lambda p: p.spec.m or 0):
        value = profile.value(r)
        rows.append(
            {
                "m": profile.spec.m,
                "C": profile.spec.C,
                "n": profile.n,
                "r": r,
                "G": value,
                "r_pow_n2_times_G": r ** (profile.n - 2) * value,
            }
        )
    return rows


def write_bound_report(report: BoundReport, path: Path) -> Path:
    return write_json(report.to_dict(), path)


def write_sweep_summary(rows: Sequence[dict[str, Any]], path: Path) -> Path:
    return write_rows_csv(SWEEP_CSV_HEADER, rows, path)
