"""Weak-form check of the Green's function identity at the pole.

For a radial test function phi the identity reduces to

    R = omega * int_0^1 [G' phi' + s b G' phi] r^{n-1} dr - phi(0) = 0

with s the transport sign shared with the finite-difference operator.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .const import (
    BUMP_POWERS,
    BUMP_RADII,
    IDENTITY_ACCEPT,
    PLATEAU_INNER,
    PLATEAU_OUTER,
    REFERENCE_BUMP_POWER,
    REFERENCE_BUMP_RADIUS,
    TRANSPORT_SIGN,
)
from .drift import DriftFamily, DriftSpec, branch_points, drift_integral, radial_component
from .errors import ConfigurationError, DomainError
from .radial import (
    QuadratureConfig,
    RadialGreenProfile,
    integrate_panels,
    log_shift,
    panel_breaks,
    pole_flux,
    sphere_area,
)

logger = logging.getLogger(__name__)


def _vanishing(_: float) -> float:
    return 0.0


@dataclass(frozen=True)
class RadialTestFunction:
    """Smooth radial test function with compact support in [0, 1)."""

    name: str
    phi: Callable[[float], float]
    phi_prime: Callable[[float], float]
    phi_at_0: float
    support_radius: float
    breakpoints: tuple[float, ...] = field(default=())

    def scaled(self, alpha: float) -> RadialTestFunction:
        return RadialTestFunction(
            name=f"{alpha:g}*{self.name}",
            phi=lambda r: alpha * self.phi(r),
            phi_prime=lambda r: alpha * self.phi_prime(r),
            phi_at_0=alpha * self.phi_at_0,
            support_radius=self.support_radius if alpha != 0.0 else 0.0,
            breakpoints=self.breakpoints,
        )

    def __add__(self, other: RadialTestFunction) -> RadialTestFunction:
        return RadialTestFunction(
            name=f"{self.name}+{other.name}",
            phi=lambda r: self.phi(r) + other.phi(r),
            phi_prime=lambda r: self.phi_prime(r) + other.phi_prime(r),
            phi_at_0=self.phi_at_0 + other.phi_at_0,
            support_radius=max(self.support_radius, other.support_radius),
            breakpoints=tuple(
                sorted(
                    {*self.breakpoints, *other.breakpoints, self.support_radius, other.support_radius}
                    - {0.0}
                )
            ),
        )


def bump(radius: float, power: int) -> RadialTestFunction:
    """(1 - (r/radius)^2)^power on [0, radius), zero beyond."""
    if not 0.0 < radius < 1.0:
        raise ConfigurationError(f"bump radius must lie in (0, 1), got {radius}")
    if power < 1:
        raise ConfigurationError(f"bump power must be >= 1, got {power}")

    def phi(r: float) -> float:
        if r >= radius:
            return 0.0
        return (1.0 - (r / radius) ** 2) ** power

    def phi_prime(r: float) -> float:
        if r >= radius:
            return 0.0
        return -2.0 * power * r / radius**2 * (1.0 - (r / radius) ** 2) ** (power - 1)

    return RadialTestFunction(
        name=f"bump(R={radius:g},k={power})",
        phi=phi,
        phi_prime=phi_prime,
        phi_at_0=1.0,
        support_radius=radius,
    )


def plateau(inner: float = PLATEAU_INNER, outer: float = PLATEAU_OUTER) -> RadialTestFunction:
    """1 on [0, inner], quintic smooth step down to 0 at outer."""
    if not 0.0 < inner < outer < 1.0:
        raise ConfigurationError("plateau needs 0 < inner < outer < 1")
    width = outer - inner

    def phi(r: float) -> float:
        if r <= inner:
            return 1.0
        if r >= outer:
            return 0.0
        t = (r - inner) / width
        return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)

    def phi_prime(r: float) -> float:
        if r <= inner or r >= outer:
            return 0.0
        t = (r - inner) / width
        return -30.0 * t**2 * (1.0 - t) ** 2 / width

    return RadialTestFunction(
        name=f"plateau({inner:g},{outer:g})",
        phi=phi,
        phi_prime=phi_prime,
        phi_at_0=1.0,
        support_radius=outer,
        breakpoints=(inner,),
    )


def zero_test_function() -> RadialTestFunction:
    return RadialTestFunction(
        name="zero",
        phi=_vanishing,
        phi_prime=_vanishing,
        phi_at_0=0.0,
        support_radius=0.0,
    )


def certified_family() -> list[RadialTestFunction]:
    """Nine polynomial bumps plus the plateau."""
    family = [bump(radius, power) for radius in BUMP_RADII for power in BUMP_POWERS]
    family.append(plateau())
    return family


def reference_test_function() -> RadialTestFunction:
    return bump(REFERENCE_BUMP_RADIUS, REFERENCE_BUMP_POWER)


def _weak_form_integral(
    spec: DriftSpec,
    n: int,
    flux: Callable[[float], float],
    tf: RadialTestFunction,
    q: QuadratureConfig,
) -> float:
    """omega * int_0^R [phi' + s b phi] r^{n-1} G' dr, with flux(r) = r^{n-1} G'(r)."""
    if tf.support_radius >= 1.0:
        raise DomainError(f"test function {tf.name} is not compactly supported in [0, 1)")
    if tf.support_radius <= 0.0:
        return 0.0
    omega = sphere_area(n)

    def integrand(r: float) -> float:
        transport = TRANSPORT_SIGN * radial_component(spec, r) * tf.phi(r)
        return omega * flux(r) * (tf.phi_prime(r) + transport)

    support = tf.support_radius
    breaks = {0.0, support}
    breaks.update(p for p in branch_points(spec) if 0.0 < p < support)
    breaks.update(p for p in tf.breakpoints if 0.0 < p < support)
    return integrate_panels(
        integrand, sorted(breaks), q, f"weak form of {spec.label} against {tf.name}"
    )


def identity_residual(
    profile: RadialGreenProfile,
    tf: RadialTestFunction,
    q: QuadratureConfig | None = None,
) -> float:
    """Residual of the distributional identity for one test function.

    The weight r^{n-1} G'(r) comes from the profile's flux constant.

    Args:
        profile: Green's function profile, possibly rescaled.
        tf: test function supported strictly inside the ball.
        q: quadrature tolerances, defaults to the profile's.

    Returns:
        R, which is (lambda - 1) * phi(0) for a profile mis-scaled by lambda.

    Raises:
        DomainError: if the support of tf reaches r = 1.
    """
    q = q or profile.quadrature
    integral = _weak_form_integral(profile.spec, profile.n, profile.radial_flux, tf, q)
    return integral - tf.phi_at_0


def normalization_search(
    spec: DriftSpec,
    n: int,
    q: QuadratureConfig | None = None,
    tf: RadialTestFunction | None = None,
) -> float:
    """Scale of the flux normalization relative to the identity.

    The weak form is linear in G, so the unnormalized solution with
    r^{n-1} G'(r) = -e^{D(0,r)} satisfies the identity once multiplied by
    K = phi(0) / I. The result is K divided by the pole flux magnitude
    that green_derivative produces, hence 1 when the two agree.
    """
    q = q or QuadratureConfig()
    tf = tf or reference_test_function()

    def unnormalized(r: float) -> float:
        return -math.exp(drift_integral(spec, 0.0, r))

    integral = _weak_form_integral(spec, n, unnormalized, tf, q)
    if integral == 0.0:
        raise DomainError(f"weak form of {tf.name} vanishes; no normalization exists")
    required = tf.phi_at_0 / integral
    lam = required / -pole_flux(spec, n)
    logger.debug("normalization for %s, n=%d: lambda=%.12g", spec.label, n, lam)
    return lam


@dataclass(frozen=True)
class SobolevIntegrals:
    """Finite-quadrature stand-ins for the Sobolev membership of G."""

    gradient_l1: float
    gradient_l2_squared: float
    inner_radius: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.gradient_l1) and math.isfinite(self.gradient_l2_squared)


def sobolev_integrals(
    profile: RadialGreenProfile, s: float = 0.5, q: QuadratureConfig | None = None
) -> SobolevIntegrals:
    """int_0^1 |G'| r^{n-1} dr and int_s^1 |G'|^2 r^{n-1} dr."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"inner radius must lie in (0, 1), got {s}")
    q = q or profile.quadrature
    spec, n = profile.spec, profile.n
    omega = sphere_area(n)
    shift = log_shift(spec)
    scale = abs(profile.normalization)

    def l1_integrand(r: float) -> float:
        return math.exp(drift_integral(spec, 0.0, r) - shift)

    def l2_integrand(r: float) -> float:
        return r ** (1 - n) * math.exp(2.0 * (drift_integral(spec, 0.0, r) - shift))

    l1_end: tuple[Callable[[float], float], float] | None = None
    l2_end: tuple[Callable[[float], float], float] | None = None
    if spec.family is DriftFamily.SMALL_CONSTANT:
        assert spec.epsilon is not None
        l1_end = (lambda _r: 1.0, -spec.epsilon)
        l2_end = (lambda r: r ** (1 - n), -2.0 * spec.epsilon)

    l1 = integrate_panels(
        l1_integrand, panel_breaks(spec, 0.0, 1.0), q, "L1 norm of G'", end_singularity=l1_end
    )
    l2 = integrate_panels(
        l2_integrand, panel_breaks(spec, s, 1.0), q, "L2 norm of G'", end_singularity=l2_end
    )
    return SobolevIntegrals(
        gradient_l1=scale * math.exp(shift) * l1 / omega,
        gradient_l2_squared=scale**2 * math.exp(2.0 * shift) * l2 / omega**2,
        inner_radius=s,
    )


@dataclass(frozen=True)
class VerificationReport:
    spec: DriftSpec
    n: int
    residuals: list[tuple[str, float]]
    threshold: float = IDENTITY_ACCEPT

    @property
    def max_abs_residual(self) -> float:
        return max((abs(value) for _, value in self.residuals), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_residual <= self.threshold

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "n": self.n,
            "residuals": [{"phi": name, "R": value} for name, value in self.residuals],
            "max_abs_residual": self.max_abs_residual,
        }


def verification_report(
    profile: RadialGreenProfile,
    family: Sequence[RadialTestFunction] | None = None,
    q: QuadratureConfig | None = None,
) -> VerificationReport:
    """Residuals of the identity over a test-function family."""
    family = certified_family() if family is None else family
    residuals = [(tf.name, identity_residual(profile, tf, q)) for tf in family]
    report = VerificationReport(spec=profile.spec, n=profile.n, residuals=residuals)
    logger.info(
        "verified %s, n=%d: max |R| = %.3g over %d test functions",
        profile.spec.label,
        profile.n,
        report.max_abs_residual,
        len(residuals),
    )
    return report
