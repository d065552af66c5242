"""Radial drift families and their closed-form integrals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import numpy.typing as npt

from .const import (
    FAMILY_POWER_REGULARIZED,
    FAMILY_SMALL_CONSTANT,
    FAMILY_TABULATED,
    FAMILY_TRUNCATED_INVERSE,
    LIMITING_BOUND_SLACK,
    MIN_TRUNCATION,
)
from .errors import ConfigurationError, DivergentIntegralError, DomainError


class DriftFamily(StrEnum):
    """Parametric radial drift families."""

    TRUNCATED_INVERSE = FAMILY_TRUNCATED_INVERSE
    POWER_REGULARIZED = FAMILY_POWER_REGULARIZED
    SMALL_CONSTANT = FAMILY_SMALL_CONSTANT
    TABULATED = FAMILY_TABULATED


# JSON keys accepted per family (besides "family")
_FAMILY_KEYS: dict[DriftFamily, frozenset[str]] = {
    DriftFamily.TRUNCATED_INVERSE: frozenset({"C", "m"}),
    DriftFamily.POWER_REGULARIZED: frozenset({"C", "beta"}),
    DriftFamily.SMALL_CONSTANT: frozenset({"C", "epsilon"}),
    DriftFamily.TABULATED: frozenset({"r", "b"}),
}


@dataclass(frozen=True)
class DriftSpec:
    """A radial drift B(x) = b(|x|) x/|x| on the unit ball.

    The radial component b is non-positive (the drift points toward the
    origin). Only the fields relevant to ``family`` are meaningful.
    """

    family: DriftFamily
    C: float = 1.0
    m: int | None = None
    beta: float | None = None
    epsilon: float | None = None
    table_r: tuple[float, ...] = field(default=(), repr=False)
    table_b: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.C) or self.C <= 0.0:
            raise ConfigurationError(f"C must be positive, got {self.C}")
        if self.family is DriftFamily.TRUNCATED_INVERSE:
            if self.m is None or int(self.m) != self.m or self.m < MIN_TRUNCATION:
                raise ConfigurationError(
                    f"truncation level m must be an integer >= {MIN_TRUNCATION}"
                )
        elif self.family is DriftFamily.POWER_REGULARIZED:
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise ConfigurationError("beta must lie in (0, 1)")
        elif self.family is DriftFamily.SMALL_CONSTANT:
            if self.epsilon is None or self.epsilon <= 0.0:
                raise ConfigurationError("epsilon must be positive")
        else:
            self._validate_table()

    def _validate_table(self) -> None:
        r, b = self.table_r, self.table_b
        if len(r) < 2 or len(r) != len(b):
            raise ConfigurationError("tabulated drift needs matching r and b arrays")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise ConfigurationError("tabulated drift must span [0, 1]")
        if any(r1 <= r0 for r0, r1 in zip(r, r[1:], strict=False)):
            raise ConfigurationError("tabulated radii must be strictly increasing")
        if any(not math.isfinite(v) or v > 0.0 for v in b):
            raise ConfigurationError("tabulated drift must be finite and inward (b <= 0)")

    # Constructors

    @classmethod
    def truncated_inverse(cls, C: float, m: int) -> DriftSpec:
        """Drift -C/(1-r) frozen at -Cm beyond r = 1 - 1/m."""
        return cls(DriftFamily.TRUNCATED_INVERSE, C=C, m=m)

    @classmethod
    def power_regularized(cls, C: float, beta: float) -> DriftSpec:
        """Drift -C/(1-r)^(1-beta)."""
        return cls(DriftFamily.POWER_REGULARIZED, C=C, beta=beta)

    @classmethod
    def small_constant(cls, epsilon: float) -> DriftSpec:
        """Drift -epsilon/(1-r)."""
        return cls(DriftFamily.SMALL_CONSTANT, epsilon=epsilon)

    @classmethod
    def tabulated(cls, r: list[float] | tuple[float, ...], b: list[float] | tuple[float, ...]) -> DriftSpec:
        """Piecewise-linear drift through the points (r_k, b_k)."""
        return cls(
            DriftFamily.TABULATED,
            table_r=tuple(float(v) for v in r),
            table_b=tuple(float(v) for v in b),
        )

    @classmethod
    def zero(cls) -> DriftSpec:
        """The pure Laplacian (b identically zero)."""
        return cls.tabulated((0.0, 1.0), (0.0, 0.0))

    # Derived properties

    @property
    def branch_point(self) -> float | None:
        """Truncation radius 1 - 1/m, or None."""
        if self.family is DriftFamily.TRUNCATED_INVERSE:
            assert self.m is not None
            return 1.0 - 1.0 / self.m
        return None

    @property
    def is_zero(self) -> bool:
        return self.family is DriftFamily.TABULATED and not any(self.table_b)

    @property
    def label(self) -> str:
        """Short human-readable identifier."""
        if self.family is DriftFamily.TRUNCATED_INVERSE:
            return f"truncated_inverse(C={self.C:g}, m={self.m})"
        if self.family is DriftFamily.POWER_REGULARIZED:
            return f"power_regularized(C={self.C:g}, beta={self.beta:g})"
        if self.family is DriftFamily.SMALL_CONSTANT:
            return f"small_constant(epsilon={self.epsilon:g})"
        return "zero" if self.is_zero else f"tabulated({len(self.table_r)} nodes)"

    # JSON codec

    def to_dict(self) -> dict[str, Any]:
        """Encode as the documented JSON object."""
        data: dict[str, Any] = {"family": self.family.value}
        if self.family is DriftFamily.TABULATED:
            data["r"] = list(self.table_r)
            data["b"] = list(self.table_b)
            return data
        data["C"] = self.C
        if self.family is DriftFamily.TRUNCATED_INVERSE:
            data["m"] = self.m
        elif self.family is DriftFamily.POWER_REGULARIZED:
            data["beta"] = self.beta
        else:
            data["epsilon"] = self.epsilon
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DriftSpec:
        """Decode a JSON object, rejecting unknown fields."""
        if not isinstance(data, dict) or "family" not in data:
            raise ConfigurationError("drift spec must be an object with a 'family'")
        try:
            family = DriftFamily(data["family"])
        except ValueError:
            raise ConfigurationError(f"unknown drift family: {data['family']!r}") from None

        unknown = set(data) - {"family"} - _FAMILY_KEYS[family]
        if unknown:
            raise ConfigurationError(f"unknown drift spec fields: {sorted(unknown)}")

        try:
            if family is DriftFamily.TABULATED:
                return cls.tabulated(data["r"], data["b"])
            C = float(data.get("C", 1.0))
            if family is DriftFamily.TRUNCATED_INVERSE:
                m = data["m"]
                if isinstance(m, bool) or not isinstance(m, int | float):
                    raise ConfigurationError("m must be an integer")
                if int(m) != m:
                    raise ConfigurationError("m must be an integer")
                return cls(family, C=C, m=int(m))
            if family is DriftFamily.POWER_REGULARIZED:
                return cls(family, C=C, beta=float(data["beta"]))
            return cls(family, C=C, epsilon=float(data["epsilon"]))
        except KeyError as err:
            raise ConfigurationError(f"missing drift spec field: {err.args[0]}") from err
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed drift spec: {err}") from err

    @classmethod
    def from_json(cls, text: str) -> DriftSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"drift spec is not valid JSON: {err}") from err
        return cls.from_dict(data)


def _check_radius(r: float) -> None:
    if not 0.0 <= r < 1.0:
        raise DomainError(f"radius must lie in [0, 1), got {r}")


def radial_component_array(spec: DriftSpec, r: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Vectorized b(r) for radii in [0, 1)."""
    radii = np.asarray(r, dtype=float)
    if radii.size and (radii.min() < 0.0 or radii.max() >= 1.0):
        raise DomainError("radii must lie in [0, 1)")

    if spec.family is DriftFamily.TRUNCATED_INVERSE:
        assert spec.m is not None
        cap = spec.C * spec.m
        with np.errstate(divide="ignore"):
            inner = -spec.C / (1.0 - radii)
        return np.where(radii <= 1.0 - 1.0 / spec.m, inner, -cap)
    if spec.family is DriftFamily.POWER_REGULARIZED:
        assert spec.beta is not None
        return -spec.C / (1.0 - radii) ** (1.0 - spec.beta)
    if spec.family is DriftFamily.SMALL_CONSTANT:
        assert spec.epsilon is not None
        return -spec.epsilon / (1.0 - radii)
    return np.interp(radii, spec.table_r, spec.table_b)


def radial_component(spec: DriftSpec, r: float) -> float:
    """Signed radial component b(r) = B . r_hat.

    Raises:
        DomainError: if r lies outside [0, 1).
    """
    _check_radius(r)
    return float(radial_component_array(spec, r))


def _tabulated_antiderivative(spec: DriftSpec, x: float) -> float:
    """Exact integral of the piecewise-linear b over [0, x]."""
    r = spec.table_r
    b = spec.table_b
    total = 0.0
    for k in range(len(r) - 1):
        if x <= r[k]:
            break
        right = min(x, r[k + 1])
        b_right = b[k] + (b[k + 1] - b[k]) * (right - r[k]) / (r[k + 1] - r[k])
        total += 0.5 * (b[k] + b_right) * (right - r[k])
    return total


def drift_integral(spec: DriftSpec, a: float, r: float) -> float:
    """D(a, r) = -int_a^r b(t) dt in closed form.

    D is non-negative, additive over adjacent intervals and is the only
    drift integral the rest of the package consumes.

    Raises:
        DomainError: if a > r or the interval leaves [0, 1].
        DivergentIntegralError: if r = 1 for the small-constant family.
    """
    if a > r:
        raise DomainError(f"drift integral needs a <= r, got a={a}, r={r}")
    if a < 0.0 or r > 1.0:
        raise DomainError(f"drift integral interval [{a}, {r}] leaves [0, 1]")
    if a == 1.0:
        return 0.0

    if spec.family is DriftFamily.TRUNCATED_INVERSE:
        assert spec.m is not None
        C, m = spec.C, spec.m
        knee = 1.0 - 1.0 / m
        if r <= knee:
            return C * (math.log1p(-a) - math.log1p(-r))
        if a >= knee:
            return C * m * (r - a)
        return C * math.log(m * (1.0 - a)) + C * m * (r - knee)

    if spec.family is DriftFamily.POWER_REGULARIZED:
        assert spec.beta is not None
        scale = spec.C / spec.beta * (1.0 - a) ** spec.beta
        if r == 1.0:
            return scale
        # (1-a)^beta - (1-r)^beta written to survive a close to r
        return scale * -math.expm1(spec.beta * math.log1p(-(r - a) / (1.0 - a)))

    if spec.family is DriftFamily.SMALL_CONSTANT:
        assert spec.epsilon is not None
        if r == 1.0:
            raise DivergentIntegralError("small-constant drift is not integrable up to r = 1")
        return spec.epsilon * (math.log1p(-a) - math.log1p(-r))

    return -(_tabulated_antiderivative(spec, r) - _tabulated_antiderivative(spec, a))


def nominal_constant(spec: DriftSpec) -> float:
    """The constant M in the limiting bound (1 - r)|b(r)| <= M."""
    if spec.family is DriftFamily.SMALL_CONSTANT:
        assert spec.epsilon is not None
        return spec.epsilon
    if spec.family is DriftFamily.TABULATED:
        return max(abs(v) for v in spec.table_b)
    return spec.C


@dataclass(frozen=True)
class LimitingBound:
    """Outcome of probing (1 - r)|b(r)| on a grid."""

    holds: bool
    sup: float
    nominal: float


def limiting_bound_holds(spec: DriftSpec, grid: npt.ArrayLike) -> LimitingBound:
    """Check sup over grid of (1 - r)|b(r)| against the family's constant."""
    radii = np.asarray(grid, dtype=float)
    products = (1.0 - radii) * np.abs(radial_component_array(spec, radii))
    sup = float(products.max()) if products.size else 0.0
    nominal = nominal_constant(spec)
    return LimitingBound(
        holds=sup <= nominal * (1.0 + LIMITING_BOUND_SLACK),
        sup=sup,
        nominal=nominal,
    )


def branch_points(spec: DriftSpec) -> tuple[float, ...]:
    """Radii in (0, 1) where b is continuous but not smooth."""
    if spec.family is DriftFamily.TRUNCATED_INVERSE:
        knee = spec.branch_point
        assert knee is not None
        return (knee,)
    if spec.family is DriftFamily.TABULATED:
        return tuple(spec.table_r[1:-1])
    return ()


def is_bounded(spec: DriftSpec) -> bool:
    """Whether b stays bounded on the closed ball."""
    return spec.family in (DriftFamily.TRUNCATED_INVERSE, DriftFamily.TABULATED)


def regime(spec: DriftSpec) -> str:
    """Label the drift regime instead of guessing a single intended C."""
    if spec.family is DriftFamily.TRUNCATED_INVERSE:
        return "supercritical" if spec.C >= 1.0 else "subcritical"
    if spec.family is DriftFamily.POWER_REGULARIZED:
        return "regularized"
    if spec.family is DriftFamily.SMALL_CONSTANT:
        return "small"
    return "none" if spec.is_zero else "tabulated"
