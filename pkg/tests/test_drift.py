"""Tests for the radial drift families."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.drift_green.drift import (
    DriftFamily,
    DriftSpec,
    branch_points,
    drift_integral,
    is_bounded,
    limiting_bound_holds,
    radial_component,
    radial_component_array,
    regime,
)
from src.drift_green.errors import ConfigurationError, DivergentIntegralError, DomainError


class TestRadialComponent:
    """Tests for b(r)."""

    def test_inner_branch(self) -> None:
        """Test -C/(1-r) below the truncation radius."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        assert radial_component(spec, 0.5) == pytest.approx(-2.0, rel=1e-15)

    def test_frozen_branch(self) -> None:
        """Test -Cm beyond the truncation radius."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        assert radial_component(spec, 0.995) == -100.0

    def test_branches_agree_at_truncation_radius(self) -> None:
        """Test continuity at r = 1 - 1/m."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        assert radial_component(spec, 0.99) == pytest.approx(-100.0, rel=1e-12)
        assert radial_component(spec, math.nextafter(0.99, 1.0)) == -100.0

    def test_power_regularized(self) -> None:
        """Test -C/(1-r)^(1-beta)."""
        spec = DriftSpec.power_regularized(2.0, 0.5)
        assert radial_component(spec, 0.75) == pytest.approx(-4.0)

    def test_small_constant(self) -> None:
        """Test -epsilon/(1-r)."""
        spec = DriftSpec.small_constant(0.01)
        assert radial_component(spec, 0.9) == pytest.approx(-0.1)

    @pytest.mark.parametrize("r", [-0.1, 1.0, 1.5])
    def test_outside_domain(self, r: float) -> None:
        """Test that radii outside [0, 1) are rejected."""
        with pytest.raises(DomainError):
            radial_component(DriftSpec.truncated_inverse(1.0, 100), r)

    def test_inward_for_all_families(self) -> None:
        """Test b <= 0 on a dense grid."""
        grid = np.linspace(0.0, 0.999999, 2001)
        for spec in (
            DriftSpec.truncated_inverse(3.0, 50),
            DriftSpec.power_regularized(1.0, 0.3),
            DriftSpec.small_constant(0.05),
            DriftSpec.tabulated([0.0, 0.5, 1.0], [0.0, -1.0, -3.0]),
        ):
            assert np.all(radial_component_array(spec, grid) <= 0.0)


class TestDriftIntegral:
    """Tests for D(a, r) = -int_a^r b."""

    def test_spanning_truncation_to_boundary(self) -> None:
        """Test D(1/2, 1) = log 50 + 1 for C = 1, m = 100."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        assert drift_integral(spec, 0.5, 1.0) == pytest.approx(math.log(50.0) + 1.0, rel=1e-14)

    def test_inner_branch_ratio(self) -> None:
        """Test D(1/2, 3/4) = C log 2."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        assert drift_integral(spec, 0.5, 0.75) == pytest.approx(math.log(2.0), rel=1e-14)

    def test_empty_interval(self) -> None:
        """Test D(a, a) = 0 for every family."""
        for spec in (
            DriftSpec.truncated_inverse(1.0, 100),
            DriftSpec.power_regularized(1.0, 0.5),
            DriftSpec.small_constant(0.01),
            DriftSpec.zero(),
        ):
            assert drift_integral(spec, 0.3, 0.3) == 0.0

    def test_power_regularized_to_boundary(self) -> None:
        """Test D(0, 1) = C / beta for the regularized family."""
        spec = DriftSpec.power_regularized(1.0, 0.25)
        assert drift_integral(spec, 0.0, 1.0) == pytest.approx(4.0)

    def test_tabulated_is_exact(self) -> None:
        """Test the piecewise-linear table b(t) = -2t integrates to r^2."""
        spec = DriftSpec.tabulated([0.0, 0.5, 1.0], [0.0, -1.0, -2.0])
        assert drift_integral(spec, 0.0, 0.8) == pytest.approx(0.64, rel=1e-14)
        assert drift_integral(spec, 0.2, 0.7) == pytest.approx(0.45, rel=1e-14)

    def test_reversed_interval(self) -> None:
        """Test that a > r is a domain error."""
        with pytest.raises(DomainError):
            drift_integral(DriftSpec.zero(), 0.6, 0.5)

    def test_small_constant_diverges_at_boundary(self) -> None:
        """Test that the small-constant family is not integrable up to 1."""
        with pytest.raises(DivergentIntegralError):
            drift_integral(DriftSpec.small_constant(0.01), 0.5, 1.0)

    def test_divergent_error_is_a_domain_error(self) -> None:
        """Test the error hierarchy callers rely on."""
        assert issubclass(DivergentIntegralError, DomainError)

    def test_matches_quadrature(self) -> None:
        """Test closed forms against adaptive quadrature of -b."""
        rng = np.random.default_rng(7)
        specs = [
            DriftSpec.truncated_inverse(1.0, 100),
            DriftSpec.truncated_inverse(2.5, 1000),
            DriftSpec.power_regularized(1.0, 0.3),
            DriftSpec.small_constant(0.2),
        ]
        for spec in specs:
            for _ in range(25):
                a, r = np.sort(rng.uniform(0.0, 0.9999, 2))
                points = [p for p in branch_points(spec) if a < p < r] or None
                reference, _ = quad(
                    lambda t, s=spec: -radial_component(s, t),
                    a,
                    r,
                    points=points,
                    epsabs=0.0,
                    epsrel=1e-13,
                    limit=200,
                )
                assert drift_integral(spec, a, r) == pytest.approx(reference, rel=1e-10, abs=1e-14)

    def test_additive(self) -> None:
        """Test D(a, c) = D(a, b) + D(b, c) across the truncation radius."""
        spec = DriftSpec.truncated_inverse(1.5, 200)
        a, b, c = 0.2, 0.99, 0.999
        assert drift_integral(spec, a, c) == pytest.approx(
            drift_integral(spec, a, b) + drift_integral(spec, b, c), rel=1e-12
        )

    def test_monotone(self) -> None:
        """Test D nondecreasing in r and nonincreasing in a."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        radii = np.linspace(0.1, 1.0, 400)
        forward = [drift_integral(spec, 0.1, float(r)) for r in radii]
        backward = [drift_integral(spec, float(a), 1.0) for a in radii]
        assert all(y >= x for x, y in zip(forward, forward[1:], strict=False))
        assert all(y <= x for x, y in zip(backward, backward[1:], strict=False))

    def test_continuous_across_truncation(self) -> None:
        """Test D just below and just above 1 - 1/m."""
        spec = DriftSpec.truncated_inverse(1.0, 100)
        below = drift_integral(spec, 0.5, math.nextafter(0.99, 0.0))
        above = drift_integral(spec, 0.5, math.nextafter(0.99, 1.0))
        assert above == pytest.approx(below, rel=1e-13)


class TestLimitingBound:
    """Tests for sup (1-r)|b(r)|."""

    def test_truncated_inverse(self) -> None:
        """Test sup = C, attained on the inner branch."""
        result = limiting_bound_holds(
            DriftSpec.truncated_inverse(1.0, 100), np.linspace(0.0, 0.9999, 20001)
        )
        assert result.holds
        assert result.sup == pytest.approx(1.0, rel=1e-12)

    def test_small_constant(self) -> None:
        """Test sup = epsilon identically."""
        result = limiting_bound_holds(DriftSpec.small_constant(0.01), np.linspace(0.0, 0.999, 1001))
        assert result.holds
        assert result.sup == pytest.approx(0.01, rel=1e-12)

    def test_power_regularized(self) -> None:
        """Test sup = C at r = 0 and decay toward the boundary."""
        spec = DriftSpec.power_regularized(1.0, 0.5)
        result = limiting_bound_holds(spec, np.linspace(0.0, 0.9999, 1001))
        assert result.holds
        assert result.sup == pytest.approx(1.0)
        tail = limiting_bound_holds(spec, [0.9999])
        assert tail.sup < 0.02

    def test_empty_grid(self) -> None:
        """Test that an empty grid trivially holds."""
        assert limiting_bound_holds(DriftSpec.zero(), []).holds


class TestDriftSpec:
    """Tests for construction and the JSON codec."""

    def test_from_json(self) -> None:
        """Test decoding the documented JSON object."""
        spec = DriftSpec.from_json('{"family": "truncated_inverse", "C": 1, "m": 10000}')
        assert spec.family is DriftFamily.TRUNCATED_INVERSE
        assert spec.C == 1.0
        assert spec.m == 10000

    def test_to_dict(self) -> None:
        """Test encoding keeps only the family's fields."""
        assert DriftSpec.power_regularized(1.0, 0.5).to_dict() == {
            "family": "power_regularized",
            "C": 1.0,
            "beta": 0.5,
        }

    def test_json_round_trip(self) -> None:
        """Test decode(encode(spec)) == spec."""
        spec = DriftSpec.small_constant(0.01)
        assert DriftSpec.from_json(spec.to_json()) == spec

    def test_unknown_field_rejected(self) -> None:
        """Test that unknown fields are rejected."""
        with pytest.raises(ConfigurationError, match="unknown"):
            DriftSpec.from_dict({"family": "truncated_inverse", "C": 1, "m": 100, "beta": 0.5})

    def test_unknown_family_rejected(self) -> None:
        """Test that an unknown family is rejected."""
        with pytest.raises(ConfigurationError):
            DriftSpec.from_dict({"family": "swirl", "C": 1})

    def test_missing_field(self) -> None:
        """Test that a missing m is reported."""
        with pytest.raises(ConfigurationError, match="m"):
            DriftSpec.from_dict({"family": "truncated_inverse", "C": 1})

    def test_invalid_json(self) -> None:
        """Test that malformed JSON is a configuration error."""
        with pytest.raises(ConfigurationError):
            DriftSpec.from_json("{not json")

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"family": DriftFamily.TRUNCATED_INVERSE, "C": 1.0, "m": 2},
            {"family": DriftFamily.TRUNCATED_INVERSE, "C": 0.0, "m": 100},
            {"family": DriftFamily.POWER_REGULARIZED, "C": 1.0, "beta": 1.0},
            {"family": DriftFamily.SMALL_CONSTANT, "epsilon": -0.1},
        ],
    )
    def test_invalid_parameters(self, kwargs: dict[str, object]) -> None:
        """Test parameter validation."""
        with pytest.raises(ConfigurationError):
            DriftSpec(**kwargs)  # type: ignore[arg-type]

    def test_tabulated_must_be_inward(self) -> None:
        """Test that outward tabulated drifts are rejected."""
        with pytest.raises(ConfigurationError):
            DriftSpec.tabulated([0.0, 1.0], [0.0, 1.0])

    def test_labels_and_regimes(self) -> None:
        """Test human-readable labels and regime names."""
        assert DriftSpec.truncated_inverse(1.0, 100).label == "truncated_inverse(C=1, m=100)"
        assert DriftSpec.zero().label == "zero"
        assert regime(DriftSpec.truncated_inverse(1.0, 100)) == "supercritical"
        assert regime(DriftSpec.truncated_inverse(0.5, 100)) == "subcritical"
        assert regime(DriftSpec.zero()) == "none"

    def test_boundedness(self) -> None:
        """Test which families stay bounded up to the sphere."""
        assert is_bounded(DriftSpec.truncated_inverse(1.0, 100))
        assert is_bounded(DriftSpec.zero())
        assert not is_bounded(DriftSpec.small_constant(0.01))
        assert not is_bounded(DriftSpec.power_regularized(1.0, 0.5))
