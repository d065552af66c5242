"""Fixtures for drift Green's function tests."""

from __future__ import annotations

import pytest

from src.drift_green.drift import DriftSpec
from src.drift_green.radial import QuadratureConfig, RadialGreenProfile, build_profile

# Coarser than the default mesh; every evaluator still uses full quadrature
TEST_MESH_SIZE = 64


@pytest.fixture(scope="session")
def quadrature() -> QuadratureConfig:
    """Default quadrature tolerances."""
    return QuadratureConfig()


@pytest.fixture(scope="session")
def zero_spec() -> DriftSpec:
    """The pure Laplacian."""
    return DriftSpec.zero()


@pytest.fixture(scope="session")
def critical_spec() -> DriftSpec:
    """Truncated inverse drift at the critical strength C = 1, m = 100."""
    return DriftSpec.truncated_inverse(1.0, 100)


@pytest.fixture(scope="session")
def zero_profile(zero_spec: DriftSpec, quadrature: QuadratureConfig) -> RadialGreenProfile:
    """Laplacian Green's function in the unit ball of R^3."""
    return build_profile(zero_spec, 3, TEST_MESH_SIZE, quadrature)


@pytest.fixture(scope="session")
def critical_profile(critical_spec: DriftSpec, quadrature: QuadratureConfig) -> RadialGreenProfile:
    """Green's function for C = 1, m = 100 in R^3."""
    return build_profile(critical_spec, 3, TEST_MESH_SIZE, quadrature)
