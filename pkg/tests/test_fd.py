"""Tests for the finite-difference ball solver."""

from __future__ import annotations

import csv
import json
import math
from typing import TYPE_CHECKING

import numpy as np
import pytest
import scipy.sparse as sp

from src.drift_green.drift import DriftSpec
from src.drift_green.errors import (
    ConfigurationError,
    MaximumPrincipleError,
    ResolutionError,
    SolverError,
    UnsupportedDriftError,
)
from src.drift_green.fd import (
    BallGrid,
    FdScheme,
    SolverConfig,
    assemble,
    assemble_with_source,
    blowup_source,
    cross_validate,
    drift_field,
    mollified_delta,
    poisson_blowup_experiment,
    radial_comparator,
    radial_symmetry_deviation,
    shell_flux,
    solve,
    write_solution,
)

if TYPE_CHECKING:
    from pathlib import Path


# --- grid ---


class TestBallGrid:
    """Tests for the interior node set."""

    def test_coarsest_grid(self) -> None:
        """Test the 27 interior nodes of N = 5."""
        grid = BallGrid(5)
        assert grid.h == 0.5
        assert grid.size == 27
        np.testing.assert_array_equal(grid.points[grid.center_index], [0.0, 0.0, 0.0])

    def test_nodes_inside_ball(self) -> None:
        """Test |x| < 1 for every node."""
        grid = BallGrid(17)
        assert np.all(grid.radii < 1.0)
        assert grid.interior_mask.sum() == grid.size

    @pytest.mark.parametrize("N", [3, 4, 16])
    def test_invalid_size(self, N: int) -> None:
        """Test that N must be odd and at least 5."""
        with pytest.raises(ConfigurationError):
            BallGrid(N)


# --- assembly ---


def test_drift_field() -> None:
    """Test B(0.5, 0, 0) = (-2, 0, 0) and B(0) = 0 for C = 1."""
    points = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, -0.5, 0.0]])
    field = drift_field(DriftSpec.truncated_inverse(1.0, 20), points)
    np.testing.assert_allclose(field, [[-2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 2.0, 0.0]])


class TestAssemble:
    """Tests for the assembled operator."""

    def test_structure(self) -> None:
        """Test one row per interior node and unit discrete mass."""
        grid = BallGrid(33)
        system = assemble(DriftSpec.truncated_inverse(1.0, 20), grid, 4.0 * grid.h)
        assert system.matrix.shape == (grid.size, grid.size)
        assert system.discrete_mass == pytest.approx(1.0, rel=1e-12)
        assert system.mollifier_radius == 4.0 * grid.h

    def test_m_matrix(self) -> None:
        """Test sign pattern and diagonal dominance for C = 1, m = 20."""
        grid = BallGrid(17)
        system = assemble(DriftSpec.truncated_inverse(1.0, 20), grid, 2.0 * grid.h)
        A = system.matrix.tocoo()
        off = A.row != A.col
        assert np.all(A.data[off] <= 0.0)
        assert np.all(system.matrix.diagonal() > 0.0)
        assert np.all(np.asarray(system.matrix.sum(axis=1)).ravel() >= -1e-9)

    def test_zero_drift_first_order_is_symmetric(self) -> None:
        """Test a symmetric Laplacian without Shortley-Weller cuts."""
        grid = BallGrid(17)
        system = assemble(DriftSpec.zero(), grid, 2.0 * grid.h, FdScheme(boundary="first_order"))
        assert abs(system.matrix - system.matrix.T).max() < 1e-9

    @pytest.mark.parametrize("convection", ["exponential", "upwind"])
    def test_zero_drift_matches_laplacian(self, convection: str) -> None:
        """Test that both convection schemes reduce to the Laplacian."""
        grid = BallGrid(17)
        scheme = FdScheme(convection=convection)  # type: ignore[arg-type]
        system = assemble(DriftSpec.zero(), grid, 2.0 * grid.h, scheme)
        assert abs(system.matrix - system.laplacian).max() < 1e-9

    def test_resolution_error(self) -> None:
        """Test that rho < 2h is rejected."""
        grid = BallGrid(17)
        with pytest.raises(ResolutionError):
            assemble(DriftSpec.zero(), grid, 1.5 * grid.h)

    def test_unbounded_drift_rejected(self) -> None:
        """Test that the grid operator needs a bounded drift."""
        grid = BallGrid(17)
        with pytest.raises(UnsupportedDriftError):
            assemble(DriftSpec.small_constant(0.01), grid, 2.0 * grid.h)

    def test_peclet_warning(self) -> None:
        """Test the m > 0.5/(C h) guard."""
        grid = BallGrid(33)
        warned = assemble(DriftSpec.truncated_inverse(1.0, 20), grid, 2.0 * grid.h)
        quiet = assemble(DriftSpec.truncated_inverse(1.0, 5), grid, 2.0 * grid.h)
        assert len(warned.warnings) == 1
        assert "Peclet" in warned.warnings[0]
        assert quiet.warnings == []

    def test_source_shape_checked(self) -> None:
        """Test that a nodal source must match the grid."""
        with pytest.raises(ConfigurationError):
            assemble_with_source(DriftSpec.zero(), BallGrid(9), np.ones(3))

    def test_mollified_delta_mass(self) -> None:
        """Test h^3 * sum = 1."""
        grid = BallGrid(33)
        delta = mollified_delta(grid, 0.2)
        assert delta.sum() * grid.h**3 == pytest.approx(1.0)
        assert np.all(delta[grid.radii >= 0.2] == 0.0)


# --- solve ---


class TestSolve:
    """Tests for the Krylov solve."""

    def test_zero_drift_ordering(self) -> None:
        """Test u positive and largest near the pole."""
        grid = BallGrid(33)
        solution = solve(assemble(DriftSpec.zero(), grid, 4.0 * grid.h))
        near_pole = solution.u[grid.radii < 2.0 * grid.h]
        near_sphere = solution.u[grid.radii > 1.0 - 2.0 * grid.h]
        assert near_pole.min() > near_sphere.max()
        assert solution.u.min() > 0.0
        assert solution.residual < 10.0 * SolverConfig().tol

    def test_maximum_principle_with_drift(self) -> None:
        """Test u >= -1e-10 for C = 1, m = 20."""
        grid = BallGrid(33)
        solution = solve(assemble(DriftSpec.truncated_inverse(1.0, 20), grid, 4.0 * grid.h))
        assert solution.u.min() >= -1e-10
        assert solution.residual_history
        assert solution.iterations == len(solution.residual_history)

    def test_tolerance_consistency(self) -> None:
        """Test that halving tol barely moves u."""
        grid = BallGrid(33)
        system = assemble(DriftSpec.truncated_inverse(1.0, 20), grid, 4.0 * grid.h)
        tol = 1e-8
        coarse = solve(system, SolverConfig(tol=tol)).u
        fine = solve(system, SolverConfig(tol=tol / 2.0)).u
        assert np.linalg.norm(fine - coarse) / np.linalg.norm(fine) < 1e3 * tol

    @pytest.mark.parametrize(
        "config",
        [
            SolverConfig(method="gmres", tol=1e-10),
            SolverConfig(preconditioner="ilu", tol=1e-10),
            SolverConfig(preconditioner="none", tol=1e-10, max_iter=20_000),
        ],
        ids=["gmres", "ilu", "unpreconditioned"],
    )
    def test_methods_agree(self, config: SolverConfig) -> None:
        """Test the alternative methods against the default."""
        grid = BallGrid(17)
        system = assemble(DriftSpec.truncated_inverse(1.0, 5), grid, 2.0 * grid.h)
        reference = solve(system).u
        other = solve(system, config).u
        assert np.linalg.norm(other - reference) / np.linalg.norm(reference) < 1e-5

    def test_zero_source(self) -> None:
        """Test f = 0 gives u = 0 without iterating."""
        grid = BallGrid(9)
        system = assemble_with_source(DriftSpec.zero(), grid, np.zeros(grid.size))
        solution = solve(system)
        assert np.all(solution.u == 0.0)
        assert solution.iterations == 0

    def test_non_convergence(self) -> None:
        """Test that exhausting max_iter raises with the residual history."""
        grid = BallGrid(17)
        system = assemble(DriftSpec.zero(), grid, 2.0 * grid.h)
        with pytest.raises(SolverError) as excinfo:
            solve(system, SolverConfig(tol=1e-12, max_iter=1, preconditioner="none"))
        assert len(excinfo.value.residual_history) == 1

    def test_maximum_principle_violation(self) -> None:
        """Test that a negative solution of a nonnegative source is rejected."""
        grid = BallGrid(9)
        system = assemble(DriftSpec.zero(), grid, 2.0 * grid.h)
        system.matrix = sp.csr_matrix(-sp.identity(grid.size))
        with pytest.raises(MaximumPrincipleError) as excinfo:
            solve(system)
        assert excinfo.value.minimum < 0.0

    def test_config_validation(self) -> None:
        """Test solver and scheme validation."""
        with pytest.raises(ConfigurationError):
            SolverConfig(tol=0.0)
        with pytest.raises(ConfigurationError):
            SolverConfig(method="cg")  # type: ignore[arg-type]
        with pytest.raises(ConfigurationError):
            FdScheme(convection="central")  # type: ignore[arg-type]


# --- analysis ---


class TestRadialSymmetry:
    """Tests for the within-shell deviation."""

    def test_radial_function(self) -> None:
        """Test that a radial function has no deviation."""
        grid = BallGrid(33)
        assert radial_symmetry_deviation(1.0 - grid.radii**2, grid) < 1e-8

    def test_detects_coordinate_function(self) -> None:
        """Test that x_1 is flagged as non-radial."""
        grid = BallGrid(33)
        assert radial_symmetry_deviation(grid.points[:, 0], grid) > 0.5

    def test_zero_drift_solution(self) -> None:
        """Test deviation below 10% for the Laplacian."""
        grid = BallGrid(33)
        rho = 4.0 * grid.h
        solution = solve(assemble(DriftSpec.zero(), grid, rho))
        assert radial_symmetry_deviation(solution.u, grid, rho) < 0.10


def test_shell_flux_without_drift() -> None:
    """Test that the flux through r = 1/2 carries the unit mass."""
    grid = BallGrid(33)
    solution = solve(assemble(DriftSpec.zero(), grid, 2.0 * grid.h))
    assert shell_flux(solution, 0.5) == pytest.approx(1.0, rel=0.10)


def test_cross_validate_needs_mollifier() -> None:
    """Test that a plain source has no radial reference."""
    grid = BallGrid(9)
    system = assemble_with_source(DriftSpec.zero(), grid, np.ones(grid.size))
    with pytest.raises(ConfigurationError):
        cross_validate(solve(system))


def test_write_solution(tmp_path: Path) -> None:
    """Test the nodal CSV and the JSON summary."""
    grid = BallGrid(9)
    solution = solve(assemble(DriftSpec.truncated_inverse(1.0, 5), grid, 2.0 * grid.h))
    csv_path, json_path = write_solution(solution, tmp_path)
    with open(csv_path, encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x", "y", "z", "u"]
    assert len(rows) == grid.size + 1
    summary = json.loads(json_path.read_text(encoding="utf-8"))
    assert summary["N"] == 9
    assert summary["m"] == 5
    assert summary["iters"] == solution.iterations
    assert summary["threads"] == 1


# --- blowup ---


def test_radial_comparator_mean_value() -> None:
    """Test the mean value property a^3 (1/d - 1) / 3 without drift."""
    expected = 0.1**3 * (1.0 / 0.5 - 1.0) / 3.0
    assert radial_comparator(DriftSpec.zero(), 0.5, 0.1) == pytest.approx(expected, rel=1e-8)


def test_blowup_source() -> None:
    """Test the indicator of B((1/2, 0, 0), 0.1)."""
    grid = BallGrid(33)
    source = blowup_source(grid)
    assert source.sum() == 19.0
    assert source[grid.center_index] == 0.0


class TestBlowupExperiment:
    """Tests for u_m(0) with a source away from the pole."""

    def test_rows(self) -> None:
        """Test one positive row per m."""
        rows = poisson_blowup_experiment(1.0, [5, 10], 17)
        assert [row.m for row in rows] == [5, 10]
        assert all(row.u_center > 0.0 for row in rows)
        assert all(row.radial_comparator > 0.0 for row in rows)

    def test_zero_source(self) -> None:
        """Test f = 0 gives u_m(0) = 0."""
        rows = poisson_blowup_experiment(1.0, [5, 10], 17, amplitude=0.0)
        assert all(row.u_center == 0.0 for row in rows)

    def test_dimension_must_be_three(self) -> None:
        """Test that only n = 3 is supported."""
        with pytest.raises(ConfigurationError):
            poisson_blowup_experiment(1.0, [5, 10], 17, n=4)

    def test_m_list_must_increase(self) -> None:
        """Test that m_list is strictly increasing."""
        with pytest.raises(ConfigurationError):
            poisson_blowup_experiment(1.0, [10, 5], 17)


# --- refinement studies on N = 65 ---


@pytest.mark.slow
def test_zero_drift_reproduces_closed_form() -> None:
    """Test 5% agreement with the Laplacian solution on 0.15 < r < 0.7."""
    grid = BallGrid(65)
    solution = solve(assemble(DriftSpec.zero(), grid, 4.0 * grid.h))
    assert cross_validate(solution).max_error < 0.05


@pytest.mark.slow
@pytest.mark.parametrize("m", [5, 10, 20])
def test_cross_validation_with_drift(m: int) -> None:
    """Test 10% agreement with the mollified radial solution for C = 1."""
    grid = BallGrid(65)
    solution = solve(assemble(DriftSpec.truncated_inverse(1.0, m), grid, 4.0 * grid.h))
    assert cross_validate(solution).max_error < 0.10


@pytest.mark.slow
def test_symmetry_improves_under_refinement() -> None:
    """Test the deviation for C = 1, m = 20 drops by 1.5x from N = 33 to 65."""
    spec = DriftSpec.truncated_inverse(1.0, 20)
    rho = 0.25
    deviations = []
    for N in (33, 65):
        grid = BallGrid(N)
        solution = solve(assemble(spec, grid, rho))
        deviations.append(radial_symmetry_deviation(solution.u, grid, rho))
    assert deviations[1] < 0.10
    assert deviations[0] / deviations[1] >= 1.5


@pytest.mark.slow
def test_blowup_increases_for_critical_drift() -> None:
    """Test strictly increasing u_m(0) for C = 1."""
    rows = poisson_blowup_experiment(1.0, [5, 10, 20, 40], 65)
    values = [row.u_center for row in rows]
    assert all(b > a for a, b in zip(values, values[1:], strict=False))
    assert all(math.isfinite(row.radial_comparator) for row in rows)


@pytest.mark.slow
def test_blowup_flattens_for_subcritical_drift() -> None:
    """Test smaller increments at larger m for C = 1/2."""
    rows = poisson_blowup_experiment(0.5, [5, 10, 20, 40], 65)
    values = [row.u_center for row in rows]
    assert values[3] - values[2] < values[1] - values[0]
