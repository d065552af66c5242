#!/usr/bin/env python3
"""Run the drift Green's function experiments and write their artifacts.

Usage:
    uv run python tools/green_lab.py sweep-m --C 1 --n 3 --m 1e2 1e3 1e4 1e5 1e6 --out results/m
    uv run python tools/green_lab.py sweep-beta --C 1 --n 3 --beta 0.1,0.5,0.9 --out results/beta
    uv run python tools/green_lab.py sweep-c --m 10000 --C 0.5,1,2 --n 3 --out results/c
    uv run python tools/green_lab.py verify --spec '{"family":"truncated_inverse","C":1,"m":10000}' --n 3
    uv run python tools/green_lab.py fd-check --m 20 --C 1 --N 65 [--rho 0.125]
    uv run python tools/green_lab.py blowup --C 1 --m 5,10,20,40 --N 65

Each command writes <out>/report.json and <out>/rows.csv. Exit codes:
0 all checks passed, 2 usage error, 3 numerical failure, 4 acceptance
check failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from src.drift_green.const import (
    DEFAULT_ABS_TOL,
    DEFAULT_FD_MAX_ITER,
    DEFAULT_FD_TOL,
    DEFAULT_MESH_SIZE,
    DEFAULT_R_EVAL,
    DEFAULT_REL_TOL,
    EXIT_ACCEPTANCE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    SWEEP_WORKERS,
)
from src.drift_green.drift import DriftSpec
from src.drift_green.errors import ConfigurationError, DomainError, NumericalError
from src.drift_green.experiments import (
    SweepConfig,
    run_beta_sweep,
    run_blowup,
    run_c_sweep,
    run_fd_check,
    run_m_sweep,
    run_verify,
)
from src.drift_green.fd import FdScheme, SolverConfig
from src.drift_green.radial import QuadratureConfig
from src.drift_green.report import ExperimentReport

logger = logging.getLogger("green_lab")


def _split_values(raw: Sequence[str]) -> list[str]:
    """Flatten "1,2 3" style lists into ["1", "2", "3"]."""
    return [part for item in raw for part in item.split(",") if part.strip()]


def _float_list(raw: Sequence[str], what: str) -> list[float]:
    try:
        values = [float(v) for v in _split_values(raw)]
    except ValueError as err:
        raise ConfigurationError(f"--{what}: {err}") from err
    if not values:
        raise ConfigurationError(f"--{what} needs at least one value")
    return values


def _int_list(raw: Sequence[str], what: str) -> list[int]:
    values = _float_list(raw, what)
    if any(not math.isfinite(v) or v != int(v) for v in values):
        raise ConfigurationError(f"--{what} values must be integers")
    return [int(v) for v in values]


def _quadrature(args: argparse.Namespace) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _sweep(args: argparse.Namespace) -> SweepConfig:
    return SweepConfig(workers=args.workers, mesh_size=args.mesh_size)


def _scheme(args: argparse.Namespace) -> FdScheme:
    return FdScheme(convection=args.convection, boundary=args.boundary)


def _solver(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        method=args.method,
        preconditioner=args.preconditioner,
        tol=args.tol,
        max_iter=args.max_iter,
    )


def _load_spec(text: str) -> DriftSpec:
    """Inline JSON, or a path to a JSON file."""
    if text.lstrip().startswith("{"):
        return DriftSpec.from_json(text)
    path = Path(text)
    if not path.is_file():
        raise ConfigurationError(f"--spec is neither JSON nor a readable file: {text}")
    return DriftSpec.from_json(path.read_text(encoding="utf-8"))


def _cmd_sweep_m(args: argparse.Namespace) -> ExperimentReport:
    """Handle sweep-m command."""
    return run_m_sweep(
        args.C, args.n, _int_list(args.m, "m"), args.r, _quadrature(args), _sweep(args)
    )


def _cmd_sweep_beta(args: argparse.Namespace) -> ExperimentReport:
    """Handle sweep-beta command."""
    return run_beta_sweep(
        args.C, args.n, _float_list(args.beta, "beta"), args.r, _quadrature(args), _sweep(args)
    )


def _cmd_sweep_c(args: argparse.Namespace) -> ExperimentReport:
    """Handle sweep-c command."""
    return run_c_sweep(
        args.m, _float_list(args.C, "C"), args.n, args.r, _quadrature(args), _sweep(args)
    )


def _cmd_verify(args: argparse.Namespace) -> ExperimentReport:
    """Handle verify command."""
    return run_verify(
        _load_spec(args.spec), args.n, args.mis_scale, _quadrature(args), _sweep(args)
    )


def _cmd_fd_check(args: argparse.Namespace) -> ExperimentReport:
    """Handle fd-check command."""
    return run_fd_check(
        args.C, args.m, args.N, args.rho, _scheme(args), _solver(args), _quadrature(args)
    )


def _cmd_blowup(args: argparse.Namespace) -> ExperimentReport:
    """Handle blowup command."""
    return run_blowup(
        args.C,
        _int_list(args.m, "m"),
        args.N,
        args.amplitude,
        _scheme(args),
        _solver(args),
        _quadrature(args),
    )


COMMANDS: dict[str, Callable[[argparse.Namespace], ExperimentReport]] = {
    "sweep-m": _cmd_sweep_m,
    "sweep-beta": _cmd_sweep_beta,
    "sweep-c": _cmd_sweep_c,
    "verify": _cmd_verify,
    "fd-check": _cmd_fd_check,
    "blowup": _cmd_blowup,
}


def _add_common(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument("--out", type=Path, default=Path(default_out), help="output directory")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    parser.add_argument("--abs-tol", type=float, default=DEFAULT_ABS_TOL)


def _add_sweep(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=3, help="dimension")
    parser.add_argument("--workers", type=int, default=SWEEP_WORKERS)
    parser.add_argument("--mesh-size", type=int, default=DEFAULT_MESH_SIZE)


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--N", type=int, required=True, help="grid points per axis (odd)")
    parser.add_argument(
        "--convection",
        choices=("exponential", "upwind"),
        default="exponential",
        help="drift discretization; only exponential with shortley_weller converges in symmetry",
    )
    parser.add_argument(
        "--boundary",
        choices=("shortley_weller", "first_order"),
        default="shortley_weller",
        help="sphere closure; first_order stalls at O(h) and can lose symmetry under refinement",
    )
    parser.add_argument("--method", choices=("bicgstab", "gmres"), default="bicgstab")
    parser.add_argument("--preconditioner", choices=("jacobi", "ilu", "none"), default="jacobi")
    parser.add_argument("--tol", type=float, default=DEFAULT_FD_TOL)
    parser.add_argument("--max-iter", type=int, default=DEFAULT_FD_MAX_ITER)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="green_lab",
        allow_abbrev=False,
        description="Green's function experiments for singular radial drifts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-m", allow_abbrev=False, help="G_m(r) across truncation levels")
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--m", nargs="+", required=True, help="truncation levels")
    p.add_argument("--r", type=float, default=DEFAULT_R_EVAL)
    _add_sweep(p)
    _add_common(p, "results/sweep-m")

    p = sub.add_parser("sweep-beta", allow_abbrev=False, help="power-regularized drifts")
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--beta", nargs="+", required=True)
    p.add_argument("--r", type=float, default=DEFAULT_R_EVAL)
    _add_sweep(p)
    _add_common(p, "results/sweep-beta")

    p = sub.add_parser("sweep-c", allow_abbrev=False, help="drift strengths at fixed m")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--C", nargs="+", required=True)
    p.add_argument("--r", type=float, default=DEFAULT_R_EVAL)
    _add_sweep(p)
    _add_common(p, "results/sweep-c")

    p = sub.add_parser("verify", allow_abbrev=False, help="distributional identity residuals")
    p.add_argument("--spec", required=True, help="drift spec as JSON or a JSON file")
    p.add_argument("--mis-scale", type=float, default=1.0)
    _add_sweep(p)
    _add_common(p, "results/verify")

    p = sub.add_parser("fd-check", allow_abbrev=False, help="grid solve against the radial solution")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--rho", type=float, default=None)
    _add_grid(p)
    _add_common(p, "results/fd-check")

    p = sub.add_parser("blowup", allow_abbrev=False, help="u_m(0) for a source off the pole")
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--m", nargs="+", required=True)
    p.add_argument("--amplitude", type=float, default=1.0)
    _add_grid(p)
    _add_common(p, "results/blowup")
    return parser


def _print_report(report: ExperimentReport, paths: tuple[Path, Path]) -> None:
    print(f"{report.kind}: {len(report.rows)} rows")
    if report.fit is not None:
        fit = report.fit
        print(f"  fit: slope={fit.slope:.6g} intercept={fit.intercept:.6g} r2={fit.r_squared:.6f}")
    for name, ok in report.checks.items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    for warning in report.warnings:
        print(f"  warning: {warning}")
    print(f"  wrote {paths[0]} and {paths[1]}")


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    handler = COMMANDS[args.command]
    logger.debug("running %s", args.command)
    try:
        report = handler(args)
    except (ConfigurationError, DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL

    paths = report.write(args.out)
    _print_report(report, paths)
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


if __name__ == "__main__":
    sys.exit(main())
