"""
Subcommands of the command line. Each one writes <subcommand>_summary.txt and its
CSV tables into the output directory and returns the process exit status.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .acceptance_suite import CHECK_COLUMNS, run_suite
from .calibrated_space import (PathField, is_hypercritical, is_member, j_functional_along, path_length,
                               pencil_lambdas, topological_angle)
from .config import RunConfig
from .curvature_lab import curvature_ensemble
from .epsilon_geodesic_solver import solve_continuation
from .errors import ConfigError, ToolkitError
from .field_io import save_field, save_path
from .helpers import measure_time
from .metric_geometry import cat0_comparison, distance, distance_lower_bound, triangle_inequality_check
from .pointwise_calculus import phase
from .reports import write_csv, write_summary
from .torus_discretization import ScalarField

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2


def _phase(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    write_summary(out / "phase_summary.txt", {
        "complex_dim": bg.grid.complex_dim, "points_per_axis": bg.grid.points_per_axis,
        "topological_angle": topological_angle(bg), "theta_hat": bg.theta_hat,
        "hypercritical": is_hypercritical(bg)})
    return EXIT_OK


def _member(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    rows = []
    for name in sorted(config.endpoints):
        phi = config.endpoint(name)
        report = is_member(bg, phi)
        margins = math.pi / 2 - np.abs(phase(pencil_lambdas(bg, phi.values)) - bg.theta_hat)
        save_field(out / f"member_margin_{name}.npz", ScalarField(bg.grid, margins))
        rows.append({"endpoint": name, "member": report.member, "margin": report.margin,
                     "worst_point": " ".join(f"{value:.17g}" for value in report.worst_point)})
    write_csv(out / "member.csv", rows, ["endpoint", "member", "margin", "worst_point"])
    write_summary(out / "member_summary.txt", {"endpoints": len(rows),
                                               "all_members": all(row["member"] for row in rows)})
    return EXIT_OK


def _geodesic(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    settings = config.settings()
    problem = settings.problem(bg, config.endpoint("phi0"), config.endpoint("phi1"), config.epsilon_schedule)
    stages = solve_continuation(problem, settings.options)
    _, path, report = stages[-1]
    save_path(out / "geodesic_path.npz", path)
    write_csv(out / "geodesic_residuals.csv", [{"step": step, "residual": value}
                                               for step, value in report.residual_rows()], ["step", "residual"])
    j_values = j_functional_along(bg, path)
    write_csv(out / "geodesic_energy.csv",
              [{"t": t, "energy": energy, "margin": margin, "j_functional": j}
               for t, energy, margin, j in zip(path.times, report.energy, report.min_margin_per_slice, j_values)],
              ["t", "energy", "margin", "j_functional"])
    write_csv(out / "geodesic_stages.csv",
              [{"epsilon": epsilon, "newton_steps": stage.newton_steps, "final_residual": stage.final_residual,
                "min_phi_ddot": stage.min_phi_ddot, "max_energy_drift": stage.max_energy_drift,
                "sup_spatial_hessian": stage.sup_spatial_hessian, "length": path_length(bg, stage_path)}
               for epsilon, stage_path, stage in stages],
              ["epsilon", "newton_steps", "final_residual", "min_phi_ddot", "max_energy_drift",
               "sup_spatial_hessian", "length"])
    write_summary(out / "geodesic_summary.txt", {**report.summary(), "length": path_length(bg, path)})
    return EXIT_OK


def _distance(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    phi0, phi1 = config.endpoint("phi0"), config.endpoint("phi1")
    result = distance(bg, phi0, phi1, config.epsilon_schedule, config.settings())
    write_csv(out / "distance.csv", result.energy_rows,
              ["epsilon", "length", "min_energy", "max_energy", "max_energy_drift", "energy_bound_slack"])
    write_summary(out / "distance_summary.txt", {**result.summary(),
                                                 "lower_bound": distance_lower_bound(bg, phi0, phi1)})
    return EXIT_OK


def _curvature(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    rows = curvature_ensemble(bg, config.endpoint("phi0"), np.random.default_rng(config.seed),
                              int(config.suite["planes"]))
    write_csv(out / "curvature.csv", rows, ["draw_id", "k_route_a", "k_route_b", "denominator", "flat_flag"])
    largest = max((row["k_route_b"] for row in rows), default=float("nan"))
    write_summary(out / "curvature_summary.txt", {
        "planes": len(rows), "max_k": largest, "nonpositive": bool(rows) and largest <= 1e-10,
        "flat_planes": sum(1 for row in rows if row["flat_flag"])})
    return EXIT_OK


def _cat0(config: RunConfig, out: Path) -> int:
    bg = config.build_background()
    settings = config.settings()
    p, q, r = (config.endpoint(name) for name in ("phi0", "phi1", "phi2"))
    comparison = cat0_comparison(bg, p, q, r, config.suite["cat0_lambdas"], config.epsilon_schedule, settings,
                                 config.threads)
    triangle = triangle_inequality_check(bg, p, q, r, config.epsilon_schedule, settings)
    write_csv(out / "cat0.csv", comparison.rows(), ["lambda", "distance", "slack"])
    write_summary(out / "cat0_summary.txt", {
        "tolerance": comparison.tolerance, "min_slack": min(comparison.slacks), "holds": comparison.holds,
        "triangle_slack": triangle.slack, "triangle_tolerance": triangle.tolerance,
        "triangle_holds": triangle.holds})
    return EXIT_OK


def _jfun(config: RunConfig, out: Path) -> int:
    """J along the segment phi0 -> phi1 and around the loop phi0 -> phi1 -> phi2 -> phi0."""
    bg = config.build_background()
    steps = config.settings().time_steps
    corners = [config.endpoint(name) for name in ("phi0", "phi1", "phi2")]
    segment = PathField.linear(corners[0], corners[1], steps)
    j_values = j_functional_along(bg, segment)
    loop = sum(float(j_functional_along(bg, PathField.linear(start, end, steps))[-1])
               for start, end in zip(corners, corners[1:] + corners[:1]))
    write_csv(out / "jfun.csv", [{"t": t, "j_functional": j} for t, j in zip(segment.times, j_values)],
              ["t", "j_functional"])
    write_summary(out / "jfun_summary.txt", {"j_end": float(j_values[-1]), "loop_closure": loop})
    return EXIT_OK


def _suite(config: RunConfig, out: Path) -> int:
    tester = run_suite(config, config.threads)
    write_csv(out / "suite_checks.csv", [result.row() for result in tester.results], CHECK_COLUMNS)
    write_summary(out / "suite_summary.txt", tester.report())
    LOGGER.info("Tests performed: %d Tests successful: %d", tester.tests_performed, tester.tests_successful)
    return EXIT_OK if tester.tests_successful == tester.tests_performed else EXIT_NUMERIC


SUBCOMMANDS = {"phase": _phase, "member": _member, "geodesic": _geodesic, "distance": _distance,
               "curvature": _curvature, "cat0": _cat0, "jfun": _jfun, "suite": _suite}


@measure_time
def run(subcommand: str, config: RunConfig) -> int:
    """
    Runs one subcommand.
    :return: 0 on success, 1 on a numerical failure, 2 on a configuration error
    """
    if subcommand not in SUBCOMMANDS:
        LOGGER.error("Unknown subcommand %s; expected one of %s", subcommand, ", ".join(SUBCOMMANDS))
        return EXIT_CONFIG
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return SUBCOMMANDS[subcommand](config, out)
    except ConfigError as exc:
        LOGGER.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except ToolkitError as exc:
        LOGGER.error("%s failed with %s: %s", subcommand, type(exc).__name__, exc)
        return EXIT_NUMERIC
