"""
Acceptance checks. Every check draws from its own random stream derived from the
run seed, so any subset of checks gives the same numbers as the full run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .augmented_operator import Linearization, residual_array
from .calibrated_space import BackgroundData, PathField, calibrated_weight, is_hypercritical, is_member, path_length
from .config import RunConfig
from .curvature_lab import (TwoParamFamily, commutator_oracle, curvature_ensemble, curvature_tensor,
                            metric_compatibility_check, sectional_curvature, torsion_defect)
from .epsilon_geodesic_solver import solve, solve_continuation
from .epsilon_problem import SolverSettings
from .errors import ConfigError, NotInSpaceError, ToolkitError
from .formulas import fourier_background, product_background, pull_back, random_trig_field, torus_background
from .helpers import measure_time
from .metric_geometry import (DistanceResult, cat0_comparison, distance, distance_derivative, distance_lower_bound,
                              scaling_exponent)
from .pointwise_calculus import (calibrated_volume, curvature_integrand, curvature_terms, pencil_eigensystem, phase,
                                 q_integrand, radius, wedge_oracle)
from .reports import csv_text
from .torus_discretization import ScalarField, TorusGrid

LOGGER = logging.getLogger(__name__)

CHECK_COLUMNS = ["check", "passed", "value", "threshold", "detail"]
MEMBER_ATTEMPTS = 20


@dataclass
class CheckResult:
    check: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def row(self) -> dict:
        return {"check": self.check, "passed": self.passed, "value": self.value, "threshold": self.threshold,
                "detail": self.detail}


@dataclass
class SuiteContext:
    config: RunConfig
    bg: BackgroundData
    settings: SolverSettings
    schedule: tuple[float, ...]
    threads: int = 1
    pairs: dict = field(default_factory=dict)  # background position -> solved random pairs
    _backgrounds: list = field(default_factory=list, repr=False)

    @property
    def options(self) -> dict:
        return self.config.suite

    def rng(self, *index: int) -> np.random.Generator:
        return np.random.default_rng((self.config.seed, *index))

    def torus(self) -> BackgroundData:
        return torus_background(int(self.options["torus_points"]))

    def backgrounds(self) -> list[tuple[str, BackgroundData]]:
        """The configured background followed by the shipped ones named in suite.backgrounds."""
        if not self._backgrounds:
            builders = {"torus": self.torus,
                        "product": lambda: product_background(int(self.options["product_points"])),
                        "fourier": lambda: fourier_background(int(self.options["torus_points"]))}
            self._backgrounds = [("configured", self.bg)] + [(name, builders[name]())
                                                             for name in self.options["backgrounds"]]
        return self._backgrounds


def random_member(bg: BackgroundData, rng: np.random.Generator, amplitude: float, factor_only: bool = False,
                  max_mode: int = 2) -> ScalarField:
    """
    Random low-frequency potential in the space; the amplitude halves until it is a member.
    :raise NotInSpaceError: no member after MEMBER_ATTEMPTS halvings
    """
    for _ in range(MEMBER_ATTEMPTS):
        candidate = random_trig_field(bg.grid, rng, amplitude=amplitude, max_mode=max_mode, factor_only=factor_only)
        if is_member(bg, candidate).member:
            return candidate
        amplitude /= 2
    raise NotInSpaceError(f"no random member found in {MEMBER_ATTEMPTS} attempts, last amplitude {amplitude:.3e}")


def _relative_gap(a: float, b: float, scale: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), scale, 1e-300)


def _shift_distance(bg: BackgroundData, shift: float) -> float:
    """Exact distance between 0 and a constant on a calibrated background with constant eigenvalues."""
    weight = calibrated_weight(bg, ScalarField.constant(bg.grid))
    return abs(shift) * math.sqrt(float(np.mean(weight)) * bg.grid.volume)


def _pair_distances(ctx: SuiteContext, position: int = 0) -> list[tuple[ScalarField, ScalarField, DistanceResult]]:
    """Random endpoint pairs on one suite background, solved once and shared by several checks."""
    if position not in ctx.pairs:
        _, bg = ctx.backgrounds()[position]
        rng = ctx.rng(100, position)
        amplitude = float(ctx.options["amplitude"])
        pairs = []
        for _ in range(int(ctx.options["pairs"])):
            phi0 = random_member(bg, rng, amplitude)
            phi1 = random_member(bg, rng, amplitude)
            pairs.append((phi0, phi1, distance(bg, phi0, phi1, ctx.schedule, ctx.settings)))
        ctx.pairs[position] = pairs
    return ctx.pairs[position]


def _all_pair_distances(ctx: SuiteContext) -> list[tuple[str, DistanceResult]]:
    return [(name, result) for position, (name, _) in enumerate(ctx.backgrounds())
            for _, _, result in _pair_distances(ctx, position)]


# the checks

def check_oracle_equivalence(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(1)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(int(ctx.options["pencils"])):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            alpha = (a + a.conj().T) / 2
            omega = b @ b.conj().T + n * np.eye(n)
            lambdas, frame = pencil_eigensystem(alpha, omega)
            theta_hat = float(phase(lambdas)) + rng.uniform(-math.pi / 4, math.pi / 4)
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            total = omega + 1j * alpha

            volume = wedge_oracle([total] * n, theta_hat=theta_hat, omega=omega)
            calibration = calibrated_volume(lambdas, theta_hat)
            scale = float(radius(lambdas))
            worst = max(worst, _relative_gap(float(calibration.real_part), volume.real, scale),
                        _relative_gap(float(calibration.imag_part), volume.imag, scale))

            def q_wedge(x, y):
                mixed = (wedge_oracle([total] * (n - 1), (x, y), theta_hat, omega)
                         + wedge_oracle([total] * (n - 1), (y, x), theta_hat, omega))
                return n / 2 * mixed.imag / volume.real

            fu, fv = frame.conj().T @ u, frame.conj().T @ v
            q_scale = np.linalg.norm(fu) * np.linalg.norm(fv) * 1e-3
            worst = max(worst, _relative_gap(float(q_integrand(lambdas, theta_hat, fu, fv)), q_wedge(u, v), q_scale))

            wedge = (q_wedge(u, v) ** 2 - q_wedge(u, u) * q_wedge(v, v)) * volume.real
            if n >= 2:
                wedge -= n * (n - 1) * wedge_oracle([total] * (n - 2), (u, u, v, v), theta_hat, omega).real
            pointwise = float(curvature_integrand(lambdas, theta_hat, fu, fv)) * volume.real
            k_scale = abs(float(curvature_terms(lambdas, theta_hat, fu, fv)[0])) * volume.real * 1e-3
            worst = max(worst, _relative_gap(pointwise, wedge, k_scale))
    return CheckResult("oracle_equivalence", worst <= 1e-9, worst, 1e-9, "max relative gap over n = 1, 2, 3")


def check_affine_exactness(ctx: SuiteContext) -> CheckResult:
    bg = ctx.torus()
    shift = float(ctx.options["shift"])
    phi0 = ScalarField.constant(bg.grid)
    phi1 = ScalarField.constant(bg.grid, shift)
    stages = solve_continuation(ctx.settings.problem(bg, phi0, phi1, ctx.schedule), ctx.settings.options)
    expected = _shift_distance(bg, shift)
    worst_residual = max(report.final_residual for _, _, report in stages)
    most_steps = max(report.newton_steps for _, _, report in stages)
    length_gap = max(abs(path_length(bg, path) - expected) for _, path, _ in stages)
    passed = worst_residual <= 1e-12 and most_steps <= 2 and length_gap <= 1e-8
    return CheckResult("affine_exactness", passed, length_gap, 1e-8,
                       f"residual {worst_residual:.3e}, newton steps {most_steps}, expected length {expected:.12g}")


def check_linearization_consistency(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(3)
    bg = ctx.bg
    amplitude = float(ctx.options["amplitude"])
    problem = ctx.settings.problem(bg, random_member(bg, rng, amplitude), random_member(bg, rng, amplitude),
                                   ctx.schedule[:1])
    path = PathField.linear(problem.phi0, problem.phi1, problem.time_steps)
    linearization = Linearization(problem, path.values)
    times = path.times.reshape((-1,) + (1,) * bg.grid.real_dim)
    h = 1e-5
    worst = 0.0
    for _ in range(int(ctx.options["directions"])):
        direction = (np.sin(math.pi * times) * random_trig_field(bg.grid, rng, amplitude=1.0).values
                     + np.sin(2 * math.pi * times) * random_trig_field(bg.grid, rng, amplitude=1.0).values)
        analytic = linearization.apply(direction)
        numeric = (residual_array(problem, path.values + h * direction)
                   - residual_array(problem, path.values - h * direction)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(analytic - numeric)) / np.max(np.abs(analytic))))
    return CheckResult("linearization_consistency", worst < 1e-4, worst, 1e-4,
                       f"{ctx.options['directions']} directions at eps={ctx.schedule[0]}")


def check_time_convexity(ctx: SuiteContext) -> CheckResult:
    """(-min phi_ddot)_+ stays under 1.2 C eps^2 at every epsilon, C fitted at the largest one."""
    results = _all_pair_distances(ctx)
    if not results:
        return CheckResult("time_convexity", False, math.inf, 0.0, "not exercised: no pairs")
    worst, convex = -math.inf, 0
    for _, result in results:
        epsilons = np.array(result.epsilons)
        deficits = np.maximum(-np.array([report.min_phi_ddot for report in result.reports]), 0.0)
        if not deficits.any():
            convex += 1
        constant = deficits[0] / epsilons[0] ** 2
        worst = max(worst, float(np.max(deficits - 1.2 * constant * epsilons ** 2)))
    return CheckResult("time_convexity", worst <= 1e-9, worst, 1e-9,
                       f"max (-min phi_ddot)_+ - 1.2 C eps^2 over {len(results)} pairs, {convex} convex throughout")


def check_energy_drift_scaling(ctx: SuiteContext) -> CheckResult:
    worst = 0.0
    for _, result in _all_pair_distances(ctx):
        drifts = [report.max_energy_drift for report in result.reports]
        if max(drifts) > 0:
            worst = max(worst, abs(scaling_exponent(result.epsilons, drifts) - 2.0))
    return CheckResult("energy_drift_scaling", worst <= 0.3, worst, 0.3, "|exponent of max|dE/dt| - 2|")


def check_constant_speed(ctx: SuiteContext) -> CheckResult:
    worst = 0.0
    for _, result in _all_pair_distances(ctx):
        mean = float(np.mean(result.reports[-1].energy))
        if mean > 0:
            worst = max(worst, result.energy_spread / mean)
    return CheckResult("constant_speed", worst < 0.05, worst, 0.05,
                       f"max_t |E - mean E| / mean E at eps={ctx.schedule[-1]}")


def check_energy_lower_bound(ctx: SuiteContext) -> CheckResult:
    """The deficit (bound^2 - min_t E)_+ vanishes like eps^2 as the epsilons decrease."""
    results = _all_pair_distances(ctx)
    if not results:
        return CheckResult("energy_lower_bound", False, math.inf, 0.0, "not exercised: no pairs")
    exponents, last_deficit = [], 0.0
    for _, result in results:
        deficits = np.maximum(-np.array(result.energy_bound_slacks), 0.0)
        positive = deficits > 0
        if np.count_nonzero(positive) >= 2:
            exponents.append(scaling_exponent(np.array(result.epsilons)[positive], deficits[positive]))
        last_deficit = max(last_deficit, float(deficits[-1]))
    if exponents:
        worst = min(exponents)
        return CheckResult("energy_lower_bound", worst >= 1.7, worst, 1.7,
                           f"log-log exponent of the deficit on {len(exponents)} of {len(results)} pairs")
    return CheckResult("energy_lower_bound", last_deficit == 0.0, last_deficit, 0.0,
                       f"deficit at the smallest epsilon; at most one deficit per pair over {len(results)} pairs")


def check_distance_lower_bound(ctx: SuiteContext) -> CheckResult:
    amplitude = float(ctx.options["amplitude"])
    worst = math.inf
    for position, (_, bg) in enumerate(ctx.backgrounds()):
        rng = ctx.rng(7, position)
        pairs = [(phi0, phi1) for phi0, phi1, _ in _pair_distances(ctx, position)]
        while len(pairs) < int(ctx.options["bound_pairs"]):
            pairs.append((random_member(bg, rng, amplitude), random_member(bg, rng, amplitude)))
        for phi0, phi1 in pairs:
            result = distance(bg, phi0, phi1, ctx.schedule, ctx.settings)
            worst = min(worst, result.distance - distance_lower_bound(bg, phi0, phi1) + result.tolerance)

    bg = ctx.torus()
    shift = ScalarField.constant(bg.grid, float(ctx.options["shift"]))
    zero = ScalarField.constant(bg.grid)
    exact = distance(bg, zero, shift, ctx.schedule, ctx.settings)
    equality_gap = abs(exact.distance - distance_lower_bound(bg, zero, shift))
    passed = worst >= 0 and equality_gap <= exact.tolerance + 1e-8
    return CheckResult("distance_lower_bound", passed, worst, 0.0,
                       f"worst d - bound + tolerance over {len(ctx.backgrounds())} backgrounds; "
                       f"equality gap on the constant shift {equality_gap:.3e}")


def check_distance_derivative(ctx: SuiteContext) -> CheckResult:
    amplitude = float(ctx.options["amplitude"])
    h = float(ctx.options["derivative_step"])
    worst = 0.0
    for position, (_, bg) in enumerate(ctx.backgrounds()):
        rng = ctx.rng(8, position)
        for _ in range(int(ctx.options["derivative_instances"])):
            phi0 = random_member(bg, rng, amplitude)
            psi0 = random_member(bg, rng, amplitude)
            velocity = random_trig_field(bg.grid, rng, amplitude=amplitude)
            curve = PathField.linear(psi0, psi0 + velocity, ctx.settings.time_steps)
            geodesic = distance(bg, psi0, phi0, ctx.schedule, ctx.settings).path
            formula = distance_derivative(bg, phi0, curve, geodesic)
            forward = distance(bg, psi0 + velocity * h, phi0, ctx.schedule, ctx.settings).distance
            backward = distance(bg, psi0 - velocity * h, phi0, ctx.schedule, ctx.settings).distance
            numeric = (forward - backward) / (2 * h)
            worst = max(worst, abs(formula - numeric) / max(abs(numeric), 1e-12))
    return CheckResult("distance_derivative", worst < 0.05, worst, 0.05,
                       f"centered step {h} over {len(ctx.backgrounds())} backgrounds")


def check_sectional_curvature(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(9)
    bg = ctx.bg
    phi = random_member(bg, rng, float(ctx.options["amplitude"]))
    rows = curvature_ensemble(bg, phi, rng, int(ctx.options["planes"]))
    largest = max((row["k_route_b"] for row in rows), default=0.0)
    psi = random_trig_field(bg.grid, rng, amplitude=1.0)
    scale, offset = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)
    flat = abs(sectional_curvature(bg, phi, psi, psi * scale + offset))
    passed = largest <= 1e-10 and flat <= 1e-10
    return CheckResult("sectional_curvature", passed, largest, 1e-10,
                       f"{len(rows)} planes, routes agree; flat plane |K| = {flat:.3e}")


def check_connection(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(10)
    bg = ctx.bg
    amplitude = float(ctx.options["amplitude"])
    step = float(ctx.options["connection_step"])
    phi = random_member(bg, rng, amplitude)
    velocity, first, second, first_rate, second_rate = (random_trig_field(bg.grid, rng, amplitude=1.0)
                                                        for _ in range(5))
    compatibility = metric_compatibility_check(bg, phi, velocity * amplitude, (first, second),
                                               (first_rate, second_rate), step, halvings=2)
    scale = abs(compatibility.connection_value) + 1e-12
    defect = compatibility.defects[-1] / scale
    step_ratio = compatibility.step_ratio

    family = TwoParamFamily(phi, random_trig_field(bg.grid, rng, amplitude=amplitude),
                            random_trig_field(bg.grid, rng, amplitude=amplitude), step)
    torsion = torsion_defect(bg, family)
    closed_form = curvature_tensor(bg, family)
    oracle = commutator_oracle(bg, family)
    commutator_gap = (closed_form - oracle).sup_norm() / max(closed_form.sup_norm(), 1e-300)
    passed = defect < 1e-2 and 3.0 <= step_ratio <= 5.0 and torsion <= 1e-12 and commutator_gap < 1e-2
    return CheckResult("connection", passed, defect, 1e-2,
                       f"difference ratio over halved steps {step_ratio:.3f}, torsion {torsion:.3e}, "
                       f"commutator gap {commutator_gap:.3e}")


def check_cat0_comparison(ctx: SuiteContext) -> CheckResult:
    amplitude = float(ctx.options["amplitude"])
    lambdas = [float(value) for value in ctx.options["cat0_lambdas"]]
    worst = math.inf
    for position, (_, bg) in enumerate(ctx.backgrounds()):
        rng = ctx.rng(11, position)
        for _ in range(int(ctx.options["triangles"])):
            p, q, r = (random_member(bg, rng, amplitude) for _ in range(3))
            result = cat0_comparison(bg, p, q, r, lambdas, ctx.schedule, ctx.settings, ctx.threads)
            worst = min(worst, min(slack + result.tolerance for slack in result.slacks))

    torus = ctx.torus()
    shift = float(ctx.options["shift"])
    p, q, r = (ScalarField.constant(torus.grid, value) for value in (0.0, shift, shift / 2))
    flat = cat0_comparison(torus, p, q, r, [0.0] + lambdas + [1.0], ctx.schedule, ctx.settings, ctx.threads)
    flat_gap = max(abs(slack) for slack in flat.slacks)
    passed = worst >= 0 and flat_gap <= flat.tolerance
    return CheckResult("cat0_comparison", passed, worst if math.isfinite(worst) else 0.0, 0.0,
                       f"worst slack + tolerance; constant triangle max |slack| {flat_gap:.3e}")


def check_monge_ampere_oracle(ctx: SuiteContext) -> CheckResult:
    rng = ctx.rng(12)
    bg = ctx.torus()
    amplitude = float(ctx.options["amplitude"])
    problem = ctx.settings.problem(bg, random_member(bg, rng, amplitude), random_member(bg, rng, amplitude),
                                   ctx.schedule)
    phase_path, _ = solve(problem, {**ctx.settings.options, "solver_type": "PhaseNewtonSolver"})
    oracle_path, _ = solve(problem, {**ctx.settings.options, "solver_type": "MongeAmpereSolver"})
    gap = float(np.max(np.abs(phase_path.values - oracle_path.values)))
    threshold = 50 * bg.grid.spacing ** 2
    return CheckResult("monge_ampere_oracle", gap < threshold, gap, threshold, f"eps={problem.epsilon}")


def check_second_derivative_bound(ctx: SuiteContext) -> CheckResult:
    variation = 0.0
    hypercritical = is_hypercritical(ctx.bg)
    if hypercritical:
        for _, _, result in _pair_distances(ctx):
            sups = [report.sup_spatial_hessian for report in result.reports]
            if max(sups) > 0:
                variation = max(variation, (max(sups) - min(sups)) / max(sups))
    rng = ctx.rng(13)
    product = product_background(int(ctx.options["product_points"]))
    factor_grid = TorusGrid(1, product.grid.points_per_axis)
    ends = [pull_back(random_trig_field(factor_grid, rng, amplitude=float(ctx.options["amplitude"]), max_mode=3),
                      product.grid) for _ in range(2)]
    monitored = "product construction skipped: endpoints not members"
    if all(is_member(product, end).member for end in ends):
        stages = solve_continuation(ctx.settings.problem(product, ends[0], ends[1], ctx.schedule),
                                    ctx.settings.options)
        monitored = "product construction sup|D^2 phi|: " + ", ".join(
            f"{epsilon:g}:{report.sup_spatial_hessian:.6g}" for epsilon, _, report in stages)
    if not hypercritical:
        monitored = "background not hypercritical, no bound asserted; " + monitored
    return CheckResult("second_derivative_bound", variation < 0.1, variation, 0.1, monitored)


def check_determinism(ctx: SuiteContext) -> CheckResult:
    columns = ["draw_id", "k_route_a", "k_route_b", "denominator", "flat_flag"]

    def render() -> str:
        rng = ctx.rng(14)
        phi = random_member(ctx.bg, rng, float(ctx.options["amplitude"]))
        return csv_text(curvature_ensemble(ctx.bg, phi, rng, 5), columns)

    first, second = render(), render()
    return CheckResult("determinism", first == second, float(first == second), 1.0, "repeated seeded ensemble")


CHECKS = [check_oracle_equivalence, check_affine_exactness, check_linearization_consistency, check_time_convexity,
          check_energy_drift_scaling, check_constant_speed, check_energy_lower_bound, check_distance_lower_bound,
          check_distance_derivative, check_sectional_curvature, check_connection, check_cat0_comparison,
          check_monge_ampere_oracle, check_second_derivative_bound, check_determinism]


class SuiteTester:
    """Runs named checks and counts how many were performed and how many succeeded."""

    def __init__(self, ctx: SuiteContext):
        self.ctx = ctx
        self.tests_performed = 0
        self.tests_successful = 0
        self.results: list[CheckResult] = []

    @measure_time
    def sample_test(self, check) -> CheckResult:
        name = check.__name__.removeprefix("check_")
        try:
            result = check(self.ctx)
        except ToolkitError as exc:
            LOGGER.error("Check %s raised %s: %s", name, type(exc).__name__, exc)
            result = CheckResult(name, False, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")
        self.tests_performed += 1
        if result.passed:
            self.tests_successful += 1
        LOGGER.info("%s %s (value %.6g, threshold %.6g)", result.check, "Success" if result.passed else "Fail",
                    result.value, result.threshold)
        self.results.append(result)
        return result

    def report(self) -> dict:
        return {"tests_performed": self.tests_performed, "tests_successful": self.tests_successful}


def selected_checks(names) -> list:
    if names == "all":
        return list(CHECKS)
    if isinstance(names, str):
        names = [names]
    by_name = {check.__name__.removeprefix("check_"): check for check in CHECKS}
    unknown = [name for name in names if name not in by_name]
    if unknown:
        raise ConfigError(f"unknown suite checks {unknown}; known: {sorted(by_name)}")
    return [by_name[name] for name in names]


def run_suite(config: RunConfig, threads: int = 1) -> SuiteTester:
    """Runs the configured checks in order."""
    ctx = SuiteContext(config=config, bg=config.build_background(), settings=config.settings(),
                       schedule=config.epsilon_schedule, threads=threads)
    tester = SuiteTester(ctx)
    for check in selected_checks(config.suite["checks"]):
        tester.sample_test(check)
    return tester
