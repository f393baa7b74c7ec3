"""
Distances on the space of almost calibrated potentials, obtained by extrapolating
lengths of epsilon-geodesics to epsilon = 0 with the model d + a eps^2, and the
inequalities built from them: the lower bound by one-sided integrals, the first
variation of the distance, the triangle inequality and the comparison inequality
of non-positively curved spaces.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calibrated_space import (BackgroundData, PathField, calibrated_weight, length_sup_bound_ratio, path_length,
                               require_member, time_derivative)
from .epsilon_geodesic_solver import solve_continuation
from .epsilon_problem import SolverSettings, check_schedule
from .errors import DegenerateInputError, DomainError
from .geodesic_cache import DistanceCache, distance_key
from .helpers import measure_time
from .torus_discretization import ScalarField, check_same_grid, integrate

LOGGER = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (0.8, 0.4, 0.2, 0.1, 0.05)
UNRELIABLE_FIT = 1e-2  # fit residual relative to the distance
MIN_FIT_POINTS = 3  # two epsilons fit d + a eps^2 exactly
SLACK_FLOOR = 1e-9
DEGENERATE_SPEED = 1e-12

DISTANCE_CACHE = DistanceCache()


@dataclass
class DistanceResult:
    distance: float
    epsilons: list[float] = field(default_factory=list)
    lengths: list[float] = field(default_factory=list)
    slope: float = 0.0  # a in d + a eps^2
    fit_residual: float = 0.0
    unreliable: bool = False
    constant_speed_defect: float = 0.0  # max_t |E(t) - d^2| at the smallest epsilon
    energy_spread: float = 0.0  # max_t |E(t) - mean E| at the smallest epsilon
    length_sup_ratio: float = 0.0
    energy_bound_slacks: list[float] = field(default_factory=list)  # min_t E(t) - bound^2 per epsilon
    energy_rows: list[dict] = field(default_factory=list)
    path: PathField | None = field(default=None, repr=False)  # geodesic at the smallest epsilon
    reports: list = field(default_factory=list, repr=False)

    @property
    def energy_lower_bound_slack(self) -> float:
        """Worst min_t E(t) - bound^2 over the epsilons, bound the one-sided integral lower bound."""
        return min(self.energy_bound_slacks, default=0.0)

    @property
    def nbytes(self) -> int:
        return 0 if self.path is None else self.path.values.nbytes

    @property
    def tolerance(self) -> float:
        return slack_tolerance(self)

    @property
    def dominated_by_lengths(self) -> bool:
        """d <= length at every computed epsilon, up to the fit tolerance."""
        return all(self.distance <= length + self.tolerance for length in self.lengths)

    def summary(self) -> dict:
        return {"distance": self.distance, "slope": self.slope, "fit_residual": self.fit_residual,
                "unreliable": self.unreliable, "constant_speed_defect": self.constant_speed_defect,
                "energy_spread": self.energy_spread, "length_sup_ratio": self.length_sup_ratio,
                "energy_lower_bound_slack": self.energy_lower_bound_slack,
                "dominated_by_lengths": self.dominated_by_lengths}


def slack_tolerance(*results: DistanceResult) -> float:
    """Three times the worst fit residual of the distances involved."""
    return 3 * max((result.fit_residual for result in results), default=0.0) + SLACK_FLOOR


def fit_distance(epsilons, lengths) -> tuple[float, float, float]:
    """
    Least-squares fit of length(eps) = d + a eps^2.
    :return: (d, a, max absolute residual)
    """
    epsilons = np.asarray(epsilons, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 1:
        return float(lengths[0]), 0.0, 0.0
    slope, intercept = np.polyfit(epsilons ** 2, lengths, 1)
    residual = float(np.max(np.abs(intercept + slope * epsilons ** 2 - lengths)))
    return float(intercept), float(slope), residual


def scaling_exponent(epsilons, values) -> float:
    """
    Slope of the least-squares line through (log eps, log |value|).
    Zero values are dropped; at least two must remain.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    keep = values > 0
    if np.count_nonzero(keep) < 2:
        raise DegenerateInputError("a scaling exponent needs two nonzero values")
    slope, _ = np.polyfit(np.log(epsilons[keep]), np.log(values[keep]), 1)
    return float(slope)


def _zero_distance(bg: BackgroundData, phi: ScalarField, schedule: tuple[float, ...]) -> DistanceResult:
    path = PathField.linear(phi, phi, 2)
    return DistanceResult(distance=0.0, epsilons=list(schedule), lengths=[0.0] * len(schedule), path=path,
                          energy_bound_slacks=[0.0] * len(schedule),
                          energy_rows=[{"epsilon": eps, "length": 0.0, "min_energy": 0.0, "max_energy": 0.0,
                                        "max_energy_drift": 0.0, "energy_bound_slack": 0.0} for eps in schedule])


@measure_time
def distance(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField, schedule=DEFAULT_SCHEDULE,
             settings: SolverSettings = SolverSettings(), cache: DistanceCache | None = DISTANCE_CACHE) -> DistanceResult:
    """
    Extrapolated distance between two members.
    :param schedule: strictly decreasing epsilons; the geodesic is solved by continuation through all of them
    :param settings: time steps, tolerances and solver options
    :param cache: distance cache, None disables caching
    :return: DistanceResult; solver failures propagate
    """
    schedule = check_schedule(schedule)
    check_same_grid(phi0.grid, phi1.grid)
    key = distance_key(bg, phi0, phi1, schedule, settings)
    if cache is not None:
        cached = cache.get(key)
        if cached is not None:
            return cached
    require_member(bg, phi0)
    require_member(bg, phi1)
    if np.array_equal(phi0.values, phi1.values):
        result = _zero_distance(bg, phi0, schedule)
    else:
        result = _solve_distance(bg, phi0, phi1, schedule, settings)
    if cache is not None:
        cache.put(key, result)
    return result


def _solve_distance(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField, schedule: tuple[float, ...],
                    settings: SolverSettings) -> DistanceResult:
    problem = settings.problem(bg, phi0, phi1, schedule)
    stages = solve_continuation(problem, settings.options)
    bound_squared = _one_sided_integral(bg, phi0, phi1)
    lengths, bound_slacks, rows = [], [], []
    for epsilon, path, report in stages:
        length = path_length(bg, path)
        lengths.append(length)
        bound_slacks.append(min(report.energy) - bound_squared)
        rows.append({"epsilon": epsilon, "length": length, "min_energy": min(report.energy),
                     "max_energy": max(report.energy), "max_energy_drift": report.max_energy_drift,
                     "energy_bound_slack": bound_slacks[-1]})
    d, slope, residual = fit_distance(schedule, lengths)
    d = max(d, 0.0)
    _, last_path, last_report = stages[-1]
    energy = np.asarray(last_report.energy)
    result = DistanceResult(distance=d, epsilons=list(schedule), lengths=lengths, slope=slope,
                            fit_residual=residual,
                            unreliable=residual > UNRELIABLE_FIT * max(d, 1.0) or len(schedule) < MIN_FIT_POINTS,
                            constant_speed_defect=float(np.max(np.abs(energy - d ** 2))),
                            energy_spread=float(np.max(np.abs(energy - np.mean(energy)))),
                            length_sup_ratio=length_sup_bound_ratio(bg, last_path), energy_bound_slacks=bound_slacks,
                            energy_rows=rows,
                            path=last_path, reports=[report for _, _, report in stages])
    if result.unreliable:
        LOGGER.warning("Distance extrapolation unreliable: fit residual %.3e for d=%.6g over %d epsilons",
                       residual, d, len(schedule))
    LOGGER.info("Distance %.10g (fit residual %.3e over %d epsilons)", d, residual, len(schedule))
    return result


def distance_lower_bound(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField) -> float:
    """
    Square root of the larger one-sided integral: (phi0 - phi1)^2 over {phi0 > phi1}
    against the weight of phi0, and (phi1 - phi0)^2 over {phi1 > phi0} against the
    weight of phi1.
    """
    check_same_grid(phi0.grid, phi1.grid)
    require_member(bg, phi0)
    require_member(bg, phi1)
    return math.sqrt(_one_sided_integral(bg, phi0, phi1))


def _one_sided_integral(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField) -> float:
    gap = phi0.values - phi1.values
    first = integrate(ScalarField(bg.grid, np.where(gap > 0, gap ** 2, 0.0)), calibrated_weight(bg, phi0))
    second = integrate(ScalarField(bg.grid, np.where(gap < 0, gap ** 2, 0.0)), calibrated_weight(bg, phi1))
    return max(first, second)


def distance_derivative(bg: BackgroundData, phi0: ScalarField, psi_path: PathField,
                        geodesic_from_psi0: PathField) -> float:
    """
    d/dt d(phi0, psi(t)) at t = 0 as
        -int phi_s(0) psi_t(0) w / (int phi_s(0)^2 w)^{1/2},
    phi the geodesic from psi(0) to phi0 and w the calibrated weight of psi(0).
    :param psi_path: the curve psi on its own time grid
    :param geodesic_from_psi0: solved small-epsilon geodesic from psi(0) to phi0
    """
    check_same_grid(psi_path.grid, geodesic_from_psi0.grid)
    start = geodesic_from_psi0.slice(0)
    if not np.allclose(start.values, psi_path.values[0], rtol=0.0, atol=1e-12):
        raise DomainError("the geodesic does not start at psi(0)")
    if not np.allclose(geodesic_from_psi0.values[-1], phi0.values, rtol=0.0, atol=1e-12):
        raise DomainError("the geodesic does not end at phi0")
    weight = calibrated_weight(bg, start)
    geodesic_speed = ScalarField(bg.grid, time_derivative(geodesic_from_psi0.values, geodesic_from_psi0.tau)[0])
    curve_speed = ScalarField(bg.grid, time_derivative(psi_path.values, psi_path.tau)[0])
    norm = integrate(geodesic_speed * geodesic_speed, weight)
    if norm < DEGENERATE_SPEED:
        raise DegenerateInputError(f"geodesic from psi(0) has zero speed ({norm:.3e})")
    return -integrate(geodesic_speed * curve_speed, weight) / math.sqrt(norm)


@dataclass
class ComparisonResult:
    """Slacks of the comparison inequality, one per lambda."""
    lambdas: list[float]
    slacks: list[float]
    distances: list[float]
    tolerance: float

    @property
    def holds(self) -> bool:
        return all(slack >= -self.tolerance for slack in self.slacks)

    def rows(self) -> list[dict]:
        return [{"lambda": lam, "distance": dist, "slack": slack}
                for lam, dist, slack in zip(self.lambdas, self.distances, self.slacks)]


@measure_time
def cat0_comparison(bg: BackgroundData, p: ScalarField, q: ScalarField, r: ScalarField, lambdas,
                    schedule=DEFAULT_SCHEDULE, settings: SolverSettings = SolverSettings(), threads: int = 1,
                    cache: DistanceCache | None = DISTANCE_CACHE) -> ComparisonResult:
    """
    slack(lambda) = (1 - lambda) d(R,P)^2 + lambda d(R,Q)^2 - lambda (1 - lambda) d(P,Q)^2 - d(R, phi(lambda))^2
    with phi the smallest-epsilon geodesic from P to Q.
    :param threads: worker threads for the independent distance solves
    """
    lambdas = [float(value) for value in lambdas]
    pq = distance(bg, p, q, schedule, settings, cache)
    points = [pq.path.at(value) for value in lambdas]

    def measure(target: ScalarField) -> DistanceResult:
        return distance(bg, r, target, schedule, settings, cache)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        rp, rq = executor.map(measure, [p, q])
        legs = list(executor.map(measure, points))
    slacks = [(1 - lam) * rp.distance ** 2 + lam * rq.distance ** 2 - lam * (1 - lam) * pq.distance ** 2
              - leg.distance ** 2 for lam, leg in zip(lambdas, legs)]
    return ComparisonResult(lambdas=lambdas, slacks=slacks, distances=[leg.distance for leg in legs],
                            tolerance=slack_tolerance(pq, rp, rq, *legs))


@dataclass
class TriangleResult:
    slack: float  # d(0,2) - d(0,1) - d(1,2)
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.slack <= self.tolerance


def triangle_inequality_check(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField, phi2: ScalarField,
                              schedule=DEFAULT_SCHEDULE, settings: SolverSettings = SolverSettings(),
                              cache: DistanceCache | None = DISTANCE_CACHE) -> TriangleResult:
    d02 = distance(bg, phi0, phi2, schedule, settings, cache)
    d01 = distance(bg, phi0, phi1, schedule, settings, cache)
    d12 = distance(bg, phi1, phi2, schedule, settings, cache)
    return TriangleResult(slack=d02.distance - d01.distance - d12.distance,
                          tolerance=slack_tolerance(d02, d01, d12))
