from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

from .calibrated_space import BackgroundData, require_member
from .errors import DomainError
from .torus_discretization import ScalarField, check_same_grid

LOGGER = logging.getLogger(__name__)

CONTINUATION_START = (1.0, 0.7, 0.5)
CONTINUATION_RATIO = 0.7


def default_schedule(epsilon: float) -> tuple[float, ...]:
    """1, 0.7, 0.5, then geometric with ratio 0.7, ending exactly at epsilon."""
    schedule = [value for value in CONTINUATION_START if value > epsilon]
    while schedule and schedule[-1] * CONTINUATION_RATIO > epsilon:
        schedule.append(schedule[-1] * CONTINUATION_RATIO)
    schedule.append(epsilon)
    return tuple(schedule)


def check_schedule(schedule) -> tuple[float, ...]:
    schedule = tuple(float(value) for value in schedule)
    if not schedule:
        raise DomainError("empty epsilon schedule")
    if any(value <= 0 for value in schedule):
        raise DomainError(f"epsilon schedule must be positive: {schedule}")
    if any(a <= b for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"epsilon schedule must be strictly decreasing: {schedule}")
    return schedule


@dataclass(frozen=True, eq=False)
class EpsilonProblem:
    """
    Boundary value problem for the epsilon-geodesic between two members.
    The continuation schedule always ends at epsilon.
    """
    bg: BackgroundData
    phi0: ScalarField
    phi1: ScalarField
    epsilon: float
    time_steps: int = 33
    newton_tol: float = 1e-9
    max_newton: int = 50
    damping: float = 0.5
    continuation_schedule: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.time_steps < 3:
            raise DomainError("an epsilon-geodesic needs at least three time steps")
        if not 0 < self.damping < 1:
            raise DomainError(f"damping must lie in (0, 1), got {self.damping}")
        check_same_grid(self.bg.grid, self.phi0.grid)
        check_same_grid(self.bg.grid, self.phi1.grid)
        require_member(self.bg, self.phi0)
        require_member(self.bg, self.phi1)
        schedule = tuple(self.continuation_schedule) or default_schedule(self.epsilon)
        if schedule[-1] > self.epsilon:
            schedule = schedule + (self.epsilon,)
        object.__setattr__(self, "continuation_schedule", check_schedule(schedule))
        if self.continuation_schedule[-1] != self.epsilon:
            raise DomainError(f"schedule {self.continuation_schedule} passes below epsilon {self.epsilon}")

    def at_epsilon(self, epsilon: float) -> EpsilonProblem:
        """Same data at another stage of the schedule."""
        stages = tuple(value for value in self.continuation_schedule if value >= epsilon)
        return dataclasses.replace(self, epsilon=epsilon, continuation_schedule=stages)


@dataclass
class SolverReport:
    epsilon: float
    solver_type: str = ""
    converged: bool = False
    newton_steps: int = 0
    residual_history: list[float] = field(default_factory=list)
    krylov_iterations: list[int] = field(default_factory=list)
    final_residual: float = float("nan")
    min_phi_ddot: float = float("nan")
    min_margin_per_slice: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    max_energy_drift: float = float("nan")
    energy_drift_identity_gap: float = float("nan")
    sup_spatial_hessian: float = float("nan")
    sup_grad_phi_dot: float = float("nan")
    sup_phi_ddot: float = float("nan")
    geodesic_defect: float = float("nan")
    path_form_defect: float = float("nan")
    lagrangian_flags: dict[str, bool] = field(default_factory=dict)

    def summary(self) -> dict:
        """Flat key-value record of the scalar fields."""
        record = {}
        for name, value in dataclasses.asdict(self).items():
            if isinstance(value, dict):
                record.update({f"lagrangian_{key}": flag for key, flag in value.items()})
            elif not isinstance(value, list):
                record[name] = value
        record["min_margin"] = min(self.min_margin_per_slice) if self.min_margin_per_slice else float("nan")
        return record

    def residual_rows(self) -> list[tuple[int, float]]:
        return list(enumerate(self.residual_history))


@dataclass(frozen=True)
class SolverSettings:
    """Everything of an EpsilonProblem except its data; shared by every solve of a run."""
    time_steps: int = 33
    newton_tol: float = 1e-9
    max_newton: int = 50
    damping: float = 0.5
    solver_options: tuple[tuple[str, object], ...] = ()

    @classmethod
    def from_options(cls, options: dict) -> SolverSettings:
        """
        :param options: the "solver" section of a run configuration
        """
        fields = {name: options[name] for name in ("time_steps", "newton_tol", "max_newton", "damping")
                  if name in options}
        rest = tuple(sorted((key, value) for key, value in options.items() if key not in fields))
        return cls(solver_options=rest, **fields)

    @property
    def options(self) -> dict:
        return dict(self.solver_options)

    def problem(self, bg: BackgroundData, phi0: ScalarField, phi1: ScalarField,
                schedule: tuple[float, ...]) -> EpsilonProblem:
        schedule = check_schedule(schedule)
        return EpsilonProblem(bg=bg, phi0=phi0, phi1=phi1, epsilon=schedule[-1], time_steps=self.time_steps,
                              newton_tol=self.newton_tol, max_newton=self.max_newton, damping=self.damping,
                              continuation_schedule=schedule)
