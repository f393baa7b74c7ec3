"""
The space of almost calibrated potentials over a flat torus background:
topological angle, lifted phase, membership, the Riemannian metric, path
energy and length, and the J functional.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import AmbiguousBranchError, DomainError, NotInSpaceError
from .pointwise_calculus import (CalibrationData, PhasePointData, as_matrix, calibrated_volume,
                                 omega_inverse_factor, pencil_eigensystem, pencil_eigenvalues, phase,
                                 radius)
from .torus_discretization import (Form11Field, ScalarField, TorusGrid, check_same_grid, hessian_array,
                                   integrate)

LOGGER = logging.getLogger(__name__)

VANISHING_VOLUME = 1e-8


@dataclass(frozen=True, eq=False)
class BackgroundData:
    """
    Flat Kaehler form omega (constant), closed representative alpha and, once
    lifted, the phase theta_hat.
    """
    grid: TorusGrid
    omega: np.ndarray
    alpha: Form11Field
    theta_hat: float | None = None
    omega_inverse: np.ndarray = field(init=False, repr=False)
    omega_det: float = field(init=False, repr=False)

    def __post_init__(self):
        omega = as_matrix(self.omega)
        n = self.grid.complex_dim
        if omega.shape != (n, n):
            raise DomainError(f"omega must be {n}x{n}, got {omega.shape}")
        check_same_grid(self.grid, self.alpha.grid)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "omega_inverse", omega_inverse_factor(omega))
        object.__setattr__(self, "omega_det", float(np.real(np.linalg.det(omega))))

    def with_theta_hat(self, theta_hat: float) -> BackgroundData:
        return dataclasses.replace(self, theta_hat=float(theta_hat))

    def require_theta_hat(self) -> float:
        if self.theta_hat is None:
            raise DomainError("background has no lifted phase; call lift_phase first")
        return self.theta_hat


@dataclass(frozen=True, eq=False)
class FrameData:
    lambdas: np.ndarray  # grid shape + (n,)
    frame: np.ndarray  # grid shape + (n, n)
    calibration: CalibrationData

    def to_frame(self, gradient: np.ndarray) -> np.ndarray:
        """Moves a complex gradient field into the eigenframe."""
        return np.einsum("...ji,...j->...i", self.frame.conj(), gradient)

    def form_to_frame(self, form: np.ndarray) -> np.ndarray:
        return np.swapaxes(self.frame.conj(), -1, -2) @ form @ self.frame


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    margin: float
    worst_index: tuple
    worst_point: tuple


@dataclass(frozen=True, eq=False)
class PathField:
    """phi(., t_k) for t_k = k / (m - 1); values have shape (m,) + grid.shape."""
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != self.grid.real_dim + 1 or values.shape[1:] != self.grid.shape:
            raise DomainError(f"path shape {values.shape} does not match grid {self.grid.shape}")
        if values.shape[0] < 2:
            raise DomainError("a path needs at least two time steps")
        if not np.all(np.isfinite(values)):
            raise DomainError("path has non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def linear(cls, phi0: ScalarField, phi1: ScalarField, time_steps: int) -> PathField:
        check_same_grid(phi0.grid, phi1.grid)
        times = np.linspace(0.0, 1.0, time_steps).reshape((-1,) + (1,) * phi0.grid.real_dim)
        values = (1.0 - times) * phi0.values + times * phi1.values
        values[0] = phi0.values
        values[-1] = phi1.values
        return cls(phi0.grid, values)

    @classmethod
    def from_slices(cls, slices: list[ScalarField]) -> PathField:
        return cls(slices[0].grid, np.stack([item.values for item in slices]))

    @property
    def time_steps(self) -> int:
        return self.values.shape[0]

    @property
    def tau(self) -> float:
        return 1.0 / (self.time_steps - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.time_steps)

    def slice(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.values[k])

    def at(self, t: float) -> ScalarField:
        """Slice at time t, linear interpolation between stored slices."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"time {t} outside [0, 1]")
        position = t * (self.time_steps - 1)
        nearest = int(round(position))
        if abs(position - nearest) < 1e-12:
            return self.slice(nearest)
        k = int(math.floor(position))
        weight = position - k
        return ScalarField(self.grid, (1.0 - weight) * self.values[k] + weight * self.values[k + 1])

    def with_values(self, values: np.ndarray) -> PathField:
        return PathField(self.grid, values)


# pointwise data over the grid

def alpha_phi(bg: BackgroundData, phi: ScalarField) -> Form11Field:
    check_same_grid(bg.grid, phi.grid)
    return Form11Field(bg.grid, bg.alpha.matrices + hessian_array(phi.values, bg.grid))


def pencil_lambdas(bg: BackgroundData, values: np.ndarray) -> np.ndarray:
    """Pencil eigenvalues of alpha + i ddbar(values) over a field or a stack of fields."""
    return pencil_eigenvalues(bg.alpha.matrices + hessian_array(values, bg.grid), bg.omega)


def pointwise_phase_data(bg: BackgroundData, phi: ScalarField) -> PhasePointData:
    check_same_grid(bg.grid, phi.grid)
    lambdas = pencil_lambdas(bg, phi.values)
    return PhasePointData(lambdas=lambdas, theta=phase(lambdas), radius=radius(lambdas))


def pointwise_frames(bg: BackgroundData, phi: ScalarField) -> FrameData:
    check_same_grid(bg.grid, phi.grid)
    lambdas, frame = pencil_eigensystem(alpha_phi(bg, phi).matrices, bg.omega)
    return FrameData(lambdas=lambdas, frame=frame, calibration=calibrated_volume(lambdas, bg.require_theta_hat()))


# the class and its phase

def topological_angle(bg: BackgroundData) -> float:
    """
    Principal argument of the quadrature of (omega + i alpha)^n, in [0, 2 pi).
    """
    calibration = calibrated_volume(pencil_lambdas(bg, np.zeros(bg.grid.shape)), 0.0)
    volume = complex(np.sum(calibration.real_part + 1j * calibration.imag_part)) * bg.grid.cell_volume * bg.omega_det
    if abs(volume) <= VANISHING_VOLUME * bg.grid.volume:
        raise DomainError("the complex volume of the class vanishes; the class must have a nonzero "
                          "integral of (omega + i alpha)^n")
    return float(np.angle(volume)) % (2 * math.pi)


def lift_phase(bg: BackgroundData, phi: ScalarField | None = None) -> float:
    """
    Unique branch value beta in (-n pi/2, n pi/2) congruent to the topological angle
    with |Theta(alpha_phi) - beta| < pi/2 at every grid point.
    :param phi: potential, zero by default
    :return: the lifted phase
    """
    phi = ScalarField.constant(bg.grid) if phi is None else phi
    theta = np.asarray(pointwise_phase_data(bg, phi).theta)
    oscillation = float(np.max(theta) - np.min(theta))
    if oscillation >= math.pi:
        raise NotInSpaceError(f"not in H: pointwise phase oscillates by {oscillation:.6f} >= pi")
    n = bg.grid.complex_dim
    angle = topological_angle(bg)
    candidates = []
    for k in range(-n - 1, n + 2):
        beta = angle + 2 * math.pi * k
        if abs(beta) < n * math.pi / 2 and float(np.max(np.abs(theta - beta))) < math.pi / 2:
            candidates.append(beta)
    if not candidates:
        raise NotInSpaceError(f"not in H: no branch of the angle {angle:.6f} contains the pointwise phase")
    if len(candidates) > 1:
        raise AmbiguousBranchError(f"several admissible branches: {candidates}")
    LOGGER.debug("Lifted phase %.12f (topological angle %.12f)", candidates[0], angle)
    return candidates[0]


def with_lifted_phase(bg: BackgroundData, phi: ScalarField | None = None) -> BackgroundData:
    return bg.with_theta_hat(lift_phase(bg, phi))


def is_hypercritical(bg: BackgroundData) -> bool:
    n = bg.grid.complex_dim
    return (n - 1) * math.pi / 2 < bg.require_theta_hat() < n * math.pi / 2


def is_member(bg: BackgroundData, phi: ScalarField) -> MembershipReport:
    theta_hat = bg.require_theta_hat()
    lambdas = pencil_lambdas(bg, phi.values)
    margins = math.pi / 2 - np.abs(phase(lambdas) - theta_hat)
    real_part = calibrated_volume(lambdas, theta_hat).real_part
    worst = np.unravel_index(int(np.argmin(margins)), margins.shape)
    margin = float(margins[worst])
    member = bool(margin > 0.0 and np.min(real_part) > 0.0)
    worst_point = tuple(float(axis[worst]) for axis in bg.grid.coordinates())
    if not member:
        LOGGER.debug("Membership fails at %s (margin %.3e)", worst_point, margin)
    return MembershipReport(member=member, margin=margin, worst_index=tuple(int(i) for i in worst),
                            worst_point=worst_point)


def require_member(bg: BackgroundData, phi: ScalarField, slice_index: int | None = None) -> None:
    report = is_member(bg, phi)
    if not report.member:
        where = "" if slice_index is None else f" in time slice {slice_index}"
        raise NotInSpaceError(f"potential is not in H{where}: margin {report.margin:.3e} at {report.worst_point}",
                              location=report.worst_index, slice_index=slice_index)


def _calibration_arrays(bg: BackgroundData, values: np.ndarray) -> CalibrationData:
    return calibrated_volume(pencil_lambdas(bg, values), bg.require_theta_hat())


def calibrated_weight(bg: BackgroundData, phi: ScalarField) -> np.ndarray:
    """Re(e^{-i theta_hat} Omega_phi^n) as a density against the Lebesgue measure."""
    return np.asarray(_calibration_arrays(bg, phi.values).real_part) * bg.omega_det


def calibrated_imag(bg: BackgroundData, phi: ScalarField) -> np.ndarray:
    return np.asarray(_calibration_arrays(bg, phi.values).imag_part) * bg.omega_det


def metric_inner(bg: BackgroundData, phi: ScalarField, psi1: ScalarField, psi2: ScalarField) -> float:
    check_same_grid(psi1.grid, psi2.grid)
    require_member(bg, phi)
    return integrate(ScalarField(bg.grid, psi1.values * psi2.values), calibrated_weight(bg, phi))


# paths

def time_derivative(values: np.ndarray, tau: float) -> np.ndarray:
    """Central differences inside, one-sided second order at the ends."""
    return np.gradient(values, tau, axis=0, edge_order=2 if values.shape[0] >= 3 else 1)


def second_time_derivative(values: np.ndarray, tau: float) -> np.ndarray:
    result = np.zeros_like(values)
    if values.shape[0] < 3:
        return result
    result[1:-1] = (values[2:] - 2 * values[1:-1] + values[:-2]) / tau ** 2
    if values.shape[0] >= 4:
        result[0] = (2 * values[0] - 5 * values[1] + 4 * values[2] - values[3]) / tau ** 2
        result[-1] = (2 * values[-1] - 5 * values[-2] + 4 * values[-3] - values[-4]) / tau ** 2
    else:
        result[0] = result[-1] = result[1]
    return result


def path_weights(bg: BackgroundData, path: PathField) -> np.ndarray:
    """Calibrated weight of every slice; raises with the offending slice index."""
    check_same_grid(bg.grid, path.grid)
    theta_hat = bg.require_theta_hat()
    lambdas = pencil_lambdas(bg, path.values)
    margins = math.pi / 2 - np.abs(phase(lambdas) - theta_hat)
    real_part = np.asarray(calibrated_volume(lambdas, theta_hat).real_part)
    spatial_axes = tuple(range(1, path.values.ndim))
    bad = np.flatnonzero((np.min(margins, axis=spatial_axes) <= 0.0) | (np.min(real_part, axis=spatial_axes) <= 0.0))
    if bad.size:
        k = int(bad[0])
        raise NotInSpaceError(f"time slice {k} is not in H", slice_index=k)
    return real_part * bg.omega_det


def path_energy_profile(bg: BackgroundData, path: PathField) -> np.ndarray:
    weights = path_weights(bg, path)
    velocity = time_derivative(path.values, path.tau)
    spatial_axes = tuple(range(1, path.values.ndim))
    return np.sum(velocity ** 2 * weights, axis=spatial_axes) * bg.grid.cell_volume


def path_length(bg: BackgroundData, path: PathField) -> float:
    return float(trapezoid(np.sqrt(path_energy_profile(bg, path)), dx=path.tau))


def length_sup_bound_ratio(bg: BackgroundData, path: PathField) -> float:
    """length / sup|phi_0 - phi_1|, the constant of the sup-norm length bound."""
    gap = float(np.max(np.abs(path.values[-1] - path.values[0])))
    if gap == 0.0:
        return 0.0
    return path_length(bg, path) / gap


def j_functional_delta(bg: BackgroundData, phi: ScalarField, psi: ScalarField) -> float:
    """-int psi Im(e^{-i theta_hat} Omega_phi^n)."""
    check_same_grid(phi.grid, psi.grid)
    return -integrate(psi, calibrated_imag(bg, phi))


def j_functional_along(bg: BackgroundData, path: PathField) -> np.ndarray:
    """J(t_k) with J(t_0) = 0, trapezoid rule in t."""
    check_same_grid(bg.grid, path.grid)
    imag = np.asarray(_calibration_arrays(bg, path.values).imag_part) * bg.omega_det
    velocity = time_derivative(path.values, path.tau)
    spatial_axes = tuple(range(1, path.values.ndim))
    deltas = -np.sum(velocity * imag, axis=spatial_axes) * bg.grid.cell_volume
    return cumulative_trapezoid(deltas, dx=path.tau, initial=0.0)
