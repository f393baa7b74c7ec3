"""
Levi-Civita connection of the calibrated metric, its curvature tensor and the
sectional curvature, each with an independent cross-check:

  * the curvature tensor in closed form against the commutator of covariant
    derivatives over a two-parameter family;
  * the sectional curvature by wedge products in the original coordinates
    against the diagonalized pointwise integrand.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .calibrated_space import BackgroundData, FrameData, alpha_phi, calibrated_weight, pointwise_frames, require_member
from .errors import DegenerateInputError, NumericError
from .formulas import random_trig_field
from .helpers import measure_time
from .pointwise_calculus import (complexified, curvature_integrand, curvature_terms, mixed_discriminant,
                                 one_form_product, q_integrand, q_weights)
from .torus_discretization import ScalarField, check_same_grid, complex_gradient, complex_hessian, integrate

LOGGER = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
DEGENERATE_PLANE = 1e-12
ROUTE_TOL = 1e-8
FLAT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TwoParamFamily:
    """phi(t, s) = base + t psi + s eta on a stencil of step `step`."""
    base: ScalarField
    psi: ScalarField
    eta: ScalarField
    step: float = DEFAULT_STEP

    def __post_init__(self):
        check_same_grid(self.base.grid, self.psi.grid)
        check_same_grid(self.base.grid, self.eta.grid)

    def point(self, t: float, s: float) -> ScalarField:
        return self.base + self.psi * t + self.eta * s

    def nodes(self) -> list[tuple[float, float]]:
        h = self.step
        return [(0.0, 0.0), (h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)]

    def require_members(self, bg: BackgroundData) -> None:
        for t, s in self.nodes():
            require_member(bg, self.point(t, s))


def _frame_gradient(frames: FrameData, field: ScalarField) -> np.ndarray:
    return frames.to_frame(complex_gradient(field))


def q_field(bg: BackgroundData, phi: ScalarField, psi: ScalarField, eta: ScalarField,
            frames: FrameData | None = None) -> ScalarField:
    """Q(grad psi, grad eta) at phi as a field."""
    frames = frames or pointwise_frames(bg, phi)
    values = q_integrand(frames.lambdas, bg.require_theta_hat(), _frame_gradient(frames, psi),
                         _frame_gradient(frames, eta))
    return ScalarField(bg.grid, values)


def covariant_derivative(bg: BackgroundData, phi: ScalarField, phi_dot: ScalarField, psi: ScalarField,
                         psi_dot: ScalarField) -> ScalarField:
    """
    Covariant derivative of the field psi(t) along the path phi(t):
        psi_dot + Q(grad phi_dot, grad psi)
    :param phi: point of the path
    :param phi_dot: velocity of the path
    :param psi: value of the field
    :param psi_dot: time derivative of the field
    """
    return psi_dot + q_field(bg, phi, phi_dot, psi)


def _q_variation(bg: BackgroundData, frames: FrameData, direction: ScalarField, first: ScalarField,
                 second: ScalarField) -> np.ndarray:
    """Derivative of phi -> Q_phi(first, second) in the direction of the potential."""
    theta_hat = bg.require_theta_hat()
    lambdas = frames.lambdas
    n = bg.grid.complex_dim
    tangent = (np.asarray(frames.calibration.tangent))[..., None]
    damping = 1.0 / (1.0 + lambdas ** 2)
    coupling = (1 - lambdas[..., :, None] * lambdas[..., None, :]
                + tangent[..., None] * (lambdas[..., :, None] + lambdas[..., None, :]))
    coupling = coupling * damping[..., :, None] * damping[..., None, :]
    off_diagonal = ~np.eye(n, dtype=bool)

    grad_first = _frame_gradient(frames, first)
    grad_second = _frame_gradient(frames, second)
    sym = one_form_product(grad_first, grad_second) + one_form_product(grad_second, grad_first)
    hessian = frames.form_to_frame(complex_hessian(direction).matrices)
    sym_diag = np.real(np.diagonal(sym, axis1=-2, axis2=-1))
    hess_diag = np.real(np.diagonal(hessian, axis1=-2, axis2=-1))
    diagonal_pairs = sym_diag[..., :, None] * hess_diag[..., None, :]
    crossed = np.real(sym * np.swapaxes(hessian, -1, -2))
    eigen_part = 0.5 * np.sum(np.where(off_diagonal, coupling * (diagonal_pairs - crossed), 0.0), axis=(-1, -2))
    weights = q_weights(lambdas, theta_hat)
    phase_part = 0.5 * np.sum(weights * sym_diag, axis=-1) * np.sum(weights * hess_diag, axis=-1)
    return eigen_part + phase_part


def curvature_tensor(bg: BackgroundData, family: TwoParamFamily, target: ScalarField | None = None) -> ScalarField:
    """
    R(psi, eta) zeta = nabla_t nabla_s zeta - nabla_s nabla_t zeta at the base of
    the family, zeta constant over the family (eta by default), in closed form:
    the variations of Q along psi and eta plus the nested Q terms.
    """
    zeta = family.eta if target is None else target
    check_same_grid(family.base.grid, zeta.grid)
    require_member(bg, family.base)
    frames = pointwise_frames(bg, family.base)
    psi, eta = family.psi, family.eta
    q_eta_zeta = q_field(bg, family.base, eta, zeta, frames)
    q_psi_zeta = q_field(bg, family.base, psi, zeta, frames)
    values = (_q_variation(bg, frames, psi, eta, zeta) - _q_variation(bg, frames, eta, psi, zeta)
              + q_field(bg, family.base, psi, q_eta_zeta, frames).values
              - q_field(bg, family.base, eta, q_psi_zeta, frames).values)
    return ScalarField(bg.grid, values)


def commutator_oracle(bg: BackgroundData, family: TwoParamFamily, target: ScalarField | None = None) -> ScalarField:
    """
    nabla_t nabla_s zeta - nabla_s nabla_t zeta by central differences over the
    family, every covariant derivative taken from its definition.
    """
    zeta = family.eta if target is None else target
    family.require_members(bg)
    h = family.step
    zero = ScalarField.constant(bg.grid)

    def along_s(t: float, s: float) -> ScalarField:
        return covariant_derivative(bg, family.point(t, s), family.eta, zeta, zero)

    def along_t(t: float, s: float) -> ScalarField:
        return covariant_derivative(bg, family.point(t, s), family.psi, zeta, zero)

    base = family.base
    t_then_s = covariant_derivative(bg, base, family.psi, along_s(0.0, 0.0),
                                    (along_s(h, 0.0) - along_s(-h, 0.0)) * (0.5 / h))
    s_then_t = covariant_derivative(bg, base, family.eta, along_t(0.0, 0.0),
                                    (along_t(0.0, h) - along_t(0.0, -h)) * (0.5 / h))
    return t_then_s - s_then_t


def torsion_defect(bg: BackgroundData, family: TwoParamFamily) -> float:
    """sup |nabla_t phi_s - nabla_s phi_t| for the affine family, where phi_st = 0."""
    zero = ScalarField.constant(bg.grid)
    first = covariant_derivative(bg, family.base, family.psi, family.eta, zero)
    second = covariant_derivative(bg, family.base, family.eta, family.psi, zero)
    return (first - second).sup_norm()


@dataclass
class CompatibilityResult:
    steps: list[float]
    derivatives: list[float]  # centered differences of <psi1, psi2> along the path
    connection_value: float  # <nabla psi1, psi2> + <psi1, nabla psi2>

    @property
    def defects(self) -> list[float]:
        return [abs(value - self.connection_value) for value in self.derivatives]

    @property
    def step_ratio(self) -> float:
        """(D(h) - D(h/2)) / (D(h/2) - D(h/4)) over consecutive halvings; 4 for a second order difference."""
        if len(self.derivatives) < 3:
            raise DegenerateInputError("the step ratio needs three steps")
        gap = self.derivatives[-2] - self.derivatives[-1]
        if gap == 0.0:
            raise DegenerateInputError("centered differences agree at the two smallest steps")
        return (self.derivatives[-3] - self.derivatives[-2]) / gap


def metric_compatibility_check(bg: BackgroundData, phi: ScalarField, velocity: ScalarField,
                               fields: tuple[ScalarField, ScalarField], rates: tuple[ScalarField, ScalarField],
                               step: float = DEFAULT_STEP, halvings: int = 1) -> CompatibilityResult:
    """
    Compares d/dt <psi1, psi2> with <nabla psi1, psi2> + <psi1, nabla psi2> along
    phi + t velocity, psi_k(t) = fields[k] + t rates[k].
    :param halvings: the centered difference is taken at step, step / 2, ..., step / 2^halvings
    """
    def inner(t: float) -> float:
        point = phi + velocity * t
        first = fields[0] + rates[0] * t
        second = fields[1] + rates[1] * t
        return integrate(first * second, calibrated_weight(bg, point))

    require_member(bg, phi)
    steps = [step / 2 ** k for k in range(halvings + 1)]
    derivatives = [(inner(h) - inner(-h)) / (2 * h) for h in steps]
    weight = calibrated_weight(bg, phi)
    first = covariant_derivative(bg, phi, velocity, fields[0], rates[0])
    second = covariant_derivative(bg, phi, velocity, fields[1], rates[1])
    connection_value = integrate(first * fields[1], weight) + integrate(fields[0] * second, weight)
    return CompatibilityResult(steps=steps, derivatives=derivatives, connection_value=connection_value)


@dataclass
class SectionalCurvature:
    route_a: float  # numerator by wedge products
    route_b: float  # numerator by the diagonalized integrand
    denominator: float

    @property
    def value(self) -> float:
        return self.route_b / self.denominator

    @property
    def value_route_a(self) -> float:
        return self.route_a / self.denominator


def _wedge_numerator(bg: BackgroundData, phi: ScalarField, psi: ScalarField, eta: ScalarField) -> float:
    n = bg.grid.complex_dim
    rotation = np.exp(-1j * bg.require_theta_hat())
    total = complexified(bg.omega, alpha_phi(bg, phi).matrices)
    real_part = np.real(rotation * mixed_discriminant([total] * n))
    grad_psi = complex_gradient(psi)
    grad_eta = complex_gradient(eta)

    def q_wedge(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        form = one_form_product(u, v) + one_form_product(v, u)
        return n / 2 * np.imag(rotation * mixed_discriminant([form] + [total] * (n - 1))) / real_part

    values = (q_wedge(grad_psi, grad_eta) ** 2 - q_wedge(grad_psi, grad_psi) * q_wedge(grad_eta, grad_eta)) * real_part
    if n >= 2:
        forms = [one_form_product(grad_psi, grad_psi), one_form_product(grad_eta, grad_eta)] + [total] * (n - 2)
        values = values - n * (n - 1) * np.real(rotation * mixed_discriminant(forms))
    return integrate(ScalarField(bg.grid, values))


def sectional_curvature_routes(bg: BackgroundData, phi: ScalarField, psi: ScalarField,
                               eta: ScalarField) -> SectionalCurvature:
    """
    Both numerators of <R(psi, eta) eta, psi> and the denominator
    <psi, psi><eta, eta> - <psi, eta>^2 at phi.
    :raise DegenerateInputError: psi and eta span no 2-plane
    :raise NumericError: the two numerators disagree
    """
    check_same_grid(psi.grid, eta.grid)
    require_member(bg, phi)
    weight = calibrated_weight(bg, phi)
    denominator = (integrate(psi * psi, weight) * integrate(eta * eta, weight)
                   - integrate(psi * eta, weight) ** 2)
    if denominator <= DEGENERATE_PLANE:
        raise DegenerateInputError(f"degenerate 2-plane: denominator {denominator:.3e}")

    frames = pointwise_frames(bg, phi)
    grad_psi = _frame_gradient(frames, psi)
    grad_eta = _frame_gradient(frames, eta)
    theta_hat = bg.require_theta_hat()
    route_b = integrate(ScalarField(bg.grid, curvature_integrand(frames.lambdas, theta_hat, grad_psi, grad_eta)),
                        weight)
    route_a = _wedge_numerator(bg, phi, psi, eta)
    scale = integrate(ScalarField(bg.grid, np.abs(curvature_terms(frames.lambdas, theta_hat, grad_psi, grad_eta)[0])),
                      weight)
    if abs(route_a - route_b) > ROUTE_TOL * max(abs(route_a), abs(route_b)) + FLAT_TOL * scale:
        raise NumericError(f"curvature routes disagree: wedge {route_a:.12e} vs pointwise {route_b:.12e}")
    return SectionalCurvature(route_a=route_a, route_b=route_b, denominator=denominator)


def sectional_curvature(bg: BackgroundData, phi: ScalarField, psi: ScalarField, eta: ScalarField) -> float:
    """K(psi, eta) at phi, from the diagonalized integrand after both routes agree."""
    return sectional_curvature_routes(bg, phi, psi, eta).value


@measure_time
def curvature_ensemble(bg: BackgroundData, phi: ScalarField, rng: np.random.Generator, draws: int,
                       amplitude: float = 1.0) -> list[dict]:
    """
    Sectional curvature of random 2-planes at phi.
    :return: rows (draw_id, k_route_a, k_route_b, denominator, flat_flag)
    """
    require_member(bg, phi)
    rows = []
    for draw in range(draws):
        psi = random_trig_field(bg.grid, rng, amplitude=amplitude)
        eta = random_trig_field(bg.grid, rng, amplitude=amplitude)
        try:
            result = sectional_curvature_routes(bg, phi, psi, eta)
        except DegenerateInputError:
            LOGGER.debug("Draw %d spans no 2-plane, skipped", draw)
            continue
        rows.append({"draw_id": draw, "k_route_a": result.value_route_a, "k_route_b": result.value,
                     "denominator": result.denominator, "flat_flag": abs(result.value) <= FLAT_TOL})
    if rows:
        LOGGER.info("Curvature ensemble: %d planes, max K %.3e", len(rows), max(row["k_route_b"] for row in rows))
    return rows
