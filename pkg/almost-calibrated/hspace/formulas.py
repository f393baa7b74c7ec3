"""
Analytic endpoint fields and the shipped backgrounds.

A formula is a JSON-style dictionary with a "kind" key:
    {"kind": "constant", "value": c}
    {"kind": "sine", "amplitude": c, "modes": [k_x1, k_y1, ...], "shift": 0.0}
    {"kind": "cosine", "amplitude": c, "modes": [...], "shift": 0.0}
    {"kind": "product", "amplitude": c, "factors": [formula, ...]}
    {"kind": "sum", "terms": [formula, ...]}
Missing trailing modes are zero, so data written for one torus factor is
pulled back to the product torus unchanged.
"""
from __future__ import annotations

import logging
import math
import sys

import numpy as np

from .calibrated_space import BackgroundData, with_lifted_phase
from .errors import ConfigError
from .torus_discretization import Form11Field, ScalarField, TorusGrid, hessian_array

LOGGER = logging.getLogger(__name__)

PRODUCT_SLOPE = math.tan(3 * math.pi / 8)


def _phase_argument(grid: TorusGrid, formula: dict) -> np.ndarray:
    modes = list(formula.get("modes", [1]))
    if len(modes) > grid.real_dim:
        raise ConfigError(f"formula has {len(modes)} modes for a grid with {grid.real_dim} real axes")
    modes += [0] * (grid.real_dim - len(modes))
    coordinates = grid.coordinates()
    wave = 2 * math.pi / grid.period
    return sum(wave * k * axis for k, axis in zip(modes, coordinates)) + float(formula.get("shift", 0.0))


def _build_constant(grid: TorusGrid, formula: dict) -> np.ndarray:
    return np.full(grid.shape, float(formula["value"]))


def _build_sine(grid: TorusGrid, formula: dict) -> np.ndarray:
    return float(formula.get("amplitude", 1.0)) * np.sin(_phase_argument(grid, formula))


def _build_cosine(grid: TorusGrid, formula: dict) -> np.ndarray:
    return float(formula.get("amplitude", 1.0)) * np.cos(_phase_argument(grid, formula))


def _build_product(grid: TorusGrid, formula: dict) -> np.ndarray:
    values = np.full(grid.shape, float(formula.get("amplitude", 1.0)))
    for factor in formula["factors"]:
        values = values * build_values(grid, factor)
    return values


def _build_sum(grid: TorusGrid, formula: dict) -> np.ndarray:
    return sum((build_values(grid, term) for term in formula["terms"]), np.zeros(grid.shape))


def build_values(grid: TorusGrid, formula: dict) -> np.ndarray:
    """
    Evaluates a formula on the grid. The builder is chosen by name from the "kind" key.
    """
    try:
        builder = getattr(sys.modules[__name__], "_build_" + str(formula["kind"]))
        return builder(grid, formula)
    except AttributeError:
        raise ConfigError(f"unknown formula kind {formula.get('kind')!r}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"formula {formula} is not formatted correctly: {exc}") from exc


def build_field(grid: TorusGrid, formula: dict) -> ScalarField:
    return ScalarField(grid, build_values(grid, formula))


def random_trig_field(grid: TorusGrid, rng: np.random.Generator, amplitude: float = 0.1,
                      max_mode: int = 2, terms: int = 3, factor_only: bool = False) -> ScalarField:
    """
    Sum of `terms` random low-frequency waves with total amplitude at most `amplitude`.
    :param factor_only: draw modes only along the first complex factor
    """
    active = 2 if factor_only else grid.real_dim
    values = np.zeros(grid.shape)
    coefficients = rng.uniform(-1.0, 1.0, size=(terms, 2)) * amplitude / (2 * terms)
    for a, b in coefficients:
        modes = np.zeros(grid.real_dim, dtype=int)
        while not modes.any():
            modes[:active] = rng.integers(-max_mode, max_mode + 1, size=active)
        formula = {"modes": modes.tolist()}
        argument = _phase_argument(grid, formula)
        values = values + a * np.cos(argument) + b * np.sin(argument)
    return ScalarField(grid, values)


def pull_back(field: ScalarField, grid: TorusGrid) -> ScalarField:
    """Pulls a field on the first torus factor back to the product grid."""
    if field.grid.complex_dim != 1 or grid.complex_dim != 2 or field.grid.points_per_axis != grid.points_per_axis:
        raise ConfigError("pull back needs a one-dimensional factor field on a matching product grid")
    return ScalarField(grid, np.broadcast_to(field.values[:, :, None, None], grid.shape))


def make_background(grid: TorusGrid, omega_diagonal, alpha_diagonal, alpha_potential: ScalarField | None = None,
                    lift: bool = True) -> BackgroundData:
    """
    Background with constant omega and alpha = diag + i ddbar f (closed by construction).
    """
    n = grid.complex_dim
    omega_diagonal = np.asarray(omega_diagonal, dtype=float)
    alpha_diagonal = np.asarray(alpha_diagonal, dtype=float)
    if omega_diagonal.shape != (n,) or alpha_diagonal.shape != (n,):
        raise ConfigError(f"diagonals must have {n} entries")
    matrices = np.broadcast_to(np.diag(alpha_diagonal).astype(complex), grid.shape + (n, n)).copy()
    if alpha_potential is not None:
        matrices = matrices + hessian_array(alpha_potential.values, grid)
    background = BackgroundData(grid=grid, omega=np.diag(omega_diagonal).astype(complex),
                                alpha=Form11Field(grid, matrices))
    return with_lifted_phase(background) if lift else background


def torus_background(points_per_axis: int = 64) -> BackgroundData:
    """n = 1, alpha = omega; lifted phase pi/4."""
    return make_background(TorusGrid(1, points_per_axis), [1.0], [1.0])


def product_background(points_per_axis: int = 12) -> BackgroundData:
    """n = 2, alpha = diag(1, tan(3 pi/8)); lifted phase 5 pi/8."""
    return make_background(TorusGrid(2, points_per_axis), [1.0, 1.0], [1.0, PRODUCT_SLOPE])


def fourier_background(points_per_axis: int = 64, potential: dict | None = None) -> BackgroundData:
    """n = 1, alpha = 1 + i ddbar f with a small trigonometric f."""
    grid = TorusGrid(1, points_per_axis)
    potential = potential or {"kind": "sum", "terms": [
        {"kind": "cosine", "amplitude": 0.4, "modes": [1, 0]},
        {"kind": "sine", "amplitude": 0.2, "modes": [1, 1]}]}
    return make_background(grid, [1.0], [1.0], build_field(grid, potential))
