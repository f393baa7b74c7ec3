"""
Run configuration. A configuration file is a JSON object; every missing key
takes its value from DEFAULT_OPTIONS.
"""
from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .calibrated_space import BackgroundData
from .epsilon_problem import SolverSettings, check_schedule
from .errors import ConfigError, DomainError
from .field_io import load_field
from .formulas import build_field, make_background
from .torus_discretization import ScalarField, TorusGrid

LOGGER = logging.getLogger(__name__)

OPTIONS_FILE_PATH = Path(__file__).resolve().parent.parent / "options.json"

DEFAULT_OPTIONS = {
    "background": {
        "complex_dim": 1,
        "points_per_axis": 64,
        "period": 6.283185307179586,
        "omega_diagonal": [1.0],
        "alpha_diagonal": [1.0],
        "alpha_fourier": [],
    },
    "endpoints": {
        "phi0": {"kind": "constant", "value": 0.0},
        "phi1": {"kind": "sine", "amplitude": 0.1, "modes": [1, 0]},
        "phi2": {"kind": "cosine", "amplitude": 0.1, "modes": [0, 1]},
    },
    "epsilon_schedule": [0.8, 0.4, 0.2, 0.1, 0.05],
    "solver": {
        "solver_type": "PhaseNewtonSolver",
        "time_steps": 33,
        "newton_tol": 1e-9,
        "max_newton": 50,
        "damping": 0.5,
        "krylov_tol": 1e-6,
        "krylov_restart": 40,
        "krylov_maxiter": 20,
    },
    "suite": {
        "checks": "all",
        "pencils": 1000,
        "directions": 20,
        "pairs": 5,
        "bound_pairs": 10,
        "derivative_instances": 5,
        "derivative_step": 0.1,
        "planes": 1000,
        "triangles": 5,
        "cat0_lambdas": [0.25, 0.5, 0.75],
        "amplitude": 0.1,
        "shift": 0.5,
        "connection_step": 1e-3,
        "torus_points": 64,
        "product_points": 12,
        "backgrounds": ["torus", "product", "fourier"],
    },
    "output_dir": "out",
    "seed": 20240501,
    "threads": 1,
}
SECTIONS = ("background", "solver", "suite")
FOURIER_KINDS = {"cos": "cosine", "sin": "sine"}
SUITE_BACKGROUNDS = ("torus", "product", "fourier")


@dataclass(frozen=True)
class RunConfig:
    background: dict
    endpoints: dict
    epsilon_schedule: tuple[float, ...]
    solver: dict
    suite: dict
    output_dir: str
    seed: int
    threads: int
    base_dir: Path = field(default=Path("."), compare=False)

    def grid(self) -> TorusGrid:
        background = self.background
        return TorusGrid(int(background["complex_dim"]), int(background["points_per_axis"]),
                         float(background["period"]))

    def build_background(self) -> BackgroundData:
        """Background with its lifted phase."""
        grid = self.grid()
        potential = None
        if self.background["alpha_fourier"]:
            terms = [{"kind": FOURIER_KINDS[entry["kind"]], "amplitude": entry["amplitude"],
                      "modes": entry["modes"]} for entry in self.background["alpha_fourier"]]
            potential = build_field(grid, {"kind": "sum", "terms": terms})
        return make_background(grid, self.background["omega_diagonal"], self.background["alpha_diagonal"], potential)

    def endpoint(self, name: str) -> ScalarField:
        if name not in self.endpoints:
            raise ConfigError(f"endpoint {name!r} is not configured")
        entry = self.endpoints[name]
        if "file" in entry:
            loaded = load_field(self.base_dir / entry["file"])
            if loaded.grid != self.grid():
                raise ConfigError(f"endpoint file {entry['file']} was written for another grid")
            return loaded
        return build_field(self.grid(), entry)

    def settings(self) -> SolverSettings:
        return SolverSettings.from_options(self.solver)

    def with_overrides(self, output_dir: str | None = None, seed: int | None = None, threads: int | None = None,
                       epsilon_schedule=None) -> RunConfig:
        """Applies command line overrides."""
        changes = {}
        if output_dir is not None:
            changes["output_dir"] = output_dir
        if seed is not None:
            changes["seed"] = int(seed)
        if threads is not None:
            changes["threads"] = int(threads)
        if epsilon_schedule is not None:
            changes["epsilon_schedule"] = _schedule(epsilon_schedule)
        return replace(self, **changes)


def _schedule(values) -> tuple[float, ...]:
    try:
        return check_schedule(values)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad epsilon schedule {values}: {exc}") from exc


def _merge(defaults: dict, given: dict, where: str) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            LOGGER.warning("Unknown option %s.%s ignored", where, key)
            continue
        merged[key] = value
    return merged


def _validate(config: RunConfig) -> None:
    background = config.background
    n = background["complex_dim"]
    if n not in (1, 2) or not isinstance(background["points_per_axis"], int):
        raise ConfigError(f"background needs complex_dim 1 or 2 and an integer grid size, got {background}")
    for key in ("omega_diagonal", "alpha_diagonal"):
        if not isinstance(background[key], list) or len(background[key]) != n:
            raise ConfigError(f"background.{key} must list {n} numbers")
    for entry in background["alpha_fourier"]:
        if not isinstance(entry, dict) or entry.get("kind") not in FOURIER_KINDS or "amplitude" not in entry \
                or "modes" not in entry:
            raise ConfigError(f"alpha_fourier entry {entry} needs amplitude, kind cos|sin and modes")
    for name, endpoint in config.endpoints.items():
        if not isinstance(endpoint, dict):
            raise ConfigError(f"endpoint {name} must be a formula or a file reference")
        if "file" in endpoint and not (config.base_dir / endpoint["file"]).is_file():
            raise ConfigError(f"endpoint file {endpoint['file']} does not exist")
    if not isinstance(config.seed, int) or config.seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {config.seed}")
    if not isinstance(config.threads, int) or config.threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {config.threads}")
    for key in ("time_steps", "max_newton"):
        if not isinstance(config.solver[key], int):
            raise ConfigError(f"solver.{key} must be an integer")
    backgrounds = config.suite["backgrounds"]
    if not isinstance(backgrounds, list) or not set(backgrounds) <= set(SUITE_BACKGROUNDS):
        raise ConfigError(f"suite.backgrounds must list names among {SUITE_BACKGROUNDS}, got {backgrounds}")


def load_config(path: str | Path | None = None) -> RunConfig:
    """
    Reads a configuration file.
    :param path: JSON file, options.json of the project by default
    :return: the validated configuration
    :raise ConfigError: unreadable or malformed file, bad values, missing field files
    """
    path = Path(path) if path is not None else OPTIONS_FILE_PATH
    try:
        with open(path) as json_file:
            json_object = json.load(json_file)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"the file {path} is not formatted correctly: {exc}") from exc
    if not isinstance(json_object, dict):
        raise ConfigError(f"the file {path} must hold a JSON object")

    options = _merge(DEFAULT_OPTIONS, json_object, "config")
    for section in SECTIONS:
        if not isinstance(options[section], dict):
            raise ConfigError(f"section {section} must be an object")
        options[section] = _merge(DEFAULT_OPTIONS[section], json_object.get(section, {}), section)
    if not isinstance(options["endpoints"], dict):
        raise ConfigError("section endpoints must be an object")
    options["endpoints"] = {**DEFAULT_OPTIONS["endpoints"], **options["endpoints"]}
    config = RunConfig(background=options["background"], endpoints=dict(options["endpoints"]),
                       epsilon_schedule=_schedule(options["epsilon_schedule"]), solver=options["solver"],
                       suite=options["suite"], output_dir=str(options["output_dir"]), seed=options["seed"],
                       threads=options["threads"], base_dir=path.resolve().parent)
    _validate(config)
    LOGGER.debug("Loaded configuration %s", path)
    return config
