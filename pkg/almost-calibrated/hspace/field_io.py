"""
Field files: numpy .npz archives with the grid header stored next to the values.
Values keep their float64 bits, so a round trip is exact.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .calibrated_space import PathField
from .errors import ConfigError
from .torus_discretization import ScalarField, TorusGrid

LOGGER = logging.getLogger(__name__)


def _header(grid: TorusGrid) -> dict:
    return {"complex_dim": np.int64(grid.complex_dim),
            "points_per_axis": np.int64(grid.points_per_axis),
            "period": np.float64(grid.period)}


def _grid(archive) -> TorusGrid:
    return TorusGrid(int(archive["complex_dim"]), int(archive["points_per_axis"]), float(archive["period"]))


def save_field(path: str | Path, field: ScalarField) -> Path:
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, values=np.ascontiguousarray(field.values), **_header(field.grid))
    LOGGER.debug("Saved field to %s", path)
    return path


def save_path(path: str | Path, path_field: PathField) -> Path:
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, values=np.ascontiguousarray(path_field.values),
             time_steps=np.int64(path_field.time_steps), **_header(path_field.grid))
    LOGGER.debug("Saved path with %d slices to %s", path_field.time_steps, path)
    return path


def _open(path: str | Path):
    try:
        return np.load(Path(path), allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc


def load_field(path: str | Path) -> ScalarField:
    with _open(path) as archive:
        try:
            return ScalarField(_grid(archive), archive["values"])
        except KeyError as exc:
            raise ConfigError(f"field file {path} is not formatted correctly: missing {exc}") from exc


def load_path(path: str | Path) -> PathField:
    with _open(path) as archive:
        try:
            values = archive["values"]
            if values.shape[0] != int(archive["time_steps"]):
                raise ConfigError(f"path file {path}: header time steps do not match the stored slices")
            return PathField(_grid(archive), values)
        except KeyError as exc:
            raise ConfigError(f"path file {path} is not formatted correctly: missing {exc}") from exc
