"""JSON run configuration.

Example::

    {
      "kernel": {"coag": {"family": "constant", "c": 1}, "frag": {"family": "zero"}},
      "grid": {"type": "geometric", "R": 200, "cells": 400},
      "scheme": "conservative",
      "step": {"method": "rk4", "dt": 0.01, "dt_min": 1e-8, "positivity": "reject", "sample_every": 0.5},
      "initial": {"type": "exp_decay", "lambda": 1},
      "T": 10
    }
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CFEError, ConfigError
from .grid import VolumeGrid, grid_from_spec
from .integrator import InitialDatum, StepControl, exp_decay
from .kernels import KernelPair, kernel_from_spec
from .schemes import TruncationScheme

__all__ = ["RunConfig", "load_config", "parse_config", "initial_from_spec"]

_POSITIVITY = {"reject": "reject_and_halve", "reject_and_halve": "reject_and_halve", "clip": "clip"}


@dataclass
class RunConfig:
    kernel: KernelPair
    grid: VolumeGrid
    scheme: TruncationScheme
    step: StepControl
    initial_spec: dict
    T: float
    output_dir: str | None
    raw: dict
    text: str = ""
    base_dir: Path = field(default_factory=Path.cwd)

    def initial_for(self, grid: VolumeGrid):
        """Initial datum for ``grid``: a callable density or an array of cell values."""
        return initial_from_spec(self.initial_spec, grid, self.base_dir)

    @property
    def initial_name(self) -> str:
        return _initial_name(self.initial_spec)

    def with_grid(self, grid: VolumeGrid) -> "RunConfig":
        return replace(self, grid=grid)


def _initial_name(spec):
    kind = spec.get("type")
    if kind == "exp_decay":
        return exp_decay(float(spec.get("lambda", spec.get("lam", 1.0)))).name
    if kind == "monodisperse_cell":
        return f"monodisperse_cell({int(spec['cell'])},{float(spec['mass']):g})"
    if kind == "custom_table":
        return f"custom_table({spec['path']})"
    raise ConfigError(f"unknown initial datum type {kind!r}")


def _read_table(path: Path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read initial table {path}: {exc.strerror}") from None
    try:
        y = np.array([float(r["y"]) for r in rows])
        g = np.array([float(r["g"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"initial table {path} needs numeric columns 'y' and 'g' ({exc})") from None
    if y.size < 2 or not np.all(np.diff(y) > 0.0):
        raise ConfigError(f"initial table {path}: y must increase strictly over at least two rows")
    return y, g


def initial_from_spec(spec: dict, grid: VolumeGrid, base_dir: Path | None = None):
    kind = spec.get("type")
    if kind == "exp_decay":
        return exp_decay(float(spec.get("lambda", spec.get("lam", 1.0))))
    if kind == "monodisperse_cell":
        i = int(spec["cell"])
        mass = float(spec["mass"])
        if not 0 <= i < grid.cell_count or mass < 0.0:
            raise ConfigError(f"monodisperse_cell: need 0 <= cell < {grid.cell_count} and mass >= 0")
        values = np.zeros(grid.cell_count)
        values[i] = mass / (grid.pivots[i] * grid.widths[i])
        return values
    if kind == "custom_table":
        path = Path(spec["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        y, g = _read_table(path)
        return InitialDatum(_initial_name(spec), lambda v: np.interp(v, y, g, left=0.0, right=0.0))
    raise ConfigError(f"unknown initial datum type {kind!r}")


def _require(raw, key):
    if key not in raw:
        raise ConfigError(f"config is missing {key!r}")
    return raw[key]


def parse_config(raw: dict, base_dir: Path | None = None, text: str = "") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        kernel = kernel_from_spec(_require(raw, "kernel"))
        grid = grid_from_spec(_require(raw, "grid"))
        scheme = TruncationScheme.parse(raw.get("scheme", "noncons_coag"))
        st = dict(raw.get("step", {}))
        positivity = st.get("positivity", "reject")
        if positivity not in _POSITIVITY:
            raise ConfigError(f"step.positivity must be 'reject' or 'clip', got {positivity!r}")
        step = StepControl(
            method=st.get("method", "rk4"),
            dt=float(st.get("dt", 0.01)),
            dt_min=float(st.get("dt_min", 1e-8)),
            positivity_mode=_POSITIVITY[positivity],
            sample_every=float(st.get("sample_every", max(0.1, float(st.get("dt", 0.01))))),
        )
        initial_spec = raw.get("initial", {"type": "exp_decay", "lambda": 1})
        if not isinstance(initial_spec, dict):
            raise ConfigError("initial must be an object with a 'type'")
        T = float(_require(raw, "T"))
        if not T > 0.0:
            raise ConfigError("T must be > 0")
        cfg = RunConfig(kernel, grid, scheme, step, initial_spec, T, raw.get("output_dir"), raw,
                        text=text, base_dir=base_dir or Path.cwd())
        _initial_name(initial_spec)
        cfg.initial_for(grid)
    except ConfigError:
        raise
    except (CFEError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a config file; JSON syntax errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw, base_dir=path.parent.resolve(), text=text)
