"""Truncation-domain convergence sweeps.

The same physical problem is solved on ``(0, R]`` for increasing ``R`` at
fixed resolution (cells proportional to ``R``), and the mass that left
through the boundary is tabulated. For linearly bounded kernels the lost
fraction must shrink as ``R`` grows.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig, parse_config
from .errors import ConfigError
from .grid import grid_from_spec
from .integrator import run
from .schemes import TruncationScheme

__all__ = [
    "ConvergenceRow",
    "SLACK",
    "NOT_APPLICABLE",
    "scaled_grid_spec",
    "worker_count",
    "sweep",
    "check_trend",
    "CONVERGENCE_COLUMNS",
]

SLACK = 0.05
NOT_APPLICABLE = "H3 violated: Theorem 1 not applicable"
CONVERGENCE_COLUMNS = ("R", "final_M1", "final_accumulated_loss", "loss_fraction", "note")


@dataclass(frozen=True)
class ConvergenceRow:
    R: float
    cells: int
    final_M1: float
    final_accumulated_loss: float
    loss_fraction: float
    note: str = ""

    def as_csv(self):
        return (self.R, self.final_M1, self.final_accumulated_loss, self.loss_fraction, self.note)


def scaled_grid_spec(spec: dict, R: float) -> dict:
    """Grid spec for domain ``R`` with the same cells-per-unit-volume as ``spec``."""
    R0 = float(spec["R"])
    cells = max(1, int(round(int(spec["cells"]) * R / R0)))
    return dict(spec, R=R, cells=cells)


def worker_count(jobs: int) -> int:
    """Process count for ``jobs`` tasks, capped by ``CFE_THREADS`` when set."""
    cap = os.environ.get("CFE_THREADS")
    if cap:
        try:
            limit = int(cap)
        except ValueError:
            raise ConfigError(f"CFE_THREADS must be a positive integer, got {cap!r}") from None
        if limit < 1:
            raise ConfigError(f"CFE_THREADS must be a positive integer, got {cap!r}")
    else:
        limit = os.cpu_count() or 1
    return max(1, min(limit, jobs))


def _member(raw: dict, base_dir: str, R: float):
    cfg = parse_config(raw, base_dir=Path(base_dir))
    grid = grid_from_spec(scaled_grid_spec(raw["grid"], R))
    traj = run(cfg.initial_for(grid), grid, cfg.kernel, cfg.scheme, cfg.step, cfg.T,
               initial_name=cfg.initial_name)
    led = traj.ledger
    return R, grid.cell_count, float(led.M1[0]), float(led.M1[-1]), float(led.accumulated_loss[-1])


def sweep(cfg: RunConfig, R_list) -> list:
    """Run every member of the sweep; rows come back sorted by ``R``.

    Members are independent and run in separate processes.
    """
    if cfg.scheme is not TruncationScheme.NONCONS_COAG:
        raise ConfigError(f"convergence sweeps need scheme 'noncons_coag', config has {cfg.scheme.value!r}")
    R_list = [float(r) for r in R_list]
    if len(R_list) < 2:
        raise ConfigError("need at least two domain sizes")
    if any(not (math.isfinite(r) and r > 0.0) for r in R_list) or any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ConfigError("domain sizes must be positive and strictly increasing")

    note = ""
    if not cfg.kernel.linearly_bounded:
        note = NOT_APPLICABLE
    workers = worker_count(len(R_list))
    args = [(cfg.raw, str(cfg.base_dir), R) for R in R_list]
    if workers == 1:
        results = [_member(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_member, *zip(*args)))
    rows = []
    for R, cells, m1_in, m1, loss in sorted(results):
        fraction = loss / m1_in if m1_in > 0.0 else 0.0
        rows.append(ConvergenceRow(R, cells, m1, loss, fraction, note))
    return rows


def check_trend(rows, slack: float = SLACK) -> list:
    """Failures of the shrinking-loss property; empty when it holds.

    Each fraction may exceed its predecessor by at most ``slack`` (relative),
    and the last must be below the first unless every fraction is zero.
    """
    fr = [r.loss_fraction for r in rows]
    failures = []
    for a, b, prev, cur in zip(rows, rows[1:], fr, fr[1:]):
        if cur > prev * (1.0 + slack):
            failures.append(f"loss fraction rises from {prev:.3e} (R={a.R:g}) to {cur:.3e} (R={b.R:g})")
    if any(fr) and not fr[-1] < fr[0]:
        failures.append(f"last loss fraction {fr[-1]:.3e} is not below the first {fr[0]:.3e}")
    return failures
