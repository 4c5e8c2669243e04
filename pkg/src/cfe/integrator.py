"""Explicit time stepping with positivity control and mass bookkeeping."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .diagnostics.ledger import MassLedger, moment_values
from .errors import InvalidArgumentError, StiffnessError
from .grid import VolumeGrid
from .kernels import KernelPair
from .schemes import DensityState, RhsOperator, TruncationScheme, assemble

__all__ = [
    "StepControl",
    "Trajectory",
    "StepOutcome",
    "InitialDatum",
    "exp_decay",
    "project_initial",
    "step",
    "advance",
    "run",
]

logger = logging.getLogger(__name__)

NEGATIVITY_TOL = 1e-14
SUBPOINTS = 8


@dataclass(frozen=True)
class StepControl:
    method: str = "rk4"
    dt: float = 0.01
    dt_min: float = 1e-8
    positivity_mode: str = "reject_and_halve"
    sample_every: float = 0.1

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise InvalidArgumentError(f"method must be 'euler' or 'rk4', got {self.method!r}")
        if self.positivity_mode not in ("reject_and_halve", "clip"):
            raise InvalidArgumentError(f"unknown positivity mode {self.positivity_mode!r}")
        if not (self.dt_min > 0.0 and self.dt >= self.dt_min):
            raise InvalidArgumentError("need dt >= dt_min > 0")
        if not self.sample_every >= self.dt:
            raise InvalidArgumentError("sample_every must be >= dt")


@dataclass
class Trajectory:
    """Sampled states of one run plus the mass ledger at the same times."""

    samples: list
    ledger: MassLedger
    grid: VolumeGrid
    scheme: TruncationScheme
    kernel_name: str
    initial_name: str
    control: StepControl
    final_time: float
    counters: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    @property
    def initial(self) -> DensityState:
        return self.samples[0][1]

    @property
    def final(self) -> DensityState:
        return self.samples[-1][1]

    def at(self, t: float) -> DensityState:
        for ts, s in self.samples:
            if ts == t or math.isclose(ts, t, rel_tol=1e-12, abs_tol=1e-14):
                return s
        raise InvalidArgumentError(f"t={t!r} is not a sample time")

    def index_of(self, t: float) -> int:
        for k, (ts, _) in enumerate(self.samples):
            if ts == t or math.isclose(ts, t, rel_tol=1e-12, abs_tol=1e-14):
                return k
        raise InvalidArgumentError(f"t={t!r} is not a sample time")


class StepOutcome(NamedTuple):
    values: np.ndarray
    dt: float
    loss: float
    created: float
    clipped: float


@dataclass(frozen=True)
class InitialDatum:
    """A named initial density ``g_in(y)``, vectorised over ``y``."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, y):
        return self.func(np.asarray(y, dtype=float))


def exp_decay(lam: float = 1.0) -> InitialDatum:
    """``g_in(y) = exp(-lam * y)``."""
    if not lam > 0.0:
        raise InvalidArgumentError("decay rate must be > 0")
    return InitialDatum(f"exp_decay({lam:g})", lambda y: np.exp(-lam * y))


def project_initial(g_in, grid: VolumeGrid) -> np.ndarray:
    """Cell averages of ``g_in``: composite midpoint rule with 8 sub-points per cell.

    Arrays are taken as cell values directly.
    """
    if callable(g_in):
        offsets = (np.arange(SUBPOINTS) + 0.5) / SUBPOINTS
        y = grid.edges[:-1, None] + offsets[None, :] * grid.widths[:, None]
        values = np.asarray(g_in(y), dtype=float).reshape(y.shape).mean(axis=1)
    else:
        values = np.array(g_in, dtype=float)
        if values.shape != (grid.cell_count,):
            raise InvalidArgumentError(f"initial array has shape {values.shape}, expected ({grid.cell_count},)")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("initial data must be finite")
    if np.any(values < 0.0):
        raise InvalidArgumentError("initial data must be nonnegative")
    return values


def _stage(op: RhsOperator, g, track_loss, track_created):
    k = op.total(g)
    loss = op.boundary_loss_rate(g) if track_loss else 0.0
    created = op.frag_mass_rate(g) if track_created else 0.0
    return k, loss, created


def _explicit(op, g, h, method, track_loss, track_created):
    if method == "euler":
        k1, b1, c1 = _stage(op, g, track_loss, track_created)
        return g + h * k1, h * b1, h * c1
    k1, b1, c1 = _stage(op, g, track_loss, track_created)
    k2, b2, c2 = _stage(op, g + 0.5 * h * k1, track_loss, track_created)
    k3, b3, c3 = _stage(op, g + 0.5 * h * k2, track_loss, track_created)
    k4, b4, c4 = _stage(op, g + h * k3, track_loss, track_created)
    # ledger increments use the same stage weights as the state update
    g_new = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    loss = (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    created = (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
    return g_new, loss, created


def advance(op: RhsOperator, g: np.ndarray, ctl: StepControl, dt: float) -> StepOutcome:
    """One accepted explicit step from cell values ``g``.

    Under ``reject_and_halve`` a step producing values below
    ``-1e-14 * max(g)`` is retried with half the step, down to
    ``ctl.dt_min``. Remaining negative values are zeroed and the mass this
    adds is reported as ``clipped``.
    """
    if not dt > 0.0:
        raise InvalidArgumentError("dt must be > 0")
    scheme = op.scheme
    track_loss = not scheme.conservative_coagulation and op.has_coag
    track_created = not scheme.conservative_fragmentation and op.has_frag
    h = dt
    while True:
        g_new, loss, created = _explicit(op, g, h, ctl.method, track_loss, track_created)
        if not np.all(np.isfinite(g_new)):
            bad = True
        else:
            bad = ctl.positivity_mode == "reject_and_halve" and g_new.min() < -NEGATIVITY_TOL * g_new.max()
        if not bad:
            break
        if h / 2.0 < ctl.dt_min:
            raise StiffnessError(
                f"negative or non-finite density persists at dt={h:.3g} (dt_min={ctl.dt_min:.3g}); "
                "reduce dt or use positivity mode 'clip'"
            )
        h /= 2.0
        logger.debug("step rejected, retrying with dt=%g", h)
    clipped = 0.0
    neg = g_new < 0.0
    if np.any(neg):
        grid = op.grid
        clipped = float(-np.sum(grid.pivots[neg] * g_new[neg] * grid.widths[neg]))
        g_new = np.where(neg, 0.0, g_new)
    return StepOutcome(g_new, h, loss, created, clipped)


def step(s: DensityState, kp: KernelPair, scheme, ctl: StepControl, dt: float) -> DensityState:
    """Advance a state by one explicit step (possibly shortened by halving)."""
    op = assemble(s.grid, kp, scheme)
    out = advance(op, np.asarray(s.values, dtype=float), ctl, dt)
    return DensityState(s.grid, out.values, s.time + out.dt)


def _sample_times(T, every):
    n = int(math.floor(T / every + 1e-9))
    times = [k * every for k in range(n + 1)]
    if T - times[-1] > 1e-9 * max(T, 1.0):
        times.append(T)
    else:
        times[-1] = T if n > 0 else times[-1]
    return times


def run(g_in, grid: VolumeGrid, kp: KernelPair, scheme, ctl: StepControl, T: float,
        initial_name: str | None = None) -> Trajectory:
    """Integrate the truncated equation from ``g_in`` to time ``T``.

    ``g_in`` is a callable density (projected onto cell averages) or an
    array of cell values. Samples are taken every ``ctl.sample_every`` and
    at ``T``.
    """
    if not T > 0.0:
        raise InvalidArgumentError("final time T must be > 0")
    scheme = TruncationScheme.parse(scheme)
    g = project_initial(g_in, grid)
    if initial_name is None:
        initial_name = getattr(g_in, "name", "custom")
    op = assemble(grid, kp, scheme)

    ledger = MassLedger()
    loss = clipped = created = 0.0
    steps = rejected = 0
    samples = [(0.0, DensityState(grid, g, 0.0))]
    ledger.record(0.0, moment_values(grid, g, 0), moment_values(grid, g, 1), 0.0, 0.0, 0.0)

    t = 0.0
    for t_next in _sample_times(T, ctl.sample_every)[1:]:
        while t < t_next:
            h = min(ctl.dt, t_next - t)
            out = advance(op, g, ctl, h)
            if out.dt < h:
                rejected += 1
            g = out.values
            loss += out.loss
            created += out.created
            clipped += out.clipped
            steps += 1
            t = t_next if t_next - (t + out.dt) <= 1e-12 * max(t_next, 1.0) else t + out.dt
        samples.append((t_next, DensityState(grid, g, t_next)))
        ledger.record(t_next, moment_values(grid, g, 0), moment_values(grid, g, 1), loss, clipped, created)

    logger.info("run finished: %d steps (%d shortened), scheme=%s", steps, rejected, scheme.value)
    return Trajectory(
        samples=samples,
        ledger=ledger,
        grid=grid,
        scheme=scheme,
        kernel_name=kp.name,
        initial_name=initial_name,
        control=ctl,
        final_time=float(T),
        counters={"steps": steps, "shortened_steps": rejected},
    )
