"""A priori bounds checked along computed trajectories.

Each checker evaluates an explicit constant from the existence theory for
the truncated problem and compares it with what the discrete solution does.
A violation means the scheme or the integrator is broken, so it raises
:class:`~cfe.errors.PropertyViolationError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, PropertyViolationError
from ..kernels import UNBOUNDED
from .convex import XLOG1P, ConvexWeight
from .ledger import moment_values

__all__ = [
    "BoundReport",
    "mass_below_one",
    "v_constant",
    "check_V_bound",
    "c4_constant",
    "check_derivative_bound",
    "check_sigma1_bound",
    "sigma2_density_sup",
]

_REL_SLACK = 1e-12


@dataclass(frozen=True)
class BoundReport:
    name: str
    bound: float
    observed: float
    passed: bool

    @property
    def headroom(self) -> float:
        return self.bound - self.observed


def _finite(value, label):
    if value is UNBOUNDED:
        raise InvalidArgumentError(f"{label} has no linear growth constant; bound undefined")
    return float(value)


def mass_below_one(grid, values) -> float:
    """Discrete ``int_0^1 g dy``: each cell weighted by its overlap with ``(0, 1)``."""
    overlap = np.clip(np.minimum(grid.edges[1:], 1.0) - grid.edges[:-1], 0.0, None)
    return float(np.sum(np.asarray(values) * overlap))


def v_constant(grid, initial_values, k2: float, T: float) -> float:
    """``V(T) = int_0^1 g_in + (2 + 3 k2 T) M1_in``."""
    return mass_below_one(grid, initial_values) + (2.0 + 3.0 * k2 * T) * moment_values(grid, initial_values, 1)


def _samples_up_to(traj, T):
    return [(t, s) for t, s in traj.samples if t <= T * (1.0 + 1e-12)]


def check_V_bound(traj, kp, T: float | None = None) -> BoundReport:
    """``sup_t sum (1 + p_i) g_i w_i <= V(T)`` over the samples with ``t <= T``."""
    k2 = _finite(kp.k2, "fragmentation kernel")
    T = traj.final_time if T is None else float(T)
    grid = traj.grid
    V = v_constant(grid, traj.initial.values, k2, T)
    weight = (1.0 + grid.pivots) * grid.widths
    observed = max(float(np.sum(weight * s.values)) for _, s in _samples_up_to(traj, T))
    if observed > V * (1.0 + _REL_SLACK):
        raise PropertyViolationError(f"sum (1+y) g = {observed!r} exceeds V(T) = {V!r}", witness=observed)
    return BoundReport("V(T)", V, observed, True)


def c4_constant(k1: float, k2: float, Rwin: float, V: float) -> float:
    return 2.5 * k1 * (1.0 + Rwin) * V * V + 1.5 * k2 * Rwin * V


def check_derivative_bound(traj, kp, Rwin: float, omega_sup: float = 1.0) -> BoundReport:
    """Time derivative of windowed integrals ``int_0^Rwin g omega`` against ``C4 * sup|omega|``.

    Derivatives are forward differences between consecutive samples. The
    test functions are ``omega_sup`` times: the constant 1, an alternating
    sign pattern over cells, and the sign of each cell's increment (the
    worst case for that interval).
    """
    grid = traj.grid
    if not 0.0 < Rwin <= grid.R:
        raise InvalidArgumentError(f"window must lie in (0, {grid.R}]")
    if omega_sup < 0.0:
        raise InvalidArgumentError("omega_sup must be >= 0")
    k1 = _finite(kp.k1, "coagulation kernel")
    k2 = _finite(kp.k2, "fragmentation kernel")
    T = traj.final_time
    V = v_constant(grid, traj.initial.values, k2, T)
    C4 = c4_constant(k1, k2, Rwin, V)

    inside = grid.pivots <= Rwin
    w = grid.widths[inside]
    alternating = np.where(np.arange(w.size) % 2 == 0, 1.0, -1.0)
    observed = 0.0
    for (t0, s0), (t1, s1) in zip(traj.samples[:-1], traj.samples[1:]):
        dg = (s1.values[inside] - s0.values[inside]) * w / (t1 - t0)
        for omega in (np.ones_like(w), alternating, np.sign(dg)):
            observed = max(observed, abs(float(np.sum(dg * omega))) * omega_sup)
    bound = C4 * omega_sup
    if observed > bound * (1.0 + _REL_SLACK) + 1e-300:
        raise PropertyViolationError(
            f"|d/dt int g omega| = {observed!r} exceeds C4 * |omega| = {bound!r}", witness=observed
        )
    return BoundReport("C4(R,T)", bound, observed, True)


def check_sigma1_bound(traj, kp, cw: ConvexWeight = XLOG1P) -> BoundReport:
    """``sup_t sum sigma(p_i) g_i w_i <= exp(16 k1 V(T) T) * (initial value) + 1e-9``."""
    k1 = _finite(kp.k1, "coagulation kernel")
    k2 = _finite(kp.k2, "fragmentation kernel")
    grid = traj.grid
    T = traj.final_time
    V = v_constant(grid, traj.initial.values, k2, T)
    weight = cw.sigma(grid.pivots) * grid.widths
    initial = float(np.sum(weight * traj.initial.values))
    exponent = 16.0 * k1 * V * T
    bound = math.inf if exponent > 700.0 else math.exp(exponent) * initial + 1e-9
    observed = max(float(np.sum(weight * s.values)) for _, s in traj.samples)
    if observed > bound:
        raise PropertyViolationError(f"sigma-moment {observed!r} exceeds Gronwall bound {bound!r}", witness=observed)
    return BoundReport("sigma1-moment", bound, observed, True)


def sigma2_density_sup(traj, Rwin: float | None = None, cw: ConvexWeight = XLOG1P) -> float:
    """``sup_t sum_{p_i <= Rwin} sigma(g_i) w_i``; reported only, no closed-form bound exists."""
    grid = traj.grid
    Rwin = grid.R if Rwin is None else Rwin
    inside = grid.pivots <= Rwin
    return max(float(np.sum(cw.sigma(s.values[inside]) * grid.widths[inside])) for _, s in traj.samples)
