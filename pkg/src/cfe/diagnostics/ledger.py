"""Moments and the mass ledger."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError

__all__ = ["MassLedger", "moment", "moment_values", "tail_mass"]


def moment_values(grid, values, p: float) -> float:
    """``sum_i pivots[i]**p * g_i * w_i`` with ``0**0 == 1``."""
    values = np.asarray(values, dtype=float)
    weights = np.ones_like(grid.pivots) if p == 0 else grid.pivots ** p
    return float(np.sum(weights * values * grid.widths))


def moment(s, p: float) -> float:
    """Discrete moment of order ``p >= 0`` of a :class:`~cfe.schemes.DensityState`."""
    if p < 0:
        raise InvalidArgumentError("moment order must be >= 0")
    return moment_values(s.grid, s.values, p)


def tail_mass(s, cutoff: float) -> float:
    """First moment carried by cells whose pivot exceeds ``cutoff``."""
    if not 0.0 <= cutoff <= s.grid.R:
        raise InvalidArgumentError(f"cutoff must lie in [0, {s.grid.R}]")
    p, w = s.grid.pivots, s.grid.widths
    sel = p > cutoff
    return float(np.sum(p[sel] * s.values[sel] * w[sel]))


@dataclass
class MassLedger:
    """Moments and mass bookkeeping sampled along a run.

    ``accumulated_loss`` is the time integral of the boundary mass-loss
    rate, ``clipped_mass`` the mass added by zeroing negative values and
    ``frag_created_mass`` the net mass produced by unbalanced fragmentation.
    """

    times: list = field(default_factory=list)
    M0: list = field(default_factory=list)
    M1: list = field(default_factory=list)
    accumulated_loss: list = field(default_factory=list)
    clipped_mass: list = field(default_factory=list)
    frag_created_mass: list = field(default_factory=list)

    COLUMNS = ("t", "M0", "M1", "accumulated_loss", "clipped_mass", "frag_created_mass")

    def record(self, t, m0, m1, loss, clipped, created):
        self.times.append(float(t))
        self.M0.append(float(m0))
        self.M1.append(float(m1))
        self.accumulated_loss.append(float(loss))
        self.clipped_mass.append(float(clipped))
        self.frag_created_mass.append(float(created))

    def rows(self):
        return zip(self.times, self.M0, self.M1, self.accumulated_loss,
                   self.clipped_mass, self.frag_created_mass)

    def as_arrays(self) -> dict:
        return {name: np.asarray(col) for name, col in zip(
            self.COLUMNS,
            (self.times, self.M0, self.M1, self.accumulated_loss, self.clipped_mass, self.frag_created_mass),
        )}

    def balance_residual(self) -> np.ndarray:
        """``M1(0) - M1(t) - loss(t) + created(t) + clipped(t)`` at every sample."""
        a = self.as_arrays()
        return a["M1"][0] - a["M1"] - a["accumulated_loss"] + a["frag_created_mass"] + a["clipped_mass"]

    def __len__(self):
        return len(self.times)
