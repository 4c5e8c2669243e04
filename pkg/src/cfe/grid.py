"""Cell partitions of the truncated volume domain ``(0, R]``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleGridError, InvalidArgumentError, OutOfDomainError

__all__ = ["VolumeGrid", "PivotSplit", "make_uniform", "make_geometric", "grid_from_spec", "pivot_split"]


@dataclass(frozen=True, eq=False)
class VolumeGrid:
    """Immutable cell partition with midpoint pivots.

    ``edges[0] == 0`` and ``edges[-1] == R``; ``pivots[i]`` is the midpoint
    of cell ``i``.
    """

    edges: np.ndarray
    kind: str = "custom"
    ratio: float = 1.0

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 3:
            raise InvalidArgumentError("a grid needs at least two cells")
        if edges[0] != 0.0 or not np.all(np.diff(edges) > 0.0):
            raise InvalidArgumentError("edges must start at 0 and increase strictly")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        pivots = 0.5 * (edges[:-1] + edges[1:])
        widths = np.diff(edges)
        pivots.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "pivots", pivots)
        object.__setattr__(self, "widths", widths)

    @property
    def R(self) -> float:
        return float(self.edges[-1])

    @property
    def cell_count(self) -> int:
        return self.edges.size - 1

    def locate(self, v):
        """Index of the cell containing ``v`` (cells are ``[e_i, e_{i+1})``; ``R`` maps to the last)."""
        idx = np.searchsorted(self.edges, v, side="right") - 1
        return np.clip(idx, 0, self.cell_count - 1)

    def to_spec(self) -> dict:
        return {"type": self.kind, "R": self.R, "cells": self.cell_count,
                "first_width": float(self.widths[0])}

    def __eq__(self, other):
        return isinstance(other, VolumeGrid) and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash(self.edges.tobytes())


def make_uniform(R: float, cells: int) -> VolumeGrid:
    if not R > 0.0:
        raise InvalidArgumentError(f"R must be > 0, got {R!r}")
    if int(cells) != cells or cells < 2:
        raise InvalidArgumentError(f"cells must be an integer >= 2, got {cells!r}")
    cells = int(cells)
    edges = np.arange(cells + 1, dtype=float) * (R / cells)
    edges[-1] = R
    return VolumeGrid(edges, kind="uniform")


def _geometric_sum(q, cells):
    if abs(q - 1.0) < 1e-12:
        return float(cells)
    with np.errstate(over="ignore"):
        return float(np.expm1(cells * np.log(q)) / (q - 1.0))


def make_geometric(R: float, cells: int, first_width: float | None = None) -> VolumeGrid:
    """Cells whose widths grow geometrically, ``w * q**i``, summing to ``R``.

    ``q`` is found by bisection on ``(1e-6, 1e6)`` to a relative tolerance of
    ``1e-12``. The default ``first_width`` is ``R / (4 * cells)``.
    """
    if int(cells) != cells or cells < 2:
        raise InvalidArgumentError(f"cells must be an integer >= 2, got {cells!r}")
    cells = int(cells)
    if not R > 0.0:
        raise InvalidArgumentError(f"R must be > 0, got {R!r}")
    if first_width is None:
        first_width = R / (4.0 * cells)
    if not 0.0 < first_width < R:
        raise InvalidArgumentError(f"need 0 < first_width < R, got first_width={first_width!r}, R={R!r}")

    target = R / first_width

    def excess(q):
        return _geometric_sum(q, cells) - target

    lo, hi = 1e-6, 1e6
    if excess(lo) > 0.0 or excess(hi) < 0.0:
        raise InfeasibleGridError(f"no growth ratio in (1e-6, 1e6) fits {cells} cells of first width {first_width} into R={R}")
    # exact uniform case avoids a bisection that stalls next to q = 1
    if abs(excess(1.0)) <= 1e-12 * target:
        q = 1.0
    else:
        # bisect in log(q): the sum is monotone in q
        a, b = np.log(lo), np.log(hi)
        for _ in range(400):
            m = 0.5 * (a + b)
            if excess(np.exp(m)) > 0.0:
                b = m
            else:
                a = m
            if b - a <= 1e-13:
                break
        q = float(np.exp(0.5 * (a + b)))

    widths = first_width * q ** np.arange(cells)
    # absorb the residual of the root so the edges close exactly at R
    widths *= R / widths.sum()
    edges = np.concatenate(([0.0], np.cumsum(widths)))
    edges[-1] = R
    return VolumeGrid(edges, kind="geometric", ratio=q)


def grid_from_spec(spec: dict) -> VolumeGrid:
    """``{"type": "uniform"|"geometric", "R": ..., "cells": ..., "first_width": ...}``"""
    if not isinstance(spec, dict):
        raise InvalidArgumentError("grid spec must be an object")
    try:
        kind = spec.get("type", "geometric")
        R = float(spec["R"])
        cells = spec["cells"]
    except KeyError as exc:
        raise InvalidArgumentError(f"grid spec missing {exc.args[0]!r}") from None
    if kind == "uniform":
        return make_uniform(R, cells)
    if kind == "geometric":
        fw = spec.get("first_width")
        return make_geometric(R, cells, None if fw is None else float(fw))
    raise InvalidArgumentError(f"unknown grid type {kind!r}")


class PivotSplit(NamedTuple):
    """Cells receiving a particle of volume ``v`` and their number weights.

    ``mass_factor`` is ``v / pivot`` when ``v`` falls outside the pivot range
    (the deposit then keeps number but not mass) and 1 otherwise.
    """

    parts: list
    mass_factor: float


def pivot_split(g: VolumeGrid, v: float) -> PivotSplit:
    """Distribute one particle of volume ``v`` onto the neighbouring pivots.

    Between two pivots the weights conserve both number and mass.
    """
    if not 0.0 < v <= g.R:
        raise OutOfDomainError(f"volume {v!r} outside (0, {g.R!r}]")
    p = g.pivots
    if v <= p[0]:
        return PivotSplit([(0, 1.0)], v / p[0])
    if v >= p[-1]:
        return PivotSplit([(g.cell_count - 1, 1.0)], v / p[-1])
    i = int(np.searchsorted(p, v, side="right")) - 1
    if v == p[i]:
        return PivotSplit([(i, 1.0)], 1.0)
    a = (p[i + 1] - v) / (p[i + 1] - p[i])
    return PivotSplit([(i, a), (i + 1, 1.0 - a)], 1.0)
