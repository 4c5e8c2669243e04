"""Right-hand side of the truncated coagulation-fragmentation equation.

Unknowns are cell averages ``g_i`` on a :class:`~cfe.grid.VolumeGrid`.
Coagulation uses one quadrature point per cell pair (the pivots) and the
fixed-pivot deposit of :func:`~cfe.grid.pivot_split`; fragmentation
integrals use composite midpoint rules aligned with the cell edges.

A merged volume ``p_i + p_j`` is *retained* when it does not exceed the last
pivot, so it can be split onto two pivots without violating number or mass.
Pairs that are not retained do not react under the conservative truncation
and leave the domain under the non-conservative ones; the mass they carry is
reported by :func:`boundary_loss_rate`.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import VolumeGrid
from .kernels import KernelPair

__all__ = [
    "TruncationScheme",
    "DensityState",
    "RhsBreakdown",
    "RhsOperator",
    "assemble",
    "coagulation_rhs",
    "fragmentation_rhs",
    "rhs",
    "boundary_loss_rate",
]

# number weight of a self pair (i, i); unordered pairs i < j carry weight 1
_SELF_PAIR_WEIGHT = 0.5


class TruncationScheme(enum.Enum):
    CONSERVATIVE = "conservative"
    NONCONS_COAG = "noncons_coag"
    NONCONS_BOTH = "noncons_both"

    @property
    def conservative_coagulation(self) -> bool:
        return self is TruncationScheme.CONSERVATIVE

    @property
    def conservative_fragmentation(self) -> bool:
        return self is not TruncationScheme.NONCONS_BOTH

    @classmethod
    def parse(cls, tag) -> "TruncationScheme":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(tag)
        except ValueError:
            raise InvalidArgumentError(
                f"unknown scheme {tag!r}; expected one of {[s.value for s in cls]}"
            ) from None


@dataclass(frozen=True, eq=False)
class DensityState:
    """Cell-averaged number density at one instant."""

    grid: VolumeGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.cell_count,):
            raise InvalidArgumentError(
                f"state has {values.shape} values for a grid of {self.grid.cell_count} cells"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("state values must be finite")
        if np.any(values < 0.0):
            raise InvalidArgumentError("state values must be nonnegative")
        if not self.time >= 0.0:
            raise InvalidArgumentError("time must be >= 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class RhsBreakdown:
    rho1: np.ndarray  # coagulation gain
    rho2: np.ndarray  # coagulation loss
    rho3: np.ndarray  # fragmentation gain
    rho4: np.ndarray  # fragmentation loss
    total: np.ndarray


class RhsOperator:
    """Precomputed quadrature structure for one (grid, kernels, scheme) triple.

    Built once by :func:`assemble` and reused for every evaluation; all
    reductions run in a fixed order so results are bit-reproducible.
    """

    def __init__(self, grid: VolumeGrid, kp: KernelPair, scheme: TruncationScheme):
        self.grid = grid
        self.kp = kp
        self.scheme = scheme
        p, w = grid.pivots, grid.widths
        n = grid.cell_count
        self._p = p
        self._w = w

        # -- coagulation -------------------------------------------------
        self.has_coag = not kp.coag_zero
        if self.has_coag:
            K = np.asarray(kp.coag(p[:, None], p[None, :]), dtype=float)
            K = np.broadcast_to(K, (n, n)).copy()
            vsum = p[:, None] + p[None, :]
            retained = vsum <= p[-1]
            self._K = K
            self._K_loss = np.where(retained, K, 0.0) if scheme.conservative_coagulation else K
            # boundary flux weights: 1/2 (p_i + p_j) K_ij on pairs that leave the grid
            self._K_out = np.where(retained, 0.0, 0.5 * vsum * K)
            self._any_out = bool(np.any(~retained & (K > 0.0)))

            ii, jj = np.nonzero(np.triu(retained & (K > 0.0)))
            v = p[ii] + p[jj]
            hi = np.searchsorted(p, v, side="left")
            hi = np.minimum(hi, n - 1)
            lo = np.maximum(hi - 1, 0)
            exact = p[hi] == v
            a = np.where(exact, 0.0, (p[hi] - v) / np.where(exact, 1.0, p[hi] - p[lo]))
            weight = np.where(ii == jj, _SELF_PAIR_WEIGHT, 1.0)
            self._pair_i = ii
            self._pair_j = jj
            self._pair_coef = K[ii, jj] * weight
            self._dep_lo = lo
            self._dep_hi = hi
            self._frac_lo = a
            self._frac_hi = 1.0 - a

        # -- fragmentation -----------------------------------------------
        self.has_frag = not kp.frag_zero
        if self.has_frag:
            e = grid.edges
            # loss coefficient: 1/2 int_0^{p_i} F(p_i - z, z) dz, composite midpoint
            k_idx = np.arange(n)
            zmid = np.where(k_idx[None, :] < k_idx[:, None], p[None, :], 0.5 * (e[:-1] + p)[:, None])
            zlen = np.where(k_idx[None, :] < k_idx[:, None], w[None, :], 0.5 * w[:, None])
            below = k_idx[None, :] <= k_idx[:, None]
            yarg = np.where(below, p[:, None] - zmid, 1.0)
            zarg = np.where(below, zmid, 1.0)
            Fl = np.asarray(kp.frag(yarg, zarg), dtype=float)
            self._frag_loss_coef = 0.5 * np.where(below, Fl * zlen, 0.0).sum(axis=1)

            # gain: int_0^U F(p_i, z) g(p_i + z) dz with g piecewise constant
            upper = grid.R if not scheme.conservative_fragmentation else grid.R - p
            upper = np.broadcast_to(upper, (n,))
            zlo = np.maximum(e[None, :-1] - p[:, None], 0.0)
            zhi = np.minimum(e[None, 1:] - p[:, None], upper[:, None])
            above = (k_idx[None, :] >= k_idx[:, None]) & (zhi > zlo)
            zm = np.where(above, 0.5 * (zlo + zhi), 1.0)
            Fg = np.asarray(kp.frag(np.broadcast_to(p[:, None], (n, n)), zm), dtype=float)
            B = np.where(above, Fg * (zhi - zlo), 0.0)
            if scheme.conservative_fragmentation:
                B = self._balance_fragments(B)
            self._frag_gain = B

    def _balance_fragments(self, B):
        """Rescale each parent column so its daughters carry the lost number and mass.

        Column ``j`` of ``B`` maps parent density ``g_j`` to daughter
        densities. Daughters strictly below the parent cell are scaled by one
        factor and those landing in the parent cell by another, chosen so the
        deposited mass equals the mass removed by the loss term and the
        deposited number equals twice the number of breakage events. When
        that has no nonnegative solution (the first cell, or lopsided
        quadrature), a single factor restores mass alone.
        """
        p, w = self._p, self._w
        L = self._frag_loss_coef
        B = B.copy()
        n = B.shape[0]
        for j in range(n):
            if L[j] == 0.0:
                B[:, j] = 0.0
                continue
            col = B[:, j]
            n_low = float(np.sum(w[:j] * col[:j]))
            m_low = float(np.sum(p[:j] * w[:j] * col[:j]))
            n_self = w[j] * col[j]
            m_self = p[j] * n_self
            n_target = 2.0 * L[j] * w[j]
            m_target = p[j] * L[j] * w[j]
            alpha = beta = -1.0
            denom = p[j] * n_low - m_low
            if n_low > 0.0 and denom > 0.0 and n_self > 0.0:
                alpha = (p[j] * n_target - m_target) / denom
                beta = (n_target - alpha * n_low) / n_self
            if alpha >= 0.0 and beta >= 0.0:
                col[:j] *= alpha
                col[j] *= beta
            else:
                m_all = m_low + m_self
                col *= m_target / m_all if m_all > 0.0 else 0.0
        return B

    # -- evaluation -------------------------------------------------------
    def coagulation(self, g):
        n = g.size
        if not self.has_coag:
            return np.zeros(n), np.zeros(n)
        gw = g * self._w
        loss = g * (self._K_loss * gw[None, :]).sum(axis=1)
        r = self._pair_coef * gw[self._pair_i] * gw[self._pair_j]
        dep = np.bincount(self._dep_lo, r * self._frac_lo, minlength=n)
        dep += np.bincount(self._dep_hi, r * self._frac_hi, minlength=n)
        return dep / self._w, loss

    def fragmentation(self, g):
        n = g.size
        if not self.has_frag:
            return np.zeros(n), np.zeros(n)
        gain = (self._frag_gain * g[None, :]).sum(axis=1)
        return gain, self._frag_loss_coef * g

    def breakdown(self, g) -> RhsBreakdown:
        g = np.asarray(g, dtype=float)
        r1, r2 = self.coagulation(g)
        r3, r4 = self.fragmentation(g)
        return RhsBreakdown(r1, r2, r3, r4, r1 - r2 + r3 - r4)

    def total(self, g):
        b = self.breakdown(g)
        return b.total

    def boundary_loss_rate(self, g) -> float:
        if not self.has_coag or not self._any_out:
            return 0.0
        gw = np.asarray(g, dtype=float) * self._w
        return float(((self._K_out * gw[None, :]).sum(axis=1) * gw).sum())

    def frag_mass_rate(self, g) -> float:
        """Net mass production of the fragmentation terms (zero when balanced)."""
        gain, loss = self.fragmentation(np.asarray(g, dtype=float))
        return float(np.sum(self._p * (gain - loss) * self._w))


@functools.lru_cache(maxsize=32)
def _cached(grid, kp, scheme):
    return RhsOperator(grid, kp, scheme)


def assemble(grid: VolumeGrid, kp: KernelPair, scheme) -> RhsOperator:
    return _cached(grid, kp, TruncationScheme.parse(scheme))


def coagulation_rhs(s: DensityState, kp: KernelPair, scheme) -> tuple[np.ndarray, np.ndarray]:
    """Coagulation (gain, loss) densities per cell."""
    return assemble(s.grid, kp, scheme).coagulation(s.values)


def fragmentation_rhs(s: DensityState, kp: KernelPair, scheme) -> tuple[np.ndarray, np.ndarray]:
    """Fragmentation (gain, loss) densities per cell."""
    return assemble(s.grid, kp, scheme).fragmentation(s.values)


def rhs(s: DensityState, kp: KernelPair, scheme) -> RhsBreakdown:
    return assemble(s.grid, kp, scheme).breakdown(s.values)


def boundary_loss_rate(s: DensityState, kp: KernelPair) -> float:
    """Rate at which coagulation carries mass past the last pivot.

    ``1/2 sum_{i,j} (p_i + p_j) K(p_i, p_j) g_i g_j w_i w_j`` over pairs whose
    merged volume is not retained by the grid.
    """
    return assemble(s.grid, kp, TruncationScheme.NONCONS_COAG).boundary_loss_rate(s.values)
