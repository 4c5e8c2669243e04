"""Weak-form residuals of computed trajectories."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InvalidArgumentError
from ..schemes import TruncationScheme

__all__ = [
    "TestFunction",
    "ONE",
    "IDENTITY",
    "INDICATOR_UNIT",
    "test_function",
    "weak_form_terms",
    "weak_form_residual",
    "fragmentation_weak_forms",
]

K_OMEGA_SUBPOINTS = 256


@dataclass(frozen=True)
class TestFunction:
    """A bounded test function ``omega`` and the kernels derived from it."""

    __test__ = False  # not a pytest class

    name: str
    omega: Callable[[np.ndarray], np.ndarray]

    def __call__(self, y):
        return np.asarray(self.omega(np.asarray(y, dtype=float)), dtype=float)

    def omega_tilde(self, y, z):
        """``omega(y + z) - omega(y) - omega(z)``."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        return self(y + z) - self(y) - self(z)

    def G_omega(self, y, z, R):
        """``omega(y + z) * [y + z <= R] - omega(y) - omega(z)``."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.where(y + z <= R, self(y + z), 0.0) - self(y) - self(z)

    def k_omega(self, y, frag, subpoints: int = K_OMEGA_SUBPOINTS):
        """``-int_0^y F(z, y - z) omega_tilde(z, y - z) dz`` by the composite midpoint rule."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        u = (np.arange(subpoints) + 0.5) / subpoints
        z = y[:, None] * u[None, :]
        integrand = np.asarray(frag(z, y[:, None] - z), dtype=float) * self.omega_tilde(z, y[:, None] - z)
        return -integrand.sum(axis=1) * (y / subpoints)


ONE = TestFunction("one", lambda y: np.ones_like(y))
IDENTITY = TestFunction("identity", lambda y: y)
INDICATOR_UNIT = TestFunction("indicator_unit", lambda y: ((y > 0.0) & (y < 1.0)).astype(float))

_NAMED = {tf.name: tf for tf in (ONE, IDENTITY, INDICATOR_UNIT)}


def test_function(name: str) -> TestFunction:
    try:
        return _NAMED[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown test function {name!r}; known: {sorted(_NAMED)}") from None


test_function.__test__ = False


def _coag_weights(grid, kp, tf, scheme):
    p = grid.pivots
    K = np.broadcast_to(np.asarray(kp.coag(p[:, None], p[None, :]), dtype=float), (p.size, p.size))
    # merged volumes past the last pivot are not representable on the grid
    G = tf.G_omega(p[:, None], p[None, :], p[-1])
    if scheme is TruncationScheme.CONSERVATIVE:
        G = np.where(p[:, None] + p[None, :] <= p[-1], G, 0.0)
    return 0.5 * G * K


def weak_form_terms(traj, kp, tf: TestFunction, t: float):
    """Left and right sides of the weak formulation at sample time ``t``.

    ``lhs = sum [g(t) - g_in] omega(p_i) w_i``; the right side integrates
    the coagulation pair term and the ``k_omega`` term in time with the
    trapezoidal rule over the samples.
    """
    idx = traj.index_of(t)
    grid = traj.grid
    p, w = grid.pivots, grid.widths
    om = tf(p)
    lhs = float(np.sum((traj.samples[idx][1].values - traj.initial.values) * om * w))
    if idx == 0:
        return lhs, 0.0

    coag_w = _coag_weights(grid, kp, tf, traj.scheme) if not kp.coag_zero else None
    kw = 0.5 * tf.k_omega(p, kp.frag) * w if not kp.frag_zero else None

    def density(values):
        total = 0.0
        if coag_w is not None:
            gw = values * w
            total += float(np.sum((coag_w * gw[None, :]).sum(axis=1) * gw))
        if kw is not None:
            total += float(np.sum(kw * values))
        return total

    times = np.array([ts for ts, _ in traj.samples[: idx + 1]])
    vals = np.array([density(s.values) for _, s in traj.samples[: idx + 1]])
    rhs = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times)))
    return lhs, rhs


def weak_form_residual(traj, kp, tf: TestFunction, t: float) -> float:
    """``|lhs - rhs| / (1 + |lhs|)`` of the weak formulation at sample time ``t``."""
    lhs, rhs = weak_form_terms(traj, kp, tf, t)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def fragmentation_weak_forms(state, kp, tf: TestFunction):
    """The fragmentation weak term written two ways for one state.

    Returns ``(k_form, pair_form)`` where ``k_form = 1/2 sum k_omega(p_i) g_i w_i``
    and ``pair_form = -1/2 sum_{i,j} omega_tilde(p_i, p_j) F(p_i, p_j) g(p_i + p_j) w_i w_j``
    over pairs inside the domain. Both discretize the same integral.
    """
    grid = state.grid
    p, w, g = grid.pivots, grid.widths, state.values
    k_form = float(np.sum(0.5 * tf.k_omega(p, kp.frag) * g * w))
    y, z = p[:, None], p[None, :]
    v = y + z
    parent = np.where(v < grid.R, g[grid.locate(v)], 0.0)
    F = np.asarray(kp.frag(np.broadcast_to(y, v.shape), np.broadcast_to(z, v.shape)), dtype=float)
    pair_form = float(-0.5 * np.sum(tf.omega_tilde(y, z) * F * parent * w[:, None] * w[None, :]))
    return k_form, pair_form
