"""Closed-form reference solutions used to validate the solver.

Every case is evaluated analytically and never by running the solver. The
table built by :func:`oracle_table` self-checks each case once against its
own equation: centred time differences of the closed form are compared with
the gain/loss integrals computed by adaptive quadrature.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .diagnostics.ledger import moment_values
from .errors import InvalidArgumentError, PostGelationError, PropertyViolationError
from .integrator import exp_decay
from .kernels import KernelPair, make_builtin

__all__ = [
    "OracleCase",
    "OracleReport",
    "constant_coag_oracle",
    "binary_frag_oracle",
    "product_kernel_m2_oracle",
    "GELATION_TIME",
    "oracle_table",
    "get_oracle",
    "compare",
]

GELATION_TIME = 0.5
SELF_CHECK_TOL = 1e-8
SELF_CHECK_POINTS = 100


def constant_coag_oracle(y, t):
    """``K = 1, F = 0, g_in = exp(-y)``: ``4/(2+t)^2 exp(-2y/(2+t))``."""
    y = np.asarray(y, dtype=float)
    s = 2.0 + np.asarray(t, dtype=float)
    return 4.0 / s**2 * np.exp(-2.0 * y / s)


def binary_frag_oracle(y, t):
    """``K = 0, F = 2, g_in = exp(-y)``: ``(1+t)^2 exp(-y(1+t))``."""
    y = np.asarray(y, dtype=float)
    s = 1.0 + np.asarray(t, dtype=float)
    return s**2 * np.exp(-y * s)


def product_kernel_m2_oracle(t):
    """Second moment ``2/(1-2t)`` for ``K = yz, F = 0, g_in = exp(-y)`` before gelation."""
    t = float(t)
    if t < 0.0:
        raise InvalidArgumentError("t must be >= 0")
    if t >= GELATION_TIME:
        raise PostGelationError(f"second moment is infinite from t = {GELATION_TIME}")
    return 2.0 / (1.0 - 2.0 * t)


@dataclass(frozen=True)
class OracleCase:
    name: str
    kernel: Callable[[], KernelPair]
    initial_name: str
    moments: dict
    density: Callable | None = None
    t_max: float = np.inf
    pde_residual: Callable | None = field(default=None, repr=False)

    @property
    def kernel_name(self) -> str:
        return self.kernel().name

    def initial(self):
        return exp_decay(1.0)


def _fd(f, t, h):
    return (f(t + h) - f(t - h)) / (2.0 * h)


def _constant_coag_residual(y, t, h=1e-4):
    g = functools.partial(constant_coag_oracle, t=t)
    gain = 0.5 * integrate.quad(lambda z: g(y - z) * g(z), 0.0, y, epsabs=1e-14, epsrel=1e-13)[0]
    m0 = integrate.quad(g, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    dgdt = _fd(lambda s: constant_coag_oracle(y, s), t, h)
    return abs(dgdt - (gain - g(y) * m0))


def _binary_frag_residual(y, t, h=1e-4):
    g = functools.partial(binary_frag_oracle, t=t)
    # gain int_0^inf F(y, z) g(y+z) dz, loss 1/2 int_0^y F(y-z, z) dz g(y), with F = 2
    gain = integrate.quad(lambda z: 2.0 * g(y + z), 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    loss = 0.5 * 2.0 * y * g(y)
    dgdt = _fd(lambda s: binary_frag_oracle(y, s), t, h)
    return abs(dgdt - (gain - loss))


def _product_m2_residual(_y, t, h=1e-6):
    # pre-gelation moment identity dM2/dt = M2^2, checked relative to M2^2
    m2 = product_kernel_m2_oracle(t)
    return abs(_fd(product_kernel_m2_oracle, t, h) - m2 * m2) / (m2 * m2)


def _frozen_residual(_y, _t):
    return 0.0


def _self_check(case: OracleCase, seed: int = 12345):
    if case.pde_residual is None:
        return
    rng = np.random.default_rng(seed)
    t_hi = min(case.t_max * 0.8, 5.0)
    ys = rng.uniform(0.01, 10.0, SELF_CHECK_POINTS)
    ts = rng.uniform(0.01, t_hi, SELF_CHECK_POINTS)
    worst = max(case.pde_residual(y, t) for y, t in zip(ys, ts))
    if not worst < SELF_CHECK_TOL:
        raise PropertyViolationError(f"oracle {case.name!r} fails its own equation: residual {worst:.3e}")


@functools.lru_cache(maxsize=1)
def oracle_table() -> dict:
    """All oracle cases, each self-checked once."""
    cases = [
        OracleCase(
            "constant_coag",
            lambda: make_builtin("constant", c=1.0),
            "exp_decay(1)",
            {0: lambda t: 2.0 / (2.0 + t), 1: lambda t: 1.0, 2: lambda t: (2.0 + t)},
            density=constant_coag_oracle,
            pde_residual=_constant_coag_residual,
        ),
        OracleCase(
            "binary_frag",
            lambda: make_builtin("constant_frag", c=2.0),
            "exp_decay(1)",
            {0: lambda t: 1.0 + t, 1: lambda t: 1.0, 2: lambda t: 2.0 / (1.0 + t)},
            density=binary_frag_oracle,
            pde_residual=_binary_frag_residual,
        ),
        OracleCase(
            "product_m2",
            lambda: make_builtin("multiplicative"),
            "exp_decay(1)",
            {0: lambda t: 1.0 - t / 2.0, 1: lambda t: 1.0, 2: product_kernel_m2_oracle},
            t_max=GELATION_TIME,
            pde_residual=_product_m2_residual,
        ),
        OracleCase(
            "frozen",
            lambda: make_builtin("zero"),
            "exp_decay(1)",
            {0: lambda t: 1.0, 1: lambda t: 1.0, 2: lambda t: 2.0},
            density=lambda y, t: np.exp(-np.asarray(y, dtype=float)) + 0.0 * np.asarray(t, dtype=float),
            pde_residual=_frozen_residual,
        ),
    ]
    for case in cases:
        _self_check(case)
    return {case.name: case for case in cases}


def get_oracle(name: str) -> OracleCase:
    table = oracle_table()
    if name not in table:
        raise InvalidArgumentError(f"unknown oracle {name!r}; known: {sorted(table)}")
    return table[name]


@dataclass
class OracleReport:
    m0_rel_err: float
    m1_rel_err: float
    m2_rel_err: float | None
    density_rel_Linf_at_times: dict
    times_compared: int


def compare(traj, oracle: OracleCase, norms=("m0", "m1"), density_times=(), t_limit: float | None = None) -> OracleReport:
    """Relative moment errors (max over samples) and density errors on the pivots.

    Only samples with ``t <= t_limit`` (default: the oracle's validity
    window, exclusive for the gelation case) are compared.
    """
    if traj.kernel_name != oracle.kernel_name or traj.initial_name != oracle.initial_name:
        raise InvalidArgumentError(
            f"trajectory ({traj.kernel_name}, {traj.initial_name}) does not match oracle "
            f"{oracle.name!r} ({oracle.kernel_name}, {oracle.initial_name})"
        )
    limit = oracle.t_max if t_limit is None else t_limit
    grid = traj.grid
    errs = {0: 0.0, 1: 0.0, 2: 0.0}
    used = 0
    wanted = {int(n[1]) for n in norms if n in ("m0", "m1", "m2")}
    for t, s in traj.samples:
        if t > limit or (t >= oracle.t_max):
            continue
        used += 1
        for p in wanted:
            exact = oracle.moments[p](t)
            errs[p] = max(errs[p], abs(moment_values(grid, s.values, p) - exact) / abs(exact))
    dens = {}
    for t in density_times:
        if oracle.density is None:
            raise InvalidArgumentError(f"oracle {oracle.name!r} has no closed-form density")
        s = traj.at(t)
        exact = oracle.density(grid.pivots, t)
        dens[float(t)] = float(np.max(np.abs(s.values - exact)) / np.max(np.abs(exact)))
    return OracleReport(
        m0_rel_err=errs[0] if 0 in wanted else float("nan"),
        m1_rel_err=errs[1] if 1 in wanted else float("nan"),
        m2_rel_err=errs[2] if 2 in wanted else None,
        density_rel_Linf_at_times=dens,
        times_compared=used,
    )
