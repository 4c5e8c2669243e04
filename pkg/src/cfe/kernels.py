"""Coagulation and fragmentation rate kernels.

A :class:`KernelPair` bundles a coagulation kernel ``coag(y, z)`` and a
fragmentation kernel ``frag(y, z)`` together with the constants ``k1`` and
``k2`` of the linear growth bounds

    coag(y, z) <= k1 * (1 + y + z),     frag(y, z) <= k2 * (1 + y + z).

Kernels that admit no such bound carry :data:`UNBOUNDED` instead of a number.
The sentinel deliberately supports no arithmetic, so it can never leak into a
numerical estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, KernelEvaluationError

__all__ = [
    "UNBOUNDED",
    "KernelPair",
    "AdmissibilityReport",
    "make_builtin",
    "combine",
    "kernel_from_spec",
    "check_admissibility",
    "COAG_FAMILIES",
    "FRAG_FAMILIES",
]


class _Unbounded:
    """Marker for "no linear growth constant exists"."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "+inf"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()

Rate = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _zero(y, z):
    return np.zeros(np.broadcast(np.asarray(y, float), np.asarray(z, float)).shape)


def _const(c):
    def rate(y, z):
        return np.full(np.broadcast(np.asarray(y, float), np.asarray(z, float)).shape, float(c))

    return rate


def _additive(y, z):
    return np.asarray(y, float) + np.asarray(z, float)


def _multiplicative(y, z):
    return np.asarray(y, float) * np.asarray(z, float)


def _linear_sum(a):
    def rate(y, z):
        return a * (1.0 + (np.asarray(y, float) + np.asarray(z, float)))

    return rate


@dataclass(frozen=True)
class KernelPair:
    """Coagulation/fragmentation rates plus their linear-growth metadata.

    Both callables are vectorised: they accept broadcastable arrays of
    volumes and return an array of rates. ``k1``/``k2`` are floats or
    :data:`UNBOUNDED`.
    """

    coag: Rate
    frag: Rate
    k1: float | _Unbounded
    k2: float | _Unbounded
    name: str
    coag_zero: bool = False
    frag_zero: bool = False

    @property
    def h3_declared(self) -> bool:
        return self.k1 is not UNBOUNDED

    @property
    def h4_declared(self) -> bool:
        return self.k2 is not UNBOUNDED

    @property
    def linearly_bounded(self) -> bool:
        """True when both growth constants are finite."""
        return self.h3_declared and self.h4_declared

    def with_constants(self, k1=None, k2=None) -> "KernelPair":
        return replace(
            self,
            k1=self.k1 if k1 is None else k1,
            k2=self.k2 if k2 is None else k2,
        )


COAG_FAMILIES = ("constant", "additive", "multiplicative", "linear_sum", "zero")
FRAG_FAMILIES = ("constant_frag", "zero")


def _param(params, key, family):
    if key not in params:
        raise InvalidArgumentError(f"kernel family {family!r} needs parameter {key!r}")
    value = float(params[key])
    if not math.isfinite(value) or value < 0.0:
        raise InvalidArgumentError(
            f"kernel family {family!r}: parameter {key}={params[key]!r} must be finite and >= 0"
        )
    return value


def make_builtin(family: str, **params) -> KernelPair:
    """Return the built-in kernel pair named ``family``.

    Coagulation families leave fragmentation at zero and vice versa; use
    :func:`combine` to pair them. ``k1``/``k2`` are the tightest constants
    for which the linear growth bounds hold.

    >>> make_builtin("additive").coag(2.0, 3.0)
    array(5.)
    """
    if family == "constant":
        c = _param(params, "c", family)
        return KernelPair(_const(c), _zero, c, 0.0, f"constant(c={c:g})",
                          coag_zero=c == 0.0, frag_zero=True)
    if family == "additive":
        return KernelPair(_additive, _zero, 1.0, 0.0, "additive", frag_zero=True)
    if family == "multiplicative":
        # y*z/(1+y+z) is unbounded, so no linear constant exists
        return KernelPair(_multiplicative, _zero, UNBOUNDED, 0.0, "multiplicative", frag_zero=True)
    if family == "linear_sum":
        a = _param(params, "a", family)
        return KernelPair(_linear_sum(a), _zero, a, 0.0, f"linear_sum(a={a:g})",
                          coag_zero=a == 0.0, frag_zero=True)
    if family == "constant_frag":
        c = _param(params, "c", family)
        return KernelPair(_zero, _const(c), 0.0, c, f"constant_frag(c={c:g})",
                          coag_zero=True, frag_zero=c == 0.0)
    if family == "zero":
        return KernelPair(_zero, _zero, 0.0, 0.0, "zero", coag_zero=True, frag_zero=True)
    raise InvalidArgumentError(f"unknown kernel family {family!r}")


def combine(coag_source: KernelPair, frag_source: KernelPair) -> KernelPair:
    """Take coagulation from the first pair and fragmentation from the second."""
    parts = [kp.name for kp, zero in ((coag_source, coag_source.coag_zero), (frag_source, frag_source.frag_zero))
             if not zero]
    return KernelPair(
        coag=coag_source.coag,
        frag=frag_source.frag,
        k1=coag_source.k1,
        k2=frag_source.k2,
        name="|".join(parts) if parts else "zero",
        coag_zero=coag_source.coag_zero,
        frag_zero=frag_source.frag_zero,
    )


def _single_from_spec(spec, where):
    if isinstance(spec, str):
        return make_builtin(spec)
    if not isinstance(spec, dict) or "family" not in spec:
        raise InvalidArgumentError(f"{where}: expected a family tag or an object with 'family'")
    params = {k: v for k, v in spec.items() if k != "family"}
    if "params" in params:
        params = dict(params.pop("params"), **params)
    return make_builtin(spec["family"], **params)


def kernel_from_spec(spec) -> KernelPair:
    """Build a kernel pair from its JSON form.

    Accepted shapes::

        {"family": "constant", "c": 1}
        {"coag": {"family": "additive"}, "frag": {"family": "constant_frag", "c": 1}}
    """
    if isinstance(spec, dict) and ("coag" in spec or "frag" in spec):
        coag = _single_from_spec(spec.get("coag", "zero"), "kernel.coag")
        frag = _single_from_spec(spec.get("frag", "zero"), "kernel.frag")
        return combine(coag, frag)
    return _single_from_spec(spec, "kernel")


@dataclass(frozen=True)
class AdmissibilityReport:
    symmetric: bool
    h3_ok: bool
    h4_ok: bool
    worst_ratio: float
    worst_coag_ratio: float
    worst_frag_ratio: float


def _ratio(values, bound_const, lin):
    if bound_const is UNBOUNDED:
        return math.inf
    if bound_const == 0.0:
        return 0.0 if np.all(values == 0.0) else math.inf
    return float(np.max(values / (bound_const * lin)))


def _checked(rate, y, z, label):
    values = np.asarray(rate(y, z), dtype=float)
    bad = ~np.isfinite(values) | (values < 0.0)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise KernelEvaluationError(
            f"{label} kernel returned {values[k]!r} at (y={y[k]!r}, z={z[k]!r})", y[k], z[k]
        )
    return values


def check_admissibility(kp: KernelPair, sample_count: int, domain_max: float, seed: int = 0) -> AdmissibilityReport:
    """Sample both kernels on ``(0, domain_max]^2`` and test symmetry and growth.

    The sample is ``sample_count`` pseudo-random pairs drawn from
    ``numpy.random.default_rng(seed)`` plus the corner ``(domain_max,
    domain_max)``, where linear-growth violations are largest for
    superlinear kernels.
    """
    if sample_count < 1:
        raise InvalidArgumentError("sample_count must be >= 1")
    if not domain_max > 0.0:
        raise InvalidArgumentError("domain_max must be > 0")
    rng = np.random.default_rng(seed)
    # 1 - U[0,1) lies in (0, 1]
    y = domain_max * (1.0 - rng.random(sample_count))
    z = domain_max * (1.0 - rng.random(sample_count))
    y = np.append(y, domain_max)
    z = np.append(z, domain_max)

    coag_yz = _checked(kp.coag, y, z, "coagulation")
    coag_zy = _checked(kp.coag, z, y, "coagulation")
    frag_yz = _checked(kp.frag, y, z, "fragmentation")
    frag_zy = _checked(kp.frag, z, y, "fragmentation")
    symmetric = bool(np.array_equal(coag_yz, coag_zy) and np.array_equal(frag_yz, frag_zy))

    lin = 1.0 + y + z
    coag_ratio = _ratio(coag_yz, kp.k1, lin)
    frag_ratio = _ratio(frag_yz, kp.k2, lin)
    tol = 1.0 + 1e-12
    return AdmissibilityReport(
        symmetric=symmetric,
        h3_ok=coag_ratio <= tol,
        h4_ok=frag_ratio <= tol,
        worst_ratio=max(coag_ratio, frag_ratio),
        worst_coag_ratio=coag_ratio,
        worst_frag_ratio=frag_ratio,
    )
