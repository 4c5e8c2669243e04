"""Convex weights with concave derivative (de la Vallée-Poussin functions).

A :class:`ConvexWeight` is a function ``sigma`` on ``[0, inf)`` with
``sigma(0) = 0``, nondecreasing concave derivative and ``sigma(r)/r -> inf``.
Two representations exist: the closed form ``y*log(1+y)`` and a
piecewise-linear derivative built from a tail profile by
:func:`build_dlvp_weight`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, PropertyViolationError, TruncationTooSmallError

__all__ = [
    "ConvexWeight",
    "XLOG1P",
    "ConvexCheckReport",
    "check_convex_inequalities",
    "build_dlvp_weight",
    "DLVP_LEVELS",
]

DLVP_LEVELS = 20
# the continuation knots double until they pass this volume
_KNOT_HORIZON = 1e9


@dataclass(frozen=True, eq=False)
class ConvexWeight:
    """``sigma`` and ``sigma'`` in one of two representations.

    For ``piecewise_linear_derivative`` the derivative interpolates
    ``levels`` at ``knots`` (``knots[0] == 0``) and continues linearly with
    the last slope.
    """

    representation: str
    knots: np.ndarray | None = None
    levels: np.ndarray | None = None
    thresholds: np.ndarray | None = field(default=None, repr=False)
    tail_sum: float | None = None

    def __post_init__(self):
        if self.representation == "closed_form_xlog1p":
            return
        if self.representation != "piecewise_linear_derivative":
            raise InvalidArgumentError(f"unknown representation {self.representation!r}")
        knots = np.asarray(self.knots, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or knots.shape != levels.shape:
            raise InvalidArgumentError("knots and levels must be 1-d arrays of equal length >= 2")
        if knots[0] != 0.0 or not np.all(np.diff(knots) > 0.0):
            raise InvalidArgumentError("knots must start at 0 and increase strictly")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "levels", levels)
        slopes = np.diff(levels) / np.diff(knots)
        # sigma at each knot, exact for a piecewise-linear derivative
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (levels[1:] + levels[:-1]) * np.diff(knots))))
        object.__setattr__(self, "_slopes", slopes)
        object.__setattr__(self, "_cum", cum)

    @property
    def slopes(self) -> np.ndarray:
        """Slopes of ``sigma'`` between consecutive knots."""
        if self.representation == "closed_form_xlog1p":
            raise AttributeError("closed-form weight has no knots")
        return self._slopes

    def _segment(self, r):
        k = np.searchsorted(self.knots, r, side="right") - 1
        k = np.clip(k, 0, self.knots.size - 2)
        return k, r - self.knots[k]

    def sigma(self, r):
        r = np.asarray(r, dtype=float)
        if self.representation == "closed_form_xlog1p":
            return r * np.log1p(r)
        k, d = self._segment(r)
        return self._cum[k] + self.levels[k] * d + 0.5 * self._slopes[k] * d * d

    def sigma_prime(self, r):
        r = np.asarray(r, dtype=float)
        if self.representation == "closed_form_xlog1p":
            return np.log1p(r) + r / (1.0 + r)
        k, d = self._segment(r)
        return self.levels[k] + self._slopes[k] * d

    def __call__(self, r):
        return self.sigma(r)

    def invariant_violations(self) -> list[str]:
        """Structural problems; an empty list means the weight is admissible."""
        problems = []
        if float(self.sigma(0.0)) != 0.0:
            problems.append("sigma(0) != 0")
        if self.representation == "piecewise_linear_derivative":
            if np.any(self.levels < 0.0) or np.any(self._slopes < 0.0):
                problems.append("sigma' is negative or decreasing")
            if np.any(np.diff(self._slopes) > 1e-12 * np.abs(self._slopes[:-1]).clip(min=1e-300)):
                problems.append("sigma' is not concave")
        if not self.is_superlinear():
            problems.append("sigma(r)/r is not increasing at r = 10**k, k = 1..6")
        return problems

    def is_superlinear(self) -> bool:
        r = 10.0 ** np.arange(1, 7)
        q = self.sigma(r) / r
        return bool(np.all(np.diff(q) > 0.0))


XLOG1P = ConvexWeight("closed_form_xlog1p")


@dataclass(frozen=True)
class ConvexCheckReport:
    samples: int
    worst_derivative_lower: float  # min of (r*s'(r) - s(r)) / scale
    worst_derivative_upper: float  # min of (2 s(r) - r*s'(r)) / scale
    worst_superadditive: float     # min of D / scale
    worst_chord: float             # min of (bound - D) / scale
    passed: bool = True


def check_convex_inequalities(cw: ConvexWeight, samples: int = 10_000, seed: int = 0,
                              rel_slack: float = 1e-9) -> ConvexCheckReport:
    """Test the two inequality chains for convex weights with concave derivative.

    For ``r1, r2`` sampled log-uniformly in ``[1e-6, 1e6]`` (plus a few
    diagonal points ``r1 == r2``)::

        s(r1) <= r1 s'(r1) <= 2 s(r1)
        0 <= s(r1 + r2) - s(r1) - s(r2) <= 2 (r1 s(r2) + r2 s(r1)) / (r1 + r2)

    Each side may be violated by ``rel_slack`` times the magnitude of the
    terms involved. The first violation raises
    :class:`~cfe.errors.PropertyViolationError` with the sample point.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    r1 = 10.0 ** rng.uniform(-6.0, 6.0, samples)
    r2 = 10.0 ** rng.uniform(-6.0, 6.0, samples)
    diag = 10.0 ** np.linspace(-6.0, 6.0, 13)
    r1 = np.concatenate((r1, diag))
    r2 = np.concatenate((r2, diag))

    s1, s2, s12 = cw.sigma(r1), cw.sigma(r2), cw.sigma(r1 + r2)
    rs1 = r1 * cw.sigma_prime(r1)

    scale1 = np.maximum(np.abs(s1), np.abs(rs1)).clip(min=1e-300)
    d_lower = (rs1 - s1) / scale1
    d_upper = (2.0 * s1 - rs1) / scale1

    excess = s12 - s1 - s2
    chord = 2.0 * (r1 * s2 + r2 * s1) / (r1 + r2)
    scale2 = np.maximum.reduce([np.abs(s12), np.abs(s1), np.abs(s2), np.abs(chord)]).clip(min=1e-300)
    sup_add = excess / scale2
    chord_gap = (chord - excess) / scale2

    for label, margin in (("s(r) <= r s'(r)", d_lower), ("r s'(r) <= 2 s(r)", d_upper),
                          ("superadditivity", sup_add), ("chord bound", chord_gap)):
        bad = margin < -rel_slack
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PropertyViolationError(
                f"{label} violated at r1={r1[k]!r}, r2={r2[k]!r} (relative margin {margin[k]:.3e})",
                witness=(float(r1[k]), float(r2[k])),
            )
    return ConvexCheckReport(
        samples=r1.size,
        worst_derivative_lower=float(d_lower.min()),
        worst_derivative_upper=float(d_upper.min()),
        worst_superadditive=float(sup_add.min()),
        worst_chord=float(chord_gap.min()),
    )


def _first_below(tail_profile, cutoffs, level):
    """Smallest index ``i`` with ``tail_profile(cutoffs[i]) <= level`` (profile nonincreasing)."""
    lo, hi = 0, cutoffs.size - 1
    if tail_profile(float(cutoffs[hi])) > level:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_profile(float(cutoffs[mid])) <= level:
            hi = mid
        else:
            lo = mid + 1
    return lo


def build_dlvp_weight(tail_profile, target: str = "first_moment", cutoffs=None,
                      levels: int = DLVP_LEVELS) -> ConvexWeight:
    """Construct a superlinear convex weight adapted to a decaying tail.

    ``tail_profile(a)`` is the first moment of the data beyond ``a``. The
    thresholds ``a_k`` are the smallest resolvable cutoffs with
    ``tail_profile(a_k) <= 2**-k``; a step derivative equal to ``k + 1`` on
    ``[a_k, a_{k+1})`` would give a finite weighted moment. The returned
    derivative interpolates the level ``k`` at knots ``b_k >= a_k`` whose
    spacing never shrinks, so it is concave and never exceeds the step
    function. After the last threshold the knots double, which keeps
    ``sigma(r)/r`` unbounded.

    ``cutoffs`` is the sorted set of resolvable cutoffs (for instance grid
    edges); by default ``[0, 1000]`` in steps of ``1e-3``.
    """
    if target != "first_moment":
        raise InvalidArgumentError(f"unsupported target {target!r}")
    if cutoffs is None:
        cutoffs = np.linspace(0.0, 1000.0, 1_000_001)
    cutoffs = np.asarray(getattr(cutoffs, "edges", cutoffs), dtype=float)
    if cutoffs.ndim != 1 or cutoffs.size < 2 or not np.all(np.diff(cutoffs) > 0.0):
        raise InvalidArgumentError("cutoffs must be a strictly increasing 1-d array")

    thresholds = [0.0]
    for k in range(1, levels + 1):
        idx = _first_below(tail_profile, cutoffs, 2.0 ** -k)
        if idx is None:
            raise TruncationTooSmallError(
                f"tail profile stays above 2**-{k} up to the largest cutoff {cutoffs[-1]:g}"
            )
        thresholds.append(float(cutoffs[idx]))
    a = np.array(thresholds)

    first = a[1] if a[1] > 0.0 else float(cutoffs[cutoffs > 0.0][0])
    knots = [0.0, first]
    for k in range(2, levels + 1):
        knots.append(max(a[k], 2.0 * knots[-1] - knots[-2]))
    while knots[-1] < _KNOT_HORIZON:
        knots.append(2.0 * knots[-1])
    knots = np.array(knots)
    tail_sum = float(sum((k + 1) * tail_profile(float(a[k])) for k in range(levels + 1)))
    return ConvexWeight(
        "piecewise_linear_derivative",
        knots=knots,
        levels=np.arange(knots.size, dtype=float),
        thresholds=a,
        tail_sum=tail_sum,
    )
