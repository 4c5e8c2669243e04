"""The self-verification suite behind ``cfe verify``.

Every check runs on the reference configurations and yields a
:class:`CheckResult`; a check that raises is recorded as failed with the
error text rather than aborting the suite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .config import parse_config
from .diagnostics import (
    IDENTITY,
    INDICATOR_UNIT,
    ONE,
    XLOG1P,
    build_dlvp_weight,
    check_convex_inequalities,
    check_derivative_bound,
    check_sigma1_bound,
    check_V_bound,
    weak_form_residual,
)
from .errors import CFEError, ConfigError
from .integrator import run
from .oracles import compare, get_oracle
from .reference import CONSERVATIVE_KERNELS, conservative_config, reference_config

__all__ = ["CheckResult", "CHECKS", "run_checks", "load_cases", "format_table"]

LEDGER_TOL = 1e-6
DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


class _Runs:
    """Lazily computed trajectories keyed by reference name."""

    def __init__(self):
        self._cache = {}

    def get(self, name, raw=None):
        if name not in self._cache:
            cfg = parse_config(raw if raw is not None else reference_config(name))
            traj = run(cfg.initial_for(cfg.grid), cfg.grid, cfg.kernel, cfg.scheme, cfg.step, cfg.T,
                       initial_name=cfg.initial_name)
            self._cache[name] = (cfg, traj)
        return self._cache[name]

    def conservative(self, kernel_name):
        return self.get(f"conservative:{kernel_name}", conservative_config(kernel_name))


def _limits(**tols):
    return tols


def _oracle_check(case, tols, t_limit=None):
    def check(runs):
        cfg, traj = runs.get(case)
        norms = tuple(f"m{k}" for k in (0, 1, 2) if f"m{k}" in tols)
        rep = compare(traj, get_oracle(case), norms=norms, t_limit=t_limit)
        errs = {"m0": rep.m0_rel_err, "m1": rep.m1_rel_err, "m2": rep.m2_rel_err}
        bad = [k for k, tol in tols.items() if not errs[k] < tol]
        text = ", ".join(f"{k} err {errs[k]:.2e} (tol {tol:g})" for k, tol in tols.items())
        return not bad and rep.times_compared > 0, f"{text} over {rep.times_compared} samples"

    return check


def _frozen(runs):
    cfg, traj = runs.get("frozen")
    same = all(np.array_equal(s.values, traj.initial.values) for _, s in traj.samples)
    rep = compare(traj, get_oracle("frozen"), norms=("m0", "m1"))
    ok = same and rep.m0_rel_err < 1e-3 and rep.m1_rel_err < 1e-3
    return ok, f"state unchanged: {same}; m0 err {rep.m0_rel_err:.1e}, m1 err {rep.m1_rel_err:.1e}"


def _convex_xlog1p(runs):
    rep = check_convex_inequalities(XLOG1P, samples=10_000)
    worst = min(rep.worst_derivative_lower, rep.worst_derivative_upper, rep.worst_superadditive, rep.worst_chord)
    return True, f"{rep.samples} samples, smallest relative margin {worst:.2e}"


def _convex_dlvp(runs):
    tails = {
        "exp": lambda a: (1.0 + a) * math.exp(-a),
        "power": lambda a: (1.0 + a) ** -3,
    }
    details = []
    for name, tail in tails.items():
        cw = build_dlvp_weight(tail)
        problems = cw.invariant_violations()
        if problems:
            return False, f"{name}: {problems[0]}"
        check_convex_inequalities(cw, samples=10_000)
        details.append(f"{name} ok (sum {cw.tail_sum:.3g})")
    return True, "; ".join(details)


def _v_bound(runs):
    names = ["constant_coag", "binary_frag", "additive_frag"]
    worst = 0.0
    for name in names:
        cfg, traj = runs.get(name)
        rep = check_V_bound(traj, cfg.kernel)
        worst = max(worst, rep.observed / rep.bound)
    for kname in CONSERVATIVE_KERNELS:
        cfg, traj = runs.conservative(kname)
        rep = check_V_bound(traj, cfg.kernel)
        worst = max(worst, rep.observed / rep.bound)
    return True, f"{len(names) + len(CONSERVATIVE_KERNELS)} runs, worst observed/bound {worst:.3f}"


def _derivative_bound(runs):
    cfg, traj = runs.get("additive_frag")
    rep = check_derivative_bound(traj, cfg.kernel, Rwin=10.0)
    return True, f"observed {rep.observed:.3g} <= C4 {rep.bound:.3g}"


def _sigma1_bound(runs):
    cfg, traj = runs.get("additive_frag")
    rep = check_sigma1_bound(traj, cfg.kernel)
    return True, f"observed {rep.observed:.3g} <= {rep.bound:.3g}"


def _ledger_identity(runs):
    cfg, traj = runs.get("additive_frag")
    led = traj.ledger
    worst = float(np.max(np.abs(led.balance_residual()))) / led.M1[0]
    return worst <= LEDGER_TOL, f"max |M1(0) - M1(t) - loss(t)| / M1(0) = {worst:.2e} (tol {LEDGER_TOL:g})"


def _conservative_drift(runs):
    worst, worst_clip, who = 0.0, 0.0, ""
    for kname in CONSERVATIVE_KERNELS:
        cfg, traj = runs.conservative(kname)
        led = traj.ledger
        drift = abs(led.M1[-1] - led.M1[0]) / led.M1[0]
        if drift >= worst:
            worst, who = drift, kname
        worst_clip = max(worst_clip, led.clipped_mass[-1])
    ok = worst <= DRIFT_TOL and worst_clip == 0.0
    return ok, f"worst drift {worst:.2e} ({who}), clipped mass {worst_clip:g}"


def _weak_residual(runs):
    cfg, traj = runs.get("additive_frag")
    dt = cfg.step.dt
    tol = 5.0 * (dt * dt + float(np.mean(cfg.grid.widths)))
    res = {tf.name: weak_form_residual(traj, cfg.kernel, tf, cfg.T) for tf in (ONE, IDENTITY, INDICATOR_UNIT)}
    text = ", ".join(f"{k} {v:.1e}" for k, v in res.items())
    return max(res.values()) <= tol, f"{text} (tol {tol:.3g})"


CHECKS: dict[str, Callable] = {
    "oracle:constant_coag": _oracle_check("constant_coag", _limits(m0=0.01, m1=0.005)),
    "oracle:binary_frag": _oracle_check("binary_frag", _limits(m0=0.01, m1=0.005)),
    "oracle:product_m2": _oracle_check("product_m2", _limits(m2=0.05), t_limit=0.4),
    "oracle:frozen": _frozen,
    "convex:xlog1p": _convex_xlog1p,
    "convex:dlvp": _convex_dlvp,
    "bound:V": _v_bound,
    "bound:derivative": _derivative_bound,
    "bound:sigma1": _sigma1_bound,
    "ledger:identity": _ledger_identity,
    "ledger:conservative_drift": _conservative_drift,
    "weak:residual": _weak_residual,
}


def load_cases(path) -> list:
    """Check names selected by a cases file ``{"checks": [...]}``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read cases file {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    names = raw.get("checks", list(CHECKS)) if isinstance(raw, dict) else None
    if not isinstance(names, list) or not names:
        raise ConfigError(f"{path}: expected an object with a non-empty 'checks' list")
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"{path}: unknown checks {unknown}; known: {sorted(CHECKS)}")
    return names


def run_checks(names=None) -> list:
    runs = _Runs()
    results = []
    for name in names or list(CHECKS):
        try:
            ok, detail = CHECKS[name](runs)
        except CFEError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
