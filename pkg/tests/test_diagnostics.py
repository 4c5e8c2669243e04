import math

import numpy as np
import pytest
from scipy import integrate

from cfe.diagnostics import (
    IDENTITY,
    INDICATOR_UNIT,
    ONE,
    XLOG1P,
    ConvexWeight,
    MassLedger,
    build_dlvp_weight,
    c4_constant,
    check_convex_inequalities,
    check_derivative_bound,
    check_sigma1_bound,
    check_V_bound,
    fragmentation_weak_forms,
    moment,
    sigma2_density_sup,
    tail_mass,
    test_function,
    v_constant,
    weak_form_residual,
    weak_form_terms,
)
from cfe.errors import InvalidArgumentError, PropertyViolationError, TruncationTooSmallError
from cfe.grid import make_geometric, make_uniform
from cfe.integrator import StepControl, exp_decay, project_initial, run
from cfe.kernels import combine, make_builtin
from cfe.schemes import DensityState

GRID = make_geometric(100, 400)
EXP_STATE = DensityState(GRID, project_initial(exp_decay(1.0), GRID))
CTL = StepControl("rk4", 0.01, 1e-8, "reject_and_halve", 0.1)


# -- moments and ledger ------------------------------------------------------

def test_moments_of_exponential():
    assert moment(EXP_STATE, 0) == pytest.approx(1.0, rel=5e-3)
    assert moment(EXP_STATE, 1) == pytest.approx(1.0, rel=5e-3)
    assert moment(EXP_STATE, 2) == pytest.approx(2.0, rel=1e-2)


def test_moments_of_zero_state():
    s = DensityState(GRID, np.zeros(GRID.cell_count))
    assert [moment(s, p) for p in (0, 1, 2, 0.5)] == [0.0] * 4


def test_tail_mass():
    assert tail_mass(EXP_STATE, 0.0) == pytest.approx(moment(EXP_STATE, 1))
    assert tail_mass(EXP_STATE, GRID.R) == 0.0
    assert tail_mass(EXP_STATE, 5.0) == pytest.approx(6.0 * math.exp(-5.0), rel=2e-2)
    with pytest.raises(InvalidArgumentError):
        tail_mass(EXP_STATE, -1.0)


def test_ledger_balance_residual():
    led = MassLedger()
    led.record(0.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    led.record(1.0, 0.8, 0.75, 0.25, 0.0, 0.0)
    led.record(2.0, 0.7, 0.8, 0.25, 0.05, 0.0)
    np.testing.assert_allclose(led.balance_residual(), [0.0, 0.0, 0.0], atol=1e-15)
    assert len(led) == 3
    assert list(led.rows())[1] == (1.0, 0.8, 0.75, 0.25, 0.0, 0.0)


# -- convex weights ----------------------------------------------------------

def test_xlog1p_chain_at_one():
    s = float(XLOG1P.sigma(1.0))
    rs = float(XLOG1P.sigma_prime(1.0))
    assert s == pytest.approx(math.log(2.0))
    assert rs == pytest.approx(math.log(2.0) + 0.5)
    assert s <= rs <= 2 * s


def test_xlog1p_passes_inequalities():
    rep = check_convex_inequalities(XLOG1P, samples=10_000)
    assert rep.samples >= 10_000
    assert rep.worst_superadditive >= -1e-9


def test_linear_weight_passes_but_is_not_superlinear():
    lin = ConvexWeight("piecewise_linear_derivative", knots=[0.0, 1.0], levels=[1.0, 1.0])
    check_convex_inequalities(lin, samples=1000)
    assert not lin.is_superlinear()
    assert any("sigma(r)/r" in p for p in lin.invariant_violations())


def test_convex_derivative_is_caught():
    # sigma' flat then steep: r sigma'(r) overshoots 2 sigma(r)
    bad = ConvexWeight("piecewise_linear_derivative", knots=[0.0, 1.0, 2.0], levels=[0.0, 0.0, 10.0])
    assert "sigma' is not concave" in bad.invariant_violations()
    with pytest.raises(PropertyViolationError) as info:
        check_convex_inequalities(bad, samples=2000)
    assert info.value.witness is not None


def test_dlvp_for_exponential_tail():
    tail = lambda a: (1.0 + a) * math.exp(-a)
    cw = build_dlvp_weight(tail)
    assert cw.invariant_violations() == []
    # thresholds are the first cutoffs where the tail drops below 2**-k
    for k in (1, 5, 10):
        a_k = cw.thresholds[k]
        assert tail(a_k) <= 2.0 ** -k < tail(a_k - 1e-3)
    check_convex_inequalities(cw, samples=10_000)
    sig_moment = integrate.quad(lambda y: float(cw.sigma(y)) * math.exp(-y), 0.0, np.inf, limit=200)[0]
    assert math.isfinite(sig_moment)


def test_dlvp_with_tail_vanishing_early():
    cw = build_dlvp_weight(lambda a: 1.0 if a < 2.0 else 0.0)
    assert np.all(cw.thresholds[1:] == 2.0)
    assert cw.is_superlinear()
    check_convex_inequalities(cw, samples=5000)


def test_dlvp_needs_decay():
    with pytest.raises(TruncationTooSmallError):
        build_dlvp_weight(lambda a: 1.0)


def test_dlvp_accepts_grid_cutoffs():
    cw = build_dlvp_weight(lambda a: (1.0 + a) * math.exp(-a), cutoffs=GRID)
    assert set(cw.thresholds[1:]) <= set(GRID.edges)


# -- a priori bounds ---------------------------------------------------------

def test_v_constant_formula():
    values = EXP_STATE.values
    V = v_constant(GRID, values, 2.0, 5.0)
    assert V == pytest.approx((1 - math.exp(-1)) + 32.0, rel=5e-3)


@pytest.fixture(scope="module")
def frag_traj():
    return run(exp_decay(1.0), GRID, make_builtin("constant_frag", c=2), "conservative", CTL, 1.0)


def test_v_bound_pure_fragmentation(frag_traj):
    rep = check_V_bound(frag_traj, make_builtin("constant_frag", c=2))
    assert rep.observed == pytest.approx(3.0, rel=1e-2)
    assert rep.bound == pytest.approx(8.632, rel=1e-3)
    assert rep.passed and rep.headroom > 0


def test_v_bound_zero_kernel():
    traj = run(exp_decay(1.0), GRID, make_builtin("zero"), "conservative", CTL, 3.0)
    rep = check_V_bound(traj, make_builtin("zero"))
    assert rep.observed == pytest.approx(2.0, rel=1e-2)


def test_v_bound_violation_is_reported(frag_traj):
    cheat = make_builtin("constant_frag", c=2).with_constants(k2=0.0)
    # the declared k2 = 0 underestimates growth; the observed sum exceeds V
    with pytest.raises(PropertyViolationError):
        check_V_bound(frag_traj, cheat)


def test_bounds_refuse_unbounded_kernel(frag_traj):
    with pytest.raises(InvalidArgumentError):
        check_derivative_bound(frag_traj, make_builtin("multiplicative"), Rwin=10.0)


def test_derivative_bound_zero_kernel():
    traj = run(exp_decay(1.0), GRID, make_builtin("zero"), "conservative", CTL, 1.0)
    assert check_derivative_bound(traj, make_builtin("zero"), Rwin=GRID.R).observed == 0.0


def test_derivative_bound_constant_coagulation():
    kp = make_builtin("constant", c=1)
    ctl = StepControl("rk4", 0.001, 1e-8, "reject_and_halve", 0.001)
    traj = run(exp_decay(1.0), GRID, kp, "conservative", ctl, 0.002)
    rep = check_derivative_bound(traj, kp, Rwin=GRID.R)
    # with omega = 1 the window integral is M0 and |dM0/dt| = M0^2 / 2 at t = 0
    led = traj.ledger
    dm0 = (led.M0[1] - led.M0[0]) / (led.times[1] - led.times[0])
    assert dm0 == pytest.approx(-0.5, rel=2e-2)
    assert rep.observed >= abs(dm0)
    V = v_constant(GRID, traj.initial.values, 0.0, traj.final_time)
    assert rep.bound == pytest.approx(c4_constant(1.0, 0.0, GRID.R, V))


def test_sigma1_bound(frag_traj):
    kp = combine(make_builtin("constant", c=1), make_builtin("constant_frag", c=2))
    traj = run(exp_decay(1.0), GRID, kp, "conservative", CTL, 0.5)
    rep = check_sigma1_bound(traj, kp)
    assert rep.observed <= rep.bound
    assert sigma2_density_sup(traj) >= 0.0


# -- weak form ---------------------------------------------------------------

def test_test_functions():
    assert test_function("identity") is IDENTITY
    with pytest.raises(InvalidArgumentError):
        test_function("cosine")
    np.testing.assert_array_equal(INDICATOR_UNIT(np.array([0.0, 0.5, 1.0])), [0.0, 1.0, 0.0])
    assert IDENTITY.omega_tilde(2.0, 3.0) == 0.0


def test_k_omega_indicator():
    y = np.array([0.1, 0.4, 0.9])
    np.testing.assert_allclose(INDICATOR_UNIT.k_omega(y, make_builtin("constant_frag", c=2).frag), 2 * y)
    assert not np.any(IDENTITY.k_omega(y, make_builtin("constant_frag", c=2).frag))


@pytest.fixture(scope="module")
def mixed_traj():
    kp = combine(make_builtin("additive"), make_builtin("constant_frag", c=1))
    g = make_geometric(50, 200)
    ctl = StepControl("rk4", 0.01, 1e-8, "reject_and_halve", 0.05)
    return kp, run(exp_decay(1.0), g, kp, "noncons_coag", ctl, 1.0)


def test_weak_form_at_zero(mixed_traj):
    kp, traj = mixed_traj
    assert weak_form_terms(traj, kp, ONE, 0.0) == (0.0, 0.0)


def test_weak_form_identity_matches_ledger(mixed_traj):
    kp, traj = mixed_traj
    lhs, rhs = weak_form_terms(traj, kp, IDENTITY, 1.0)
    led = traj.ledger
    assert lhs == pytest.approx(led.M1[-1] - led.M1[0], abs=1e-14)
    assert rhs == pytest.approx(-led.accumulated_loss[-1], rel=1e-2, abs=1e-9)


def test_weak_form_residuals_small(mixed_traj):
    kp, traj = mixed_traj
    for tf in (ONE, IDENTITY, INDICATOR_UNIT):
        assert weak_form_residual(traj, kp, tf, 1.0) < 0.05


def test_fragmentation_forms_agree():
    g = make_uniform(40, 800)
    s = DensityState(g, project_initial(exp_decay(1.0), g))
    k_form, pair_form = fragmentation_weak_forms(s, make_builtin("constant_frag", c=2), INDICATOR_UNIT)
    assert k_form == pytest.approx(pair_form, rel=2e-2)
    k_form, pair_form = fragmentation_weak_forms(s, make_builtin("constant_frag", c=2), ONE)
    assert k_form == pytest.approx(pair_form, rel=2e-2)
