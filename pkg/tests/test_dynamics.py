import math

import numpy as np
import pytest

from selftrig.dynamics import (
    f_omega,
    make_robot,
    make_shift1d,
    numeric_flow,
    sample_endpoint,
    simulate_segment,
    simulate_signal,
    sup_distance,
)
from selftrig.quantize import ControlSignal

PI = math.pi


def sig(omegas, tau=0.5):
    return ControlSignal([(w,) for w in omegas], tau)


# ---------------------------------------------------------------- f_omega

def test_f_omega_zero_rate():
    assert f_omega(0.0, 5.0) == 0.0


def test_f_omega_below_half_turn():
    assert f_omega(PI / 2, 0.5) == 0.0


def test_f_omega_one_half_turn():
    expected = 2.0 * (PI - 2.0) / PI
    assert f_omega(PI / 2, 2.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.72676, abs=1e-5)


def test_f_omega_sign_symmetric():
    # credit for a clockwise turn equals the counter-clockwise credit
    for t in (0.3, 1.0, 2.0, 3.7):
        assert f_omega(-PI / 2, t) == f_omega(PI / 2, t)


def test_f_omega_nonneg_nondecreasing():
    for w in (-PI / 2, -0.7, 0.2, PI / 2):
        prev = -1.0
        for t in np.linspace(0.0, 8.0, 161):
            val = f_omega(w, t)
            assert val >= 0.0
            assert val >= prev - 1e-12
            prev = val


# ---------------------------------------------------------------- beta / alpha

def test_beta_zero_distance_uncorrected():
    robot = make_robot(paper_beta=True)
    assert robot.beta_fwd(sig([0.0]), 0.0, 0.5) == 0.0


def test_beta_closed_form_value():
    robot = make_robot(paper_beta=True)
    got = robot.beta_fwd(sig([0.0]), 1.0, 0.5)
    assert got == pytest.approx(1.0 + 5.25 * math.sin(0.5) * 0.5, abs=1e-12)
    assert got == pytest.approx(2.25850, abs=1e-4)


def test_beta_correction_term_only():
    robot = make_robot()  # correction on by default
    assert robot.beta_fwd(sig([0.0]), 0.0, 0.5) == pytest.approx(0.125, abs=1e-12)


def test_beta_rejects_time_past_signal_end():
    robot = make_robot()
    with pytest.raises(ValueError):
        robot.beta_fwd(sig([0.0]), 1.0, 0.6)


def test_beta_linear_branch_above_pi():
    robot = make_robot(paper_beta=True)
    d = 3.5  # > pi: no sin factor
    got = robot.beta_fwd(sig([0.0]), d, 0.5)
    assert got == pytest.approx(d + 5.25 * 0.5, abs=1e-12)


def test_beta_uses_rotation_savings_per_segment():
    robot = make_robot(paper_beta=True)
    # two full-rate segments of 2s each: one half-turn completed per segment
    s = sig([PI / 2, PI / 2], tau=2.0)
    save = 2.0 * (2.0 * (PI - 2.0) / PI)
    got = robot.beta_fwd(s, 1.0, 4.0)
    assert got == pytest.approx(1.0 + 5.25 * math.sin(0.5) * (4.0 - save), abs=1e-12)


def test_alpha_values():
    robot = make_robot()
    assert robot.alpha_fwd(sig([0.0]), 0.0, 0.0) == 0.0
    assert robot.alpha_fwd(sig([0.0]), 1.0, 0.5) == pytest.approx(2.3125, abs=1e-12)
    assert robot.alpha_fwd(sig([0.0]), 2.0, 0.5) == pytest.approx(3.3125, abs=1e-12)


def test_backward_bounds_mirror_forward():
    robot = make_robot()
    for d in (0.0, 0.5, 1.0, 2.0, 4.0):
        for t in (0.0, 0.25, 0.5):
            s = sig([PI / 2])
            assert robot.beta_bwd(s, d, t) == robot.beta_fwd(s, d, t)
            assert robot.alpha_bwd(s, d, t) == robot.alpha_fwd(s, d, t)


@pytest.mark.parametrize("maker", [make_robot, make_shift1d])
def test_bounds_monotone_in_d(maker):
    sys = maker()
    s = ControlSignal([tuple(0.3 for _ in sys.input_lo)], 0.5)
    grid = np.linspace(0.0, 6.0, 25)
    for t in (0.1, 0.5):
        bv = [sys.beta_fwd(s, d, t) for d in grid]
        av = [sys.alpha_fwd(s, d, t) for d in grid]
        assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(bv, bv[1:]))
        assert all(a2 >= a1 - 1e-12 for a1, a2 in zip(av, av[1:]))
        # alpha dominates the initial distance
        assert all(a >= d - 1e-12 for a, d in zip(av, grid))


# ---------------------------------------------------------------- simulation

def test_straight_line_segment():
    robot = make_robot()
    assert simulate_segment(robot, (0, 0, 0), 0.0, 0.0, 0.5) == pytest.approx(
        (1.25, 0.0, 0.0))


def test_arc_segment():
    robot = make_robot()
    got = simulate_segment(robot, (0, 0, 0), PI / 2, 0.0, 1.0)
    assert got == pytest.approx((5.0 / PI, 5.0 / PI, PI / 2), abs=1e-12)


def test_disturbed_straight_segment():
    robot = make_robot()
    got = simulate_segment(robot, (0, 0, 0), 0.0, 0.05, 1.0)
    assert got == pytest.approx((2.625, 0.0, 0.0))


def test_segment_rejects_large_disturbance():
    robot = make_robot()
    with pytest.raises(ValueError):
        simulate_segment(robot, (0, 0, 0), 0.0, 0.2, 0.5)


def test_back_flow_inverts_flow():
    robot = make_robot()
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 2 * PI))
        w = rng.uniform(-PI / 2, PI / 2)
        lam = rng.uniform(-0.05, 0.05)
        fwd = robot.flow(x, (w,), lam, 0.5)
        back = robot.back_flow(fwd, (w,), lam, 0.5)
        assert sup_distance(back, x, robot.wrap, robot.periods) < 1e-10


def test_batch_flow_matches_scalar():
    robot = make_robot()
    rng = np.random.default_rng(3)
    X = np.column_stack([rng.uniform(-5, 5, 40), rng.uniform(-5, 5, 40),
                         rng.uniform(0, 2 * PI, 40)])
    for w in (0.0, PI / 2, -0.3):
        got = robot.flow_batch(X, (w,), 0.02, 0.5)
        for i in range(X.shape[0]):
            ref = robot.flow(tuple(X[i]), (w,), 0.02, 0.5)
            assert np.allclose(got[i], ref, atol=1e-12)
        gotb = robot.back_flow_batch(got, (w,), 0.02, 0.5)
        # wrapped axis may differ by a full period after the round trip
        assert np.allclose(gotb[:, :2], X[:, :2], atol=1e-10)
        assert np.allclose(np.minimum((gotb[:, 2] - X[:, 2]) % (2 * PI),
                                      (X[:, 2] - gotb[:, 2]) % (2 * PI)),
                           0.0, atol=1e-10)


def test_arc_matches_rk4():
    robot = make_robot()

    def field(x, u, lam):
        return np.array([2.5 * (1 + lam) * math.cos(x[2]),
                         2.5 * (1 + lam) * math.sin(x[2]),
                         u[0]])

    rk4 = numeric_flow(field, robot.wrap, robot.periods, h=0.01)
    rng = np.random.default_rng(11)
    for _ in range(25):
        x = (rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0, 2 * PI))
        w = rng.uniform(-PI / 2, PI / 2)
        lam = rng.uniform(-0.05, 0.05)
        exact = robot.flow(x, (w,), lam, 0.5)
        approx = rk4(x, (w,), lam, 0.5)
        assert sup_distance(exact, approx, robot.wrap, robot.periods) < 1e-8


def test_theta_distance_is_circular():
    robot = make_robot()
    assert robot.distance((0, 0, 0.1), (0, 0, 2 * PI - 0.1)) == pytest.approx(0.2)


# ---------------------------------------------------------------- sampling

def test_sample_endpoint_deterministic():
    robot = make_robot()
    s = sig([0.3, -0.2])
    a = sample_endpoint(robot, (1, 1, 0.5), s, seed=42)
    b = sample_endpoint(robot, (1, 1, 0.5), s, seed=42)
    assert a == b


def test_sample_endpoint_no_disturbance():
    robot = make_robot(lambda_bar=0.0)
    got = sample_endpoint(robot, (0, 0, 0), sig([0.0]), seed=5)
    assert got == pytest.approx((1.25, 0.0, 0.0))


def test_sample_endpoint_spread_bounded():
    robot = make_robot()
    s = sig([0.4, -0.4])
    nominal = simulate_signal(robot, (0, 0, 1.0), s, [0.0, 0.0])
    bound = 2 * 2.5 * 0.05 * s.length
    for seed in range(400):
        pt = sample_endpoint(robot, (0, 0, 1.0), s, seed=seed)
        assert robot.distance(pt, nominal) <= bound + 1e-9


# ---------------------------------------------------------------- soundness

def _random_signal(rng, sys, max_segments=2, tau=0.5):
    k = rng.integers(1, max_segments + 1)
    inputs = [tuple(rng.uniform(lo, hi) for lo, hi in
                    zip(sys.input_lo, sys.input_hi)) for _ in range(k)]
    return ControlSignal(inputs, tau)


def _random_state(rng, sys, margin=0.0):
    out = []
    for i in range(sys.n):
        lo, hi = sys.state_lo[i], sys.state_hi[i]
        if not sys.wrap[i]:
            lo, hi = lo + margin, hi - margin
        out.append(rng.uniform(lo, hi))
    return tuple(out)


def run_growth_bound_trial(sys, rng):
    """One growth-bound soundness check; returns violation descriptions."""
    s = _random_signal(rng, sys)
    x1 = _random_state(rng, sys)
    x2 = _random_state(rng, sys)
    d0 = sys.distance(x1, x2)
    lam1 = [rng.uniform(-sys.lambda_bar, sys.lambda_bar) for _ in s.inputs]
    lam2 = [rng.uniform(-sys.lambda_bar, sys.lambda_bar) for _ in s.inputs]
    bad = []
    y1, y2 = x1, x2
    for j, u in enumerate(s.inputs):
        y1 = simulate_segment(sys, y1, u, lam1[j], s.tau)
        y2 = simulate_segment(sys, y2, u, lam2[j], s.tau)
        t = (j + 1) * s.tau
        dt_pair = sys.distance(y1, y2)
        beta = sys.beta_fwd(s, d0, t)
        if dt_pair > beta + 1e-6:
            bad.append(("beta", s, x1, x2, t, dt_pair, beta))
        alpha = sys.alpha_fwd(s, d0, t)
        da = sys.distance(x1, y2)
        if da > alpha + 1e-6:
            bad.append(("alpha", s, x1, x2, t, da, alpha))
    return bad


@pytest.mark.parametrize("maker", [make_robot, make_shift1d])
def test_growth_bounds_sound_monte_carlo(maker):
    sys = maker()
    rng = np.random.default_rng(2024)
    violations = []
    for _ in range(1500):
        violations.extend(run_growth_bound_trial(sys, rng))
    assert violations == [], violations[:3]


def test_uncorrected_beta_is_violated_by_disturbance():
    # beta(0, t) = 0 without the correction term, but two runs from one state
    # with opposite speed errors separate; the bound misses that.
    robot = make_robot(paper_beta=True)
    s = sig([0.0])
    x = (0.0, 0.0, 0.0)
    y1 = simulate_signal(robot, x, s, [0.05])
    y2 = simulate_signal(robot, x, s, [-0.05])
    gap = robot.distance(y1, y2)
    assert gap > robot.beta_fwd(s, 0.0, 0.5) + 1e-6
    # the corrected bound covers the same pair
    fixed = make_robot()
    assert gap <= fixed.beta_fwd(s, 0.0, 0.5) + 1e-12
