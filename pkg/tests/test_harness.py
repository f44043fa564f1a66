"""Closed-loop runs, metrics identities, and bounded-horizon verdicts."""

import math

import numpy as np
import pytest

from selftrig.abstraction import BoxPred
from selftrig.config import parse_config
from selftrig.dynamics import make_shift1d
from selftrig.errors import ConfigError
from selftrig.harness import (ClosedLoopRun, check_bounded,
                              check_rate_identity, closed_loop_run, metrics)
from selftrig.synthesis import synthesize

SHIFT = """\
[system]
kind = shift1d
x_range = 3
u_max = 1
lambda_bar = 0.0
init = 0

[quantization]
eta = 0.5
mu = 1.0
tau = 0.5
ell_min = 0.5
ell_max = 1.0

[predicates]
near = box 0 -2.6 2.6
far = box 0 2.0 2.6

[spec]
formula = GF near

[threshold]
nu = 3/4

[simulation]
steps = 40
seed = 7
h = 0.05
"""

_CACHE = {}


def shift_setup():
    if not _CACHE:
        cfg = parse_config(SHIFT)
        result = synthesize(cfg.problem())
        assert result.success
        _CACHE["cfg"] = cfg
        _CACHE["ctrl"] = result.controller
    return _CACHE["cfg"], _CACHE["ctrl"]


def fake_run(xs, seg_counts, tau=1.0, lo=-10.0, hi=10.0):
    """One-dimensional run with one dense sample per step endpoint."""
    n = len(seg_counts)
    assert len(xs) == n + 1
    times = [0.0]
    for c in seg_counts:
        times.append(times[-1] + c * tau)
    sample_t = [0.0]
    sample_x = [(float(xs[0]),)]
    sample_step = [0]
    for k in range(n):
        sample_t.append(times[k + 1])
        sample_x.append((float(xs[k + 1]),))
        sample_step.append(k)
    run = ClosedLoopRun(
        seed=0, h=tau, tau=tau, x0=(float(xs[0]),),
        state_lo=(lo,), state_hi=(hi,), wrap=(False,),
        states=[(float(v),) for v in xs], times=times,
        cells=[0] * (n + 1), signal_ids=[0] * n,
        seg_counts=list(seg_counts), lemma_ok=[True] * n,
        sample_t=np.asarray(sample_t), sample_x=np.asarray(sample_x),
        sample_step=np.asarray(sample_step, dtype=np.int64),
        sample_sig=np.zeros(n + 1, dtype=np.int64),
        sample_u=[(0.0,)] * (n + 1))
    run.check_invariants()
    return run


BOX = BoxPred("p", {0: (-1.0, 1.0)})


# ---------------------------------------------------------------------------
# metrics

def test_metrics_uniform_lengths():
    run = fake_run([0] * 7, [2] * 6, tau=0.5)
    rec = metrics(run)
    assert rec["steps"] == 6
    assert rec["elapsed"] == 6.0
    assert rec["average_signal_length"] == 1.0
    assert rec["trigger_rate"] == 1.0
    assert check_rate_identity(rec)


def test_metrics_alternating_lengths():
    run = fake_run([0] * 5, [1, 2, 1, 2], tau=0.5)
    rec = metrics(run)
    assert rec["average_signal_length"] == 0.75
    assert rec["elapsed"] == 3.0
    assert math.isclose(rec["trigger_rate"], 4.0 / 3.0, rel_tol=1e-15)
    assert check_rate_identity(rec)
    assert np.allclose(rec["running_average"], [0.5, 0.75, 2.0 / 3.0, 0.75])


def test_metrics_predicate_gaps():
    run = fake_run([0, 5, 0, 5, 0], [1] * 4, tau=1.0)
    rec = metrics(run, [BOX])
    # hits at t = 0, 2, 4 -> widest gap 2.0
    assert rec["n_visits"]["p"] == 3
    assert rec["max_gap"]["p"] == 2.0


def test_metrics_rejects_empty_run():
    run = fake_run([0, 0], [1], tau=1.0)
    run.signal_ids = []
    run.seg_counts = []
    with pytest.raises(ConfigError):
        metrics(run)


# ---------------------------------------------------------------------------
# bounded-horizon checking on crafted runs

def test_check_recurrence_window():
    # step k's endpoint is xs[k+1]: hits at steps 0, 1, 4, a two-step
    # hitless streak at steps 2 and 3
    run = fake_run([0, 5, 0, 5, 5, 0], [1] * 5, tau=1.0)
    good = check_bounded(run, "GF p", [BOX], grace=3, burn_in=0)
    assert good["pass"]
    assert good["clauses"][0]["max_hitless_streak"] == 2
    bad = check_bounded(run, "GF p", [BOX], grace=2, burn_in=0)
    assert not bad["pass"]
    assert bad["clauses"][0]["first_violating_window"] == 2


def test_check_recurrence_needs_a_hit():
    run = fake_run([5, 5, 5, 5], [1] * 3, tau=1.0)
    v = check_bounded(run, "GF p", [BOX], grace=50, burn_in=0)
    assert not v["pass"]
    assert v["clauses"][0]["hit_steps"] == 0


def test_check_eventually_and_always():
    run = fake_run([0, 5, 0, 5, 5, 0], [1] * 5, tau=1.0)
    f = check_bounded(run, "F p", [BOX], grace=2, burn_in=0)
    assert f["pass"] and f["clauses"][0]["first_hit_time"] == 0.0
    g = check_bounded(run, "G p", [BOX], grace=2, burn_in=0)
    assert not g["pass"]
    assert g["clauses"][0]["first_violation_time"] == 1.0
    wide = BoxPred("p", {0: (-6.0, 6.0)})
    assert check_bounded(run, "G p", [wide], grace=2, burn_in=0)["pass"]


def test_check_persistence_tail():
    settled = fake_run([5, 5, 5, 0, 0], [1] * 4, tau=1.0)
    v = check_bounded(settled, "FG p", [BOX], grace=2, burn_in=0)
    assert v["pass"] and v["clauses"][0]["tail_start_step"] == 2
    unsettled = fake_run([5, 5, 5, 5, 0], [1] * 4, tau=1.0)
    v = check_bounded(unsettled, "FG p", [BOX], grace=2, burn_in=0)
    assert not v["pass"]
    assert v["clauses"][0]["first_violating_step"] == 2


def test_check_combinations_report_clauses():
    run = fake_run([0, 5, 0, 5, 5, 0], [1] * 5, tau=1.0)
    never = BoxPred("q", {0: (8.0, 9.0)})
    both = check_bounded(run, "GF p && GF q", [BOX, never],
                         grace=3, burn_in=0)
    assert not both["pass"]
    either = check_bounded(run, "GF q || GF p", [BOX, never],
                           grace=3, burn_in=0)
    assert either["pass"]
    assert [c["phi"] for c in either["clauses"]] == ["q", "p"]


def test_check_parameter_validation():
    run = fake_run([0, 0, 0], [1] * 2, tau=1.0)
    with pytest.raises(ConfigError):
        check_bounded(run, "GF p", [BOX], grace=0)
    with pytest.raises(ConfigError):
        check_bounded(run, "GF p", [BOX], grace=2, burn_in=5)
    with pytest.raises(ConfigError):
        check_bounded(run, "GF q", [BOX])  # unknown atom
    v = check_bounded(run, "GF p", [BOX], horizon=100, grace=2, burn_in=0)
    assert v["horizon"] == 2  # clamped to the run length


def test_default_burn_in_is_a_tenth():
    run = fake_run([0] * 41, [1] * 40, tau=1.0)
    v = check_bounded(run, "GF p", [BOX], grace=5)
    assert v["burn_in"] == 4


# ---------------------------------------------------------------------------
# real closed loop on the shift instance

def test_shift_run_frozen_metrics():
    cfg, ctrl = shift_setup()
    run = closed_loop_run(cfg.system, ctrl, 40, 7, h=0.05)
    rec = metrics(run, cfg.predicates)
    assert math.isclose(rec["average_signal_length"], 0.9875, rel_tol=1e-12)
    assert math.isclose(rec["trigger_rate"], 1.0126582278481013,
                        rel_tol=1e-12)
    assert check_rate_identity(rec)
    assert rec["lemma_violations"] == 0
    assert rec["n_visits"]["near"] == 791
    assert rec["max_gap"]["near"] < 0.0501
    lengths = run.signal_lengths
    assert np.all(lengths >= 0.5) and np.all(lengths <= 1.0)


def test_shift_run_objective_verdicts():
    cfg, ctrl = shift_setup()
    run = closed_loop_run(cfg.system, ctrl, 40, 7, h=0.05)
    assert check_bounded(run, cfg.formula, cfg.predicates, grace=5)["pass"]
    far = check_bounded(run, "GF far", cfg.predicates, grace=50)
    assert not far["pass"]
    assert far["clauses"][0]["hit_steps"] == 0


def test_disturbance_free_runs_are_seed_independent():
    cfg, ctrl = shift_setup()
    r1 = closed_loop_run(cfg.system, ctrl, 25, 1, h=0.05)
    r2 = closed_loop_run(cfg.system, ctrl, 25, 2, h=0.05)
    assert r1.states == r2.states
    assert r1.signal_ids == r2.signal_ids
    assert np.array_equal(r1.sample_x, r2.sample_x)


def test_lemma_accounting_catches_a_lying_controller():
    cfg, ctrl = shift_setup()

    class Lying:
        grid = ctrl.grid
        signals = ctrl.signals
        initial_memory = ctrl.initial_memory

        def output_id(self, mem, q):
            return ctrl.output_id(mem, q)

        def successor_cells(self, mem, q, sid):
            return []  # claims the abstraction promised nothing

        def update(self, mem, q, sid, q2):
            return ctrl.update(mem, q, sid, q2)

    run = closed_loop_run(cfg.system, Lying(), 10, 0, h=0.05)
    assert metrics(run)["lemma_violations"] == 10


def test_run_rejects_bad_invocations():
    cfg, ctrl = shift_setup()
    with pytest.raises(ConfigError):
        closed_loop_run(cfg.system, ctrl, 0, 0)
    with pytest.raises(ConfigError):
        closed_loop_run(cfg.system, ctrl, 5, 0, h=-0.1)
    with pytest.raises(ConfigError):
        closed_loop_run(cfg.system, ctrl, 5, 0, x0=(2.0,))
    other = make_shift1d(x_range=4.0, lambda_bar=0.0)
    with pytest.raises(ConfigError):
        closed_loop_run(other, ctrl, 5, 0)
