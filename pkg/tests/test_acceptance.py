"""Acceptance suite: one test per published guarantee of this package.

Each test is self-contained, uses frozen seeds, and prints the measured
numbers next to the bound it enforces, so a verbose run doubles as the
acceptance report.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from test_dynamics import run_growth_bound_trial

from selftrig import io, oracles
from selftrig.abstraction import build_symbolic_model
from selftrig.config import load_config, parse_config
from selftrig.dynamics import make_robot, simulate_signal
from selftrig.game import (brute_force_oracle, solve_mean_payoff,
                           solve_parity, solve_threshold, translate)
from selftrig.harness import check_bounded, closed_loop_run, metrics
from selftrig.logic import (annotation_verdict_on_lasso, compile_parity,
                            eval_formula_on_lasso, parse_spec)
from selftrig.quantize import ControlSignal, input_grid, signal_set, state_grid
from selftrig.synthesis import synthesize

HERE = os.path.dirname(os.path.abspath(__file__))
ROBOT_INI = os.path.join(HERE, os.pardir, "demos", "robot_gf.ini")

SHIFT = """\
[system]
kind = shift1d
x_range = 3
u_max = 1
lambda_bar = 0.05
init = 0

[quantization]
eta = 0.5
mu = 1.0
tau = 0.5
ell_min = 0.5
ell_max = 1.0

[predicates]
near = box 0 -2.6 2.6

[spec]
formula = GF near

[threshold]
nu = 3/4
"""


# ---------------------------------------------------------------------------
# 01: the unicycle benchmark end to end


def test_accept_01_unicycle_benchmark_end_to_end():
    cfg = load_config(ROBOT_INI)
    # pin the benchmark parameters the guarantee is stated for
    assert cfg.system.params["v"] == 2.5
    assert cfg.system.params["lambda_bar"] == 0.05
    assert cfg.system.state_lo == (-6.0, -6.0, 0.0)
    assert cfg.quant.eta == (1.0, 1.0, math.pi / 8)
    assert cfg.quant.mu == (math.pi / 2,)
    assert cfg.quant.tau == 0.5 and cfg.quant.ell_min == 0.5
    assert cfg.quant.ell_max == 1.0
    assert cfg.nu == Fraction(3, 4)
    assert str(cfg.formula) == "GF (px && py)"

    t0 = time.monotonic()
    result = synthesize(cfg.problem())
    elapsed = time.monotonic() - t0
    assert elapsed <= 1800.0, "synthesis exceeded the 30-minute budget"

    it0 = result.iterations[0]
    print("benchmark iteration 0: %d states, %d game vertices "
          "(reference values for this configuration: 3384 states, "
          "26,400 vertices; counting conventions differ)"
          % (it0["n_states"], it0["n_vertices"]))

    if result.success:
        ctrl = result.controller
        for seed in range(20):
            run = closed_loop_run(cfg.system, ctrl, 500, seed, h=cfg.sim.h)
            rec = metrics(run, cfg.predicates)
            verdict = check_bounded(run, cfg.formula, cfg.predicates,
                                    grace=50)
            assert verdict["pass"], "objective failed under seed %d" % seed
            assert rec["average_signal_length"] > 0.75, seed
            assert rec["lemma_violations"] == 0, seed
        print("controller found: 20 seeded runs pass, %.1fs synthesis"
              % elapsed)
    else:
        # conservative labelling leaves the initial cell losing: the loop
        # must have refined to its floors and reported full diagnostics
        assert len(result.iterations) >= 3, "fewer than 2 refinements"
        keys = {"iteration", "eta", "mu", "tau", "n_states", "n_signals",
                "n_vertices", "n_edges", "initial_winning",
                "initial_losing_cells", "ladder", "seconds"}
        for it in result.iterations:
            assert keys <= set(it), "iteration diagnostics incomplete"
        last = result.iterations[-1]
        sched = cfg.schedule
        assert tuple(last["eta"]) == tuple(sched.eta_floor)
        assert tuple(last["mu"]) == tuple(sched.mu_floor)
        assert last["tau"] == sched.tau_floor
        assert last["initial_losing_cells"], "no losing-cell diagnostics"
        print("unrealizable at these parameters: %d iterations to the "
              "refinement floors, %.1fs total, losing initial cells %s"
              % (len(result.iterations), elapsed,
                 last["initial_losing_cells"]))


# ---------------------------------------------------------------------------
# 02: game solvers against brute-force oracles


def test_accept_02_parity_and_mean_payoff_solvers_exact():
    t0 = time.monotonic()
    rng = np.random.default_rng(2001)
    for k in range(500):
        owners, colors, esrc, edst = oracles.random_parity_instance(
            rng, n_max=10, color_max=3)
        sol = solve_parity(owners, colors, esrc, edst)
        ref = oracles.oracle_parity_positional(owners, colors, esrc, edst)
        assert sol.win1.tolist() == ref.tolist(), "parity instance %d" % k
    rng = np.random.default_rng(2002)
    for k in range(500):
        g = oracles.random_total_mp_game(rng, n1_max=5, n2_max=5, pay_max=4)
        sol = solve_mean_payoff(g)
        ref = oracles.oracle_mean_payoff_values(g.owners, g.esrc, g.edst,
                                                g.payoffs)
        assert sol.values == ref, "mean-payoff instance %d" % k
    elapsed = time.monotonic() - t0
    assert elapsed <= 300.0
    print("1000 instances agreed with the oracles in %.1fs" % elapsed)


# ---------------------------------------------------------------------------
# 03: threshold winning sets


def test_accept_03_threshold_winning_set_sound_and_complete():
    rng = np.random.default_rng(2003)
    unsound = 0
    exact_total = claimed_total = 0
    for k in range(500):
        g = oracles.random_mppg(rng)  # bipartite, at most 8 vertices
        assert g.n_vertices <= 8
        sol = solve_threshold(g)
        exact = oracles.oracle_threshold_refute(g)
        unsound += int(np.sum(sol.winning & ~exact))
        claimed_total += int(np.sum(sol.winning & exact))
        exact_total += int(exact.sum())
        certified = brute_force_oracle(g, memory_bound=2)
        assert not np.any(certified & ~sol.winning), \
            "a certified vertex was not claimed (instance %d)" % k
    assert unsound == 0, "%d unsound winning claims" % unsound
    ratio = claimed_total / exact_total if exact_total else 1.0
    print("0 unsound vertices; completeness %d/%d = %.3f (target 0.95)"
          % (claimed_total, exact_total, ratio))
    assert ratio >= 0.95


# ---------------------------------------------------------------------------
# 04: strategies survive random adversaries


def _batch_adversary_plays(game, sol, steps, n_plays, rng):
    """All plays from all winning vertices stepped together; returns the
    per-play payoff totals and the max color seen over the last 90%."""
    strat = sol.strategy
    strat.bind(game)
    win = np.flatnonzero(sol.winning)
    v = np.repeat(win, n_plays).astype(np.int64)
    ntok = len(v)
    mem = np.full(ntok, strat.initial(), dtype=np.int64)
    total = np.zeros(ntok, dtype=np.int64)
    tail_max = np.zeros(ntok, dtype=np.int64)
    tail_from = steps // 10
    owners, lo, hi = game.owners, game.lo, game.hi
    payoffs, edst, colors = game.payoffs, game.edst, game.colors
    e = np.empty(ntok, dtype=np.int64)
    for k in range(steps):
        own1 = owners[v] == 1
        if own1.any():
            e1 = strat.move_batch(mem[own1], v[own1])
            assert np.all(e1 >= 0), "stuck at a claimed-winning vertex"
            e[own1] = e1
        adv = ~own1
        if adv.any():
            vv = v[adv]
            span = (hi[vv] - lo[vv]).astype(np.int64)
            e[adv] = lo[vv] + (rng.random(int(adv.sum())) * span).astype(
                np.int64)
        mem = strat.update_batch(mem, e)
        total += payoffs[e]
        v = edst[e].astype(np.int64)
        if k >= tail_from:
            np.maximum(tail_max, colors[v], out=tail_max)
    return total, tail_max


def test_accept_04_strategies_survive_random_adversaries():
    steps, n_plays = 10_000, 100
    rng_games = np.random.default_rng(2004)
    rng_plays = np.random.default_rng(20044)
    games = plays = 0
    draws = 0
    while games < 50:
        draws += 1
        assert draws < 3000, "not enough realizable instances"
        g = oracles.random_mppg(rng_games)
        sol = solve_threshold(g)
        if not sol.winning.any():
            continue
        assert sol.strategy is not None
        total, tail_max = _batch_adversary_plays(g, sol, steps, n_plays,
                                                 rng_plays)
        assert np.all(tail_max % 2 == 0), \
            "odd recurring color under a random adversary"
        thr = g.threshold
        assert np.all(total * thr.denominator > thr.numerator * steps), \
            "running mean payoff at or below the threshold"
        games += 1
        plays += len(total)
    print("%d games (%d draws), %d plays x %d steps: zero failures"
          % (games, draws, plays, steps))


# ---------------------------------------------------------------------------
# 05: growth-bound soundness


def test_accept_05_growth_bounds_monte_carlo():
    robot = make_robot()  # divergence correction on
    rng = np.random.default_rng(2005)
    violations = []
    for _ in range(10_000):
        violations.extend(run_growth_bound_trial(robot, rng))
    assert violations == [], violations[:3]

    # without the correction the claimed beta(0, t) = 0 must be refutable
    uncorrected = make_robot(paper_beta=True)
    assert uncorrected.lambda_bar > 0
    found = 0
    for k in range(300):
        s = ControlSignal([(float(rng.uniform(-math.pi / 2, math.pi / 2)),)],
                          0.5)
        x = (float(rng.uniform(-4, 4)), float(rng.uniform(-4, 4)),
             float(rng.uniform(0, 2 * math.pi)))
        lam1 = float(rng.uniform(-0.05, 0.05))
        lam2 = float(rng.uniform(-0.05, 0.05))
        y1 = simulate_signal(uncorrected, x, s, [lam1])
        y2 = simulate_signal(uncorrected, x, s, [lam2])
        gap = uncorrected.distance(y1, y2)
        if gap > uncorrected.beta_fwd(s, 0.0, s.length) + 1e-6:
            found += 1
            # the corrected bound must cover the exact same pair
            assert gap <= robot.beta_fwd(s, 0.0, s.length) + 1e-9
    assert found > 0, "uncorrected divergence bound was never refuted"
    print("10,000 corrected trials clean; uncorrected bound refuted in "
          "%d/300 same-state trials" % found)


# ---------------------------------------------------------------------------
# 06: quantization counts and determinism


def test_accept_06_quantization_counts_and_determinism():
    def build():
        grid = state_grid((-6.0, -6.0, 0.0), (6.0, 6.0, 2 * math.pi),
                          (False, False, True), (1.0, 1.0, math.pi / 8))
        inputs = input_grid((-math.pi / 2,), (math.pi / 2,), (math.pi / 2,),
                            "half")
        sigs = signal_set(inputs, 0.5, 0.5, 1.0)
        return grid, inputs, sigs

    grid, inputs, sigs = build()
    assert grid.counts == (7, 7, 8)
    assert len(inputs) == 3
    assert len(sigs) == 12
    dump1 = "\n".join(grid.dump_lines())
    grid2, _, sigs2 = build()
    assert "\n".join(grid2.dump_lines()) == dump1

    cfg = load_config(ROBOT_INI)
    m1 = build_symbolic_model(cfg.system, cfg.quant, cfg.predicates)
    m2 = build_symbolic_model(cfg.system, cfg.quant, cfg.predicates)
    t1 = io.model_text(m1, cfg.config_hash())
    assert io.model_text(m2, cfg.config_hash()) == t1
    print("grid 7x7x8, 3 inputs, 12 signals; model dumps byte-identical "
          "(%d transitions)" % m1.n_transitions)


# ---------------------------------------------------------------------------
# 07: compiled monitor against exhaustive lasso enumeration


def _random_clause(rng):
    op = ("F", "G", "GF", "FG")[int(rng.integers(4))]
    atom = ("p", "q")[int(rng.integers(2))]
    return "%s %s" % (op, atom)


def _enumerate_lassos(succ, letters, v0, prefix_max=3, cycle_max=6):
    """Distinct (prefix letters, cycle letters) pairs of bounded lassos."""
    out = set()
    # breadth-first prefix walks up to prefix_max edges
    walks = [[v0]]
    frontier = [[v0]]
    for _ in range(prefix_max):
        nxt = []
        for w in frontier:
            for s in succ[w[-1]]:
                nxt.append(w + [s])
        walks.extend(nxt)
        frontier = nxt
    for w in walks:
        anchor = w[-1]
        # depth-first cycle walks returning to the anchor
        stack = [(s, [s]) for s in succ[anchor]]
        while stack:
            node, path = stack.pop()
            if node == anchor:
                prefix = tuple(letters[x] for x in w[:-1])
                cycle = tuple(letters[x] for x in [anchor] + path[:-1])
                out.add((prefix, cycle))
            if len(path) < cycle_max:
                for s in succ[node]:
                    stack.append((s, path + [s]))
    return out


def test_accept_07_monitor_matches_lasso_enumeration():
    rng = np.random.default_rng(2007)
    checked = 0
    for trial in range(200):
        n_clauses = int(rng.integers(1, 4))  # up to 2 boolean combinators
        text = _random_clause(rng)
        for _ in range(n_clauses - 1):
            text = "%s %s %s" % (text, ("&&", "||")[int(rng.integers(2))],
                                 _random_clause(rng))
        formula = parse_spec(text)
        ann = compile_parity(formula)
        nb = ann.n_bases
        letters = [int(rng.integers(1 << nb)) for _ in range(4)]
        succ = [sorted(rng.choice(4, size=int(rng.integers(1, 3)),
                                  replace=False).tolist())
                for _ in range(4)]
        for prefix, cycle in _enumerate_lassos(succ, letters, 0):
            want = eval_formula_on_lasso(formula, list(prefix), list(cycle))
            got = annotation_verdict_on_lasso(ann, list(prefix), list(cycle))
            assert want == got, (text, prefix, cycle)
            checked += 1
    print("200 models, %d distinct lassos, verdicts all agree" % checked)


# ---------------------------------------------------------------------------
# 08: serialization round-trips and replay determinism


def test_accept_08_serialization_round_trips():
    cfg = parse_config(SHIFT)
    model = build_symbolic_model(cfg.system, cfg.quant, cfg.predicates)
    ann = compile_parity(cfg.formula, known={p.name for p in cfg.predicates})
    game, _ = translate(model, ann, cfg.nu)
    h = cfg.config_hash()

    t = io.model_text(model, h)
    assert io.model_text(io.parse_model(t), h) == t
    t = io.game_text(game, h)
    assert io.game_text(io.parse_game(t), h) == t

    for seed, kind in ((7, "table"), (70, "budget")):
        g = oracles.random_mppg(np.random.default_rng(seed))
        sol = solve_threshold(g)
        assert sol.strategy is not None and sol.strategy.kind == kind
        t = io.strategy_text(sol.strategy, "x")
        assert io.strategy_text(io.parse_strategy(t, g), "x") == t

    result = synthesize(cfg.problem())
    assert result.success
    lines = cfg.describe_lines(include_simulation=False)
    t = io.controller_text(result.controller, h, cfg_lines=lines)
    table = io.parse_controller(t)
    assert io.controller_text(table, h, cfg_lines=lines) == t

    a = closed_loop_run(cfg.system, result.controller, 30, 11, h=0.05)
    b = closed_loop_run(cfg.system, table, 30, 11, h=0.05)
    assert io.run_text(a, metrics(a)) == io.run_text(b, metrics(b))
    c = closed_loop_run(cfg.system, result.controller, 30, 12, h=0.05)
    assert io.run_text(c) != io.run_text(a)
    print("model, game, both strategy kinds, controller, and replay: "
          "byte-exact")
