"""Game containers, solvers, strategies, and the arena construction."""

from fractions import Fraction

import numpy as np
import pytest

from selftrig import _graph, oracles
from selftrig.abstraction import BoxPred, build_symbolic_model
from selftrig.dynamics import make_shift1d
from selftrig.errors import InvariantError
from selftrig.game import (
    BudgetStrategy,
    MeanPayoffParityGame,
    TableStrategy,
    brute_force_oracle,
    solve_energy_parity,
    solve_mean_payoff,
    solve_parity,
    solve_threshold,
    threshold_weights,
    translate,
)
from selftrig.logic import compile_parity, parse_spec
from selftrig.quantize import Quantization


def mk_game(owners, colors, edges, nu, **kw):
    esrc = [e[0] for e in edges]
    edst = [e[1] for e in edges]
    pays = [e[2] for e in edges]
    return MeanPayoffParityGame(owners, colors, esrc, edst, pays, nu, **kw)


def edge_id(game, u, v):
    for k in game.out_edges(u):
        if int(game.edst[k]) == v:
            return k
    raise AssertionError("no edge %d -> %d" % (u, v))


def run_play(game, strategy, v0, rng, steps, policy="uniform"):
    """Drive one play; Player 2 follows the given picking policy.
    Returns (edge list, ended_early)."""
    strategy.bind(game)
    mem = strategy.initial()
    v = int(v0)
    out = []
    for _ in range(steps):
        if game.owners[v] == 1:
            e = int(strategy.move_edge(mem, v))
        else:
            es = list(game.out_edges(v))
            if not es:
                return out, True
            if policy == "uniform":
                e = es[int(rng.integers(len(es)))]
            elif policy == "cheap":
                e = min(es, key=lambda k: (int(game.payoffs[k]), k))
            else:
                e = es[-1]
        mem = strategy.update_memory(mem, e)
        out.append(e)
        v = int(game.edst[e])
    return out, False


def check_winning_play(game, sol, v0, rng, policy, steps=800, tries=3):
    """Energy never dips below the handed-out credit's floor, and the top
    color of the tail is even (retrying with longer plays to let the
    strategy's transient finish)."""
    w, _ = threshold_weights(game)
    for attempt in range(tries):
        edges, early = run_play(game, sol.strategy, v0, rng, steps)
        energy = int(sol.credits[v0])
        for e in edges:
            energy += int(w[e])
            assert energy >= 0, "energy dipped below zero from %d" % v0
        if early:
            return
        tail = edges[len(edges) // 2:]
        cols = [int(game.colors[game.edst[e]]) for e in tail]
        if max(cols) % 2 == 0:
            return
        steps *= 4
    raise AssertionError("tail color stayed odd from vertex %d" % v0)


# ------------------------------------------------------------------ container


def test_container_rejects_same_side_edges():
    with pytest.raises(InvariantError):
        mk_game([1, 1], [0, 0], [(0, 1, 1), (1, 0, 1)], Fraction(1, 2)) \
            .check_invariants()


def test_container_rejects_zero_payoff():
    with pytest.raises(InvariantError):
        mk_game([1, 2], [0, 0], [(0, 1, 0), (1, 0, 1)], Fraction(1, 2)) \
            .check_invariants()


def test_container_rejects_stuck_successor_vertex():
    with pytest.raises(InvariantError):
        mk_game([1, 2], [0, 0], [(0, 1, 1)], Fraction(1, 2)).check_invariants()


def test_container_rejects_unequal_stage_payoffs_when_claimed():
    g = mk_game([1, 2], [0, 0], [(0, 1, 1), (1, 0, 2)], Fraction(1, 2),
                meta={"equal_stage_payoffs": True})
    with pytest.raises(InvariantError):
        g.check_invariants()


def test_container_accepts_wellformed():
    g = mk_game([1, 2], [2, 2], [(0, 1, 1), (1, 0, 1)], Fraction(1, 2),
                meta={"equal_stage_payoffs": True})
    g.check_invariants()


# ------------------------------------------------- shifted-weight reduction


def _simple_cycles(n, edges):
    """All simple cycles as edge-index lists (tiny graphs only)."""
    adj = [[] for _ in range(n)]
    for k, (u, v, _) in enumerate(edges):
        adj[u].append((v, k))
    cycles = []

    def walk(start, v, path_v, path_e):
        for w_, k in adj[v]:
            if w_ == start:
                cycles.append(path_e + [k])
            elif w_ > start and w_ not in path_v:
                walk(start, w_, path_v | {w_}, path_e + [k])

    for s in range(n):
        walk(s, s, {s}, [])
    return cycles


def test_shifted_weights_decide_strict_mean():
    rng = np.random.default_rng(42)
    for _ in range(60):
        g = oracles.random_mppg(rng)
        w, gran = threshold_weights(g)
        edges = [(int(g.esrc[k]), int(g.edst[k]), int(g.payoffs[k]))
                 for k in range(g.n_edges)]
        for cyc in _simple_cycles(g.n_vertices, edges):
            s = sum(int(w[k]) for k in cyc)
            mean = Fraction(sum(int(g.payoffs[k]) for k in cyc), len(cyc))
            assert s != 0
            assert (s > 0) == (mean > g.threshold)


# ----------------------------------------------------------- frozen examples


def test_single_round_threshold_is_strict():
    g = mk_game([1, 2], [2, 2], [(0, 1, 1), (1, 0, 1)], Fraction(1, 2))
    sol = solve_threshold(g)
    assert sol.winning.tolist() == [True, True]
    g2 = mk_game([1, 2], [2, 2], [(0, 1, 1), (1, 0, 1)], Fraction(1))
    sol2 = solve_threshold(g2)
    assert sol2.winning.tolist() == [False, False]


def test_two_round_alternation_beats_either_loop():
    # cheap parity-refresh round (payoff 1, color 2) against a rich but
    # odd-colored round (payoff 3, color 1): only mixing wins
    g = mk_game([1, 2, 2], [0, 2, 1],
                [(0, 1, 1), (1, 0, 1), (0, 2, 3), (2, 0, 3)], Fraction(2))
    sol = solve_threshold(g)
    assert sol.winning.tolist() == [True, True, True]
    # no positional strategy achieves it...
    assert brute_force_oracle(g, memory_bound=1).tolist() == \
        [False, False, False]
    # ...but a three-step clock does
    assert brute_force_oracle(g, memory_bound=3)[0]
    # the mix tops out below mean 3
    g3 = mk_game([1, 2, 2], [0, 2, 1],
                 [(0, 1, 1), (1, 0, 1), (0, 2, 3), (2, 0, 3)], Fraction(3))
    assert solve_threshold(g3).winning.tolist() == [False, False, False]
    # and stays available arbitrarily close underneath
    g52 = mk_game([1, 2, 2], [0, 2, 1],
                  [(0, 1, 1), (1, 0, 1), (0, 2, 3), (2, 0, 3)], Fraction(5, 2))
    assert solve_threshold(g52).winning.tolist() == [True, True, True]


def test_stuck_chooser_loses():
    g = mk_game([1], [0], [], Fraction(1, 2))
    sol = solve_threshold(g)
    assert sol.winning.tolist() == [False]
    assert sol.credits == [None]


def test_opponent_takes_the_trap():
    # 0 chooser, 1 rich but trapped move, 2 modest safe move, 3 dead end
    g = mk_game([1, 2, 2, 1], [0, 0, 0, 0],
                [(0, 1, 5), (0, 2, 1), (1, 3, 5), (1, 0, 5), (2, 0, 1)],
                Fraction(1, 2))
    sol = solve_threshold(g)
    assert sol.winning.tolist() == [True, False, True, False]
    strat = sol.strategy
    strat.bind(g)
    e = strat.move_edge(strat.initial(), 0)
    assert int(g.edst[e]) == 2


def test_mean_payoff_two_cycle_value():
    g = mk_game([1, 2], [0, 0], [(0, 1, 1), (1, 0, 3)], Fraction(1))
    sol = solve_mean_payoff(g)
    assert sol.values == [Fraction(2), Fraction(2)]


def test_parity_alternating_colors():
    owners = np.array([1, 2], dtype=np.int8)
    colors = np.array([1, 2])
    esrc = np.array([0, 1])
    edst = np.array([1, 0])
    sol = solve_parity(owners, colors, esrc, edst)
    assert sol.win1.tolist() == [True, True]


def test_parity_dead_end_conventions():
    owners = np.array([1, 2], dtype=np.int8)
    colors = np.array([0, 0])
    esrc = np.array([0])
    edst = np.array([1])
    sol = solve_parity(owners, colors, esrc, edst)
    # the opponent is stuck at vertex 1, so both vertices favor Player 1
    assert sol.win1.tolist() == [True, True]
    sol2 = solve_parity(owners[::-1].copy(), colors, esrc, edst)
    # now the chooser is the one who ends up stuck
    assert sol2.win1.tolist() == [False, False]


def test_energy_parity_micro_loops():
    one = np.array([1], dtype=np.int8)
    loop = (np.array([0]), np.array([0]))
    assert not solve_energy_parity(one, [0], *loop, [-1]).winning[0]
    assert solve_energy_parity(one, [0], *loop, [0]).winning[0]
    assert not solve_energy_parity(one, [1], *loop, [0]).winning[0]
    assert not solve_energy_parity(one, [1], *loop, [1]).winning[0]


def test_energy_parity_needs_initial_credit():
    owners = np.array([1, 2], dtype=np.int8)
    colors = np.array([1, 2])
    esrc = np.array([0, 1])
    edst = np.array([1, 0])
    res = solve_energy_parity(owners, colors, esrc, edst, [-2, 3])
    assert res.winning.tolist() == [True, True]
    assert res.credits[0] >= 2
    rng = np.random.default_rng(7)
    edges, _ = run_play_energy(owners, colors, esrc, edst, [-2, 3], res, 0,
                               rng, 200)


def run_play_energy(owners, colors, esrc, edst, weights, res, v0, rng, steps):
    """Play an energy parity strategy and assert the credit suffices."""
    lo = np.searchsorted(esrc, np.arange(len(owners)))
    hi = np.searchsorted(esrc, np.arange(len(owners)) + 1)
    strat = res.strategy
    strat.esrc = np.asarray(esrc)
    mem = strat.initial()
    v = int(v0)
    energy = int(res.credits[v0])
    out = []
    for _ in range(steps):
        if owners[v] == 1:
            e = int(strat.move_edge(mem, v))
        else:
            es = list(range(int(lo[v]), int(hi[v])))
            if not es:
                return out, True
            e = es[int(rng.integers(len(es)))]
        mem = strat.update_memory(mem, e)
        energy += int(weights[e])
        assert energy >= 0
        out.append(e)
        v = int(edst[e])
    return out, False


# ------------------------------------------------------- randomized batteries


def test_parity_matches_enumeration():
    rng = np.random.default_rng(1001)
    for _ in range(150):
        owners, colors, esrc, edst = oracles.random_parity_instance(rng)
        sol = solve_parity(owners, colors, esrc, edst)
        ref = oracles.oracle_parity_positional(owners, colors, esrc, edst)
        assert sol.win1.tolist() == ref.tolist()
        assert (sol.win1 ^ sol.win2).all()


def test_parity_strategies_certify():
    rng = np.random.default_rng(1002)
    for _ in range(60):
        owners, colors, esrc, edst = oracles.random_parity_instance(rng)
        n = len(owners)
        sol = solve_parity(owners, colors, esrc, edst)
        cols = [int(c) for c in colors]
        # Player 1's positional moves must leave only even-top cycles
        keep = [(int(esrc[k]), int(edst[k])) for k in range(len(esrc))
                if (owners[esrc[k]] == 2 or sol.strat1[esrc[k]] == k)
                and sol.win1[esrc[k]] and sol.win1[edst[k]]]
        bad = _graph.odd_max_cycle_vertices(n, keep, cols)
        hasout = [False] * n
        for u, _ in keep:
            hasout[u] = True
        for v in range(n):
            if sol.win1[v] and owners[v] == 1:
                assert hasout[v] or not list(
                    k for k in range(len(esrc)) if esrc[k] == v) == []
        reach_bad = _graph.backward_closure(n, keep, bad)
        for v in range(n):
            if sol.win1[v]:
                assert not reach_bad[v]
        # Player 2's moves dually leave no even-top cycle for Player 1
        keep2 = [(int(esrc[k]), int(edst[k])) for k in range(len(esrc))
                 if (owners[esrc[k]] == 1 or sol.strat2[esrc[k]] == k)
                 and sol.win2[esrc[k]] and sol.win2[edst[k]]]
        flipped = [c + 1 for c in cols]
        good_for_1 = _graph.odd_max_cycle_vertices(n, keep2, flipped)
        reach_good = _graph.backward_closure(n, keep2, good_for_1)
        for v in range(n):
            if sol.win2[v]:
                assert not reach_good[v]


def test_mean_payoff_matches_enumeration():
    rng = np.random.default_rng(1003)
    for _ in range(100):
        g = oracles.random_total_mp_game(rng)
        sol = solve_mean_payoff(g)
        ref = oracles.oracle_mean_payoff_values(
            g.owners, g.esrc, g.edst, g.payoffs)
        assert sol.values == ref


def test_energy_parity_matches_product_oracle():
    rng = np.random.default_rng(1004)
    for _ in range(120):
        owners, colors, esrc, edst = oracles.random_parity_instance(
            rng, n_max=5, color_max=2)
        weights = rng.integers(-2, 3, size=len(esrc))
        res = solve_energy_parity(owners, colors, esrc, edst, weights)
        ref = oracles.oracle_energy_parity(owners, colors, esrc, edst, weights)
        assert res.winning.tolist() == ref.tolist()


def test_energy_parity_play_invariants():
    rng = np.random.default_rng(1005)
    for _ in range(40):
        owners, colors, esrc, edst = oracles.random_parity_instance(
            rng, n_max=5, color_max=2)
        weights = rng.integers(-2, 3, size=len(esrc))
        res = solve_energy_parity(owners, colors, esrc, edst, weights)
        if res.strategy is None:
            continue
        for v in np.flatnonzero(res.winning):
            run_play_energy(owners, colors, esrc, edst, weights, res,
                            int(v), rng, 400)


def test_threshold_matches_dual_oracle():
    rng = np.random.default_rng(1006)
    for _ in range(150):
        g = oracles.random_mppg(rng)
        sol = solve_threshold(g)
        exact = oracles.oracle_threshold_refute(g)
        assert sol.winning.tolist() == exact.tolist()
        certified = brute_force_oracle(g, memory_bound=2)
        assert not np.any(certified & ~sol.winning)


def test_threshold_strategies_survive_play():
    # separate streams so play lengths cannot shift which games get drawn
    game_rng = np.random.default_rng(1007)
    play_rng = np.random.default_rng(9917)
    games = 0
    for _ in range(600):
        if games >= 20:
            break
        g = oracles.random_mppg(game_rng)
        sol = solve_threshold(g)
        if not np.any(sol.winning):
            continue
        games += 1
        for v in np.flatnonzero(sol.winning):
            for policy in ("uniform", "cheap"):
                check_winning_play(g, sol, int(v), play_rng, policy,
                                   steps=600)
    assert games >= 20


def test_threshold_deterministic_across_runs():
    def build_and_solve():
        rng = np.random.default_rng(77)
        g = oracles.random_mppg(rng)
        return g, solve_threshold(g)

    g1, s1 = build_and_solve()
    g2, s2 = build_and_solve()
    assert s1.winning.tobytes() == s2.winning.tobytes()
    assert s1.credits == s2.credits
    assert s1.diagnostics["ladder"] == s2.diagnostics["ladder"]
    assert type(s1.strategy) is type(s2.strategy)
    if isinstance(s1.strategy, TableStrategy):
        assert s1.strategy.move == s2.strategy.move


def test_budget_strategy_batch_agrees_with_scalar():
    g = mk_game([1, 2, 2], [0, 2, 1],
                [(0, 1, 1), (1, 0, 1), (0, 2, 3), (2, 0, 3)], Fraction(2))
    res = solve_energy_parity(g.owners, g.colors, g.esrc, g.edst,
                              threshold_weights(g)[0], no_zero_cycles=True)
    strat = res.strategy
    strat.bind(g)
    for b in (0, 5, strat.bsat):
        got = strat.move_batch(np.array([b]), np.array([0]))
        assert int(got[0]) == int(strat.move_edge(b, 0))
    e = int(strat.move_edge(strat.FRESH, 0))
    m2 = strat.update_memory(strat.FRESH, e)
    assert m2 == min(int(res.credits[0]) + int(strat.weights[e]), strat.bsat)


# ----------------------------------------------------------------- translate


def _shift_model():
    shift = make_shift1d(x_range=1.0, u_max=1.0, lambda_bar=0.0,
                         init_states=((0.0,),))
    quant = Quantization(eta=(0.5,), mu=(1.0,), tau=0.5, ell_min=0.5,
                         ell_max=1.0)
    near = BoxPred("near", {0: (-0.55, 0.55)})
    return build_symbolic_model(shift, quant, [near])


def test_translate_builds_consistent_arena():
    model = _shift_model()
    ann = compile_parity(parse_spec("GF near"),
                         known={p.name for p in model.predicates})
    game, maps = translate(model, ann, Fraction(3, 4))
    game.check_invariants()
    assert game.threshold == Fraction(3, 2)
    assert game.payoff_scale == Fraction(1, 2)
    assert maps.n_v1 == int(np.sum(game.owners == 1))
    # colors follow the annotation copies
    for v in range(game.n_vertices):
        assert game.colors[v] == ann.colors[int(maps.vertex_copy[v])]
    # every choice vertex belongs to a live state/signal pair
    for v in range(maps.n_v1, game.n_vertices):
        q = int(maps.vertex_state[v])
        s = int(maps.vertex_signal[v])
        assert model.alive[s, q]
    # initial-copy vertices exist for every state
    assert (maps.init_vertices >= 0).all()


def test_translate_shift_counts_frozen():
    # tight domain: every landing interval touches a border cell whose
    # ball pokes outside the domain, so the opponent can always reach a
    # dead state -- nothing is controllable
    model = _shift_model()
    ann = compile_parity(parse_spec("GF near"),
                         known={p.name for p in model.predicates})
    game, maps = translate(model, ann, Fraction(3, 4))
    sol = solve_threshold(game)
    assert game.n_vertices == 12
    assert game.n_edges == 20
    assert maps.n_v1 == 6
    assert int(sol.winning.sum()) == 0
    assert int(sol.winning[maps.init_vertices].sum()) == 0


def test_translate_shift_realizable_frozen():
    # roomier domain: three interior states keep long signals alive and the
    # predicate certain, so they can hold the payoff mean at 2 > 3/2
    sys_w = make_shift1d(x_range=3.0, u_max=1.0, lambda_bar=0.0,
                         init_states=((0.0,),))
    quant = Quantization(eta=(0.5,), mu=(1.0,), tau=0.5,
                         ell_min=0.5, ell_max=1.0)
    model = build_symbolic_model(
        sys_w, quant, preds=(BoxPred("near", {0: (-2.6, 2.6)}),))
    ann = compile_parity(parse_spec("GF near"), known={"near"})
    game, maps = translate(model, ann, Fraction(3, 4))
    sol = solve_threshold(game)
    assert game.n_vertices == 98
    assert game.n_edges == 292
    assert maps.n_v1 == 14
    assert int(sol.winning.sum()) == 42
    assert int(sol.winning[maps.init_vertices].sum()) == 3
    assert sol.diagnostics["ladder"] == "steady"
    win_states = sorted({int(maps.vertex_state[v])
                         for v in np.flatnonzero(sol.winning)
                         if v < maps.n_v1})
    centers = [model.grid.coords_of_id(q)[0] for q in win_states]
    assert centers == [-1.0, 0.0, 1.0]
    # the claimed strategy survives adversarial play from every winner
    rng = np.random.default_rng(424)
    for v in np.flatnonzero(sol.winning)[::5]:
        check_winning_play(game, sol, int(v), rng, "uniform", steps=400)
