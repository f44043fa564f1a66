"""Independent reference solvers for cross-checking the game engines.

Everything here trades speed for transparency: plain strategy enumeration,
explicit cycle analysis, and a product construction that turns bounded-energy
play into an ordinary parity game.  The self-test suite runs these against
the production solvers on randomized small instances.
"""

import itertools
from fractions import Fraction

import numpy as np

from . import _graph
from .errors import ConfigError, InvariantError
from .game import MeanPayoffParityGame, solve_parity


def _induced_edges(owners, esrc, edst, payoffs, pick):
    """Edges kept after fixing Player 1's positional choices `pick`."""
    keep = []
    for k in range(len(esrc)):
        v = int(esrc[k])
        if owners[v] == 2 or pick.get(v) == k:
            keep.append(k)
    return keep


def oracle_parity_positional(owners, colors, esrc, edst,
                             strategy_limit=2_000_000):
    """Winning set of Player 1 (max color seen infinitely often is even) by
    exhaustive enumeration of Player-1 positional strategies.  Dead ends lose
    for the player who is stuck."""
    n = len(owners)
    owners = np.asarray(owners)
    colors = [int(c) for c in colors]
    p1 = [v for v in range(n) if owners[v] == 1]
    outs = {v: [k for k in range(len(esrc)) if esrc[k] == v] for v in p1}
    slots = [v for v in p1 if outs[v]]
    total = 1
    for v in slots:
        total *= len(outs[v])
        if total > strategy_limit:
            raise ConfigError("oracle strategy space exceeds the limit")
    win = np.zeros(n, dtype=bool)
    for combo in itertools.product(*(outs[v] for v in slots)):
        pick = dict(zip(slots, combo))
        keep = _induced_edges(owners, esrc, edst, None, pick)
        plain = [(int(esrc[k]), int(edst[k])) for k in keep]
        hasout = [False] * n
        for u, _ in plain:
            hasout[u] = True
        bad = [not hasout[v] and owners[v] == 1 for v in range(n)]
        oddv = _graph.odd_max_cycle_vertices(n, plain, colors)
        for v in range(n):
            if oddv[v]:
                bad[v] = True
        closure = _graph.backward_closure(n, plain, bad)
        for v in range(n):
            if not closure[v]:
                win[v] = True
        if win.all():
            break
    return win


def oracle_mean_payoff_values(owners, esrc, edst, payoffs,
                              strategy_limit=2_000_000):
    """Exact per-vertex values (Player 1 maximizes the limit average) by
    enumerating Player-1 positional strategies; for each, Player 2's best
    response drives the play into the reachable cycle of least mean."""
    n = len(owners)
    owners = np.asarray(owners)
    outdeg = np.zeros(n, dtype=np.int64)
    np.add.at(outdeg, np.asarray(esrc, dtype=np.int64), 1)
    if np.any(outdeg == 0):
        raise InvariantError("value oracle requires a total game")
    p1 = [v for v in range(n) if owners[v] == 1]
    outs = {v: [k for k in range(len(esrc)) if esrc[k] == v] for v in p1}
    total = 1
    for v in p1:
        total *= len(outs[v])
        if total > strategy_limit:
            raise ConfigError("oracle strategy space exceeds the limit")
    best = [None] * n
    for combo in itertools.product(*(outs[v] for v in p1)):
        pick = dict(zip(p1, combo))
        keep = _induced_edges(owners, esrc, edst, payoffs, pick)
        wedges = [(int(esrc[k]), int(edst[k]), int(payoffs[k])) for k in keep]
        plain = [(u, x) for u, x, _ in wedges]
        comp, _ = _graph.tarjan_scc(n, plain)
        cyclic = _graph.nontrivial_components(n, plain, comp)
        means = {}
        for c in cyclic:
            inside = [comp[v] == c for v in range(n)]
            means[c] = _graph.min_mean_cycle(n, wedges, inside)
        # value under this strategy: least cycle mean Player 2 can reach
        adj = [[] for _ in range(n)]
        for u, x in plain:
            adj[u].append(x)
        order = list(range(n))
        val = [None] * n
        # iterate to a fixpoint: val(v) = min over successors and own cycle
        for _ in range(n + 1):
            changed = False
            for v in order:
                cands = []
                if comp[v] in means and means[comp[v]] is not None:
                    cands.append(means[comp[v]])
                for x in adj[v]:
                    if val[x] is not None:
                        cands.append(val[x])
                if cands:
                    m = min(cands)
                    if val[v] is None or m < val[v]:
                        val[v] = m
                        changed = True
            if not changed:
                break
        for v in range(n):
            if val[v] is not None and (best[v] is None or val[v] > best[v]):
                best[v] = val[v]
    return best


def oracle_energy_parity(owners, colors, esrc, edst, weights, cap=None):
    """Decide energy parity games by unrolling the energy counter into the
    state: vertex (v, e) moves to (dst, min(e + w, cap)), and any drop below
    zero enters a losing sink.  Player 1 wins from v with some finite initial
    credit exactly when (v, cap) is winning in the product parity game."""
    n = len(owners)
    owners = np.asarray(owners, dtype=np.int8)
    colors = np.asarray(colors, dtype=np.int64)
    esrc = np.asarray(esrc, dtype=np.int64)
    edst = np.asarray(edst, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.int64)
    W = max(1, int(np.abs(weights).max()) if len(weights) else 1)
    d = int(colors.max()) + 1 if n else 1
    if cap is None:
        # large enough that a winning strategy's worst energy drop (bounded
        # by the product of arena size, strategy memory, and weight range)
        # fits under the saturation ceiling
        cap = n * n * (d + 1) * W * W + n * W + 16
    m = n * (cap + 1) + 1
    sink = m - 1
    po = np.empty(m, dtype=np.int8)
    pc = np.empty(m, dtype=np.int64)
    ids = np.arange(m - 1)
    po[:-1] = owners[ids % n]
    pc[:-1] = colors[ids % n]
    po[sink] = 1
    pc[sink] = 1  # odd: reaching the sink loses for Player 1
    E = len(esrc)
    levels = np.arange(cap + 1, dtype=np.int64)
    src = (levels[:, None] * n + esrc[None, :]).ravel()
    newe = levels[:, None] + weights[None, :]
    dst = np.where(newe < 0, sink,
                   np.minimum(newe, cap) * n + edst[None, :]).ravel()
    src = np.concatenate([src, [sink]])
    dst = np.concatenate([dst, [sink]])
    order = np.argsort(src, kind="stable")
    sol = solve_parity(po, pc, src[order], dst[order])
    return sol.win1[cap * n + np.arange(n)]


def oracle_threshold_refute(game: MeanPayoffParityGame,
                            strategy_limit=2_000_000):
    """Exact winning set of Player 1 in the strict-threshold game, computed
    from the other side: enumerate Player-2 positional strategies (which
    suffice for this objective class) and mark every vertex some strategy
    defends.  With Player 2 fixed, Player 1 wins from v exactly when v can
    reach a strongly connected piece whose top color class c is even, which
    contains a color-c vertex, and whose best cycle mean strictly exceeds
    the threshold; long play mixes that cycle with rare visits to color c.
    Returns the complement of the defended set."""
    n = game.n_vertices
    nu = game.threshold
    owners = game.owners
    colors = [int(c) for c in game.colors]
    p2 = [v for v in range(n) if owners[v] == 2]
    outs = {v: list(game.out_edges(v)) for v in p2}
    total = 1
    for v in p2:
        if not outs[v]:
            raise InvariantError("refutation oracle requires total Player 2")
        total *= len(outs[v])
        if total > strategy_limit:
            raise ConfigError("oracle strategy space exceeds the limit")
    refuted = np.zeros(n, dtype=bool)
    evens = sorted({c for c in colors if c % 2 == 0})
    for combo in itertools.product(*(outs[v] for v in p2)):
        pick = dict(zip(p2, combo))
        keep = [k for k in range(game.n_edges)
                if owners[int(game.esrc[k])] == 1
                or pick[int(game.esrc[k])] == k]
        plain = [(int(game.esrc[k]), int(game.edst[k])) for k in keep]
        good = [False] * n
        for c in evens:
            inside = [colors[v] <= c for v in range(n)]
            sub = [(u, x) for u, x in plain if inside[u] and inside[x]]
            comp, ncomp = _graph.tarjan_scc(n, sub, inside)
            cyclic = set(_graph.nontrivial_components(n, sub, comp, inside))
            for cc in cyclic:
                members = [v for v in range(n) if comp[v] == cc]
                if not any(colors[v] == c for v in members):
                    continue
                wedges = [(int(game.esrc[k]), int(game.edst[k]),
                           -int(game.payoffs[k])) for k in keep
                          if comp[int(game.esrc[k])] == cc
                          and comp[int(game.edst[k])] == cc]
                mm = _graph.min_mean_cycle(
                    n, wedges, [comp[v] == cc for v in range(n)])
                if mm is not None and -mm > nu:
                    for v in members:
                        good[v] = True
        canwin = _graph.backward_closure(n, plain, good)
        for v in range(n):
            if not canwin[v]:
                refuted[v] = True
        if refuted.all():
            break
    return ~refuted


# ---------------------------------------------------------------------------
# randomized instance generators (deterministic given the generator state)


def random_parity_instance(rng, n_max=10, deg_max=3, color_max=4,
                           allow_dead=True):
    n = int(rng.integers(2, n_max + 1))
    owners = rng.integers(1, 3, size=n).astype(np.int8)
    colors = rng.integers(0, color_max + 1, size=n).astype(np.int64)
    esrc, edst = [], []
    for v in range(n):
        lo = 0 if (allow_dead and rng.random() < 0.08) else 1
        deg = int(rng.integers(lo, deg_max + 1))
        for t in sorted(rng.integers(0, n, size=deg).tolist()):
            esrc.append(v)
            edst.append(t)
    return owners, colors, np.array(esrc, dtype=np.int64), \
        np.array(edst, dtype=np.int64)


def random_mppg(rng, n1_max=4, n2_max=4, deg_max=3, pay_max=4,
                color_max=3, allow_dead_v1=True):
    """Random bipartite mean-payoff parity game with a small threshold."""
    n1 = int(rng.integers(1, n1_max + 1))
    n2 = int(rng.integers(1, n2_max + 1))
    n = n1 + n2
    owners = np.array([1] * n1 + [2] * n2, dtype=np.int8)
    colors = rng.integers(0, color_max + 1, size=n).astype(np.int64)
    esrc, edst, pays = [], [], []
    for v in range(n1):
        lo = 0 if (allow_dead_v1 and rng.random() < 0.1) else 1
        deg = int(rng.integers(lo, deg_max + 1))
        for t in rng.integers(0, n2, size=deg).tolist():
            esrc.append(v)
            edst.append(n1 + int(t))
            pays.append(int(rng.integers(1, pay_max + 1)))
    for v in range(n2):
        deg = int(rng.integers(1, deg_max + 1))
        for t in rng.integers(0, n1, size=deg).tolist():
            esrc.append(n1 + v)
            edst.append(int(t))
            pays.append(int(rng.integers(1, pay_max + 1)))
    num = int(rng.integers(1, 2 * pay_max))
    den = int(rng.integers(1, 3))
    game = MeanPayoffParityGame(owners, colors, esrc, edst, pays,
                                Fraction(num, den))
    return game


def random_total_mp_game(rng, n1_max=4, n2_max=4, deg_max=3, pay_max=4):
    """Bipartite, total, colorless game for mean-payoff value checks."""
    g = random_mppg(rng, n1_max, n2_max, deg_max, pay_max, color_max=0,
                    allow_dead_v1=False)
    return g
