"""Mean-payoff parity games on finite bipartite arenas, and their solvers.

Player 1 picks control signals, Player 2 picks abstract successors.  Player 1
wins a play when the largest color seen infinitely often is even AND the
mean payoff (lim inf of edge-payoff averages) strictly exceeds the threshold.

The strict-threshold decision reduces to an energy parity game: with
``g = denominator * (granularity) * payoff - (numerator * granularity + 1)``
per edge, where the granularity constant exceeds the number of edges on any
simple cycle, a cycle's shifted sum is positive exactly when its payoff mean
strictly exceeds the threshold, and no cycle sums to zero.  The energy parity
game is solved by a color recursion whose inner loops are vectorized energy
liftings, so the same code handles eight-vertex test games and the large
arenas produced by ``translate``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, InvariantError
from . import _graph

INF64 = np.int64(2) ** 61
_INF_CUT = np.int64(2) ** 60


# ---------------------------------------------------------------------------
# game container


class MeanPayoffParityGame:
    """Bipartite weighted parity arena.

    owners[v] is 1 or 2; every edge goes from one side to the other.  Payoffs
    are positive integers, colors are nonnegative integers, the threshold is
    an exact Fraction in payoff units, and payoff_scale converts payoff units
    back to seconds of signal length.
    """

    def __init__(self, owners, colors, esrc, edst, payoffs, threshold,
                 payoff_scale=Fraction(1), meta=None):
        owners = np.asarray(owners, dtype=np.int8)
        colors = np.asarray(colors, dtype=np.int64)
        esrc, edst, payoffs = _graph.sort_edges(
            np.asarray(esrc, dtype=np.int64),
            np.asarray(edst, dtype=np.int64),
            np.asarray(payoffs, dtype=np.int64))
        self.owners = owners
        self.colors = colors
        self.esrc = esrc
        self.edst = edst
        self.payoffs = payoffs
        self.threshold = Fraction(threshold)
        self.payoff_scale = Fraction(payoff_scale)
        self.meta = dict(meta or {})
        self.lo, self.hi = _graph.out_slices(self.esrc, len(owners))

    @property
    def n_vertices(self) -> int:
        return len(self.owners)

    @property
    def n_edges(self) -> int:
        return len(self.esrc)

    def out_edges(self, v: int) -> range:
        return range(int(self.lo[v]), int(self.hi[v]))

    def check_invariants(self) -> None:
        if self.n_vertices == 0:
            raise InvariantError("game has no vertices")
        if not np.all((self.owners == 1) | (self.owners == 2)):
            raise InvariantError("vertex owners must be 1 or 2")
        if np.any(self.colors < 0):
            raise InvariantError("colors must be nonnegative")
        if self.n_edges:
            if np.any(self.payoffs < 1):
                raise InvariantError("edge payoffs must be positive integers")
            same = self.owners[self.esrc] == self.owners[self.edst]
            if np.any(same):
                k = int(np.flatnonzero(same)[0])
                raise InvariantError(
                    "edge %d -> %d does not alternate sides"
                    % (int(self.esrc[k]), int(self.edst[k])))
        p2 = np.flatnonzero(self.owners == 2)
        if p2.size and np.any(self.hi[p2] == self.lo[p2]):
            v = int(p2[np.flatnonzero(self.hi[p2] == self.lo[p2])[0]])
            raise InvariantError("successor vertex %d has no outgoing edge" % v)
        if self.threshold <= 0:
            raise InvariantError("threshold must be positive")
        if self.meta.get("equal_stage_payoffs") and self.n_edges:
            # both edges of every round must carry the same payoff, i.e. all
            # payoffs incident to one Player-2 vertex agree
            stamp = np.full(self.n_vertices, -1, dtype=np.int64)
            mid = np.where(self.owners[self.esrc] == 1, self.edst, self.esrc)
            for k in range(self.n_edges):
                v = int(mid[k])
                if stamp[v] == -1:
                    stamp[v] = self.payoffs[k]
                elif stamp[v] != self.payoffs[k]:
                    raise InvariantError(
                        "unequal stage payoffs around successor vertex %d" % v)


# ---------------------------------------------------------------------------
# strategies


class TableStrategy:
    """Finite-memory strategy stored as explicit move/update tables.

    update_rule: "identity" (memory never changes), "clock" (memory counts
    steps modulo n_memory), or "table" (explicit per-edge map).
    """

    kind = "table"

    def __init__(self, n_memory, init_memory, move, update_rule="identity",
                 update=None, meta=None):
        self.n_memory = int(n_memory)
        self.init_memory = int(init_memory)
        self.move = dict(move)
        self.update_rule = update_rule
        self.update = dict(update or {})
        self.meta = dict(meta or {})

    def initial(self):
        return self.init_memory

    def move_edge(self, mem, v):
        return self.move[(int(mem), int(v))]

    def update_memory(self, mem, edge):
        if self.update_rule == "identity":
            return mem
        if self.update_rule == "clock":
            return (mem + 1) % self.n_memory
        return self.update.get((int(mem), int(edge)), mem)

    # vectorized interface used by the play harnesses ----------------------
    def bind(self, game):
        n = game.n_vertices
        mat = np.full((self.n_memory, n), -1, dtype=np.int64)
        for (m, v), e in self.move.items():
            mat[m, v] = e
        self._move_mat = mat
        if self.update_rule == "table":
            umat = np.tile(np.arange(self.n_memory, dtype=np.int64)[:, None],
                           (1, game.n_edges))
            for (m, e), m2 in self.update.items():
                umat[m, e] = m2
            self._update_mat = umat
        return self

    def move_batch(self, mem, verts):
        return self._move_mat[mem, verts]

    def update_batch(self, mem, edges):
        if self.update_rule == "identity":
            return mem
        if self.update_rule == "clock":
            return (mem + 1) % self.n_memory
        return self._update_mat[mem, edges]


class _EPNode:
    """One level of the energy-parity recursion, kept for strategy replay."""

    __slots__ = ("kind", "region", "in_A", "attr_move", "gfe_move",
                 "sub_region", "theta_spend", "theta_commit", "sub",
                 "chunks")

    def __init__(self, kind):
        self.kind = kind
        self.sub = None
        self.chunks = None


class BudgetStrategy:
    """Finite-memory strategy whose memory is a saturating energy counter.

    The move rules come from the solver's recursion: reach moves and
    sub-strategies fire once the counter clears their budget thresholds,
    otherwise the strategy falls back to moves that never lose energy on a
    cycle.  The memory state set is {fresh} plus the counter range
    [counter_min, saturation]; update adds the traversed edge's weight and
    saturates.
    """

    kind = "budget"
    FRESH = -(2 ** 62)

    def __init__(self, weights, rules, credits, bsat, meta=None):
        # rules: list of (vertex mask, per-vertex threshold array, edge array)
        self.weights = np.asarray(weights, dtype=np.int64)
        self.rules = rules
        self.credits = credits
        self.bsat = int(bsat)
        self.meta = dict(meta or {})
        self.esrc = None  # bound later

    @property
    def n_memory(self):
        return self.bsat + 2  # counter range plus the fresh state

    def initial(self):
        return self.FRESH

    def bind(self, game):
        self.esrc = game.esrc
        return self

    def _budget(self, mem, v):
        if mem == self.FRESH:
            c = self.credits[v]
            return self.bsat if c is None else min(int(c), self.bsat)
        return int(mem)

    def move_edge(self, mem, v):
        b = self._budget(mem, int(v))
        for mask, thresh, edges in self.rules:
            if mask[v] and edges[v] >= 0 and b >= int(thresh[v]):
                return int(edges[v])
        raise InvariantError("no move rule applies at vertex %d" % v)

    def update_memory(self, mem, edge):
        if mem == self.FRESH:
            src = int(self.esrc[edge])
            c = self.credits[src]
            b = self.bsat if c is None else min(int(c), self.bsat)
        else:
            b = int(mem)
        return min(b + int(self.weights[edge]), self.bsat)

    def move_batch(self, mem, verts):
        cred = np.array([self.bsat if self.credits[v] is None
                         else min(int(self.credits[v]), self.bsat)
                         for v in verts], dtype=np.int64)
        b = np.where(mem == self.FRESH, cred, mem)
        out = np.full(len(verts), -1, dtype=np.int64)
        for mask, thresh, edges in self.rules:
            e = edges[verts]
            ok = (out < 0) & mask[verts] & (e >= 0) & (b >= thresh[verts])
            out[ok] = e[ok]
        if np.any(out < 0):
            v = int(np.asarray(verts)[np.flatnonzero(out < 0)[0]])
            raise InvariantError("no move rule applies at vertex %d" % v)
        return out

    def update_batch(self, mem, edges):
        src = self.esrc[edges]
        cred = np.array([self.bsat if self.credits[int(s)] is None
                         else min(int(self.credits[int(s)]), self.bsat)
                         for s in src], dtype=np.int64)
        b = np.where(mem == self.FRESH, cred, mem)
        return np.minimum(b + self.weights[edges], self.bsat)


# ---------------------------------------------------------------------------
# vectorized primitives on an edge-sorted arena


class _Arena:
    """Raw arrays plus cached slices; weights may be int64 or python ints."""

    def __init__(self, owners, esrc, edst, weights, obj=False):
        self.n = len(owners)
        self.owners = np.asarray(owners, dtype=np.int8)
        self.esrc = np.asarray(esrc, dtype=np.int64)
        self.edst = np.asarray(edst, dtype=np.int64)
        self.obj = obj
        if obj:
            self.w = np.array([int(x) for x in weights], dtype=object)
            self.INF = int(10) ** 30
        else:
            self.w = np.asarray(weights, dtype=np.int64)
            self.INF = int(INF64)
        self.lo, self.hi = _graph.out_slices(self.esrc, self.n)
        self.p1 = self.owners == 1
        self.p2 = self.owners == 2

    def wmax(self, active):
        if len(self.esrc) == 0:
            return 1
        valid = active[self.esrc] & active[self.edst]
        if not np.any(valid):
            return 1
        mags = [abs(int(x)) for x in self.w[valid]] if self.obj else \
            np.abs(self.w[valid])
        return max(1, int(max(mags) if self.obj else mags.max()))

    def _reduce(self, cand, empty_val):
        """Per-source (min for P1, max for P2) of per-edge candidate values."""
        lo = self.lo
        full = np.flatnonzero(self.hi > lo)
        mn = np.full(self.n, empty_val, dtype=object if self.obj else np.int64)
        mx = np.full(self.n, empty_val, dtype=object if self.obj else np.int64)
        if full.size:
            mn_all = np.minimum.reduceat(cand, lo[full])
            mx_all = np.maximum.reduceat(cand, lo[full])
            mn[full] = mn_all
            mx[full] = mx_all
        return mn, mx

    def valid_mask(self, active, pin=None):
        """Edges usable from the live region; targets may be live or pinned
        (pinned = absorbing, already-decided vertices with fixed credits)."""
        tgt_ok = active if pin is None else (active | pin)
        return active[self.esrc] & tgt_ok[self.edst]

    def dead_masks(self, active, valid):
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.esrc[valid], 1)
        dead = active & (deg == 0)
        return dead & self.p1, dead & self.p2

    def bellman(self, f, active, valid, dead1, dead2):
        """One application of the energy operator.  INF-safe.  A stuck
        Player 1 loses (INF); a stuck Player 2 hands Player 1 a win (0)."""
        INF = self.INF
        fd = f[self.edst]
        cand = fd - self.w
        if self.obj:
            cand = np.array([0 if c < 0 else c for c in cand], dtype=object)
            cand = np.where(fd >= INF, INF, cand)
            cand_min = np.where(valid, cand, INF)
            cand_max = np.where(valid, cand, -1)
        else:
            np.maximum(cand, 0, out=cand)
            cand = np.where(fd >= _INF_CUT, INF64, cand)
            cand_min = np.where(valid, cand, INF64)
            cand_max = np.where(valid, cand, np.int64(-1))
        mn, _ = self._reduce(cand_min, INF)
        _, mx = self._reduce(cand_max, -1)
        g = np.where(self.p1, mn, mx)
        g = np.where(dead1, INF, g)
        g = np.where(dead2, 0, g)
        g = np.where(active, g, INF)
        return g

    def argmin_moves(self, f, active, valid, vertices_mask):
        """P1 edges achieving the Bellman optimum at f (lowest index wins)."""
        INF = self.INF
        fd = f[self.edst]
        cand = fd - self.w
        if self.obj:
            cand = np.array([0 if c < 0 else c for c in cand], dtype=object)
        else:
            np.maximum(cand, 0, out=cand)
        cand = np.where((fd >= (self.INF if self.obj else _INF_CUT)) | ~valid,
                        INF, cand)
        mn, _ = self._reduce(cand, INF)
        best = mn[self.esrc]
        E = len(self.esrc)
        idx = np.where((cand == best) & valid, np.arange(E), E + 1)
        lo = self.lo
        moves = np.full(self.n, -1, dtype=np.int64)
        full = np.flatnonzero(self.hi > lo)
        if full.size:
            first = np.minimum.reduceat(idx, lo[full])
            ok = first <= E
            sel = full[ok]
            moves[sel] = first[ok]
        moves[~(vertices_mask & self.p1)] = -1
        # vertices whose optimum is INF have no usable move
        bad = np.zeros(self.n, dtype=bool)
        good_f = f < (self.INF if self.obj else _INF_CUT)
        bad[~good_f] = True
        moves[bad] = -1
        return moves


def _attract(arena: _Arena, active, target, player):
    """Classical (unweighted) attractor with a positional pull strategy."""
    att = target & active
    strat = np.full(arena.n, -1, dtype=np.int64)
    valid = active[arena.esrc] & active[arena.edst]
    deg = np.zeros(arena.n, dtype=np.int64)
    np.add.at(deg, arena.esrc[valid], 1)
    own = arena.owners == player
    E = len(arena.esrc)
    while True:
        reach = valid & att[arena.edst]
        cnt = np.zeros(arena.n, dtype=np.int64)
        np.add.at(cnt, arena.esrc[reach], 1)
        anyin = cnt > 0
        allin = (deg > 0) & (cnt == deg)
        new = active & ~att & np.where(own, anyin, allin)
        # dead ends of the opponent are vacuously attracted
        new |= active & ~att & ~own & (deg == 0)
        if not np.any(new):
            break
        take = new & own
        if np.any(take):
            idx = np.where(reach, np.arange(E), E + 1)
            lo = arena.lo
            full = np.flatnonzero(arena.hi > lo)
            first = np.full(arena.n, E + 1, dtype=np.int64)
            if full.size:
                first[full] = np.minimum.reduceat(idx, lo[full])
            sel = np.flatnonzero(take)
            strat[sel] = np.where(first[sel] <= E, first[sel], -1)
        att |= new
    return att, strat


def _lfp_up(arena: _Arena, active, offers=None, cap=None, max_sweeps=None,
            pin=None, pin_vals=None):
    """Least fixpoint of the energy operator from below (minimal credits).

    Pinned vertices act as an absorbing boundary: moving onto one ends the
    play favourably provided the energy there is at least the pinned value.
    Finite entries are trustworthy only when the returned flag says the
    iteration converged; on budget exhaustion every vertex whose value could
    still move (and everything depending on it) is pushed to INF, which keeps
    winning claims sound.
    """
    INF = arena.INF
    n = arena.n
    valid = arena.valid_mask(active, pin)
    have_pin = pin is not None and bool(np.any(pin))
    if cap is None:
        cap = n * arena.wmax(active) + 1
        fin = []
        if offers is not None:
            fin += [int(x) for x in offers[active] if x < INF]
        if have_pin:
            fin += [int(x) for x in pin_vals[pin] if x < INF]
        cap += max(fin) if fin else 0
    if not arena.obj and cap >= int(_INF_CUT) // 4:
        raise InvariantError("energy range exceeds the fixed-width solver")
    if max_sweeps is None:
        max_sweeps = 200_000 if n <= 256 else 3000
    f = np.where(active, 0, INF).astype(object if arena.obj else np.int64)
    if offers is not None:
        f = np.minimum(f, offers)
    if have_pin:
        f[pin] = pin_vals[pin]
    dead1, dead2 = arena.dead_masks(active, valid)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        g = arena.bellman(f, active, valid, dead1, dead2)
        if offers is not None:
            g = np.minimum(g, offers)
        g = np.where(active, g, INF)
        over = g > cap
        if arena.obj:
            g = np.where(over & (g < INF), INF, g)
        else:
            g = np.where(over & (g < _INF_CUT), INF64, g)
        if have_pin:
            g[pin] = pin_vals[pin]
        if np.array_equal(g, f):
            converged = True
            break
        f = g
    if not converged:
        # push every still-moving vertex and its dependency cone to INF
        g = arena.bellman(f, active, valid, dead1, dead2)
        if offers is not None:
            g = np.minimum(g, offers)
        if have_pin:
            g[pin] = pin_vals[pin]
        unstable = active & ~np.equal(g, f)
        while True:
            touch = unstable[arena.edst] & valid
            vs = np.zeros(n, dtype=bool)
            vs[arena.esrc[touch]] = True
            grow = active & vs & ~unstable
            if not np.any(grow):
                break
            unstable |= grow
        f = np.where(unstable, INF, f)
    return f, sweeps, converged


def _reach_down(arena: _Arena, active, offers, max_sweeps=None,
                pin=None, pin_vals=None):
    """Greatest fixpoint from above: minimal credits to *reach* an offer,
    a pinned boundary vertex, or a vertex where the opponent is stuck.

    Also records, for each vertex, the first sweep at which it became finite
    (rank), the witness edge used then, and the credit that makes the witness
    path safe.  Both players' moves strictly decrease the rank, so a play
    that respects the recorded data arrives within max-rank steps.  Early
    stopping is sound: finite entries are real witnesses.
    """
    INF = arena.INF
    n = arena.n
    valid = arena.valid_mask(active, pin)
    have_pin = pin is not None and bool(np.any(pin))
    if max_sweeps is None:
        max_sweeps = 200_000 if n <= 256 else 3000
    dead1, dead2 = arena.dead_masks(active, valid)
    f = np.where(active, offers, INF).astype(object if arena.obj else np.int64)
    if have_pin:
        f[pin] = pin_vals[pin]
    rank = np.full(n, -1, dtype=np.int64)
    witness = np.full(n, -1, dtype=np.int64)
    gr = np.full(n, INF, dtype=object if arena.obj else np.int64)
    cut = INF if arena.obj else _INF_CUT
    base_fin = f < cut
    rank[base_fin] = 0
    gr[base_fin] = f[base_fin]
    sweeps = 0
    E = len(arena.esrc)
    while sweeps < max_sweeps:
        sweeps += 1
        g = arena.bellman(f, active, valid, dead1, dead2)
        # an offer is always available as a stopping option
        g = np.minimum(g, np.where(active, offers, INF))
        g = np.where(active, g, INF)
        if have_pin:
            g[pin] = pin_vals[pin]
        newf = np.minimum(f, g)
        newly = (newf < cut) & (rank < 0)
        if np.any(newly):
            sel = np.flatnonzero(newly)
            rank[sel] = sweeps
            gr[sel] = newf[sel]
            # witness edges for P1 vertices: first edge achieving the value
            fd = f[arena.edst]
            cand = fd - arena.w
            if arena.obj:
                cand = np.array([0 if c < 0 else c for c in cand],
                                dtype=object)
            else:
                np.maximum(cand, 0, out=cand)
            cand = np.where((fd >= cut) | ~valid, INF, cand)
            idx = np.where(cand <= newf[arena.esrc], np.arange(E), E + 1)
            lo = arena.lo
            full = np.flatnonzero(arena.hi > lo)
            first = np.full(n, E + 1, dtype=np.int64)
            if full.size:
                first[full] = np.minimum.reduceat(idx, lo[full])
            take = newly & arena.p1 & (first <= E) & (offers >= cut)
            witness[take] = first[take]
        if np.array_equal(newf, f):
            break
        f = newf
    return f, rank, witness, gr, sweeps


# ---------------------------------------------------------------------------
# plain parity games (exact, positional strategies for both players)


@dataclass
class ParitySolution:
    win1: np.ndarray
    win2: np.ndarray
    strat1: np.ndarray
    strat2: np.ndarray


def solve_parity(owners, colors, esrc, edst, active=None) -> ParitySolution:
    """Max-parity game: Player 1 wins when the top recurring color is even.

    Dead ends lose for their owner.  Returns winning sets and positional
    strategies (edge indices into the given, source-sorted edge list).
    """
    owners = np.asarray(owners, dtype=np.int8)
    colors = np.asarray(colors, dtype=np.int64)
    esrc = np.asarray(esrc, dtype=np.int64)
    edst = np.asarray(edst, dtype=np.int64)
    if np.any(esrc[:-1] > esrc[1:]):
        raise InvariantError("edges must be sorted by source")
    arena = _Arena(owners, esrc, edst, np.zeros(len(esrc), dtype=np.int64))
    n = arena.n
    if active is None:
        active = np.ones(n, dtype=bool)
    else:
        active = np.asarray(active, dtype=bool).copy()

    def internal_edge(act):
        return act[esrc] & act[edst]

    def outdeg(act):
        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, esrc[internal_edge(act)], 1)
        return deg

    def rec(act):
        w1 = np.zeros(n, dtype=bool)
        w2 = np.zeros(n, dtype=bool)
        s1 = np.full(n, -1, dtype=np.int64)
        s2 = np.full(n, -1, dtype=np.int64)
        act = act.copy()
        while np.any(act):
            deg = outdeg(act)
            dead = act & (deg == 0)
            if np.any(dead):
                d1 = dead & (owners == 1)
                if np.any(d1):
                    B, bs = _attract(arena, act, d1, 2)
                    w2 |= B
                    take = B & ~d1 & (owners == 2)
                    s2[take] = bs[take]
                    act &= ~B
                    continue
                d2 = dead & (owners == 2)
                A, as_ = _attract(arena, act, d2, 1)
                w1 |= A
                take = A & ~d2 & (owners == 1)
                s1[take] = as_[take]
                act &= ~A
                continue
            d = int(colors[act].max())
            p = 1 if d % 2 == 0 else 2
            o = 3 - p
            T = act & (colors == d)
            A, astrat = _attract(arena, act, T, p)
            r1, r2, rs1, rs2 = rec(act & ~A)
            ro = r2 if p == 1 else r1
            if not np.any(ro):
                wp = w1 if p == 1 else w2
                sp = s1 if p == 1 else s2
                rp = rs1 if p == 1 else rs2
                wp |= act
                inner = act & ~A
                mine = (owners == p)
                sp[inner & mine] = rp[inner & mine]
                pull = A & ~T & mine
                sp[pull] = astrat[pull]
                topv = np.flatnonzero(T & mine)
                if topv.size:
                    valid = internal_edge(act)
                    E = len(esrc)
                    idx = np.where(valid, np.arange(E), E + 1)
                    lofull = np.flatnonzero(arena.hi > arena.lo)
                    first = np.full(n, E + 1, dtype=np.int64)
                    if lofull.size:
                        first[lofull] = np.minimum.reduceat(
                            idx, arena.lo[lofull])
                    sp[topv] = np.where(first[topv] <= E, first[topv], -1)
                return w1, w2, s1, s2
            B, bstrat = _attract(arena, act, ro, o)
            wo = w1 if o == 1 else w2
            so = s1 if o == 1 else s2
            rz = rs1 if o == 1 else rs2
            wo |= B
            mine = (owners == o)
            so[ro & mine] = rz[ro & mine]
            pull = B & ~ro & mine
            so[pull] = bstrat[pull]
            act &= ~B
        return w1, w2, s1, s2

    w1, w2, s1, s2 = rec(active)
    return ParitySolution(w1, w2, s1, s2)


# ---------------------------------------------------------------------------
# energy parity games


@dataclass
class EnergyParityResult:
    winning: np.ndarray
    credits: list            # per vertex: int or None (losing)
    strategy: Optional[BudgetStrategy]
    diagnostics: dict


class _Pins:
    """Absorbing boundary for subgame solves: vertices already decided for
    the energy player, with the raw credit they demand on arrival (and its
    counterpart on the perturbed scale)."""

    __slots__ = ("mask", "raw", "pert")

    def __init__(self, n, obj_raw, obj_pert):
        self.mask = np.zeros(n, dtype=bool)
        self.raw = np.zeros(n, dtype=object if obj_raw else np.int64)
        self.pert = np.zeros(n, dtype=object if obj_pert else np.int64)

    def child(self):
        out = _Pins.__new__(_Pins)
        out.mask = self.mask.copy()
        out.raw = self.raw.copy()
        out.pert = self.pert.copy()
        return out

    def add(self, region, raw_vals, M):
        self.mask |= region
        sel = np.flatnonzero(region)
        for v in sel:
            rv = int(raw_vals[v])
            self.raw[v] = rv
            # on the perturbed scale one extra raw unit dominates any simple
            # path's color-term contribution
            self.pert[v] = (rv + 1) * M if M > 1 else rv


def _gfe(arena, arena_pert, active, pins, diag, max_sweeps):
    """Vertices with a good-for-energy strategy, plus the positional moves.

    On the perturbed arena a cycle evaluates >= 0 exactly when its raw sum is
    positive, or zero with an even maximal color; the raw arena is used
    directly when the caller guarantees no zero-sum cycles exist.  Pinned
    vertices count as favourable stops when reached with enough energy.
    """
    f, sweeps, conv = _lfp_up(arena_pert, active, max_sweeps=max_sweeps,
                              pin=pins.mask, pin_vals=pins.pert)
    diag["lift_sweeps"] += sweeps
    diag["lift_converged"] &= conv
    cut = arena_pert.INF if arena_pert.obj else _INF_CUT
    fin = active & (f < cut)
    valid = arena_pert.valid_mask(active, pins.mask)
    moves = arena_pert.argmin_moves(f, active, valid, fin)
    return fin, moves, f


def _solve_ep_region(arena, arena_pert, colors, active, pins, M, diag,
                     max_sweeps):
    """Returns (credits array over the full vertex set, strategy node).

    Credits are exact as a winning set and sufficient as budgets, relative
    to the absorbing boundary described by `pins`.
    """
    INF = arena.INF
    n = arena.n
    credits = np.full(n, INF, dtype=object if arena.obj else np.int64)
    if not np.any(active):
        return credits, None
    d = int(colors[active].max())
    if d % 2 == 1:
        return _ep_odd(arena, arena_pert, colors, active, pins, M, diag,
                       max_sweeps)
    return _ep_even(arena, arena_pert, colors, active, pins, M, diag,
                    max_sweeps)


def _ep_odd(arena, arena_pert, colors, active, pins, M, diag, max_sweeps):
    """Top color favours the opponent: accumulate winning chunks.

    Each round solves the subgame clear of the opponent's attractor to the
    top color, then takes everything that can force its way (with enough
    energy) to those winners or to previously decided vertices.  The chunk
    becomes part of the absorbing boundary for later rounds; what survives
    every round is losing.
    """
    INF = arena.INF
    n = arena.n
    cut = INF if arena.obj else _INF_CUT
    credits = np.full(n, INF, dtype=object if arena.obj else np.int64)
    d = int(colors[active].max())
    work = active.copy()
    won = pins.child()
    chunks = []
    while np.any(work):
        dcur = int(colors[work].max())
        if dcur < d:
            # the troublesome color is gone: one fresh dispatch settles
            # the remainder exactly
            sub_credits, sub_node = _solve_ep_region(
                arena, arena_pert, colors, work, won, M, diag, max_sweeps)
            fin = work & (sub_credits < cut)
            if np.any(fin):
                chunks.append({"kind": "defer", "region": fin,
                               "node": sub_node})
                credits[fin] = sub_credits[fin]
            break
        T = work & (colors == dcur)
        B, _ = _attract(arena, work, T, 2)
        sub_credits, sub_node = _solve_ep_region(
            arena, arena_pert, colors, work & ~B, won, M, diag, max_sweeps)
        wprime = work & (sub_credits < cut)
        offers = np.where(wprime, sub_credits, INF)
        f, rank, wit, gr, sweeps = _reach_down(
            arena, work, offers, max_sweeps=max_sweeps,
            pin=won.mask, pin_vals=won.raw)
        diag["reach_sweeps"] += sweeps
        region = work & (f < cut)
        if not np.any(region):
            break
        valid = arena.valid_mask(work, won.mask)
        f_move = arena.argmin_moves(f, work, valid, region)
        chunks.append({"kind": "reach", "region": region, "wprime": wprime,
                       "node": sub_node, "f_move": f_move, "f_req": f.copy(),
                       "g_move": wit, "g_credit": gr})
        credits[region] = gr[region]
        won.add(region, gr, M)
        work &= ~region
    if not chunks:
        return credits, None
    node = _EPNode("odd")
    node.region = active & (credits < cut)
    node.chunks = chunks
    return credits, node


def _ep_even(arena, arena_pert, colors, active, pins, M, diag, max_sweeps):
    """Top color favours the energy player: stabilize, then win everywhere.

    Alternates removing vertices without a good-for-energy strategy and
    (opponent attractors of) subgame losers until the region survives both
    tests; the survivors win with a pump / touch-the-top-color / committed
    subgame budget automaton."""
    INF = arena.INF
    n = arena.n
    cut = INF if arena.obj else _INF_CUT
    active = active.copy()
    while True:
        credits = np.full(n, INF, dtype=object if arena.obj else np.int64)
        if not np.any(active):
            return credits, None
        d = int(colors[active].max())
        if d % 2 == 1:
            return _ep_odd(arena, arena_pert, colors, active, pins, M, diag,
                           max_sweeps)
        X, gmoves, fpert = _gfe(arena, arena_pert, active, pins, diag,
                                max_sweeps)
        NX = active & ~X
        if np.any(NX):
            B, _ = _attract(arena, active, NX, 2)
            active &= ~B
            continue
        T = active & (colors == d)
        A, astrat = _attract(arena, active, T, 1)
        sub_credits, sub_node = _solve_ep_region(
            arena, arena_pert, colors, active & ~A, pins, M, diag,
            max_sweeps)
        L = (active & ~A) & ~(sub_credits < cut)
        if np.any(L):
            B, _ = _attract(arena, active, L, 2)
            active &= ~B
            continue
        # every vertex of `active` is winning
        n_act = int(active.sum())
        W = arena.wmax(active)
        # raw-scale bound on the pump-mode requirement anywhere in the
        # region: one extra raw unit absorbs the color-term residue of a
        # simple path on the perturbed scale
        maxf_raw = 0
        for v in np.flatnonzero(active):
            maxf_raw = max(maxf_raw, int(fpert[v]) // M + 2)
        theta_spend = n_act * W + maxf_raw + 1
        fin_sub = [int(sub_credits[v]) for v in np.flatnonzero(active & ~A)]
        capsub = max(fin_sub) if fin_sub else 0
        theta_commit = theta_spend + capsub + 1
        node = _EPNode("even")
        node.region = active.copy()
        node.in_A = A
        node.attr_move = astrat
        node.gfe_move = gmoves
        node.sub_region = active & ~A
        node.sub = sub_node
        node.theta_spend = theta_spend
        node.theta_commit = theta_commit
        credits = np.where(active, theta_commit + n_act * W + 1, INF)
        return credits, node


def _clip_thr(vals, floor):
    thr = np.where(np.less(vals, _INF_CUT), vals,
                   np.int64(2) ** 62 - 1).astype(np.int64)
    return np.maximum(thr, floor)


def _flatten_rules(node, n, floor=0):
    """Depth-first rule list: (vertex mask, per-vertex threshold, edges).

    The floor keeps inner (committed) rules from firing at budgets that
    belong to an enclosing mode; every enclosing even node contributes a
    pump rule that catches any budget at or above its own floor."""
    rules = []
    if node is None:
        return rules
    if node.kind == "even":
        thr = np.full(n, max(floor, node.theta_spend), dtype=np.int64)
        rules.append((node.in_A & (node.attr_move >= 0), thr, node.attr_move))
        rules.extend(_flatten_rules(node.sub, n,
                                    max(floor, node.theta_commit)))
        thr0 = np.full(n, floor, dtype=np.int64)
        rules.append((node.region, thr0, node.gfe_move))
    else:
        for ch in node.chunks:
            rules.extend(_flatten_rules(ch["node"], n, floor))
            if ch["kind"] != "reach":
                continue
            gmask = ch["region"] & (ch["g_move"] >= 0)
            rules.append((gmask, _clip_thr(ch["g_credit"], floor),
                          ch["g_move"]))
            fmask = ch["region"] & (ch["f_move"] >= 0)
            rules.append((fmask, _clip_thr(ch["f_req"], floor),
                          ch["f_move"]))
    return rules


def solve_energy_parity(owners, colors, esrc, edst, weights, *,
                        no_zero_cycles=False,
                        max_sweeps=None) -> EnergyParityResult:
    """Player 1 keeps the running weight sum above a finite floor while the
    top recurring color is even.  Weights are integers of either sign.

    Returns the winning set, sufficient (not minimal) initial credits, and a
    budget-counter strategy.
    """
    owners = np.asarray(owners, dtype=np.int8)
    colors = np.asarray(colors, dtype=np.int64)
    esrc = np.asarray(esrc, dtype=np.int64)
    edst = np.asarray(edst, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.int64)
    if len(esrc) and np.any(esrc[:-1] > esrc[1:]):
        raise InvariantError("edges must be sorted by source")
    n = len(owners)
    arena = _Arena(owners, esrc, edst, weights)
    if no_zero_cycles:
        arena_pert = arena
        M = 1
    else:
        # positional color encoding: a zero raw cycle is perturbed toward
        # +/- depending on the parity of its maximal color
        d = int(colors.max()) if n else 0
        M = n * (n + 1) ** d + 1
        tweak = [(1 if colors[esrc[i]] % 2 == 0 else -1)
                 * (n + 1) ** int(colors[esrc[i]]) for i in range(len(esrc))]
        pw = [int(weights[i]) * M + tweak[i] for i in range(len(esrc))]
        big = max((abs(x) for x in pw), default=0)
        # headroom for boundary credits accumulated across recursion levels
        Wraw = int(np.abs(weights).max()) if len(esrc) else 0
        grow = (d + 2) * (n * n * Wraw + 4 * n * Wraw + 4 * n + 16)
        if (big * (n + 2) + (grow + 2) * M) * 8 < int(_INF_CUT):
            arena_pert = _Arena(owners, esrc, edst,
                                np.array(pw, dtype=np.int64))
        else:
            arena_pert = _Arena(owners, esrc, edst, pw, obj=True)
    diag = {"lift_sweeps": 0, "reach_sweeps": 0, "lift_converged": True}
    active = np.ones(n, dtype=bool)
    pins = _Pins(n, arena.obj, arena_pert.obj)
    credits_arr, node = _solve_ep_region(arena, arena_pert, colors, active,
                                         pins, M, diag, max_sweeps)
    cut = arena.INF if arena.obj else _INF_CUT
    winning = credits_arr < cut
    credits = [int(credits_arr[v]) if winning[v] else None for v in range(n)]
    strategy = None
    if np.any(winning) and node is not None:
        rules = _flatten_rules(node, n)
        thetas = [int(t[m].max()) for m, t, _ in rules if np.any(m)]
        fin = [c for c in credits if c is not None]
        W = arena.wmax(active)
        bsat = max(thetas + fin + [0]) + 2 * n * W + 2
        strategy = BudgetStrategy(weights, rules, credits, bsat,
                                  meta={"kind": "energy-parity"})
    diag["winning_count"] = int(winning.sum())
    return EnergyParityResult(winning, credits, strategy, diag)


# ---------------------------------------------------------------------------
# strict-threshold solver for mean-payoff parity games


@dataclass
class ThresholdSolution:
    winning: np.ndarray
    strategy: object                  # TableStrategy or BudgetStrategy
    credits: list
    diagnostics: dict


def threshold_weights(game: MeanPayoffParityGame):
    """Shifted integer weights whose cycle sums decide the strict threshold.

    The granularity constant is one more than the largest possible number of
    (Player-1 moves on translated arenas / edges otherwise) on a simple
    cycle, which makes zero-sum cycles impossible and cycle-sum positivity
    equivalent to 'payoff mean strictly above threshold'.
    """
    a = game.threshold.numerator
    b = game.threshold.denominator
    if game.meta.get("equal_stage_payoffs"):
        gran = int(np.sum(game.owners == 1)) + 1
    else:
        gran = game.n_vertices + 1
    w = b * gran * game.payoffs - (a * gran + 1)
    if np.any(np.abs(w.astype(object)) >= int(_INF_CUT) // max(1, game.n_vertices + 1)):
        raise InvariantError("shifted weights overflow the solver range")
    return w.astype(np.int64), gran


def _verify_positional(game, moves, winning):
    """Check that fixing Player 1's edges leaves only good reachable cycles.

    Good: payoff mean strictly above the threshold and even maximal color.
    Exactness relies on the shifted weights having no zero-sum cycles.
    """
    n = game.n_vertices
    w, _ = threshold_weights(game)
    keep = np.zeros(game.n_edges, dtype=bool)
    p2e = game.owners[game.esrc] == 2
    keep |= p2e
    mv = moves[(game.owners == 1) & winning]
    mv = mv[mv >= 0]
    keep[mv] = True
    keep &= winning[game.esrc] & winning[game.edst]
    # every winning P1 vertex needs its chosen edge; P2 must stay inside
    p1w = np.flatnonzero((game.owners == 1) & winning)
    for v in p1w:
        e = moves[v]
        if e < 0 or not winning[game.edst[e]]:
            return False
    if np.any(p2e & winning[game.esrc] & ~winning[game.edst]):
        return False
    # no nonpositive-sum cycle: one-player energy lifting must stay finite
    sub_owner = np.full(n, 2, dtype=np.int8)
    arena = _Arena(sub_owner, game.esrc[keep], game.edst[keep], w[keep])
    f, _, conv = _lfp_up(arena, winning.copy())
    if not conv:
        return False
    cut = _INF_CUT
    if np.any((f[winning] >= cut)):
        return False
    # no odd-max cycle: peel vertices with no incoming or outgoing edges
    # repeatedly inside each odd color ceiling
    colors = game.colors
    es, ed = game.esrc[keep], game.edst[keep]
    for o in sorted({int(c) for c in colors[winning] if c % 2 == 1}):
        act = winning & (colors <= o)
        while True:
            inside = act[es] & act[ed]
            indeg = np.zeros(n, dtype=np.int64)
            outdeg = np.zeros(n, dtype=np.int64)
            np.add.at(indeg, ed[inside], 1)
            np.add.at(outdeg, es[inside], 1)
            drop = act & ((indeg == 0) | (outdeg == 0))
            if not np.any(drop):
                break
            act &= ~drop
        if np.any(act & (colors == o)):
            # a color-o vertex sits in the cyclic core; it may still not lie
            # on a cycle, so fall back to the exact component test
            edges = [(int(es[i]), int(ed[i]))
                     for i in range(len(es)) if act[es[i]] and act[ed[i]]]
            bad = _graph.odd_max_cycle_vertices(
                n, edges, [int(c) for c in colors], [bool(x) for x in act])
            if any(bad):
                return False
    return True


def solve_threshold(game: MeanPayoffParityGame, *,
                    max_sweeps=None) -> ThresholdSolution:
    """Decide, per vertex, whether Player 1 can keep the mean payoff strictly
    above the game's threshold while satisfying the parity condition."""
    game.check_invariants()
    w, gran = threshold_weights(game)
    res = solve_energy_parity(game.owners, game.colors, game.esrc, game.edst,
                              w, no_zero_cycles=True, max_sweeps=max_sweeps)
    diagnostics = dict(res.diagnostics)
    diagnostics["granularity"] = gran
    strategy = res.strategy
    ladder = "none"
    if res.strategy is not None and np.any(res.winning):
        # try to flatten the budget strategy into a positional table by
        # sampling its moves at a high and at a low counter value
        res.strategy.bind(game)
        p1w = np.flatnonzero((game.owners == 1) & res.winning)
        for cand_name, level in (("steady", res.strategy.bsat), ("hungry", 0)):
            moves = np.full(game.n_vertices, -1, dtype=np.int64)
            if p1w.size:
                mem = np.full(p1w.size, level, dtype=np.int64)
                try:
                    moves[p1w] = res.strategy.move_batch(mem, p1w)
                except InvariantError:
                    # no rule covers this counter level at some vertex
                    continue
            if _verify_positional(game, moves, res.winning):
                table = {(0, int(v)): int(moves[v]) for v in p1w}
                strategy = TableStrategy(1, 0, table, "identity",
                                         meta={"kind": "threshold",
                                               "ladder": cand_name})
                ladder = cand_name
                break
        else:
            ladder = "budget"
    diagnostics["ladder"] = ladder
    return ThresholdSolution(res.winning, strategy, res.credits, diagnostics)


# ---------------------------------------------------------------------------
# mean-payoff games (trivial colors): exact values for both players


@dataclass
class MeanPayoffSolution:
    values: list
    strat1: np.ndarray
    strat2: np.ndarray


def solve_mean_payoff(game: MeanPayoffParityGame) -> MeanPayoffSolution:
    """Exact per-vertex values of the mean-payoff game (colors ignored).

    Player 1 maximizes the long-run payoff average, Player 2 minimizes.
    Values are cycle means, found by bisection over the candidate set with
    non-strict energy decisions.  The game must be total.
    """
    n = game.n_vertices
    payoffs = game.payoffs
    if np.any(game.hi == game.lo):
        raise InvariantError("mean-payoff values need a total game")
    lo_p = int(payoffs.min()) if game.n_edges else 0
    hi_p = int(payoffs.max()) if game.n_edges else 0
    cands = sorted({Fraction(s, l)
                    for l in range(1, n + 1)
                    for s in range(l * lo_p, l * hi_p + 1)})
    if not cands:
        raise InvariantError("mean-payoff game has no edges")

    def decide(t: Fraction):
        # P1 wins 'mean >= t' iff P1 wins the energy game with q*pay - p
        wts = t.denominator * payoffs - t.numerator
        arena = _Arena(game.owners, game.esrc, game.edst,
                       wts.astype(np.int64))
        f, _, conv = _lfp_up(arena, np.ones(n, dtype=bool))
        if not conv:
            raise InvariantError("energy lifting did not converge")
        return f < _INF_CUT, f

    values = [None] * n
    groups = [(np.ones(n, dtype=bool), 0, len(cands) - 1)]
    while groups:
        mask, lo, hi = groups.pop()
        if not np.any(mask):
            continue
        if lo == hi:
            for v in np.flatnonzero(mask):
                values[v] = cands[lo]
            continue
        mid = (lo + hi + 1) // 2
        win, _ = decide(cands[mid])
        groups.append((mask & win, mid, hi))
        groups.append((mask & ~win, lo, mid - 1))

    # strategies: optimal at each vertex's own value
    strat1 = np.full(n, -1, dtype=np.int64)
    strat2 = np.full(n, -1, dtype=np.int64)
    for t in sorted(set(values)):
        sel = np.array([values[v] == t for v in range(n)])
        wts = (t.denominator * payoffs - t.numerator).astype(np.int64)
        arena = _Arena(game.owners, game.esrc, game.edst, wts)
        f, _, _ = _lfp_up(arena, np.ones(n, dtype=bool))
        valid = np.ones(len(game.esrc), dtype=bool)
        mv = arena.argmin_moves(f, np.ones(n, dtype=bool), valid,
                                sel & (game.owners == 1))
        take = sel & (game.owners == 1)
        strat1[take] = mv[take]
        # P2 optimal: flip roles on negated weights
        owners_flip = np.where(game.owners == 1, 2, 1).astype(np.int8)
        arena2 = _Arena(owners_flip, game.esrc, game.edst, (-wts))
        f2, _, _ = _lfp_up(arena2, np.ones(n, dtype=bool))
        mv2 = arena2.argmin_moves(f2, np.ones(n, dtype=bool), valid,
                                  sel & (game.owners == 2))
        take2 = sel & (game.owners == 2)
        strat2[take2] = mv2[take2]
    return MeanPayoffSolution(values, strat1, strat2)


# ---------------------------------------------------------------------------
# arena construction from a symbolic model and a parity annotation


@dataclass
class TranslationMaps:
    """Back-references from arena vertices to model states and signals."""

    ann: object
    v1_index: np.ndarray        # (n_copies, n_states) -> vertex id or -1
    vertex_copy: np.ndarray
    vertex_state: np.ndarray
    vertex_signal: np.ndarray   # -1 on choice vertices
    n_v1: int
    bits: np.ndarray            # per model transition row
    init_vertices: np.ndarray   # vertex id per state in the initial copy
    model: object = None
    game: object = None


def transition_bits(model, ann) -> np.ndarray:
    """Per-transition satisfaction bit vectors, evaluated once per distinct
    certificate tuple."""
    T = model.n_transitions
    cols = np.stack([model.e1p, model.e1m, model.e2p, model.e2m,
                     model.ap, model.am], axis=1) if T else \
        np.zeros((0, 6), dtype=np.int64)
    uniq, inv = np.unique(cols, axis=0, return_inverse=True)
    known = {p.name for p in model.predicates}
    ubits = np.zeros(len(uniq), dtype=np.int64)
    for i, (e1p, e1m, e2p, e2m, ap, am) in enumerate(uniq):
        pa = (set(model.mask_names(int(e1p))), set(model.mask_names(int(e1m))))
        pb = (set(model.mask_names(int(e2p))), set(model.mask_names(int(e2m))))
        rho_e = (pa,) if pa == pb else tuple(sorted((pa, pb), key=repr))
        rho_a = ((set(model.mask_names(int(ap))),
                  set(model.mask_names(int(am)))),)
        ubits[i] = ann.sat_bits(rho_e, rho_a, known)
    return ubits[inv] if T else np.zeros(0, dtype=np.int64)


def translate(model, ann, nu) -> Tuple[MeanPayoffParityGame, TranslationMaps]:
    """Build the two-player arena: Player 1 picks a control signal at a state
    vertex, Player 2 resolves the abstract transition at a signal vertex.
    Both edges of a round carry the signal's segment count as payoff, colors
    follow the annotation copy, and the threshold is nu over the sampling
    step so that payoff means compare against signal-length averages.
    """
    S = model.n_states
    NS = len(model.signals)
    nc = ann.n_copies
    tau = model.signals[0].tau if NS else 1.0
    threshold = Fraction(nu) / Fraction(tau)
    bits = transition_bits(model, ann)
    nbits = 1 << ann.n_bases
    jump_arr = np.zeros((nc, nbits), dtype=np.int64)
    for z in range(nc):
        for b in range(nbits):
            jump_arr[z, b] = ann.jump(z, b)

    tsrc = model.tsrc.astype(np.int64)
    tdst = model.tdst.astype(np.int64)
    tsig = model.tsig.astype(np.int64)
    seg = np.array([s.segments for s in model.signals], dtype=np.int64)

    reached = np.zeros((nc, S), dtype=bool)
    reached[ann.init_copy, :] = True
    while True:
        before = int(reached.sum())
        for z in range(nc):
            rows = reached[z, tsrc]
            if not rows.any():
                continue
            z2 = jump_arr[z, bits[rows]]
            flat = z2 * S + tdst[rows]
            reached.ravel()[flat] = True
        if int(reached.sum()) == before:
            break

    v1_index = np.full((nc, S), -1, dtype=np.int64)
    v1_flat = np.flatnonzero(reached.ravel())
    n_v1 = len(v1_flat)
    v1_index.ravel()[v1_flat] = np.arange(n_v1)

    alive = model.alive  # (NS, S)
    # signal vertices exist where the state vertex exists and the signal has
    # at least one transition
    v2_exist = reached[:, None, :] & alive[None, :, :]     # (nc, NS, S)
    v2_flat = np.flatnonzero(v2_exist.transpose(0, 2, 1).ravel())
    # v2 ordering: (z, q, s) lexicographic
    n_v2 = len(v2_flat)
    v2_index = np.full(nc * S * NS, -1, dtype=np.int64)
    v2_index[v2_flat] = np.arange(n_v1, n_v1 + n_v2)
    v2_index = v2_index.reshape(nc, S, NS)

    n = n_v1 + n_v2
    vertex_copy = np.empty(n, dtype=np.int64)
    vertex_state = np.empty(n, dtype=np.int64)
    vertex_signal = np.full(n, -1, dtype=np.int64)
    vertex_copy[:n_v1] = v1_flat // S
    vertex_state[:n_v1] = v1_flat % S
    vertex_copy[n_v1:] = v2_flat // (S * NS)
    vertex_state[n_v1:] = (v2_flat // NS) % S
    vertex_signal[n_v1:] = v2_flat % NS

    owners = np.ones(n, dtype=np.int8)
    owners[n_v1:] = 2
    colors = np.array([ann.colors[int(z)] for z in vertex_copy],
                      dtype=np.int64)

    # stage 1: state vertex -> signal vertex, one edge per enabled signal
    e1_src = v1_index[vertex_copy[n_v1:], vertex_state[n_v1:]]
    e1_dst = np.arange(n_v1, n_v1 + n_v2, dtype=np.int64)
    e1_pay = seg[vertex_signal[n_v1:]]

    # stage 2: signal vertex -> state vertex per abstract transition
    parts_src, parts_dst, parts_pay = [e1_src], [e1_dst], [e1_pay]
    for z in range(nc):
        rows = np.flatnonzero(reached[z, tsrc])
        if rows.size == 0:
            continue
        s2 = v2_index[z, tsrc[rows], tsig[rows]]
        z2 = jump_arr[z, bits[rows]]
        d2 = v1_index[z2, tdst[rows]]
        parts_src.append(s2)
        parts_dst.append(d2)
        parts_pay.append(seg[tsig[rows]])
    esrc = np.concatenate(parts_src)
    edst = np.concatenate(parts_dst)
    pays = np.concatenate(parts_pay)
    if np.any(esrc < 0) or np.any(edst < 0):
        raise InvariantError("arena construction referenced a missing vertex")

    game = MeanPayoffParityGame(
        owners, colors, esrc, edst, pays, threshold,
        payoff_scale=Fraction(tau),
        meta={"equal_stage_payoffs": True, "n_v1": n_v1,
              "formula": str(ann.formula)})
    maps = TranslationMaps(
        ann=ann, v1_index=v1_index, vertex_copy=vertex_copy,
        vertex_state=vertex_state, vertex_signal=vertex_signal, n_v1=n_v1,
        bits=bits, init_vertices=v1_index[ann.init_copy].copy(),
        model=model, game=game)
    return game, maps


# ---------------------------------------------------------------------------
# brute-force oracle


def brute_force_oracle(game: MeanPayoffParityGame, memory_bound: int = 1,
                       strategy_limit: int = 2_000_000) -> np.ndarray:
    """Exhaustive check: for every Player-1 strategy that is positional on a
    step-counter product with at most `memory_bound` states, fix the strategy
    and demand that every reachable simple cycle of the remaining graph has
    an even maximal color and a payoff mean strictly above the threshold.

    Returns the union of certified vertices over all enumerated strategies.
    """
    import itertools

    n = game.n_vertices
    nu = game.threshold
    win = np.zeros(n, dtype=bool)
    p1 = [int(v) for v in np.flatnonzero(game.owners == 1)]
    choices = {v: list(game.out_edges(v)) for v in p1}
    colors = [int(c) for c in game.colors]
    for k in range(1, memory_bound + 1):
        slots = [(t, v) for t in range(k) for v in p1 if choices[v]]
        total = 1
        for _, v in slots:
            total *= len(choices[v])
            if total > strategy_limit:
                raise ConfigError(
                    "oracle strategy space exceeds the enumeration limit")
        for combo in itertools.product(*(choices[v] for _, v in slots)):
            pick = dict(zip(slots, combo))
            m = k * n
            pedges = []
            for t in range(k):
                t2 = (t + 1) % k
                for v in range(n):
                    if game.owners[v] == 1:
                        if not choices.get(v):
                            continue
                        e = pick[(t, v)]
                        pedges.append((t * n + v, t2 * n + int(game.edst[e]),
                                       int(game.payoffs[e])))
                    else:
                        for e in game.out_edges(v):
                            pedges.append((t * n + v,
                                           t2 * n + int(game.edst[e]),
                                           int(game.payoffs[e])))
            plain = [(u, x) for u, x, _ in pedges]
            pcolors = [colors[v % n] for v in range(m)]
            comp, _ = _graph.tarjan_scc(m, plain)
            cyclic = _graph.nontrivial_components(m, plain, comp)
            bad = [False] * m
            # dead ends (stuck Player 1) are bad
            hasout = [False] * m
            for u, x in plain:
                hasout[u] = True
            for v in range(m):
                if not hasout[v]:
                    bad[v] = True
            oddv = _graph.odd_max_cycle_vertices(m, plain, pcolors)
            for v in range(m):
                if oddv[v]:
                    bad[v] = True
            for c in cyclic:
                verts = [v for v in range(m) if comp[v] == c]
                ces = [(u, x, wgt) for u, x, wgt in pedges
                       if comp[u] == c and comp[x] == c]
                mm = _graph.min_mean_cycle(
                    m, ces, [comp[v] == c for v in range(m)])
                if mm is not None and mm <= nu:
                    for v in verts:
                        bad[v] = True
            closure = _graph.backward_closure(m, plain, bad)
            for v in range(n):
                if not closure[v]:
                    win[v] = True
        if win.all():
            break
    return win
