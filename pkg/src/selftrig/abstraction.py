"""Symbolic model construction: grid states, robust transitions, AP labels.

Transitions follow the nominal-endpoint rule: q' is a u-successor of q when
q' falls inside the (beta-forward + eta) box around the disturbance-free
endpoint of q AND q falls inside the (beta-backward + eta) box around the
disturbance-free reverse endpoint of q'.  The beta bounds carry the
disturbance correction, so every concrete disturbed endpoint is covered
within eta by some listed successor (the simulation property the closed-loop
harness re-checks at run time).

Labels are two-sided: each transition gets rho_exists (pairs of AP sets
certified to hold/fail at some instant of every underlying trajectory) and
rho_forall (one pair certified at all instants).  Certificates come from
closed-form ball predicates: B-plus(x, r) collects APs true on the whole
box of radius r around x, B-minus those false on the whole box.
"""

import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, InvariantError
from .quantize import Grid, Quantization, initial_ids, input_grid, signal_set

log = logging.getLogger(__name__)

_TOL = 1e-9


# ---------------------------------------------------------------------------
# atomic predicates

class Halfspace:
    """Strict linear predicate a.x > b (no coefficients on wrapped axes)."""

    kind = "halfspace"

    def __init__(self, name: str, a, b: float):
        self.name = name
        self.a = tuple(float(v) for v in a)
        self.b = float(b)
        if not any(v != 0.0 for v in self.a):
            raise ConfigError("halfspace %r has a zero normal" % name)

    def check_axes(self, wrap):
        if len(self.a) != len(wrap):
            raise ConfigError(
                "halfspace %r has %d coefficients for a %d-dimensional state"
                % (self.name, len(self.a), len(wrap)))
        for i, (coeff, w) in enumerate(zip(self.a, wrap)):
            if w and coeff != 0.0:
                raise ConfigError(
                    "halfspace %r puts weight on wrapped axis %d" % (self.name, i))

    def holds(self, x, wrap=None, periods=None):
        return sum(c * v for c, v in zip(self.a, x)) > self.b

    def b_plus_many(self, X, r, wrap, periods):
        a = np.asarray(self.a)
        slack = float(np.abs(a) @ np.asarray(r))
        return X @ a - slack > self.b

    def b_minus_many(self, X, r, wrap, periods):
        a = np.asarray(self.a)
        slack = float(np.abs(a) @ np.asarray(r))
        return X @ a + slack <= self.b


class BoxPred:
    """Axis-aligned box membership; circular intervals on wrapped axes."""

    kind = "box"

    def __init__(self, name: str, bounds: Dict[int, Tuple[float, float]]):
        self.name = name
        self.bounds = {int(i): (float(lo), float(hi)) for i, (lo, hi) in bounds.items()}
        if not self.bounds:
            raise ConfigError("box predicate %r constrains no axis" % name)
        for i, (lo, hi) in self.bounds.items():
            if hi < lo:
                raise ConfigError("box predicate %r has empty axis %d" % (name, i))

    def check_axes(self, wrap):
        for i in self.bounds:
            if not 0 <= i < len(wrap):
                raise ConfigError(
                    "box predicate %r constrains axis %d of a %d-dimensional "
                    "state" % (self.name, i, len(wrap)))

    def holds(self, x, wrap=None, periods=None):
        for i, (lo, hi) in self.bounds.items():
            v = x[i]
            if wrap is not None and wrap[i]:
                p = periods[i]
                if (v - lo) % p > (hi - lo):
                    return False
            elif not (lo <= v <= hi):
                return False
        return True

    def b_plus_many(self, X, r, wrap, periods):
        ok = np.ones(X.shape[0], dtype=bool)
        for i, (lo, hi) in self.bounds.items():
            c = X[:, i]
            if wrap is not None and wrap[i]:
                p = periods[i]
                width = hi - lo
                if 2.0 * r[i] >= p - _TOL:
                    ok &= width >= p - _TOL
                else:
                    s = (c - lo) % p
                    ok &= (s >= r[i] - _TOL) & (s <= width - r[i] + _TOL)
            else:
                ok &= (c - r[i] >= lo - _TOL) & (c + r[i] <= hi + _TOL)
        return ok

    def b_minus_many(self, X, r, wrap, periods):
        # disjoint on at least one constrained axis
        bad = np.zeros(X.shape[0], dtype=bool)
        for i, (lo, hi) in self.bounds.items():
            c = X[:, i]
            if wrap is not None and wrap[i]:
                p = periods[i]
                width = hi - lo
                if 2.0 * r[i] >= p - _TOL:
                    continue  # the ball covers the circle, never disjoint
                s = (c - lo) % p
                bad |= (s > width + r[i] + _TOL) & (s < p - r[i] - _TOL)
            else:
                bad |= (c + r[i] < lo - _TOL) | (c - r[i] > hi + _TOL)
        return bad


def b_plus(x, r, preds, wrap=None, periods=None):
    """APs certified true on the whole r-box around x."""
    X = np.asarray(x, dtype=float)[None, :]
    return {p.name for p in preds if p.b_plus_many(X, r, wrap, periods)[0]}


def b_minus(x, r, preds, wrap=None, periods=None):
    """APs certified false on the whole r-box around x."""
    X = np.asarray(x, dtype=float)[None, :]
    return {p.name for p in preds if p.b_minus_many(X, r, wrap, periods)[0]}


# ---------------------------------------------------------------------------
# scalar reachability helpers

def nominal_endpoint(sys, q, u):
    """Disturbance-free endpoint of the signal from q."""
    x = tuple(q)
    for seg in u.inputs:
        x = tuple(sys.flow(x, seg, 0.0, u.tau))
    return x


def nominal_backpoint(sys, q, u):
    """Disturbance-free reverse endpoint: run the signal backwards from q."""
    x = tuple(q)
    for seg in reversed(u.inputs):
        x = tuple(sys.back_flow(x, seg, 0.0, u.tau))
    return x


def _eta_max(eta, wrap):
    vals = [e for e, w in zip(eta, wrap) if not w]
    return max(vals) if vals else max(eta)


def stays_inside(sys, q, u, eta):
    """Whether every disturbed run from Ball(q, eta) stays in the state box.

    Under-approximated by requiring the travel-bound ball around q to fit in
    the box at every segment boundary.  Wrapped axes are compact and ignored.
    """
    em = _eta_max(eta, sys.wrap)
    for k in range(1, len(u.inputs) + 1):
        r = sys.alpha_fwd(u, em, k * u.tau)
        for i in range(sys.n):
            if sys.wrap[i]:
                continue
            if q[i] - r < sys.state_lo[i] - _TOL or q[i] + r > sys.state_hi[i] + _TOL:
                return False
    return True


def successors(sys, grid: Grid, q, u):
    """Successor grid ids of (q, u) by exhaustive scan (small grids only)."""
    if not stays_inside(sys, q, u, grid.eta):
        return []
    em = _eta_max(grid.eta, sys.wrap)
    L = u.length
    bf = sys.beta_fwd(u, em, L)
    bb = sys.beta_bwd(u, em, L)
    fwd = nominal_endpoint(sys, q, u)
    out = []
    for sid in range(grid.size):
        c = grid.coords_of_id(sid)
        ok = True
        for i in range(sys.n):
            if sys.wrap[i]:
                p = sys.periods[i]
                d = abs((c[i] - fwd[i] + 0.5 * p) % p - 0.5 * p)
            else:
                d = abs(c[i] - fwd[i])
            if d > bf + grid.eta[i] + _TOL:
                ok = False
                break
        if not ok:
            continue
        back = nominal_backpoint(sys, c, u)
        for i in range(sys.n):
            if sys.wrap[i]:
                p = sys.periods[i]
                d = abs((back[i] - q[i] + 0.5 * p) % p - 0.5 * p)
            else:
                d = abs(back[i] - q[i])
            if d > bb + grid.eta[i] + _TOL:
                ok = False
                break
        if ok:
            out.append(sid)
    return out


def label_transition(sys, grid: Grid, preds, q, u, q2):
    """(rho_exists, rho_forall) label sets for one transition.

    rho_exists: one certified pair per endpoint (deduplicated);
    rho_forall: a single pair from the travel-bound ball around both ends.
    """
    wrap, periods = sys.wrap, sys.periods
    eta = grid.eta
    pair_q = (frozenset(b_plus(q, eta, preds, wrap, periods)),
              frozenset(b_minus(q, eta, preds, wrap, periods)))
    pair_q2 = (frozenset(b_plus(q2, eta, preds, wrap, periods)),
               frozenset(b_minus(q2, eta, preds, wrap, periods)))
    rho_e = {pair_q, pair_q2}
    em = _eta_max(eta, wrap)
    alpha = sys.alpha_fwd(u, em, u.length)
    r = tuple(min(alpha, 0.5 * periods[i]) if wrap[i] else alpha
              for i in range(sys.n))
    plus = (frozenset(b_plus(q, r, preds, wrap, periods))
            & frozenset(b_plus(q2, r, preds, wrap, periods)))
    minus = (frozenset(b_minus(q, r, preds, wrap, periods))
             & frozenset(b_minus(q2, r, preds, wrap, periods)))
    rho_a = {(plus, minus)}
    return rho_e, rho_a


# ---------------------------------------------------------------------------
# the model

class SymbolicModel:
    """Finite transition system over grid cells with two-sided labels.

    Transitions live in parallel arrays sorted by (src, signal, dst).  Label
    sets are bitmasks over the predicate list; rho_exists keeps one mask pair
    per endpoint, rho_forall a single pair.
    """

    def __init__(self, grid, signals, predicates, initial, tsrc, tsig, tdst,
                 e1p, e1m, e2p, e2m, ap, am, alive, meta=None):
        self.grid = grid
        self.signals = list(signals)
        self.predicates = list(predicates)
        self.initial = tuple(initial)
        self.tsrc = tsrc
        self.tsig = tsig
        self.tdst = tdst
        self.e1p, self.e1m = e1p, e1m
        self.e2p, self.e2m = e2p, e2m
        self.ap, self.am = ap, am
        self.alive = alive  # (n_signals, grid.size) bool
        self.meta = dict(meta or {})
        self._keys = (tsrc.astype(np.int64) * len(self.signals)
                      + tsig.astype(np.int64))

    @property
    def n_states(self):
        return self.grid.size

    @property
    def n_transitions(self):
        return len(self.tsrc)

    def payoff_of_signal(self, sigid):
        return self.signals[sigid].segments

    def move_slice(self, qid, sigid):
        """Range [i, j) of transition rows for (qid, sigid)."""
        key = qid * len(self.signals) + sigid
        i = np.searchsorted(self._keys, key, side="left")
        j = np.searchsorted(self._keys, key, side="right")
        return int(i), int(j)

    def successors_of(self, qid, sigid):
        i, j = self.move_slice(qid, sigid)
        return self.tdst[i:j]

    def enabled_signals(self, qid):
        """Signal ids with at least one transition out of qid."""
        out = []
        for s in range(len(self.signals)):
            i, j = self.move_slice(qid, s)
            if j > i:
                out.append(s)
        return out

    def mask_names(self, mask):
        return tuple(p.name for i, p in enumerate(self.predicates) if mask >> i & 1)

    def rho_exists_pairs(self, t):
        """Deduplicated, deterministically ordered mask pairs for row t."""
        pairs = [(int(self.e1p[t]), int(self.e1m[t])),
                 (int(self.e2p[t]), int(self.e2m[t]))]
        if pairs[0] == pairs[1]:
            return (pairs[0],)
        return tuple(sorted(pairs))

    def rho_forall_pair(self, t):
        return (int(self.ap[t]), int(self.am[t]))

    def check_invariants(self):
        if np.any(self.e1p & self.e1m) or np.any(self.e2p & self.e2m):
            raise InvariantError("rho_exists pair with overlapping sides")
        if np.any(self.ap & self.am):
            raise InvariantError("rho_forall pair with overlapping sides")
        if self.n_transitions:
            if self.tsrc.min() < 0 or self.tsrc.max() >= self.grid.size:
                raise InvariantError("transition source out of range")
            if self.tdst.min() < 0 or self.tdst.max() >= self.grid.size:
                raise InvariantError("transition target out of range")
            keys = (self._keys * self.grid.size + self.tdst)
            if np.any(np.diff(keys) <= 0):
                raise InvariantError("transitions not strictly sorted/unique")
        return True


def _circ_abs(delta, period):
    return np.abs((delta + 0.5 * period) % period - 0.5 * period)


def _state_masks(preds, coords, r, wrap, periods):
    """(plus, minus) bitmask arrays over all grid points for radius vector r."""
    n = coords.shape[0]
    plus = np.zeros(n, dtype=np.int64)
    minus = np.zeros(n, dtype=np.int64)
    for bit, p in enumerate(preds):
        plus |= p.b_plus_many(coords, r, wrap, periods).astype(np.int64) << bit
        minus |= p.b_minus_many(coords, r, wrap, periods).astype(np.int64) << bit
    return plus, minus


def build_symbolic_model(sys, quant: Quantization, preds=(), meta=None,
                         jobs: int = 1) -> SymbolicModel:
    """Construct the full abstraction for a system under a quantization.

    ``jobs`` is accepted for interface stability; construction is already
    vectorized per signal and runs single-process.
    """
    quant.validate()
    if len(quant.eta) != sys.n:
        raise ConfigError("eta dimension does not match the system")
    preds = list(preds)
    names = [p.name for p in preds]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate predicate names")
    if len(preds) > 62:
        raise ConfigError("too many predicates for bitmask labels")
    for p in preds:
        p.check_axes(sys.wrap)

    grid = Grid(sys.state_lo, sys.state_hi, sys.wrap, quant.eta)
    inputs = input_grid(sys.input_lo, sys.input_hi, quant.mu,
                        quant.input_pitch_mode)
    signals = signal_set(inputs, quant.tau, quant.ell_min, quant.ell_max)
    if not signals:
        raise ConfigError("signal set is empty")

    coords = grid.all_coords()
    n_axes = grid.n
    wrap = sys.wrap
    periods = sys.periods
    eta = grid.eta
    em = _eta_max(eta, wrap)
    counts = grid.counts
    lmin = grid.lmin

    eta_masks = _state_masks(preds, coords, eta, wrap, periods)
    forall_masks = {}  # radius value -> (plus, minus)

    alive = np.zeros((len(signals), grid.size), dtype=bool)
    src_parts, sig_parts, dst_parts = [], [], []

    for sigid, u in enumerate(signals):
        L = u.length
        # stays-inside mask: travel ball fits the box at every boundary
        r_stay = max(sys.alpha_fwd(u, em, k * u.tau)
                     for k in range(1, u.segments + 1))
        mask = np.ones(grid.size, dtype=bool)
        for i in range(n_axes):
            if wrap[i]:
                continue
            mask &= (coords[:, i] - r_stay >= sys.state_lo[i] - _TOL)
            mask &= (coords[:, i] + r_stay <= sys.state_hi[i] + _TOL)
        alive[sigid] = mask
        alive_ids = np.nonzero(mask)[0]
        if alive_ids.size == 0:
            continue

        fwd = coords
        back = coords
        if sys.flow_batch is not None:
            for seg in u.inputs:
                fwd = sys.flow_batch(fwd, seg, 0.0, u.tau)
            for seg in reversed(u.inputs):
                back = sys.back_flow_batch(back, seg, 0.0, u.tau)
        else:
            fwd = np.array([nominal_endpoint(sys, x, u) for x in coords])
            back = np.array([nominal_backpoint(sys, x, u) for x in coords])

        bf = sys.beta_fwd(u, em, L)
        bb = sys.beta_bwd(u, em, L)
        rf = [bf + eta[i] for i in range(n_axes)]
        rb = [bb + eta[i] for i in range(n_axes)]

        F = fwd[alive_ids]
        Qc = coords[alive_ids]
        bases, offset_ranges = [], []
        for i in range(n_axes):
            pitch = 2.0 * eta[i]
            bases.append(np.round(F[:, i] / pitch).astype(np.int64))
            offset_ranges.append(range(-int(math.floor(rf[i] / pitch + 0.5 + _TOL)),
                                       int(math.floor(rf[i] / pitch + 0.5 + _TOL)) + 1))

        for offs in itertools.product(*offset_ranges):
            ok = np.ones(alive_ids.size, dtype=bool)
            idx_cols = []
            for i in range(n_axes):
                pitch = 2.0 * eta[i]
                li = bases[i] + offs[i]
                if wrap[i]:
                    li = li % counts[i]
                    ci = li * pitch
                    ok &= _circ_abs(ci - F[:, i], periods[i]) <= rf[i] + _TOL
                else:
                    ok &= (li >= lmin[i]) & (li <= lmin[i] + counts[i] - 1)
                    ci = li * pitch
                    ok &= np.abs(ci - F[:, i]) <= rf[i] + _TOL
                idx_cols.append(li)
            if not ok.any():
                continue
            idx = np.stack(idx_cols, axis=1)[ok]
            srcs = alive_ids[ok]
            qc = Qc[ok]
            dsts = grid.ids_of_index_array(idx)
            bk = back[dsts]
            okb = np.ones(dsts.size, dtype=bool)
            for i in range(n_axes):
                if wrap[i]:
                    okb &= _circ_abs(bk[:, i] - qc[:, i], periods[i]) <= rb[i] + _TOL
                else:
                    okb &= np.abs(bk[:, i] - qc[:, i]) <= rb[i] + _TOL
            if not okb.any():
                continue
            src_parts.append(srcs[okb])
            sig_parts.append(np.full(int(okb.sum()), sigid, dtype=np.int64))
            dst_parts.append(dsts[okb])

    if src_parts:
        tsrc = np.concatenate(src_parts)
        tsig = np.concatenate(sig_parts)
        tdst = np.concatenate(dst_parts)
        key = (tsrc * len(signals) + tsig) * grid.size + tdst
        key = np.unique(key)  # sorts and drops wrap-around duplicates
        rest, tdst = np.divmod(key, grid.size)
        tsrc, tsig = np.divmod(rest, len(signals))
    else:
        tsrc = tsig = tdst = np.empty(0, dtype=np.int64)

    # labels
    splus, sminus = eta_masks
    e1p, e1m = splus[tsrc], sminus[tsrc]
    e2p, e2m = splus[tdst], sminus[tdst]
    ap = np.zeros(len(tsrc), dtype=np.int64)
    am = np.zeros(len(tsrc), dtype=np.int64)
    for sigid, u in enumerate(signals):
        rows = np.nonzero(tsig == sigid)[0]
        if rows.size == 0:
            continue
        alpha = sys.alpha_fwd(u, em, u.length)
        rkey = round(alpha, 12)
        if rkey not in forall_masks:
            rvec = tuple(min(alpha, 0.5 * periods[i]) if wrap[i] else alpha
                         for i in range(n_axes))
            forall_masks[rkey] = _state_masks(preds, coords, rvec, wrap, periods)
        fplus, fminus = forall_masks[rkey]
        ap[rows] = fplus[tsrc[rows]] & fplus[tdst[rows]]
        am[rows] = fminus[tsrc[rows]] & fminus[tdst[rows]]

    init = initial_ids(grid, sys.init_states)
    model = SymbolicModel(grid, signals, preds, init, tsrc, tsig, tdst,
                          e1p, e1m, e2p, e2m, ap, am, alive, meta=meta)

    dead_initials = [q for q in init
                     if not any(len(model.successors_of(q, s))
                                for s in range(len(signals)))]
    if dead_initials:
        note = "initial states with no outgoing transitions: %r" % dead_initials
        log.warning(note)
        model.meta.setdefault("notes", []).append(note)
    return model
