"""Closed-loop simulation, bounded-horizon objective checking, run metrics.

``closed_loop_run`` drives the continuous plant with a synthesized cell
controller: observe, project to the nearest cell, issue a signal, sleep for
its whole duration while seeded per-segment disturbances act, repeat.  Every
step re-checks the simulation property the abstraction promised — the
endpoint must land within eta of some listed abstract successor — so a
soundness bug anywhere upstream surfaces as a failed run, never as a silent
wrong trajectory.

Infinite-horizon objectives are checked on finite runs through a bounded
surrogate: recurrence must strike within every ``grace``-step window after a
burn-in prefix, persistence must hold over the trailing ``grace`` steps, and
the window parameters are reported next to every verdict so the weakening is
visible.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .dynamics import axis_distances
from .errors import ConfigError, InvariantError, UncontrollableStateError
from .logic import (And, Atom, Not, Or, PathAnd, PathOr, STrue,
                    check_atoms, parse_spec)

_TOL = 1e-9
_LEMMA_SLACK = 1e-7


# ---------------------------------------------------------------------------
# run record


@dataclass
class ClosedLoopRun:
    """Everything one simulation produced, trigger instants plus dense samples.

    ``states``/``times``/``cells`` have one more entry than ``signal_ids``
    (the final observation).  Dense samples sit at resolution ``h`` within
    each segment; ``sample_step[i]`` is the control step the sample belongs
    to and ``sample_u[i]`` the input segment active at that instant.
    """

    seed: int
    h: float
    tau: float
    x0: Tuple[float, ...]
    state_lo: Tuple[float, ...]
    state_hi: Tuple[float, ...]
    wrap: Tuple[bool, ...]
    states: List[Tuple[float, ...]]
    times: List[float]
    cells: List[int]
    signal_ids: List[int]
    seg_counts: List[int]
    lemma_ok: List[bool]
    sample_t: np.ndarray
    sample_x: np.ndarray
    sample_step: np.ndarray
    sample_sig: np.ndarray
    sample_u: List[Tuple[float, ...]]
    config_hash: str = ""

    @property
    def steps(self) -> int:
        return len(self.signal_ids)

    @property
    def periods(self):
        return tuple(hi - lo for lo, hi in zip(self.state_lo, self.state_hi))

    @property
    def signal_lengths(self) -> np.ndarray:
        return np.asarray(self.seg_counts, dtype=float) * self.tau

    def check_invariants(self):
        ns = self.steps
        if not (len(self.states) == len(self.times) == len(self.cells)
                == ns + 1):
            raise InvariantError("run record arrays disagree on step count")
        if len(self.seg_counts) != ns or len(self.lemma_ok) != ns:
            raise InvariantError("run record arrays disagree on step count")
        if len(self.sample_t) and np.any(np.diff(self.sample_t) <= 0):
            raise InvariantError("dense sample times not strictly increasing")
        return True


# ---------------------------------------------------------------------------
# the closed loop


def closed_loop_run(sys, controller, steps, seed, *, h=0.05, x0=None,
                    config_hash="") -> ClosedLoopRun:
    """Simulate ``steps`` trigger rounds from an initial state.

    Disturbances are drawn per segment from ``uniform(-lambda_bar,
    lambda_bar)`` under ``seed`` (none are drawn when the bound is zero, so
    disturbance-free runs are seed-independent).  Raises
    :class:`UncontrollableStateError` when the loop reaches a state the
    controller has no move for — by construction of the winning region that
    can only happen if the abstraction's simulation guarantee is violated,
    so the exception is a finding, not a nuisance.
    """
    sys.validate()
    if steps < 1:
        raise ConfigError("a run needs at least one step")
    if h <= 0:
        raise ConfigError("sample resolution h must be positive")
    grid = controller.grid
    if (tuple(grid.state_lo) != tuple(sys.state_lo)
            or tuple(grid.state_hi) != tuple(sys.state_hi)
            or tuple(grid.wrap) != tuple(sys.wrap)):
        raise ConfigError("controller grid does not match the plant state box")
    if x0 is None:
        x0 = sys.init_states[0]
    x0 = tuple(float(v) for v in x0)
    if all(sys.distance(x0, xi) > _TOL for xi in sys.init_states):
        raise ConfigError("x0 %r is not one of the declared initial states"
                          % (x0,))
    signals = controller.signals
    periods = sys.periods
    eta = grid.eta
    rng = np.random.default_rng(seed)
    lam_bar = float(sys.lambda_bar)

    def project(y, what):
        try:
            return grid.project_id(y)
        except ValueError:
            raise UncontrollableStateError(
                "%s left the state box: %r" % (what, y)) from None

    mem = controller.initial_memory
    x, t = x0, 0.0
    q = project(x, "initial state")
    states, times, cells = [x0], [0.0], [q]
    signal_ids: List[int] = []
    seg_counts: List[int] = []
    lemma_ok: List[bool] = []
    s_t: List[float] = []
    s_x: List[Tuple[float, ...]] = []
    s_step: List[int] = []
    s_sig: List[int] = []
    s_u: List[Tuple[float, ...]] = []

    for k in range(steps):
        try:
            sid = int(controller.output_id(mem, q))
        except UncontrollableStateError as e:
            raise UncontrollableStateError("step %d: %s" % (k, e)) from None
        sig = signals[sid]
        nseg = sig.segments
        if lam_bar == 0.0:
            lams = [0.0] * nseg
        else:
            lams = [float(rng.uniform(-lam_bar, lam_bar)) for _ in range(nseg)]
        if k == 0:
            s_t.append(0.0)
            s_x.append(x0)
            s_step.append(0)
            s_sig.append(sid)
            s_u.append(tuple(float(v) for v in sig.inputs[0]))
        per = max(1, int(round(sig.tau / h)))
        dt = sig.tau / per
        for j, (u, lam) in enumerate(zip(sig.inputs, lams)):
            u = tuple(float(v) for v in u)
            for i in range(1, per + 1):
                y = sys.flow(x, u, lam, dt * i)
                s_t.append(t + j * sig.tau + dt * i)
                s_x.append(tuple(float(v) for v in y))
                s_step.append(k)
                s_sig.append(sid)
                s_u.append(u)
            x = tuple(float(v) for v in sys.flow(x, u, lam, sig.tau))
        t += sig.length
        q2 = project(x, "step %d endpoint" % k)
        ok = False
        for qs in controller.successor_cells(mem, q, sid):
            c = grid.coords_of_id(int(qs))
            d = axis_distances(x, c, grid.wrap, periods)
            if all(di <= ei + _LEMMA_SLACK for di, ei in zip(d, eta)):
                ok = True
                break
        lemma_ok.append(ok)
        try:
            mem = controller.update(mem, q, sid, q2)
        except InvariantError as e:
            raise InvariantError("step %d: %s" % (k, e)) from None
        states.append(x)
        times.append(t)
        cells.append(q2)
        signal_ids.append(sid)
        seg_counts.append(nseg)
        q = q2

    run = ClosedLoopRun(
        seed=int(seed), h=float(h), tau=float(signals[0].tau), x0=x0,
        state_lo=tuple(sys.state_lo), state_hi=tuple(sys.state_hi),
        wrap=tuple(sys.wrap), states=states, times=times, cells=cells,
        signal_ids=signal_ids, seg_counts=seg_counts, lemma_ok=lemma_ok,
        sample_t=np.asarray(s_t, dtype=float),
        sample_x=np.asarray(s_x, dtype=float),
        sample_step=np.asarray(s_step, dtype=np.int64),
        sample_sig=np.asarray(s_sig, dtype=np.int64),
        sample_u=s_u, config_hash=config_hash)
    run.check_invariants()
    return run


# ---------------------------------------------------------------------------
# metrics


def metrics(run: ClosedLoopRun, predicates=()) -> dict:
    """Averages, trigger rate, and per-predicate visit gaps for one run.

    The trigger rate is computed from elapsed time and the average from the
    issued lengths, so the rate = 1/average identity is a genuine
    cross-check of the recorded data rather than algebra on one number.
    """
    lengths = run.signal_lengths
    n = len(lengths)
    if n == 0:
        raise ConfigError("metrics of an empty run")
    avg = float(np.mean(lengths))
    elapsed = float(run.times[-1])
    record = {
        "steps": n,
        "elapsed": elapsed,
        "average_signal_length": avg,
        "running_average": np.cumsum(lengths) / np.arange(1, n + 1),
        "trigger_rate": n / elapsed,
        "lemma_violations": sum(1 for b in run.lemma_ok if not b),
    }
    gaps, visits = {}, {}
    for p in predicates:
        mask = np.array([p.holds(x, run.wrap, run.periods)
                         for x in run.sample_x], dtype=bool)
        vt = run.sample_t[mask]
        visits[p.name] = int(mask.sum())
        gaps[p.name] = float(np.max(np.diff(vt))) if len(vt) > 1 else None
    record["n_visits"] = visits
    record["max_gap"] = gaps
    return record


def check_rate_identity(record, tol=1e-12) -> bool:
    """trigger_rate == 1/average_signal_length, within tol."""
    return abs(record["trigger_rate"]
               - 1.0 / record["average_signal_length"]) <= tol


# ---------------------------------------------------------------------------
# bounded-horizon objective checking


def _holds_state(phi, x, by_name, wrap, periods) -> bool:
    if isinstance(phi, STrue):
        return True
    if isinstance(phi, Atom):
        return bool(by_name[phi.name].holds(x, wrap, periods))
    if isinstance(phi, Not):
        return not _holds_state(phi.arg, x, by_name, wrap, periods)
    if isinstance(phi, And):
        return (_holds_state(phi.left, x, by_name, wrap, periods)
                and _holds_state(phi.right, x, by_name, wrap, periods))
    if isinstance(phi, Or):
        return (_holds_state(phi.left, x, by_name, wrap, periods)
                or _holds_state(phi.right, x, by_name, wrap, periods))
    raise ConfigError("unsupported state formula node %r" % (phi,))


def _step_hits(run, phi, by_name, horizon):
    """Per-step (any-sample, all-samples) satisfaction of a state formula."""
    keep = run.sample_step < horizon
    sat = np.array([_holds_state(phi, x, by_name, run.wrap, run.periods)
                    for x in run.sample_x[keep]], dtype=bool)
    steps = run.sample_step[keep]
    any_k = np.zeros(horizon, dtype=bool)
    all_k = np.ones(horizon, dtype=bool)
    np.logical_or.at(any_k, steps, sat)
    np.logical_and.at(all_k, steps, sat)
    # a step with no samples inside the horizon counts as never satisfying
    seen = np.zeros(horizon, dtype=bool)
    seen[steps] = True
    all_k &= seen
    return any_k, all_k, sat, run.sample_t[keep]


def _check_temporal(run, node, by_name, horizon, grace, burn_in) -> dict:
    any_k, all_k, sat, st = _step_hits(run, node.arg, by_name, horizon)
    detail = {"op": node.op, "phi": str(node.arg)}
    if node.op == "F":
        ok = bool(sat.any())
        detail["hits"] = int(sat.sum())
        detail["first_hit_time"] = float(st[sat][0]) if ok else None
    elif node.op == "G":
        ok = bool(sat.all())
        if not ok:
            detail["first_violation_time"] = float(st[~sat][0])
    elif node.op == "GF":
        window = any_k[burn_in:horizon]
        streak = best = 0
        first_bad = None
        for i, hit in enumerate(window):
            streak = 0 if hit else streak + 1
            if streak > best:
                best = streak
            if streak >= grace and first_bad is None:
                first_bad = burn_in + i - grace + 1
        ok = len(window) > 0 and bool(window.any()) and best < grace
        detail["hit_steps"] = int(window.sum())
        detail["max_hitless_streak"] = int(best)
        detail["first_violating_window"] = first_bad
    elif node.op == "FG":
        tail = max(horizon - grace, 0)
        window = all_k[tail:horizon]
        ok = len(window) > 0 and bool(window.all())
        bad = np.flatnonzero(~window)
        detail["tail_start_step"] = tail
        detail["first_violating_step"] = (int(tail + bad[0]) if len(bad)
                                          else None)
    else:
        raise ConfigError("unknown temporal operator %r" % node.op)
    detail["pass"] = ok
    return detail


def check_bounded(run: ClosedLoopRun, formula, predicates=(), *,
                  horizon=None, grace=50, burn_in=None) -> dict:
    """Finite-run verdict for a path formula over dense trajectory samples.

    Recurrence (GF) is judged per control step after a burn-in prefix: every
    ``grace``-step window must contain a satisfying sample.  Persistence
    (FG) must hold on all samples of the trailing ``grace`` steps.  F and G
    are checked on all samples up to the horizon.  The verdict record keeps
    the window parameters next to every clause so the finite-horizon
    weakening stays visible.
    """
    if isinstance(formula, str):
        formula = parse_spec(formula)
    by_name = {p.name: p for p in predicates}
    check_atoms(formula, set(by_name))
    if horizon is None:
        horizon = run.steps
    horizon = int(min(horizon, run.steps))
    if horizon < 1:
        raise ConfigError("check horizon must cover at least one step")
    if grace < 1:
        raise ConfigError("grace must be at least 1 step")
    if burn_in is None:
        burn_in = horizon // 10
    if not (0 <= burn_in < horizon):
        raise ConfigError("burn-in must fall inside the horizon")

    clauses = []

    def rec(node):
        if isinstance(node, PathAnd):
            return rec(node.left) and rec(node.right)
        if isinstance(node, PathOr):
            left = rec(node.left)
            right = rec(node.right)
            return left or right
        detail = _check_temporal(run, node, by_name, horizon, grace, burn_in)
        clauses.append(detail)
        return detail["pass"]

    ok = rec(formula)
    return {"pass": bool(ok), "formula": str(formula), "horizon": horizon,
            "grace": int(grace), "burn_in": int(burn_in), "clauses": clauses}
