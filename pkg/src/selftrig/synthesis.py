"""Controller extraction, lifting, and the refine-until-floors loop.

The synthesis loop builds a grid abstraction of the plant, compiles the
objective into a parity monitor, translates the pair into a two-player arena,
and solves the strict-threshold game.  Success requires every projected
initial cell to be winning in the monitor's initial copy; on failure the
quantization parameters are halved in round-robin order until all of them sit
at their floors.

The extracted controller is a finite-state machine over grid cells whose
memory pairs the game strategy's memory with the monitor copy.  Lifting wraps
it with nearest-cell projection so it can drive the continuous plant.
"""

import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .abstraction import build_symbolic_model
from .errors import (ConfigError, InvariantError, UncontrollableStateError,
                     UnrealizableError)
from .game import solve_threshold, translate
from .logic import check_atoms, compile_parity, parse_spec
from .quantize import Quantization

_TOL = 1e-9


# ---------------------------------------------------------------------------
# symbolic controller


class SymbolicController:
    """Finite-state controller over grid cells.

    Memory states are (strategy memory, monitor copy) pairs; the initial one
    pairs the strategy's initial memory with the monitor's initial copy.
    ``output_id`` returns the signal index issued at a cell, ``update``
    advances the memory on the observed successor cell.  Querying a cell the
    strategy cannot win from raises :class:`UncontrollableStateError`.
    """

    def __init__(self, model, game, maps, strategy, winning):
        self.model = model
        self.game = game
        self.maps = maps
        self.strategy = strategy.bind(game)
        self.winning = np.asarray(winning, dtype=bool)
        if len(self.winning) != game.n_vertices:
            raise ConfigError("winning set size does not match the arena")
        # choice-vertex edges keyed by (choice vertex, landing vertex)
        self._edge_of = {}
        owners = game.owners
        for e in range(game.n_edges):
            s = int(game.esrc[e])
            if owners[s] == 2:
                self._edge_of[(s, int(game.edst[e]))] = e

    # -- queries ------------------------------------------------------------

    @property
    def grid(self):
        return self.model.grid

    @property
    def signals(self):
        return self.model.signals

    @property
    def initial_memory(self):
        return (self.strategy.initial(), int(self.maps.ann.init_copy))

    def successor_cells(self, mem, q, sigid):
        """Abstract successor cells of (q, sigid); ``mem`` is accepted for
        interface parity with reloaded table controllers."""
        return [int(d) for d in self.model.successors_of(int(q), int(sigid))]

    def _vertex(self, mem, q):
        smem, copy = mem
        q = int(q)
        if not (0 <= q < self.model.n_states):
            raise UncontrollableStateError("cell id %d outside the grid" % q)
        v = int(self.maps.v1_index[int(copy), q])
        if v < 0:
            raise UncontrollableStateError(
                "cell %d is unreachable in monitor copy %d" % (q, copy))
        if not self.winning[v]:
            raise UncontrollableStateError(
                "cell %d is losing in monitor copy %d" % (q, copy))
        return v

    def output_id(self, mem, q) -> int:
        """Index (into the model's signal list) issued at cell q."""
        v = self._vertex(mem, q)
        e = int(self.strategy.move_edge(mem[0], v))
        return int(self.maps.vertex_signal[int(self.game.edst[e])])

    def output(self, mem, q):
        """The control signal issued at cell q."""
        return self.model.signals[self.output_id(mem, q)]

    def update(self, mem, q, sigid, q2):
        """Next memory after issuing signal ``sigid`` at ``q`` and observing
        successor cell ``q2``."""
        smem, copy = mem
        v = self._vertex(mem, q)
        e1 = int(self.strategy.move_edge(smem, v))
        v2 = int(self.game.edst[e1])
        if int(self.maps.vertex_signal[v2]) != int(sigid):
            raise InvariantError(
                "memory update with a signal the controller did not issue")
        i, j = self.model.move_slice(int(q), int(sigid))
        dsts = self.model.tdst[i:j]
        k = int(np.searchsorted(dsts, int(q2)))
        if k >= len(dsts) or int(dsts[k]) != int(q2):
            raise InvariantError(
                "observed cell %d is not an abstract successor of "
                "(cell %d, signal %d)" % (q2, q, sigid))
        row = i + k
        z2 = int(self.maps.ann.jump(int(copy), int(self.maps.bits[row])))
        v1n = int(self.maps.v1_index[z2, int(q2)])
        e2 = self._edge_of.get((v2, v1n))
        if e2 is None:
            raise InvariantError(
                "arena edge missing for an abstract transition")
        m1 = self.strategy.update_memory(smem, e1)
        m2 = self.strategy.update_memory(m1, int(e2))
        return (m2, z2)

    # -- explicit tables ------------------------------------------------------

    def reachable_table(self, max_pairs: int = 1_000_000):
        """Explicit output/update tables over the closed-loop reachable pairs.

        Returns ``(memories, output_map, update_map)``: memory values in
        first-visit order (the initial one first), ``output_map[(mid, q)]``
        the issued signal index, and ``update_map[(mid, q, sigid, q2)]`` the
        successor memory id.  Every cell that any adversarial resolution of
        the abstract transitions can reach is enumerated, so completing the
        walk doubles as a proof that the controller is defined along every
        closed-loop run from the initial cells.
        """
        init = self.initial_memory
        mem_ids = {init: 0}
        memories = [init]
        out_map = {}
        upd_map = {}
        seen = set()
        queue = deque()
        for q in self.model.initial:
            pair = (init, int(q))
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
        while queue:
            mem, q = queue.popleft()
            sid = self.output_id(mem, q)
            out_map[(mem_ids[mem], q)] = sid
            for q2 in self.model.successors_of(q, sid):
                q2 = int(q2)
                m2 = self.update(mem, q, sid, q2)
                if m2 not in mem_ids:
                    mem_ids[m2] = len(memories)
                    memories.append(m2)
                upd_map[(mem_ids[mem], q, sid, q2)] = mem_ids[m2]
                nxt = (m2, q2)
                if nxt not in seen:
                    if len(seen) >= max_pairs:
                        raise ConfigError(
                            "closed-loop table exceeds %d reachable pairs"
                            % max_pairs)
                    seen.add(nxt)
                    queue.append(nxt)
        return memories, out_map, upd_map

    def describe(self):
        return {
            "n_states": self.model.n_states,
            "n_signals": len(self.model.signals),
            "n_copies": self.maps.ann.n_copies,
            "strategy_kind": self.strategy.kind,
            "winning_vertices": int(self.winning.sum()),
        }


def extract_controller(strategy, maps, winning) -> SymbolicController:
    """Wrap a winning strategy of the translated game as a cell controller.

    ``maps`` is the translation record returned with the game; ``winning``
    the per-vertex winning mask of the threshold solution.
    """
    if maps.model is None or maps.game is None:
        raise ConfigError("translation maps lack model and game references")
    return SymbolicController(maps.model, maps.game, maps, strategy, winning)


# ---------------------------------------------------------------------------
# lifting to the continuous state space


class LiftedController:
    """Continuous-state wrapper: quantize the observation, then delegate.

    The closed loop alternates ``signal_id`` (pick the next signal from the
    current observation) with ``advance`` (fold the endpoint observation into
    the memory); the plant is left alone for the signal's full duration in
    between.
    """

    def __init__(self, sc: SymbolicController, eta=None):
        grid = sc.model.grid
        if eta is not None:
            eta = tuple(float(e) for e in eta)
            if len(eta) != grid.n or any(
                    abs(a - b) > _TOL for a, b in zip(eta, grid.eta)):
                raise ConfigError(
                    "eta %r does not match the controller grid %r"
                    % (eta, grid.eta))
        self.sc = sc
        self.grid = grid

    def initial(self):
        return self.sc.initial_memory

    def project(self, x) -> int:
        return self.grid.project_id(tuple(x))

    def signal_id(self, mem, x) -> int:
        return self.sc.output_id(mem, self.project(x))

    def signal(self, mem, x):
        return self.sc.output(mem, self.project(x))

    def advance(self, mem, x, sigid, x2):
        return self.sc.update(mem, self.project(x), sigid, self.project(x2))


def lift_controller(sc: SymbolicController, eta=None) -> LiftedController:
    """Compose the cell controller with nearest-cell projection.

    ``eta``, when given, must match the controller's grid radii; it exists so
    call sites can assert which quantization they believe they are running.
    """
    return LiftedController(sc, eta)


# ---------------------------------------------------------------------------
# refinement schedule


@dataclass(frozen=True)
class RefinementSchedule:
    """Round-robin halving of the quantization parameters down to floors.

    A refinement step halves the first parameter, in ``order`` starting from
    the round-robin cursor, whose halved value stays at or above its floor;
    when every parameter is pinned the schedule is exhausted.  Halving tau
    keeps the signal-length window fixed in seconds, so segment counts double
    and the signal set grows.
    """

    initial: Quantization
    eta_floor: Tuple[float, ...]
    mu_floor: Tuple[float, ...]
    tau_floor: float
    order: Tuple[str, ...] = ("eta", "mu", "tau")

    @classmethod
    def default(cls, quant: Quantization) -> "RefinementSchedule":
        """One halving each of eta and mu; tau stays fixed."""
        return cls(quant,
                   tuple(e / 2.0 for e in quant.eta),
                   tuple(m / 2.0 for m in quant.mu),
                   quant.tau)

    def validate(self):
        self.initial.validate()
        if len(self.eta_floor) != len(self.initial.eta):
            raise ConfigError("eta floor dimension mismatch")
        if len(self.mu_floor) != len(self.initial.mu):
            raise ConfigError("mu floor dimension mismatch")
        if (any(f <= 0 for f in self.eta_floor)
                or any(f <= 0 for f in self.mu_floor)
                or self.tau_floor <= 0):
            raise ConfigError("refinement floors must be positive")
        if sorted(self.order) != ["eta", "mu", "tau"]:
            raise ConfigError("halving order must permute eta, mu, tau")
        return self

    def _halve(self, quant: Quantization, name: str):
        if name == "eta":
            vals = tuple(e / 2.0 for e in quant.eta)
            if any(v < f - _TOL for v, f in zip(vals, self.eta_floor)):
                return None
            return Quantization(vals, quant.mu, quant.tau, quant.ell_min,
                                quant.ell_max, quant.input_pitch_mode)
        if name == "mu":
            vals = tuple(m / 2.0 for m in quant.mu)
            if any(v < f - _TOL for v, f in zip(vals, self.mu_floor)):
                return None
            return Quantization(quant.eta, vals, quant.tau, quant.ell_min,
                                quant.ell_max, quant.input_pitch_mode)
        tau = quant.tau / 2.0
        if tau < self.tau_floor - _TOL:
            return None
        return Quantization(quant.eta, quant.mu, tau, quant.ell_min,
                            quant.ell_max, quant.input_pitch_mode)

    def refine(self, quant: Quantization, cursor: int):
        """Next quantization, or None when all parameters sit at floors.

        Returns ``(refined, next_cursor, halved_name)``.
        """
        for k in range(len(self.order)):
            name = self.order[(cursor + k) % len(self.order)]
            q2 = self._halve(quant, name)
            if q2 is not None:
                return q2.validate(), (cursor + k + 1) % len(self.order), name
        return None


# ---------------------------------------------------------------------------
# the synthesis loop


@dataclass
class SynthesisProblem:
    """Everything the loop needs: plant, predicates, objective, threshold,
    and the refinement schedule (which carries the initial quantization)."""

    system: object
    predicates: list
    formula: object              # parsed path formula or its source text
    nu: Fraction
    schedule: RefinementSchedule
    jobs: int = 1
    meta: dict = field(default_factory=dict)


@dataclass
class SynthesisResult:
    success: bool
    controller: Optional[SymbolicController]
    iterations: List[dict]
    quantization: Quantization   # the last one tried
    model: object = None
    game: object = None
    maps: object = None
    solution: object = None

    def raise_if_failed(self):
        if not self.success:
            last = self.iterations[-1] if self.iterations else {}
            losing = last.get("initial_losing_cells")
            raise UnrealizableError(
                "no controller found after %d iterations"
                % len(self.iterations), losing_states=losing)
        return self


def synthesize(problem: SynthesisProblem, *, max_sweeps=None,
               progress=None) -> SynthesisResult:
    """Abstract, compile, translate, solve; refine on failure until floors.

    Success requires every projected initial cell to be winning in the
    initial monitor copy.  ``progress``, when given, is called with each
    iteration's diagnostics record as soon as it is complete.
    """
    sys_ = problem.system.validate()
    sched = problem.schedule.validate()
    preds = list(problem.predicates)
    names = [p.name for p in preds]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate predicate names")
    for p in preds:
        p.check_axes(sys_.wrap)
    formula = problem.formula
    if isinstance(formula, str):
        formula = parse_spec(formula)
    check_atoms(formula, set(names))
    nu = Fraction(problem.nu)
    if nu <= 0:
        raise ConfigError("threshold nu must be positive")
    ann = compile_parity(formula, known=set(names))

    iterations: List[dict] = []
    quant = sched.initial
    cursor = 0
    halved = None
    while True:
        t0 = time.monotonic()
        model = build_symbolic_model(sys_, quant, preds, jobs=problem.jobs)
        game, maps = translate(model, ann, nu)
        sol = solve_threshold(game, max_sweeps=max_sweeps)
        init_cells = list(model.initial)
        init_vs = maps.init_vertices[np.array(init_cells, dtype=np.int64)]
        win = sol.winning[init_vs]
        diag = {
            "iteration": len(iterations),
            "eta": quant.eta,
            "mu": quant.mu,
            "tau": quant.tau,
            "halved": halved,
            "n_states": model.n_states,
            "n_transitions": model.n_transitions,
            "n_signals": len(model.signals),
            "n_vertices": game.n_vertices,
            "n_edges": game.n_edges,
            "winning_vertices": int(sol.winning.sum()),
            "initial_cells": init_cells,
            "initial_winning": int(win.sum()),
            "initial_losing_cells": [q for q, w in zip(init_cells, win)
                                     if not w],
            "winning_fraction": float(win.mean()) if len(win) else 0.0,
            "ladder": sol.diagnostics.get("ladder"),
            "seconds": time.monotonic() - t0,
        }
        iterations.append(diag)
        if progress is not None:
            progress(diag)
        if len(win) and bool(win.all()):
            controller = extract_controller(sol.strategy, maps, sol.winning)
            return SynthesisResult(True, controller, iterations, quant,
                                   model, game, maps, sol)
        step = sched.refine(quant, cursor)
        if step is None:
            return SynthesisResult(False, None, iterations, quant,
                                   model, game, maps, sol)
        quant, cursor, halved = step
