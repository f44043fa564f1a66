"""Text serialization for every artifact: models, games, strategies,
controllers, runs.

All formats are line-oriented, tab-separated, and deterministic: floats are
written with ``repr`` (shortest round-tripping form), lists in fixed orders,
and no timestamps or environment details ever enter a dump — two runs of the
same pipeline produce byte-identical files.  Every ``X_text`` /// ``parse_X``
pair round-trips exactly: ``X_text(parse_X(t)) == t``.

The controller file is self-contained for execution: it embeds the grid, the
signal list, and the closed-loop reachable output/update tables, so
``parse_controller`` yields an object that can drive the plant (and re-check
the per-step simulation guarantee) without the synthesis-time structures.
"""

from fractions import Fraction

import numpy as np

from .abstraction import SymbolicModel
from .errors import (ConfigError, InvariantError, UncontrollableStateError)
from .game import (BudgetStrategy, MeanPayoffParityGame, TableStrategy)
from .harness import ClosedLoopRun
from .logic import compile_parity, parse_spec
from .quantize import ControlSignal, Grid


# ---------------------------------------------------------------------------
# low-level field helpers

def _f(v) -> str:
    return repr(float(v))


def _fv(vals) -> str:
    return ",".join(_f(v) for v in vals)


def _iv(vals) -> str:
    return ",".join(str(int(v)) for v in vals)


def _ids(vals) -> str:
    vals = list(vals)
    return _iv(vals) if vals else "-"


def _parse_floats(s):
    try:
        return tuple(float(v) for v in s.split(","))
    except ValueError:
        raise ConfigError("bad float list %r" % s) from None


def _parse_ints(s):
    try:
        return tuple(int(v) for v in s.split(","))
    except ValueError:
        raise ConfigError("bad integer list %r" % s) from None


def _parse_ids(s):
    return [] if s == "-" else list(_parse_ints(s))


def _names(mask_names) -> str:
    return ",".join(sorted(mask_names)) if mask_names else "-"


def _mask(s, bit_of) -> int:
    if s == "-":
        return 0
    m = 0
    for name in s.split(","):
        if name not in bit_of:
            raise ConfigError("unknown predicate %r in dump" % name)
        m |= 1 << bit_of[name]
    return m


def _rows(text, kind):
    lines = text.splitlines()
    if not lines or lines[0].split("\t")[0] != kind:
        raise ConfigError("not a %s dump" % kind)
    header = lines[0].split("\t")
    if len(header) < 2 or header[1] != "1":
        raise ConfigError("unsupported %s dump version" % kind)
    return [ln.split("\t") for ln in lines[1:] if ln]


def _one(rows, tag, kind, required=True):
    hits = [r for r in rows if r[0] == tag]
    if len(hits) > 1:
        raise ConfigError("duplicate %r line in %s dump" % (tag, kind))
    if not hits:
        if required:
            raise ConfigError("%s dump is missing its %r line" % (kind, tag))
        return None
    return hits[0]


def _many(rows, tag):
    return [r for r in rows if r[0] == tag]


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def read_text(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise ConfigError("cannot read %s: %s" % (path, e)) from None


# ---------------------------------------------------------------------------
# shared sub-records: grids and signal lists

def _grid_line(grid) -> str:
    return "grid\t%s\t%s\t%s\t%s" % (_fv(grid.state_lo), _fv(grid.state_hi),
                                     _iv(int(w) for w in grid.wrap),
                                     _fv(grid.eta))


def _parse_grid(row) -> Grid:
    if len(row) != 5:
        raise ConfigError("malformed grid line")
    lo, hi = _parse_floats(row[1]), _parse_floats(row[2])
    wrap = tuple(bool(v) for v in _parse_ints(row[3]))
    return Grid(lo, hi, wrap, _parse_floats(row[4]))


def _signal_lines(signals):
    for i, sig in enumerate(signals):
        segs = "|".join(_fv(u) for u in sig.inputs)
        yield "signal\t%d\t%s\t%s" % (i, _f(sig.tau), segs)


def _parse_signals(rows):
    out = []
    for row in rows:
        if len(row) != 4:
            raise ConfigError("malformed signal line")
        if int(row[1]) != len(out):
            raise ConfigError("signal ids out of order in dump")
        inputs = [_parse_floats(seg) for seg in row[3].split("|")]
        out.append(ControlSignal(inputs, float(row[2])))
    return out


# ---------------------------------------------------------------------------
# symbolic model


class NamedPredicate:
    """Placeholder for a predicate reloaded from a dump: the name is all the
    downstream game translation needs (labels were evaluated at build time)."""

    kind = "name-only"

    def __init__(self, name):
        self.name = name

    def check_axes(self, wrap):
        pass

    def holds(self, x, wrap=None, periods=None):
        raise ConfigError(
            "predicate %r was reloaded from a model dump and has no "
            "geometry; use the config file for concrete checks" % self.name)


def model_text(model: SymbolicModel, config_hash: str = "") -> str:
    lines = ["model\t1", "config\t%s" % config_hash, _grid_line(model.grid)]
    lines.extend(_signal_lines(model.signals))
    for bit, p in enumerate(model.predicates):
        lines.append("predicate\t%d\t%s" % (bit, p.name))
    lines.append("initial\t%s" % _ids(model.initial))
    for s in range(len(model.signals)):
        lines.append("alive\t%d\t%s" % (s, _ids(np.flatnonzero(model.alive[s]))))
    T = model.n_transitions
    lines.append("transitions\t%d" % T)
    for t in range(T):
        pairs = model.rho_exists_pairs(t)
        rho_e = ";".join("%s|%s" % (_names(model.mask_names(pm)),
                                    _names(model.mask_names(mm)))
                         for pm, mm in pairs)
        ap, am = model.rho_forall_pair(t)
        rho_a = "%s|%s" % (_names(model.mask_names(ap)),
                           _names(model.mask_names(am)))
        lines.append("t\t%d\t%d\t%d\t%s\t%s"
                     % (int(model.tsrc[t]), int(model.tsig[t]),
                        int(model.tdst[t]), rho_e, rho_a))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> SymbolicModel:
    rows = _rows(text, "model")
    grid = _parse_grid(_one(rows, "grid", "model"))
    signals = _parse_signals(_many(rows, "signal"))
    if not signals:
        raise ConfigError("model dump lists no signals")
    preds = []
    for row in _many(rows, "predicate"):
        if int(row[1]) != len(preds):
            raise ConfigError("predicate bits out of order in dump")
        preds.append(NamedPredicate(row[2]))
    bit_of = {p.name: i for i, p in enumerate(preds)}
    initial = _parse_ids(_one(rows, "initial", "model")[1])
    alive = np.zeros((len(signals), grid.size), dtype=bool)
    for row in _many(rows, "alive"):
        alive[int(row[1]), _parse_ids(row[2])] = True
    T = int(_one(rows, "transitions", "model")[1])
    trows = _many(rows, "t")
    if len(trows) != T:
        raise ConfigError("model dump announces %d transitions but lists %d"
                          % (T, len(trows)))
    tsrc = np.zeros(T, dtype=np.int64)
    tsig = np.zeros(T, dtype=np.int64)
    tdst = np.zeros(T, dtype=np.int64)
    e1p = np.zeros(T, dtype=np.int64)
    e1m = np.zeros(T, dtype=np.int64)
    e2p = np.zeros(T, dtype=np.int64)
    e2m = np.zeros(T, dtype=np.int64)
    ap = np.zeros(T, dtype=np.int64)
    am = np.zeros(T, dtype=np.int64)
    for t, row in enumerate(trows):
        if len(row) != 6:
            raise ConfigError("malformed transition line")
        tsrc[t], tsig[t], tdst[t] = int(row[1]), int(row[2]), int(row[3])
        pairs = [seg.split("|") for seg in row[4].split(";")]
        if any(len(p) != 2 for p in pairs) or len(pairs) not in (1, 2):
            raise ConfigError("malformed rho-exists field")
        masks = [(_mask(p[0], bit_of), _mask(p[1], bit_of)) for p in pairs]
        if len(masks) == 1:
            masks = masks * 2
        (e1p[t], e1m[t]), (e2p[t], e2m[t]) = masks
        fa = row[5].split("|")
        if len(fa) != 2:
            raise ConfigError("malformed rho-forall field")
        ap[t], am[t] = _mask(fa[0], bit_of), _mask(fa[1], bit_of)
    cfg_row = _one(rows, "config", "model", required=False)
    meta = ({"config": cfg_row[1]}
            if cfg_row and len(cfg_row) > 1 and cfg_row[1] else None)
    model = SymbolicModel(grid, signals, preds, initial, tsrc, tsig, tdst,
                          e1p, e1m, e2p, e2m, ap, am, alive, meta=meta)
    model.check_invariants()
    return model


# ---------------------------------------------------------------------------
# parity annotation

def annotation_text(ann, config_hash: str = "") -> str:
    lines = ["annotation\t1", "config\t%s" % config_hash]
    lines.extend(ann.describe())
    return "\n".join(lines) + "\n"


def parse_annotation(text: str):
    """Recompile the annotation from its formula line, then verify the dump.

    Compilation is deterministic, so the dumped copy/color/jump tables must
    match the recompiled monitor exactly; any mismatch means the file was
    edited or corrupted.
    """
    rows = _rows(text, "annotation")
    formula = _one(rows, "formula", "annotation")[1]
    ann = compile_parity(parse_spec(formula))
    body = [ln for ln in text.splitlines()[2:] if ln]
    if body != ann.describe():
        raise ConfigError(
            "annotation dump does not match its own formula %r" % formula)
    return ann


# ---------------------------------------------------------------------------
# game

_GAME_META = ("equal_stage_payoffs", "n_v1", "formula")


def game_text(game: MeanPayoffParityGame, config_hash: str = "") -> str:
    thr = game.threshold
    sc = game.payoff_scale
    lines = ["game\t1", "config\t%s" % config_hash,
             "counts\t%d\t%d" % (game.n_vertices, game.n_edges),
             "threshold\t%d\t%d" % (thr.numerator, thr.denominator),
             "scale\t%d\t%d" % (sc.numerator, sc.denominator)]
    for key in _GAME_META:
        if key in game.meta:
            val = game.meta[key]
            if key == "equal_stage_payoffs":
                val = int(bool(val))
            lines.append("meta\t%s\t%s" % (key, val))
    for v in range(game.n_vertices):
        lines.append("vertex\t%d\t%d\t%d"
                     % (v, int(game.owners[v]), int(game.colors[v])))
    for e in range(game.n_edges):
        lines.append("edge\t%d\t%d\t%d"
                     % (int(game.esrc[e]), int(game.edst[e]),
                        int(game.payoffs[e])))
    return "\n".join(lines) + "\n"


def parse_game(text: str) -> MeanPayoffParityGame:
    rows = _rows(text, "game")
    nv, ne = (int(v) for v in _one(rows, "counts", "game")[1:3])
    ta, tb = (int(v) for v in _one(rows, "threshold", "game")[1:3])
    sa, sb = (int(v) for v in _one(rows, "scale", "game")[1:3])
    meta = {}
    cfg_row = _one(rows, "config", "game", required=False)
    if cfg_row and len(cfg_row) > 1 and cfg_row[1]:
        meta["config"] = cfg_row[1]
    for row in _many(rows, "meta"):
        key, val = row[1], row[2]
        if key == "equal_stage_payoffs":
            meta[key] = bool(int(val))
        elif key == "n_v1":
            meta[key] = int(val)
        else:
            meta[key] = val
    vrows = _many(rows, "vertex")
    erows = _many(rows, "edge")
    if len(vrows) != nv or len(erows) != ne:
        raise ConfigError("game dump counts disagree with its line counts")
    owners = np.zeros(nv, dtype=np.int8)
    colors = np.zeros(nv, dtype=np.int64)
    for row in vrows:
        v = int(row[1])
        owners[v], colors[v] = int(row[2]), int(row[3])
    esrc = np.array([int(r[1]) for r in erows], dtype=np.int64)
    edst = np.array([int(r[2]) for r in erows], dtype=np.int64)
    pays = np.array([int(r[3]) for r in erows], dtype=np.int64)
    game = MeanPayoffParityGame(owners, colors, esrc, edst, pays,
                                Fraction(ta, tb), Fraction(sa, sb), meta)
    game.check_invariants()
    return game


# ---------------------------------------------------------------------------
# strategies

def strategy_text(strategy, config_hash: str = "") -> str:
    lines = ["strategy\t1", "config\t%s" % config_hash,
             "kind\t%s" % strategy.kind]
    if strategy.kind == "table":
        lines.append("table\t%d\t%d\t%s" % (strategy.n_memory,
                                            strategy.init_memory,
                                            strategy.update_rule))
        for (m, v), e in sorted(strategy.move.items()):
            lines.append("move\t%d\t%d\t%d" % (m, v, e))
        if strategy.update_rule == "table":
            for (m, e), m2 in sorted(strategy.update.items()):
                lines.append("update\t%d\t%d\t%d" % (m, e, m2))
    elif strategy.kind == "budget":
        n = len(strategy.credits)
        lines.append("budget\t%d\t%d\t%d\t%d"
                     % (strategy.bsat, n, len(strategy.weights),
                        len(strategy.rules)))
        lines.append("weights\t%s" % _ids(strategy.weights))
        lines.append("credits\t%s" % ",".join(
            "-" if c is None else str(int(c)) for c in strategy.credits))
        for k, (mask, thresh, edges) in enumerate(strategy.rules):
            for v in np.flatnonzero(np.asarray(mask)):
                if edges[v] >= 0:
                    lines.append("rule\t%d\t%d\t%d\t%d"
                                 % (k, int(v), int(thresh[v]), int(edges[v])))
    else:
        raise ConfigError("cannot serialize strategy kind %r" % strategy.kind)
    for key in sorted(strategy.meta):
        lines.append("meta\t%s\t%s" % (key, strategy.meta[key]))
    return "\n".join(lines) + "\n"


def parse_strategy(text: str, game=None):
    rows = _rows(text, "strategy")
    kind = _one(rows, "kind", "strategy")[1]
    meta = {row[1]: row[2] for row in _many(rows, "meta")}
    if kind == "table":
        head = _one(rows, "table", "strategy")
        n_memory, init_memory, rule = int(head[1]), int(head[2]), head[3]
        move = {(int(r[1]), int(r[2])): int(r[3])
                for r in _many(rows, "move")}
        update = {(int(r[1]), int(r[2])): int(r[3])
                  for r in _many(rows, "update")}
        strat = TableStrategy(n_memory, init_memory, move, rule, update, meta)
    elif kind == "budget":
        head = _one(rows, "budget", "strategy")
        bsat, n, ne, n_rules = (int(v) for v in head[1:5])
        weights = np.array(_parse_ids(_one(rows, "weights", "strategy")[1]),
                           dtype=np.int64)
        if len(weights) != ne:
            raise ConfigError("strategy dump weight count mismatch")
        ctoks = _one(rows, "credits", "strategy")[1].split(",")
        if len(ctoks) != n:
            raise ConfigError("strategy dump credit count mismatch")
        credits = [None if t == "-" else int(t) for t in ctoks]
        rules = [(np.zeros(n, dtype=bool), np.zeros(n, dtype=np.int64),
                  np.full(n, -1, dtype=np.int64)) for _ in range(n_rules)]
        for row in _many(rows, "rule"):
            k, v = int(row[1]), int(row[2])
            mask, thresh, edges = rules[k]
            mask[v] = True
            thresh[v] = int(row[3])
            edges[v] = int(row[4])
        strat = BudgetStrategy(weights, rules, credits, bsat, meta)
    else:
        raise ConfigError("unknown strategy kind %r in dump" % kind)
    if game is not None:
        strat.bind(game)
    return strat


# ---------------------------------------------------------------------------
# controllers


class ControllerTable:
    """A controller reloaded from its file: explicit tables over (memory id,
    cell) pairs.

    Mirrors the live controller's driving interface (``initial_memory``,
    ``output_id``, ``update``, ``successor_cells``); memory values are the
    integer ids assigned at dump time.  The update-table keys double as the
    list of abstract successors, which is what the closed-loop harness needs
    for its per-step simulation check.
    """

    kind = "controller-table"

    def __init__(self, grid, signals, memories, out_map, upd_map,
                 config_hash=""):
        self.grid = grid
        self.signals = list(signals)
        self.memories = list(memories)
        self.out = dict(out_map)
        self.upd = dict(upd_map)
        self.config_hash = config_hash
        self._succ = {}
        for (mid, q, sid, q2) in self.upd:
            self._succ.setdefault((mid, q, sid), []).append(q2)
        for lst in self._succ.values():
            lst.sort()

    @property
    def initial_memory(self) -> int:
        return 0

    @property
    def n_memories(self) -> int:
        return len(self.memories)

    def output_id(self, mem, q) -> int:
        key = (int(mem), int(q))
        if key not in self.out:
            raise UncontrollableStateError(
                "no recorded move for cell %d in memory %d" % (q, mem))
        return self.out[key]

    def output(self, mem, q):
        return self.signals[self.output_id(mem, q)]

    def update(self, mem, q, sigid, q2) -> int:
        got = self.upd.get((int(mem), int(q), int(sigid), int(q2)))
        if got is None:
            issued = self.out.get((int(mem), int(q)))
            if issued != int(sigid):
                raise InvariantError(
                    "memory update with a signal the controller did not issue")
            raise InvariantError(
                "observed cell %d is not an abstract successor of "
                "(cell %d, signal %d)" % (q2, q, sigid))
        return got

    def successor_cells(self, mem, q, sigid):
        return list(self._succ.get((int(mem), int(q), int(sigid)), ()))

    def describe(self):
        return {"n_memories": len(self.memories),
                "n_outputs": len(self.out),
                "n_updates": len(self.upd)}


def controller_text(ctrl, config_hash: str = "", cfg_lines=()) -> str:
    """Serialize a controller (live or reloaded) as a self-contained file.

    ``cfg_lines``, when given, is the canonical effective configuration; it
    is embedded verbatim (tagged ``cfg``) so the file documents its own
    provenance beyond the hash.
    """
    grid = ctrl.grid
    if isinstance(ctrl, ControllerTable):
        memories = list(ctrl.memories)
        out_items = sorted(ctrl.out.items())
        upd_items = sorted(ctrl.upd.items())
    else:
        mems, out_map, upd_map = ctrl.reachable_table()
        memories = [(int(sm), int(z)) for sm, z in mems]
        out_items = sorted(out_map.items())
        upd_items = sorted(upd_map.items())
    lines = ["controller\t1", "config\t%s" % config_hash,
             "eta\t%s" % _fv(grid.eta),
             "memories\t%d" % len(memories)]
    for ln in cfg_lines:
        lines.append("cfg\t%s" % ln)
    lines.append(_grid_line(grid))
    lines.extend(_signal_lines(ctrl.signals))
    for mid, (smem, copy) in enumerate(memories):
        lines.append("memory\t%d\t%d\t%d" % (mid, smem, copy))
    for (mid, q), sid in out_items:
        lines.append("output\t%d\t%s\t%d"
                     % (mid, _iv(grid.index_of_id(q)), sid))
    for (mid, q, sid, q2), mid2 in upd_items:
        lines.append("update\t%d\t%s\t%d\t%s\t%d"
                     % (mid, _iv(grid.index_of_id(q)), sid,
                        _iv(grid.index_of_id(q2)), mid2))
    return "\n".join(lines) + "\n"


def parse_controller(text: str) -> ControllerTable:
    rows = _rows(text, "controller")
    cfg_row = _one(rows, "config", "controller", required=False)
    config_hash = cfg_row[1] if cfg_row and len(cfg_row) > 1 else ""
    grid = _parse_grid(_one(rows, "grid", "controller"))
    eta = _parse_floats(_one(rows, "eta", "controller")[1])
    if tuple(eta) != tuple(grid.eta):
        raise ConfigError("controller header eta disagrees with its grid")
    signals = _parse_signals(_many(rows, "signal"))
    n_mem = int(_one(rows, "memories", "controller")[1])
    memories = []
    for row in _many(rows, "memory"):
        if int(row[1]) != len(memories):
            raise ConfigError("memory ids out of order in controller dump")
        memories.append((int(row[2]), int(row[3])))
    if len(memories) != n_mem:
        raise ConfigError("controller dump memory count mismatch")
    out_map = {}
    for row in _many(rows, "output"):
        q = grid.id_of_index(_parse_ints(row[2]))
        out_map[(int(row[1]), q)] = int(row[3])
    upd_map = {}
    for row in _many(rows, "update"):
        q = grid.id_of_index(_parse_ints(row[2]))
        q2 = grid.id_of_index(_parse_ints(row[4]))
        mid2 = int(row[5])
        if not (0 <= mid2 < n_mem):
            raise ConfigError("controller dump references memory %d" % mid2)
        upd_map[(int(row[1]), q, int(row[3]), q2)] = mid2
    table = ControllerTable(grid, signals, memories, out_map, upd_map,
                            config_hash)
    for (mid, q) in table.out:
        if not (0 <= mid < n_mem):
            raise ConfigError("controller dump references memory %d" % mid)
    return table


# ---------------------------------------------------------------------------
# run records and trajectories


def run_text(run: ClosedLoopRun, metric_record=None, cfg_lines=()) -> str:
    lines = ["run\t1", "config\t%s" % run.config_hash]
    for ln in cfg_lines:
        lines.append("cfg\t%s" % ln)
    lines += ["seed\t%d" % run.seed,
              "steps\t%d" % run.steps,
              "h\t%s" % _f(run.h),
              "tau\t%s" % _f(run.tau),
              "box\t%s\t%s\t%s" % (_fv(run.state_lo), _fv(run.state_hi),
                                   _iv(int(w) for w in run.wrap)),
              "x0\t%s" % _fv(run.x0)]
    for k in range(run.steps):
        lines.append("step\t%d\t%s\t%s\t%d\t%d\t%d\t%d"
                     % (k, _f(run.times[k]), _fv(run.states[k]),
                        run.cells[k], run.signal_ids[k], run.seg_counts[k],
                        int(run.lemma_ok[k])))
    lines.append("final\t%s\t%s\t%d" % (_f(run.times[-1]),
                                        _fv(run.states[-1]), run.cells[-1]))
    for i in range(len(run.sample_t)):
        lines.append("sample\t%s\t%s\t%d\t%d\t%s"
                     % (_f(run.sample_t[i]), _fv(run.sample_x[i]),
                        int(run.sample_step[i]), int(run.sample_sig[i]),
                        _fv(run.sample_u[i])))
    if metric_record is not None:
        m = metric_record
        lines.append("metric\taverage_signal_length\t%s"
                     % _f(m["average_signal_length"]))
        lines.append("metric\ttrigger_rate\t%s" % _f(m["trigger_rate"]))
        lines.append("metric\tlemma_violations\t%d" % m["lemma_violations"])
        for name in m.get("n_visits", {}):
            lines.append("metric\tvisits\t%s\t%d" % (name,
                                                     m["n_visits"][name]))
            gap = m["max_gap"][name]
            lines.append("metric\tmax_gap\t%s\t%s"
                         % (name, "never" if gap is None else _f(gap)))
    return "\n".join(lines) + "\n"


def parse_run(text: str) -> ClosedLoopRun:
    rows = _rows(text, "run")
    config_hash = _one(rows, "config", "run")[1]
    seed = int(_one(rows, "seed", "run")[1])
    steps = int(_one(rows, "steps", "run")[1])
    h = float(_one(rows, "h", "run")[1])
    tau = float(_one(rows, "tau", "run")[1])
    box = _one(rows, "box", "run")
    lo, hi = _parse_floats(box[1]), _parse_floats(box[2])
    wrap = tuple(bool(v) for v in _parse_ints(box[3]))
    x0 = _parse_floats(_one(rows, "x0", "run")[1])
    srows = _many(rows, "step")
    if len(srows) != steps:
        raise ConfigError("run record step count mismatch")
    states, times, cells = [], [], []
    signal_ids, seg_counts, lemma_ok = [], [], []
    for k, row in enumerate(srows):
        if int(row[1]) != k:
            raise ConfigError("run record steps out of order")
        times.append(float(row[2]))
        states.append(_parse_floats(row[3]))
        cells.append(int(row[4]))
        signal_ids.append(int(row[5]))
        seg_counts.append(int(row[6]))
        lemma_ok.append(bool(int(row[7])))
    fin = _one(rows, "final", "run")
    times.append(float(fin[1]))
    states.append(_parse_floats(fin[2]))
    cells.append(int(fin[3]))
    s_t, s_x, s_step, s_sig, s_u = [], [], [], [], []
    for row in _many(rows, "sample"):
        s_t.append(float(row[1]))
        s_x.append(_parse_floats(row[2]))
        s_step.append(int(row[3]))
        s_sig.append(int(row[4]))
        s_u.append(_parse_floats(row[5]))
    run = ClosedLoopRun(
        seed=seed, h=h, tau=tau, x0=x0, state_lo=lo, state_hi=hi, wrap=wrap,
        states=states, times=times, cells=cells, signal_ids=signal_ids,
        seg_counts=seg_counts, lemma_ok=lemma_ok,
        sample_t=np.asarray(s_t, dtype=float),
        sample_x=np.asarray(s_x, dtype=float),
        sample_step=np.asarray(s_step, dtype=np.int64),
        sample_sig=np.asarray(s_sig, dtype=np.int64),
        sample_u=s_u, config_hash=config_hash)
    run.check_invariants()
    return run


def trajectory_csv(run: ClosedLoopRun) -> str:
    """Plot-ready dense trajectory: t, state coordinates, the issued
    signal's index, and the input segment active at each sample."""
    n = run.sample_x.shape[1] if len(run.sample_t) else len(run.x0)
    header = "t," + ",".join("x%d" % (i + 1) for i in range(n)) \
        + ",signal_index,segment_input"
    lines = [header]
    for i in range(len(run.sample_t)):
        xs = ",".join(_f(v) for v in run.sample_x[i])
        seg = ";".join(_f(v) for v in run.sample_u[i])
        lines.append("%s,%s,%d,%s" % (_f(run.sample_t[i]), xs,
                                      int(run.sample_sig[i]), seg))
    return "\n".join(lines) + "\n"
