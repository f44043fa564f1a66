"""Command-line driver: each pipeline stage is a subcommand.

``abstract`` builds the symbolic model for the configured quantization,
``compile`` the parity monitor, ``translate`` the game, ``solve`` the
threshold strategy; ``synth`` runs the whole refine-until-floors loop and
writes the controller file; ``simulate`` drives the plant with a controller
file; ``check`` judges a recorded run against the objective; ``selftest``
cross-checks the solvers against exact oracles.

Exit codes: 0 success (controller found, check passed), 2 objective
unrealizable or check failed, 3 configuration problem, 4 invariant violation
(including soundness findings during closed-loop runs).
"""

import argparse
import os
import sys

import numpy as np

from . import config as configmod
from . import harness, io, oracles
from .abstraction import build_symbolic_model
from .dynamics import make_robot, make_shift1d
from .errors import (ConfigError, InvariantError, UncontrollableStateError,
                     UnrealizableError)
from .game import (brute_force_oracle, solve_mean_payoff, solve_parity,
                   solve_threshold, translate)
from .logic import (annotation_verdict_on_lasso, compile_parity,
                    eval_formula_on_lasso, parse_spec)
from .quantize import ControlSignal, input_grid, signal_set, state_grid
from .synthesis import synthesize

EXIT_OK = 0
EXIT_UNREALIZABLE = 2
EXIT_CONFIG = 3
EXIT_INVARIANT = 4


# ---------------------------------------------------------------------------
# shared plumbing

def _overrides(args):
    out = []
    if getattr(args, "paper_beta", False):
        out.append(("system", "paper_beta", "true"))
    if getattr(args, "pitch_mode", None):
        out.append(("quantization", "input_pitch_mode", args.pitch_mode))
    return out


def _load(args) -> configmod.Config:
    return configmod.load_config(args.config, _overrides(args))


def _outfile(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _vec(vals) -> str:
    return "(" + ", ".join("%g" % v for v in vals) + ")"


# ---------------------------------------------------------------------------
# pipeline stages

def cmd_abstract(args) -> int:
    cfg = _load(args)
    model = build_symbolic_model(cfg.system, cfg.quant, cfg.predicates,
                                 jobs=args.jobs)
    path = _outfile(args, "model.txt")
    io.write_text(path, io.model_text(model, cfg.config_hash()))
    gpath = _outfile(args, "grid.txt")
    io.write_text(gpath, "\n".join(model.grid.dump_lines()) + "\n")
    print("model: %d states, %d signals, %d transitions -> %s"
          % (model.n_states, len(model.signals), model.n_transitions, path))
    return EXIT_OK


def cmd_compile(args) -> int:
    cfg = _load(args)
    ann = compile_parity(cfg.formula, known={p.name for p in cfg.predicates})
    path = _outfile(args, "annotation.txt")
    io.write_text(path, io.annotation_text(ann, cfg.config_hash()))
    print("annotation: %d copies, colors %s, %d bases -> %s"
          % (ann.n_copies, ",".join(str(c) for c in ann.colors),
             ann.n_bases, path))
    return EXIT_OK


def cmd_translate(args) -> int:
    cfg = _load(args)
    model = io.parse_model(io.read_text(args.model))
    stamped = model.meta.get("config")
    if stamped and stamped != cfg.config_hash():
        raise ConfigError(
            "model dump was built under config %s but this invocation "
            "resolves to %s" % (stamped[:12], cfg.config_hash()[:12]))
    ann = io.parse_annotation(io.read_text(args.annotation))
    game, _ = translate(model, ann, cfg.nu)
    path = _outfile(args, "game.txt")
    io.write_text(path, io.game_text(game, cfg.config_hash()))
    print("game: %d vertices, %d edges, threshold %s -> %s"
          % (game.n_vertices, game.n_edges, game.threshold, path))
    return EXIT_OK


def cmd_solve(args) -> int:
    game = io.parse_game(io.read_text(args.game))
    sol = solve_threshold(game)
    config_hash = game.meta.get("config", "")
    wpath = _outfile(args, "winning.txt")
    io.write_text(wpath, "\n".join(
        str(v) for v in np.flatnonzero(sol.winning)) + "\n")
    n_win = int(sol.winning.sum())
    print("winning vertices: %d / %d (ladder %s) -> %s"
          % (n_win, game.n_vertices, sol.diagnostics.get("ladder"), wpath))
    if sol.strategy is not None:
        spath = _outfile(args, "strategy.txt")
        io.write_text(spath, io.strategy_text(sol.strategy, config_hash))
        print("strategy: %s -> %s" % (sol.strategy.kind, spath))
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _load(args)
    print("config %s" % cfg.config_hash())

    def report(d):
        print("iter %d: eta=%s mu=%s tau=%g | %d states, %d signals, "
              "%d vertices, %d edges | winning %d/%d initial (ladder %s, "
              "%.1fs)"
              % (d["iteration"], _vec(d["eta"]), _vec(d["mu"]), d["tau"],
                 d["n_states"], d["n_signals"], d["n_vertices"],
                 d["n_edges"], d["initial_winning"],
                 len(d["initial_cells"]), d["ladder"], d["seconds"]))
        sys.stdout.flush()

    result = synthesize(cfg.problem(jobs=args.jobs), progress=report)
    if not result.success:
        last = result.iterations[-1]
        print("UNREALIZABLE after %d iterations; losing initial cells: %s"
              % (len(result.iterations), last["initial_losing_cells"]))
        return EXIT_UNREALIZABLE
    ctrl = result.controller
    text = io.controller_text(
        ctrl, cfg.config_hash(),
        cfg_lines=cfg.describe_lines(include_simulation=False))
    path = _outfile(args, "controller.txt")
    io.write_text(path, text)
    table = io.parse_controller(text)
    print("controller: %d memories, %d outputs, %d updates -> %s"
          % (table.n_memories, len(table.out), len(table.upd), path))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    table = io.parse_controller(io.read_text(args.controller))
    if table.config_hash and table.config_hash != cfg.config_hash():
        raise ConfigError(
            "controller was synthesized under config %s but this invocation "
            "resolves to %s; pass the same config file and flags"
            % (table.config_hash[:12], cfg.config_hash()[:12]))
    seed = cfg.sim.seed if args.seed is None else args.seed
    steps = cfg.sim.steps if args.steps is None else args.steps
    run = harness.closed_loop_run(cfg.system, table, steps, seed,
                                  h=cfg.sim.h,
                                  config_hash=cfg.config_hash())
    record = harness.metrics(run, cfg.predicates)
    rpath = _outfile(args, "run.txt")
    io.write_text(rpath, io.run_text(run, record,
                                     cfg_lines=cfg.describe_lines()))
    cpath = _outfile(args, "trajectory.csv")
    io.write_text(cpath, io.trajectory_csv(run))
    print("run: %d steps in %.1fs of plant time (seed %d) -> %s"
          % (run.steps, run.times[-1], seed, rpath))
    print("average signal length %.6f, trigger rate %.6f, "
          "lemma violations %d"
          % (record["average_signal_length"], record["trigger_rate"],
             record["lemma_violations"]))
    for name in record["n_visits"]:
        gap = record["max_gap"][name]
        print("predicate %s: %d sample visits, max gap %s"
              % (name, record["n_visits"][name],
                 "never" if gap is None else "%.3fs" % gap))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load(args)
    run = io.parse_run(io.read_text(args.run))
    grace = cfg.sim.grace if args.grace is None else args.grace
    verdict = harness.check_bounded(run, cfg.formula, cfg.predicates,
                                    grace=grace)
    print("formula %s" % verdict["formula"])
    print("horizon %d steps, grace %d, burn-in %d"
          % (verdict["horizon"], verdict["grace"], verdict["burn_in"]))
    for c in verdict["clauses"]:
        extra = {k: v for k, v in c.items() if k not in ("op", "phi", "pass")}
        print("clause %s %s: %s  %s"
              % (c["op"], c["phi"], "pass" if c["pass"] else "FAIL", extra))
    print("verdict %s" % ("PASS" if verdict["pass"] else "FAIL"))
    return EXIT_OK if verdict["pass"] else EXIT_UNREALIZABLE


# ---------------------------------------------------------------------------
# selftest suites


def _suite_quantization():
    grid = state_grid((-6.0, -6.0, 0.0), (6.0, 6.0, 2 * np.pi),
                      (False, False, True), (1.0, 1.0, np.pi / 8))
    if grid.counts != (7, 7, 8):
        return "benchmark grid counts %r != (7, 7, 8)" % (grid.counts,)
    inputs = input_grid((-np.pi / 2,), (np.pi / 2,), (np.pi / 2,), "half")
    sigs = signal_set(inputs, 0.5, 0.5, 1.0)
    if len(sigs) != 12:
        return "benchmark signal count %d != 12" % len(sigs)
    d1 = "\n".join(grid.dump_lines())
    d2 = "\n".join(state_grid((-6.0, -6.0, 0.0), (6.0, 6.0, 2 * np.pi),
                              (False, False, True),
                              (1.0, 1.0, np.pi / 8)).dump_lines())
    if d1 != d2:
        return "grid dump is not deterministic"
    return None


def _suite_parity(trials=150):
    rng = np.random.default_rng(101)
    for k in range(trials):
        owners, colors, esrc, edst = oracles.random_parity_instance(
            rng, n_max=7, color_max=3)
        sol = solve_parity(owners, colors, esrc, edst)
        ref = oracles.oracle_parity_positional(owners, colors, esrc, edst)
        if sol.win1.tolist() != ref.tolist():
            return "parity mismatch on instance %d" % k
    return None


def _suite_mean_payoff(trials=60):
    rng = np.random.default_rng(102)
    for k in range(trials):
        g = oracles.random_total_mp_game(rng)
        sol = solve_mean_payoff(g)
        ref = oracles.oracle_mean_payoff_values(g.owners, g.esrc, g.edst,
                                                g.payoffs)
        if sol.values != ref:
            return "mean-payoff values mismatch on instance %d" % k
    return None


def _suite_threshold(trials=100):
    rng = np.random.default_rng(103)
    for k in range(trials):
        g = oracles.random_mppg(rng)
        sol = solve_threshold(g)
        exact = oracles.oracle_threshold_refute(g)
        if sol.winning.tolist() != exact.tolist():
            return "threshold mismatch on instance %d" % k
        certified = brute_force_oracle(g, memory_bound=2)
        if np.any(certified & ~sol.winning):
            return "threshold unsound vs certificates on instance %d" % k
    return None


def _suite_logic(trials=60):
    rng = np.random.default_rng(104)
    ops = ["F", "G", "GF", "FG"]
    names = ["p", "q"]
    for k in range(trials):
        n = int(rng.integers(2, 4))
        parts = ["%s %s" % (ops[rng.integers(len(ops))],
                            names[rng.integers(len(names))])
                 for _ in range(n)]
        text = parts[0]
        for part in parts[1:]:
            text = "%s %s %s" % (text, ("&&", "||")[rng.integers(2)], part)
        formula = parse_spec(text)
        ann = compile_parity(formula)
        for _ in range(12):
            nb = ann.n_bases
            prefix = [int(rng.integers(1 << nb))
                      for _ in range(int(rng.integers(0, 4)))]
            cycle = [int(rng.integers(1 << nb))
                     for _ in range(int(rng.integers(1, 5)))]
            want = eval_formula_on_lasso(formula, prefix, cycle)
            got = annotation_verdict_on_lasso(ann, prefix, cycle)
            if want != got:
                return ("monitor verdict mismatch for %r on %r/%r"
                        % (text, prefix, cycle))
    return None


def _growth_trial(plant, rng):
    nseg = int(rng.integers(1, 3))
    inputs = [tuple(rng.uniform(lo, hi) for lo, hi
                    in zip(plant.input_lo, plant.input_hi))
              for _ in range(nseg)]
    sig = ControlSignal(inputs, 0.5)
    def rand_state():
        return tuple(rng.uniform(lo, hi) for lo, hi
                     in zip(plant.state_lo, plant.state_hi))
    x1, x2 = rand_state(), rand_state()
    d0 = plant.distance(x1, x2)
    lam1 = [rng.uniform(-plant.lambda_bar, plant.lambda_bar)
            for _ in range(nseg)]
    lam2 = [rng.uniform(-plant.lambda_bar, plant.lambda_bar)
            for _ in range(nseg)]
    y1, y2 = x1, x2
    for j, u in enumerate(sig.inputs):
        y1 = plant.flow(y1, u, lam1[j], sig.tau)
        y2 = plant.flow(y2, u, lam2[j], sig.tau)
        t = (j + 1) * sig.tau
        if plant.distance(y1, y2) > plant.beta_fwd(sig, d0, t) + 1e-6:
            return "beta violated"
        if plant.distance(x1, y2) > plant.alpha_fwd(sig, d0, t) + 1e-6:
            return "alpha violated"
    return None


def _suite_growth(trials=800):
    rng = np.random.default_rng(105)
    for plant in (make_robot(), make_shift1d()):
        for k in range(trials):
            bad = _growth_trial(plant, rng)
            if bad:
                return "%s on %s, trial %d" % (bad, plant.name, k)
    return None


def cmd_selftest(args) -> int:
    suites = [("quantization determinism", _suite_quantization),
              ("parity solver vs oracle", _suite_parity),
              ("mean-payoff solver vs oracle", _suite_mean_payoff),
              ("threshold solver vs exact refutation", _suite_threshold),
              ("parity monitor vs lasso enumeration", _suite_logic),
              ("growth bounds monte carlo", _suite_growth)]
    failed = False
    for name, fn in suites:
        problem = fn()
        if problem is None:
            print("PASS %s" % name)
        else:
            print("FAIL %s: %s" % (name, problem))
            failed = True
        sys.stdout.flush()
    if failed:
        raise InvariantError("selftest found solver disagreements")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_flags(sp, jobs=False):
    sp.add_argument("config", help="configuration file (INI sections)")
    sp.add_argument("--paper-beta", action="store_true",
                    help="drop the disturbance correction from the robot's "
                         "divergence bound (reproduces the uncorrected "
                         "printed bound; unsound for lambda_bar > 0)")
    sp.add_argument("--pitch-mode", choices=("half", "paper"), default=None,
                    help="input grid pitch: spacing mu (half) or 2*mu (paper)")
    if jobs:
        sp.add_argument("--jobs", type=int, default=1,
                        help="abstraction parallelism (interface knob; "
                             "construction is vectorized)")


def _add_out(sp):
    sp.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="selftrig",
        description="Symbolic self-triggered controller synthesis: grid "
                    "abstraction, parity monitor, mean-payoff parity game, "
                    "closed-loop simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("abstract", help="config -> symbolic model dump")
    _add_config_flags(sp, jobs=True)
    _add_out(sp)
    sp.set_defaults(fn=cmd_abstract)

    sp = sub.add_parser("compile", help="config -> parity annotation dump")
    _add_config_flags(sp)
    _add_out(sp)
    sp.set_defaults(fn=cmd_compile)

    sp = sub.add_parser("translate",
                        help="model + annotation dumps -> game dump")
    _add_config_flags(sp)
    sp.add_argument("model", help="model dump from `abstract`")
    sp.add_argument("annotation", help="annotation dump from `compile`")
    _add_out(sp)
    sp.set_defaults(fn=cmd_translate)

    sp = sub.add_parser("solve",
                        help="game dump -> strategy dump + winning set")
    sp.add_argument("game", help="game dump from `translate`")
    _add_out(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("synth",
                        help="config -> controller file (abstraction / "
                             "translation / solving, refined until floors)")
    _add_config_flags(sp, jobs=True)
    _add_out(sp)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("simulate",
                        help="config + controller file -> run record + "
                             "trajectory CSV")
    _add_config_flags(sp)
    sp.add_argument("controller", help="controller file from `synth`")
    sp.add_argument("--seed", type=int, default=None,
                    help="disturbance seed (default: [simulation] seed)")
    sp.add_argument("--steps", type=int, default=None,
                    help="trigger rounds (default: [simulation] steps)")
    _add_out(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("check",
                        help="config + run record -> bounded-horizon verdict")
    _add_config_flags(sp)
    sp.add_argument("run", help="run record from `simulate`")
    sp.add_argument("--grace", type=int, default=None,
                    help="window length in steps (default: [simulation] "
                         "grace)")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("selftest",
                        help="cross-check solvers against exact oracles")
    sp.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except UnrealizableError as e:
        print("unrealizable: %s" % e, file=sys.stderr)
        return EXIT_UNREALIZABLE
    except (InvariantError, UncontrollableStateError) as e:
        print("invariant violation: %s" % e, file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
