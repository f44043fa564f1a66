import numpy as np

from selftrig import config as C
from selftrig import harness as H
from selftrig import io as IO
from selftrig.game import translate
from selftrig.logic import compile_parity
from selftrig.abstraction import build_symbolic_model
from selftrig.synthesis import synthesize

SHIFT_INI = """
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

[spec]
formula = GF near

[threshold]
nu = 3/4

[simulation]
steps = 40
seed = 7
h = 0.05
"""

cfg = C.parse_config(SHIFT_INI)
print("hash:", cfg.config_hash())
# canonical idempotence
canon = "\n".join(cfg.describe_lines()) + "\n"
cfg2 = C.parse_config(canon)
assert cfg2.config_hash() == cfg.config_hash(), "canonical form changed the hash"
assert "\n".join(cfg2.describe_lines()) + "\n" == canon, "describe not idempotent"
print("config canonical OK")
print(canon)

# pi parsing
assert C.parse_number("pi/8") == np.pi / 8
assert C.parse_number("-pi") == -np.pi
assert C.parse_number("3*pi/2") == 3 * np.pi / 2
assert C.parse_number("2.5") == 2.5
assert C.parse_number("inf") == float("inf")
print("numbers OK")

res = synthesize(cfg.problem()).raise_if_failed()
ctrl = res.controller
h = cfg.config_hash()

# --- model round trip
mt = IO.model_text(res.model, h)
m2 = IO.parse_model(mt)
mt2 = IO.model_text(m2, h)
assert mt == mt2, "model round trip"
print("model round trip OK (%d bytes)" % len(mt))

# --- annotation round trip
ann = compile_parity(cfg.formula, known={p.name for p in cfg.predicates})
at = IO.annotation_text(ann, h)
a2 = IO.parse_annotation(at)
assert IO.annotation_text(a2, h) == at
print("annotation round trip OK")

# --- translate on reloaded parts == original game
g1, maps1 = translate(res.model, ann, cfg.nu)
g2, _ = translate(m2, a2, cfg.nu)
gt1 = IO.game_text(g1, h)
gt2 = IO.game_text(g2, h)
assert gt1 == gt2, "translate after reload differs"
g3 = IO.parse_game(gt1)
assert IO.game_text(g3, h) == gt1, "game round trip"
print("game round trip OK (%d bytes)" % len(gt1))

# --- strategy round trip (table kind from the solution)
st = IO.strategy_text(res.solution.strategy, h)
s2 = IO.parse_strategy(st, game=res.game)
assert IO.strategy_text(s2, h) == st, "strategy round trip"
print("strategy round trip OK; kind", res.solution.strategy.kind)

# --- budget strategy round trip
from selftrig.game import solve_energy_parity, threshold_weights
w, gran = threshold_weights(res.game)
ep = solve_energy_parity(res.game.owners, res.game.colors, res.game.esrc,
                         res.game.edst, w, no_zero_cycles=True)
bt = IO.strategy_text(ep.strategy, h)
b2 = IO.parse_strategy(bt, game=res.game)
assert IO.strategy_text(b2, h) == bt, "budget strategy round trip"
print("budget strategy round trip OK")

# --- controller round trip
cl = cfg.describe_lines(include_simulation=False)
ct = IO.controller_text(ctrl, h, cfg_lines=cl)
t2 = IO.parse_controller(ct)
ct2 = IO.controller_text(t2, h, cfg_lines=cl)
assert ct == ct2, "controller round trip"
print("controller round trip OK (%d bytes)" % len(ct))
print(ct)

# --- closed loop: live controller vs reloaded table byte-identical
run_a = H.closed_loop_run(cfg.system, ctrl, cfg.sim.steps, cfg.sim.seed,
                          h=cfg.sim.h, config_hash=h)
run_b = H.closed_loop_run(cfg.system, t2, cfg.sim.steps, cfg.sim.seed,
                          h=cfg.sim.h, config_hash=h)
ma = H.metrics(run_a, cfg.predicates)
mb = H.metrics(run_b, cfg.predicates)
ra = IO.run_text(run_a, ma, cfg_lines=cfg.describe_lines())
rb = IO.run_text(run_b, mb, cfg_lines=cfg.describe_lines())
assert ra == rb, "live vs reloaded run records differ"
print("live vs reloaded run identical OK (%d bytes)" % len(ra))

# --- run record round trip
r2 = IO.parse_run(ra)
m2rec = H.metrics(r2, cfg.predicates)
ra2 = IO.run_text(r2, m2rec, cfg_lines=cfg.describe_lines())
assert ra2 == ra, "run record round trip"
print("run record round trip OK")

# --- metrics identity + lemma
assert H.check_rate_identity(ma), "rate identity"
assert ma["lemma_violations"] == 0
assert all(run_a.lemma_ok)
print("metrics:", {k: v for k, v in ma.items() if k != "running_average"})

# --- csv
csv = IO.trajectory_csv(run_a)
print(csv.splitlines()[0])
print(csv.splitlines()[1])
print(csv.splitlines()[-1])
assert csv.splitlines()[0] == "t,x1,signal_index,segment_input"

# --- check_bounded
v = H.check_bounded(run_a, cfg.formula, cfg.predicates, grace=10)
print("verdict:", v)
assert v["pass"]

# never-satisfying predicate fails with window reported
from selftrig.abstraction import BoxPred
far = BoxPred("far", {0: (10.0, 11.0)})
v2 = H.check_bounded(run_a, "GF far", [far], grace=5)
print("far verdict:", v2)
assert not v2["pass"]
assert v2["clauses"][0]["first_violating_window"] is not None

# G / F / FG behaviours
v3 = H.check_bounded(run_a, "G wide", [BoxPred("wide", {0: (-99.0, 99.0)})])
assert v3["pass"]
v4 = H.check_bounded(run_a, "F near", [BoxPred("near", {0: (-2.6, 2.6)})])
assert v4["pass"]
v5 = H.check_bounded(run_a, "FG wide", [BoxPred("wide", {0: (-99.0, 99.0)})],
                     grace=10)
assert v5["pass"]
print("check_bounded OK")

# lambda_bar = 0 -> seed independence
run_c = H.closed_loop_run(cfg.system, ctrl, cfg.sim.steps, 12345,
                          h=cfg.sim.h, config_hash=h)
assert [tuple(s) for s in run_c.states] == [tuple(s) for s in run_a.states]
print("seed independence at lambda=0 OK")

print("ALL SCRATCH CHECKS PASSED")
