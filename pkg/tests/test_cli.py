"""Command-line driver: subcommand wiring, output files, exit codes."""

import os

import pytest

from selftrig import io
from selftrig.cli import main

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
far = box 0 2.0 2.6

[spec]
formula = GF near

[threshold]
nu = 3/4

[simulation]
steps = 30
seed = 5
h = 0.05
"""


def write_cfg(tmp_path, text=SHIFT, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_stagewise_pipeline(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["abstract", cfg, "--out", out]) == 0
    assert main(["compile", cfg, "--out", out]) == 0
    assert main(["translate", cfg, os.path.join(out, "model.txt"),
                 os.path.join(out, "annotation.txt"), "--out", out]) == 0
    assert main(["solve", os.path.join(out, "game.txt"), "--out", out]) == 0
    for name in ("model.txt", "grid.txt", "annotation.txt", "game.txt",
                 "winning.txt", "strategy.txt"):
        assert os.path.exists(os.path.join(out, name)), name
    lines = capsys.readouterr().out
    assert "model:" in lines and "winning vertices:" in lines


def test_synth_simulate_check(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["synth", cfg, "--out", out]) == 0
    ctrl = os.path.join(out, "controller.txt")
    assert os.path.exists(ctrl)
    assert main(["simulate", cfg, ctrl, "--out", out]) == 0
    run = os.path.join(out, "run.txt")
    assert os.path.exists(run)
    assert os.path.exists(os.path.join(out, "trajectory.csv"))
    assert main(["check", cfg, run]) == 0
    text = capsys.readouterr().out
    assert "verdict PASS" in text
    assert "lemma violations 0" in text


def test_simulate_seed_replay_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["synth", cfg, "--out", out]) == 0
    ctrl = os.path.join(out, "controller.txt")
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    assert main(["simulate", cfg, ctrl, "--seed", "11", "--out", a]) == 0
    assert main(["simulate", cfg, ctrl, "--seed", "11", "--out", b]) == 0
    ta = io.read_text(os.path.join(a, "run.txt"))
    tb = io.read_text(os.path.join(b, "run.txt"))
    assert ta == tb
    c = str(tmp_path / "c")
    assert main(["simulate", cfg, ctrl, "--seed", "12", "--out", c]) == 0
    assert io.read_text(os.path.join(c, "run.txt")) != ta


def test_simulate_steps_override(tmp_path):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["synth", cfg, "--out", out]) == 0
    ctrl = os.path.join(out, "controller.txt")
    assert main(["simulate", cfg, ctrl, "--steps", "12", "--out", out]) == 0
    run = io.parse_run(io.read_text(os.path.join(out, "run.txt")))
    assert run.steps == 12


def test_config_errors_exit_3(tmp_path, capsys):
    assert main(["abstract", str(tmp_path / "missing.ini"),
                 "--out", str(tmp_path)]) == 3
    bad = write_cfg(tmp_path, SHIFT.replace("u_max", "umax"), "bad.ini")
    assert main(["abstract", bad, "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "config error" in err


def test_mismatched_config_guards_exit_3(tmp_path):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["synth", cfg, "--out", out]) == 0
    ctrl = os.path.join(out, "controller.txt")
    other = write_cfg(tmp_path, SHIFT.replace("nu = 3/4", "nu = 1/2"),
                      "other.ini")
    assert main(["simulate", other, ctrl, "--out", out]) == 3
    assert main(["abstract", cfg, "--out", out]) == 0
    assert main(["compile", cfg, "--out", out]) == 0
    assert main(["translate", other, os.path.join(out, "model.txt"),
                 os.path.join(out, "annotation.txt"), "--out", out]) == 3
    # flags are part of the identity: the same file with --pitch-mode paper
    # resolves to a different configuration
    assert main(["simulate", cfg, ctrl, "--pitch-mode", "paper",
                 "--out", out]) == 3


def test_unrealizable_exits_2(tmp_path, capsys):
    hopeless = write_cfg(tmp_path, SHIFT.replace("nu = 3/4", "nu = 2"),
                         "hopeless.ini")
    assert main(["synth", hopeless, "--out", str(tmp_path / "o")]) == 2
    text = capsys.readouterr().out
    assert "UNREALIZABLE" in text
    assert "iter 0:" in text  # per-iteration progress was reported


def test_failed_check_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["synth", cfg, "--out", out]) == 0
    assert main(["simulate", cfg, os.path.join(out, "controller.txt"),
                 "--out", out]) == 0
    farspec = write_cfg(tmp_path, SHIFT.replace("GF near", "GF far"),
                        "farspec.ini")
    assert main(["check", farspec, os.path.join(out, "run.txt")]) == 2
    assert "verdict FAIL" in capsys.readouterr().out


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out
