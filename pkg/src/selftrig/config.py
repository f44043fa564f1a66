"""One INI file drives every command: plant, grid, objective, loop knobs.

The effective configuration (defaults filled in, numbers normalized) is what
identifies a run: ``describe_lines`` renders it, ``config_hash`` hashes the
synthesis-relevant sections, and every dump header embeds the hash so outputs
carry their own provenance.  Two files that spell the same settings
differently (``pi/2`` vs ``1.5707963267948966``, defaults written out vs
omitted) share a hash; anything that changes the synthesized controller does
not.

Numbers accept ``pi`` arithmetic (``pi/8``, ``3*pi/2``, ``-pi``), ``inf``
bounds, and plain floats; the threshold additionally accepts exact fractions
(``nu = 3/4``).  Vectors are whitespace- or comma-separated; initial states
are semicolon-separated vectors.
"""

import configparser
import hashlib
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

from .abstraction import BoxPred, Halfspace
from .dynamics import make_robot, make_shift1d
from .errors import ConfigError
from .logic import check_atoms, parse_spec
from .quantize import Quantization
from .synthesis import RefinementSchedule, SynthesisProblem

SECTIONS = ("system", "quantization", "predicates", "spec", "threshold",
            "refinement", "simulation")
# the simulation section never influences the synthesized controller, so it
# stays out of the identity hash (a replay with another seed is still a run
# of the same controller)
HASHED_SECTIONS = SECTIONS[:-1]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED_NAMES = {"F", "G", "GF", "FG", "true"}

# ---------------------------------------------------------------------------
# scalar parsers

_NUM_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?"
                        r"\d+)?)|(pi|e|inf)|([()+\-*/]))")

_CONSTANTS = {"pi": math.pi, "e": math.e, "inf": math.inf}


class _Expr:
    """Tiny arithmetic over numbers and the constants pi/e/inf: the four
    operators and parentheses, usual precedence, unary minus."""

    def __init__(self, text):
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _NUM_TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise ValueError(text)
                break
            if m.group(1):
                self.toks.append(float(m.group(1)))
            elif m.group(2):
                self.toks.append(_CONSTANTS[m.group(2)])
            else:
                self.toks.append(m.group(3))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def atom(self):
        tok = self.take()
        if tok == "-":
            return -self.atom()
        if tok == "+":
            return self.atom()
        if tok == "(":
            v = self.sum()
            if self.take() != ")":
                raise ValueError("unbalanced parentheses")
            return v
        if isinstance(tok, float):
            return tok
        raise ValueError("unexpected %r" % (tok,))

    def product(self):
        v = self.atom()
        while self.peek() in ("*", "/"):
            if self.take() == "*":
                v = v * self.atom()
            else:
                v = v / self.atom()
        return v

    def sum(self):
        v = self.product()
        while self.peek() in ("+", "-"):
            if self.take() == "+":
                v = v + self.product()
            else:
                v = v - self.product()
        return v

    def parse(self):
        v = self.sum()
        if self.i != len(self.toks):
            raise ValueError("trailing tokens")
        return v


def parse_number(text, where="number"):
    """Float with constant arithmetic: ``0.5``, ``pi/8``, ``3*pi/2``, ``-pi``,
    ``2*(1 + e)``, ``inf``."""
    t = str(text).strip()
    if not t:
        raise ConfigError("empty %s" % where)
    try:
        v = float(_Expr(t).parse())
        if math.isnan(v):
            raise ValueError(t)
        return v
    except (ValueError, ZeroDivisionError, IndexError, RecursionError):
        raise ConfigError("cannot parse %s: %r" % (where, text)) from None


def parse_vector(text, where="vector") -> Tuple[float, ...]:
    toks = [t for t in re.split(r"[,\s]+", str(text).strip()) if t]
    if not toks:
        raise ConfigError("empty %s" % where)
    return tuple(parse_number(t, where) for t in toks)


def parse_states(text, where="states") -> Tuple[Tuple[float, ...], ...]:
    parts = [p for p in str(text).split(";") if p.strip()]
    if not parts:
        raise ConfigError("empty %s" % where)
    return tuple(parse_vector(p, where) for p in parts)


def parse_bool(text, where="flag") -> bool:
    t = str(text).strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError("cannot parse %s: %r (expected true/false)" % (where, text))


def parse_int(text, where="integer") -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError("cannot parse %s: %r" % (where, text)) from None


def parse_fraction(text, where="fraction") -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError("cannot parse %s: %r" % (where, text)) from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(float(v))


def _fmt_vec(vals) -> str:
    return " ".join(_fmt(v) for v in vals)


# ---------------------------------------------------------------------------
# section builders

def _take(sec: dict, key: str, default=None):
    if key in sec:
        return sec.pop(key)
    return default


def _reject_unknown(sec: dict, name: str):
    if sec:
        raise ConfigError("unknown keys in [%s]: %s"
                          % (name, ", ".join(sorted(sec))))


def _build_system(sec: dict):
    kind = str(_take(sec, "kind", "robot")).strip().lower()
    if kind == "robot":
        v = parse_number(_take(sec, "v", "2.5"), "system.v")
        lam = parse_number(_take(sec, "lambda_bar", "0.05"),
                           "system.lambda_bar")
        beta_flag = parse_bool(_take(sec, "paper_beta", "false"),
                               "system.paper_beta")
        rng = parse_number(_take(sec, "pos_range", "6"), "system.pos_range")
        init = parse_states(_take(sec, "init", "0 0 pi/4"), "system.init")
        _reject_unknown(sec, "system")
        return make_robot(v=v, lambda_bar=lam, paper_beta=beta_flag,
                          pos_range=rng, init_states=init)
    if kind == "shift1d":
        rng = parse_number(_take(sec, "x_range", "4"), "system.x_range")
        umax = parse_number(_take(sec, "u_max", "1"), "system.u_max")
        lam = parse_number(_take(sec, "lambda_bar", "0.1"),
                           "system.lambda_bar")
        init = parse_states(_take(sec, "init", "0"), "system.init")
        _reject_unknown(sec, "system")
        return make_shift1d(x_range=rng, u_max=umax, lambda_bar=lam,
                            init_states=init)
    raise ConfigError("unknown system kind %r (expected robot or shift1d)"
                      % kind)


def _require(sec: dict, key: str, name: str):
    if key not in sec:
        raise ConfigError("[%s] is missing required key %r" % (name, key))
    return sec.pop(key)


def _build_quantization(sec: dict) -> Quantization:
    eta = parse_vector(_require(sec, "eta", "quantization"),
                       "quantization.eta")
    mu = parse_vector(_require(sec, "mu", "quantization"), "quantization.mu")
    tau = parse_number(_require(sec, "tau", "quantization"),
                       "quantization.tau")
    ell_min = parse_number(_require(sec, "ell_min", "quantization"),
                           "quantization.ell_min")
    ell_max = parse_number(_require(sec, "ell_max", "quantization"),
                           "quantization.ell_max")
    mode = str(_take(sec, "input_pitch_mode", "half")).strip().lower()
    _reject_unknown(sec, "quantization")
    return Quantization(eta, mu, tau, ell_min, ell_max, mode).validate()


def build_predicate(name: str, text: str):
    """One predicate from its config value: ``box AXIS LO HI [AXIS LO HI ...]``
    or ``halfspace A1 ... An B`` (holds when a.x > b)."""
    if not _NAME_RE.match(name) or name in _RESERVED_NAMES:
        raise ConfigError("bad predicate name %r" % name)
    toks = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not toks:
        raise ConfigError("predicate %r has an empty definition" % name)
    kind, rest = toks[0].lower(), toks[1:]
    where = "predicate %s" % name
    if kind == "box":
        if not rest or len(rest) % 3:
            raise ConfigError(
                "predicate %r: box needs AXIS LO HI triples" % name)
        bounds = {}
        for k in range(0, len(rest), 3):
            ax = parse_int(rest[k], where + " axis")
            if ax in bounds:
                raise ConfigError("predicate %r repeats axis %d" % (name, ax))
            bounds[ax] = (parse_number(rest[k + 1], where),
                          parse_number(rest[k + 2], where))
        return BoxPred(name, bounds)
    if kind == "halfspace":
        if len(rest) < 2:
            raise ConfigError(
                "predicate %r: halfspace needs coefficients and a bound"
                % name)
        vals = [parse_number(t, where) for t in rest]
        return Halfspace(name, vals[:-1], vals[-1])
    raise ConfigError("predicate %r: unknown kind %r (expected box or "
                      "halfspace)" % (name, kind))


def _build_refinement(sec: dict, quant: Quantization) -> RefinementSchedule:
    eta_floor = (parse_vector(sec.pop("eta_floor"), "refinement.eta_floor")
                 if "eta_floor" in sec
                 else tuple(e / 2.0 for e in quant.eta))
    mu_floor = (parse_vector(sec.pop("mu_floor"), "refinement.mu_floor")
                if "mu_floor" in sec
                else tuple(m / 2.0 for m in quant.mu))
    tau_floor = (parse_number(sec.pop("tau_floor"), "refinement.tau_floor")
                 if "tau_floor" in sec else quant.tau)
    order = tuple(str(_take(sec, "order", "eta mu tau")).split())
    _reject_unknown(sec, "refinement")
    return RefinementSchedule(quant, eta_floor, mu_floor, tau_floor,
                              order).validate()


@dataclass
class SimSettings:
    """Closed-loop run knobs; never part of the controller identity."""
    steps: int = 500
    seed: int = 0
    h: float = 0.05
    grace: int = 50

    def validate(self):
        if self.steps < 1:
            raise ConfigError("simulation.steps must be positive")
        if self.h <= 0:
            raise ConfigError("simulation.h must be positive")
        if self.grace < 1:
            raise ConfigError("simulation.grace must be at least 1")
        if self.seed < 0:
            raise ConfigError("simulation.seed must be nonnegative")
        return self


def _build_simulation(sec: dict) -> SimSettings:
    out = SimSettings(
        steps=parse_int(_take(sec, "steps", "500"), "simulation.steps"),
        seed=parse_int(_take(sec, "seed", "0"), "simulation.seed"),
        h=parse_number(_take(sec, "h", "0.05"), "simulation.h"),
        grace=parse_int(_take(sec, "grace", "50"), "simulation.grace"))
    _reject_unknown(sec, "simulation")
    return out.validate()


# ---------------------------------------------------------------------------
# the assembled configuration

_SYS_KEYS = {"robot": ("v", "lambda_bar", "paper_beta", "pos_range"),
             "shift1d": ("x_range", "u_max", "lambda_bar")}


@dataclass
class Config:
    system: object
    predicates: list
    formula: object          # parsed path formula
    nu: Fraction
    schedule: RefinementSchedule
    sim: SimSettings

    @property
    def quant(self) -> Quantization:
        return self.schedule.initial

    def problem(self, jobs: int = 1) -> SynthesisProblem:
        return SynthesisProblem(self.system, list(self.predicates),
                                self.formula, self.nu, self.schedule,
                                jobs=jobs)

    def describe_lines(self, include_simulation: bool = True) -> List[str]:
        """Canonical full form: every key printed, numbers normalized.

        Feeding the result back through ``parse_config`` reproduces the same
        effective configuration, so this text is the provenance record.
        """
        sysm = self.system
        kind = sysm.params["kind"]
        lines = ["[system]", "kind = %s" % kind]
        for key in _SYS_KEYS[kind]:
            lines.append("%s = %s" % (key, _fmt(sysm.params[key])))
        lines.append("init = " + "; ".join(_fmt_vec(x)
                                           for x in sysm.init_states))
        q = self.quant
        lines += ["", "[quantization]",
                  "eta = %s" % _fmt_vec(q.eta),
                  "mu = %s" % _fmt_vec(q.mu),
                  "tau = %s" % _fmt(q.tau),
                  "ell_min = %s" % _fmt(q.ell_min),
                  "ell_max = %s" % _fmt(q.ell_max),
                  "input_pitch_mode = %s" % q.input_pitch_mode]
        lines += ["", "[predicates]"]
        for p in self.predicates:
            if p.kind == "box":
                body = " ".join("%d %s %s" % (ax, _fmt(lo), _fmt(hi))
                                for ax, (lo, hi) in sorted(p.bounds.items()))
            else:
                body = "%s %s" % (_fmt_vec(p.a), _fmt(p.b))
            lines.append("%s = %s %s" % (p.name, p.kind, body))
        lines += ["", "[spec]", "formula = %s" % self.formula]
        lines += ["", "[threshold]", "nu = %s" % self.nu]
        s = self.schedule
        lines += ["", "[refinement]",
                  "eta_floor = %s" % _fmt_vec(s.eta_floor),
                  "mu_floor = %s" % _fmt_vec(s.mu_floor),
                  "tau_floor = %s" % _fmt(s.tau_floor),
                  "order = %s" % " ".join(s.order)]
        if include_simulation:
            lines += ["", "[simulation]",
                      "steps = %d" % self.sim.steps,
                      "seed = %d" % self.sim.seed,
                      "h = %s" % _fmt(self.sim.h),
                      "grace = %d" % self.sim.grace]
        return lines

    def config_hash(self) -> str:
        text = "\n".join(self.describe_lines(include_simulation=False)) + "\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_config(text: str, set_values=()) -> Config:
    """Parse an INI document; ``set_values`` is a list of (section, key,
    value) overrides applied before interpretation (how CLI flags land)."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError("cannot parse config: %s" % e) from None
    data = {}
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError("unknown section [%s] (expected one of %s)"
                              % (name, ", ".join(SECTIONS)))
        data[name] = dict(cp[name])
    for section, key, value in set_values:
        data.setdefault(section, {})[key] = value

    system = _build_system(data.pop("system", {}))
    if "quantization" not in data:
        raise ConfigError("missing section [quantization]")
    quant = _build_quantization(data.pop("quantization"))
    if len(quant.eta) != system.n:
        raise ConfigError("eta has %d entries for a %d-dimensional state"
                          % (len(quant.eta), system.n))
    if len(quant.mu) != system.m:
        raise ConfigError("mu has %d entries for a %d-dimensional input"
                          % (len(quant.mu), system.m))

    preds = [build_predicate(name, value)
             for name, value in data.pop("predicates", {}).items()]
    names = [p.name for p in preds]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate predicate names")
    for p in preds:
        p.check_axes(system.wrap)

    spec_sec = data.pop("spec", {})
    formula_text = _require(spec_sec, "formula", "spec")
    _reject_unknown(spec_sec, "spec")
    formula = parse_spec(formula_text)
    check_atoms(formula, set(names))

    thr_sec = data.pop("threshold", {})
    nu = parse_fraction(_require(thr_sec, "nu", "threshold"), "threshold.nu")
    _reject_unknown(thr_sec, "threshold")
    if nu <= 0:
        raise ConfigError("threshold.nu must be positive")

    schedule = _build_refinement(data.pop("refinement", {}), quant)
    sim = _build_simulation(data.pop("simulation", {}))
    return Config(system, preds, formula, nu, schedule, sim)


def load_config(path, set_values=()) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("cannot read config %s: %s" % (path, e)) from None
    return parse_config(text, set_values)
