"""Continuous plant interface: growth bounds, closed-form flows, sampling.

A plant is described by a :class:`SystemSpec`: a state box (some axes may be
circular), an input box, a finite set of initial states, a disturbance
half-width, and four growth-bound handles ``beta_fwd``, ``beta_bwd``,
``alpha_fwd``, ``alpha_bwd``.  The beta bounds dominate the divergence of two
trajectories driven by the same signal; the alpha bounds dominate how far any
trajectory can travel from a reference point.  All bounds take
``(signal, d, t)`` with ``d`` a scalar distance and ``t`` elapsed time, and
return a scalar distance that is applied per axis (box semi-norm, circular
distance on wrapped axes).

The built-in unicycle robot gets exact arc flows; generic systems supply a
vector field and are integrated with fixed-step RK4.
"""

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# distances

def circ_diff(a, b, period):
    """Signed minimal difference a-b on a circle of the given period."""
    d = (a - b) % period
    if d > 0.5 * period:
        d -= period
    return d


def axis_distances(x1, x2, wrap, periods):
    """Per-axis absolute distances, circular on wrapped axes."""
    out = []
    for i, (a, b) in enumerate(zip(x1, x2)):
        if wrap[i]:
            out.append(abs(circ_diff(a, b, periods[i])))
        else:
            out.append(abs(a - b))
    return tuple(out)


def sup_distance(x1, x2, wrap, periods):
    return max(axis_distances(x1, x2, wrap, periods))


# ---------------------------------------------------------------------------
# system description

@dataclass(frozen=True)
class SystemSpec:
    """Continuous-time plant with growth bounds.

    ``flow(x, u, lam, dt)`` advances one constant-input segment exactly (or
    numerically for generic systems); ``back_flow`` is its time reversal.
    ``flow_batch``/``back_flow_batch`` are optional vectorized variants over an
    (N, n) state array and are used heavily during abstraction construction.
    Growth-bound handles take ``(signal, d, t)``; ``signal`` is any object with
    ``inputs`` (sequence of per-segment input tuples) and ``tau`` attributes.
    """

    name: str
    state_lo: Tuple[float, ...]
    state_hi: Tuple[float, ...]
    wrap: Tuple[bool, ...]
    init_states: Tuple[Tuple[float, ...], ...]
    input_lo: Tuple[float, ...]
    input_hi: Tuple[float, ...]
    beta_fwd: Callable
    beta_bwd: Callable
    alpha_fwd: Callable
    alpha_bwd: Callable
    flow: Callable
    back_flow: Callable
    lambda_bar: float = 0.0
    flow_batch: Optional[Callable] = None
    back_flow_batch: Optional[Callable] = None
    # parameters needed to rebuild the system from a config (kept for dumps)
    params: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return len(self.state_lo)

    @property
    def m(self):
        return len(self.input_lo)

    @property
    def periods(self):
        return tuple(hi - lo for lo, hi in zip(self.state_lo, self.state_hi))

    def validate(self):
        if len(self.state_hi) != self.n or len(self.wrap) != self.n:
            raise ConfigError("state box / wrap flags dimension mismatch")
        if any(hi <= lo for lo, hi in zip(self.state_lo, self.state_hi)):
            raise ConfigError("empty state box")
        if any(hi < lo for lo, hi in zip(self.input_lo, self.input_hi)):
            raise ConfigError("empty input box")
        if not (0.0 <= self.lambda_bar < 1.0):
            raise ConfigError("disturbance half-width must be in [0, 1)")
        if not self.init_states:
            raise ConfigError("no initial states")
        for x in self.init_states:
            if len(x) != self.n:
                raise ConfigError("initial state dimension mismatch")
            for i in range(self.n):
                if self.wrap[i]:
                    continue
                # initial states must sit strictly inside the box
                if not (self.state_lo[i] < x[i] < self.state_hi[i]):
                    raise ConfigError(
                        "initial state %r touches the state boundary on axis %d"
                        % (x, i))
        return self

    def distance(self, x1, x2):
        """Sup-norm distance with circular wrapped axes."""
        return sup_distance(x1, x2, self.wrap, self.periods)

    def axis_dist(self, x1, x2):
        return axis_distances(x1, x2, self.wrap, self.periods)


# ---------------------------------------------------------------------------
# rotation savings term

def f_omega(omega, t):
    """Arc-chord savings accumulated after t time units at turn rate omega.

    Every completed half-turn replaces an arc of length pi (per unit radius)
    by a chord of length 2, so the reachable-set radius shrinks by
    (pi - 2)/|omega| per completed half-turn.  The magnitude of the rate is
    what matters: turning clockwise saves exactly as much as counter-clockwise
    (a signed floor would instead grant a full half-turn's credit immediately
    after t=0, which is unsound).
    """
    w = abs(omega)
    if w == 0.0:
        return 0.0
    return math.floor(w * t / math.pi) * (math.pi - 2.0) / w


def _signal_savings(inputs, tau, t):
    """Total f_omega sum over the segment decomposition of a signal at time t."""
    if t <= 0.0:
        return 0.0
    k = min(int(t / tau + 1e-9), len(inputs) - 1)
    s = 0.0
    for i in range(k):
        s += f_omega(inputs[i][0], tau)
    s += f_omega(inputs[k][0], max(t - k * tau, 0.0))
    return s


def _check_time(signal, t):
    length = len(signal.inputs) * signal.tau
    if t < -1e-12 or t > length + 1e-9:
        raise ValueError("time %g outside signal domain [0, %g]" % (t, length))


# ---------------------------------------------------------------------------
# unicycle robot

def _robot_beta(signal, d, t, v, lam_bar, correction):
    """Divergence bound for two unicycles under one signal.

    Two runs keep a constant heading offset (same turn rate), so their
    relative velocity has constant magnitude 2*v*(1+lam)*sin(dtheta/2) and
    rotates with the common heading; completed half-turns of that rotation
    earn the arc-chord savings.  The correction term covers runs whose speed
    disturbances differ (without it the bound claims two runs from the same
    point can never separate, which is false for lam_bar > 0).
    """
    _check_time(signal, t)
    if t < 0.0:
        t = 0.0
    eff = t - _signal_savings(signal.inputs, signal.tau, t)
    factor = math.sin(0.5 * d) if d < math.pi else 1.0
    out = d + 2.0 * v * (1.0 + lam_bar) * factor * eff
    if correction:
        out += 2.0 * v * lam_bar * t
    return out


def _robot_alpha(signal, d, t, v, lam_bar):
    """Travel bound: endpoint distance from a point d away from the start."""
    _check_time(signal, t)
    if t < 0.0:
        t = 0.0
    eff = t - _signal_savings(signal.inputs, signal.tau, t)
    return d + v * (1.0 + lam_bar) * eff


def _robot_flow(x, u, lam, dt, v):
    """Exact arc/straight-line step for the unicycle, constant (u, lam)."""
    th = x[2]
    w = u[0]
    s = v * (1.0 + lam)
    if abs(w) < 1e-12:
        return (x[0] + s * math.cos(th) * dt,
                x[1] + s * math.sin(th) * dt,
                th % TWO_PI)
    r = s / w
    nth = th + w * dt
    return (x[0] + r * (math.sin(nth) - math.sin(th)),
            x[1] - r * (math.cos(nth) - math.cos(th)),
            nth % TWO_PI)


def _robot_back_flow(x, u, lam, dt, v):
    """Time reversal of :func:`_robot_flow` (exact inverse step)."""
    th = x[2]
    w = u[0]
    s = v * (1.0 + lam)
    if abs(w) < 1e-12:
        return (x[0] - s * math.cos(th) * dt,
                x[1] - s * math.sin(th) * dt,
                th % TWO_PI)
    r = s / w
    pth = th - w * dt
    return (x[0] - r * (math.sin(th) - math.sin(pth)),
            x[1] + r * (math.cos(th) - math.cos(pth)),
            pth % TWO_PI)


def _robot_flow_batch(X, u, lam, dt, v):
    X = np.asarray(X, dtype=float)
    th = X[:, 2]
    w = u[0]
    s = v * (1.0 + lam)
    if abs(w) < 1e-12:
        nx = X[:, 0] + s * np.cos(th) * dt
        ny = X[:, 1] + s * np.sin(th) * dt
        nth = th % TWO_PI
    else:
        r = s / w
        nth = th + w * dt
        nx = X[:, 0] + r * (np.sin(nth) - np.sin(th))
        ny = X[:, 1] - r * (np.cos(nth) - np.cos(th))
        nth = nth % TWO_PI
    return np.stack([nx, ny, nth], axis=1)


def _robot_back_flow_batch(X, u, lam, dt, v):
    X = np.asarray(X, dtype=float)
    th = X[:, 2]
    w = u[0]
    s = v * (1.0 + lam)
    if abs(w) < 1e-12:
        nx = X[:, 0] - s * np.cos(th) * dt
        ny = X[:, 1] - s * np.sin(th) * dt
        pth = th % TWO_PI
    else:
        r = s / w
        pth = th - w * dt
        nx = X[:, 0] - r * (np.sin(th) - np.sin(pth))
        ny = X[:, 1] + r * (np.cos(th) - np.cos(pth))
        pth = pth % TWO_PI
    return np.stack([nx, ny, pth], axis=1)


def make_robot(v=2.5, lambda_bar=0.05, paper_beta=False,
               pos_range=6.0, init_states=((0.0, 0.0, math.pi / 4.0),)):
    """Unicycle with speed disturbance: x' = v(1+lam)cos(th), y' = ..., th' = u.

    ``paper_beta=True`` drops the 2*v*lam_bar*t divergence correction from the
    beta bounds (the uncorrected bound claims beta(0, t) = 0, which Monte-Carlo
    testing can refute whenever lambda_bar > 0; keep the default unless you
    want to reproduce that behaviour).
    """
    correction = not paper_beta
    beta = partial(_robot_beta, v=v, lam_bar=lambda_bar, correction=correction)
    alpha = partial(_robot_alpha, v=v, lam_bar=lambda_bar)
    sys = SystemSpec(
        name="robot",
        state_lo=(-pos_range, -pos_range, 0.0),
        state_hi=(pos_range, pos_range, TWO_PI),
        wrap=(False, False, True),
        init_states=tuple(tuple(x) for x in init_states),
        input_lo=(-math.pi / 2.0,),
        input_hi=(math.pi / 2.0,),
        beta_fwd=beta,
        beta_bwd=beta,
        alpha_fwd=alpha,
        alpha_bwd=alpha,
        flow=partial(_robot_flow, v=v),
        back_flow=partial(_robot_back_flow, v=v),
        flow_batch=partial(_robot_flow_batch, v=v),
        back_flow_batch=partial(_robot_back_flow_batch, v=v),
        lambda_bar=lambda_bar,
        params={"kind": "robot", "v": v, "lambda_bar": lambda_bar,
                "paper_beta": paper_beta, "pos_range": pos_range},
    )
    return sys.validate()


# ---------------------------------------------------------------------------
# 1-D shift system (small test plant): x' = u * (1 + lam)

def _shift_beta(signal, d, t, u_max, lam_bar):
    _check_time(signal, t)
    return d + 2.0 * u_max * lam_bar * max(t, 0.0)


def _shift_alpha(signal, d, t, u_max, lam_bar):
    _check_time(signal, t)
    return d + u_max * (1.0 + lam_bar) * max(t, 0.0)


def _shift_flow(x, u, lam, dt):
    return (x[0] + u[0] * (1.0 + lam) * dt,)


def _shift_back_flow(x, u, lam, dt):
    return (x[0] - u[0] * (1.0 + lam) * dt,)


def _shift_flow_batch(X, u, lam, dt):
    X = np.asarray(X, dtype=float)
    return X + u[0] * (1.0 + lam) * dt


def _shift_back_flow_batch(X, u, lam, dt):
    X = np.asarray(X, dtype=float)
    return X - u[0] * (1.0 + lam) * dt


def make_shift1d(x_range=4.0, u_max=1.0, lambda_bar=0.1,
                 init_states=((0.0,),)):
    """Integrator on a line; handy for end-to-end tests that must stay tiny."""
    beta = partial(_shift_beta, u_max=u_max, lam_bar=lambda_bar)
    alpha = partial(_shift_alpha, u_max=u_max, lam_bar=lambda_bar)
    sys = SystemSpec(
        name="shift1d",
        state_lo=(-x_range,),
        state_hi=(x_range,),
        wrap=(False,),
        init_states=tuple(tuple(x) for x in init_states),
        input_lo=(-u_max,),
        input_hi=(u_max,),
        beta_fwd=beta,
        beta_bwd=beta,
        alpha_fwd=alpha,
        alpha_bwd=alpha,
        flow=_shift_flow,
        back_flow=_shift_back_flow,
        flow_batch=_shift_flow_batch,
        back_flow_batch=_shift_back_flow_batch,
        lambda_bar=lambda_bar,
        params={"kind": "shift1d", "x_range": x_range, "u_max": u_max,
                "lambda_bar": lambda_bar},
    )
    return sys.validate()


# ---------------------------------------------------------------------------
# generic numeric integration

def rk4_step_flow(vector_field, wrap, periods, x, u, lam, dt, h):
    """Classic fixed-step RK4 over [0, dt] for df/dt = vector_field(x, u, lam)."""
    if dt <= 0.0:
        return tuple(x)
    steps = max(1, int(round(dt / h)))
    hh = dt / steps
    y = np.asarray(x, dtype=float)
    for _ in range(steps):
        k1 = np.asarray(vector_field(y, u, lam))
        k2 = np.asarray(vector_field(y + 0.5 * hh * k1, u, lam))
        k3 = np.asarray(vector_field(y + 0.5 * hh * k2, u, lam))
        k4 = np.asarray(vector_field(y + hh * k3, u, lam))
        y = y + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = []
    for i, val in enumerate(y):
        out.append(val % periods[i] if wrap[i] else float(val))
    return tuple(out)


def numeric_flow(vector_field, wrap, periods, h):
    """Wrap a vector field into a (x, u, lam, dt) flow handle (RK4, step h)."""
    return partial(rk4_step_flow, vector_field, wrap, periods, h=h)


# ---------------------------------------------------------------------------
# simulation helpers

def simulate_segment(sys: SystemSpec, x, u, lam, dt):
    """One constant-input step; rejects disturbances beyond the system bound."""
    if abs(lam) > sys.lambda_bar + 1e-12:
        raise ValueError("disturbance %g exceeds bound %g" % (lam, sys.lambda_bar))
    if dt < 0.0:
        raise ValueError("negative segment duration")
    if np.isscalar(u):
        u = (u,)
    return tuple(sys.flow(tuple(x), tuple(u), lam, dt))


def simulate_signal(sys: SystemSpec, x, signal, lams):
    """Chain simulate_segment over the signal's segments with given lams."""
    if len(lams) != len(signal.inputs):
        raise ValueError("need one disturbance value per segment")
    for u, lam in zip(signal.inputs, lams):
        x = simulate_segment(sys, x, u, lam, signal.tau)
    return x


def draw_disturbances(sys: SystemSpec, n_segments, seed):
    rng = np.random.default_rng(seed)
    if sys.lambda_bar == 0.0:
        return tuple(0.0 for _ in range(n_segments))
    return tuple(rng.uniform(-sys.lambda_bar, sys.lambda_bar, n_segments))


def sample_endpoint(sys: SystemSpec, x, signal, seed=0):
    """Endpoint of one disturbed run; fresh constant lam per segment, seeded."""
    lams = draw_disturbances(sys, len(signal.inputs), seed)
    return simulate_signal(sys, x, signal, lams)


def trace_signal(sys: SystemSpec, x, signal, lams, samples_per_segment=50):
    """Dense trajectory: (times, states) including all segment boundaries."""
    times = [0.0]
    states = [tuple(x)]
    t0 = 0.0
    for u, lam in zip(signal.inputs, lams):
        for j in range(1, samples_per_segment + 1):
            dt = signal.tau * j / samples_per_segment
            times.append(t0 + dt)
            states.append(simulate_segment(sys, x, u, lam, dt))
        x = states[-1]
        t0 += signal.tau
    return times, states
