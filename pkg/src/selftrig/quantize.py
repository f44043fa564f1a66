"""Finite input sets, state grids, signal enumeration, and projection.

The state grid places cell centres at even multiples of the per-axis radius
``eta`` (pitch ``2*eta``); a centre belongs to the grid iff its eta-box meets
the state box.  Wrapped axes enumerate one period with the two endpoints
identified, which requires the period to be an integer multiple of the pitch.

Input grids support two pitch conventions: ``paper`` places points at even
multiples of ``mu`` and ``half`` at every multiple of ``mu``.  The ``half``
mode is the default; with mu spanning half the input range the ``paper``
reading collapses the input set to {0}, which makes the benchmark instance
trivially uncontrollable.
"""

import itertools
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigError

_TOL = 1e-9


@dataclass(frozen=True)
class Quantization:
    """All discretization knobs in one record."""
    eta: Tuple[float, ...]
    mu: Tuple[float, ...]
    tau: float
    ell_min: float
    ell_max: float
    input_pitch_mode: str = "half"

    def validate(self):
        if any(e <= 0 for e in self.eta) or any(m <= 0 for m in self.mu):
            raise ConfigError("eta and mu entries must be positive")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.ell_min > self.ell_max:
            raise ConfigError("ell_min exceeds ell_max")
        if self.ell_min < self.tau - _TOL:
            raise ConfigError("ell_min must be at least tau")
        for name, ell in (("ell_min", self.ell_min), ("ell_max", self.ell_max)):
            j = ell / self.tau
            if abs(j - round(j)) > 1e-6:
                raise ConfigError("%s is not an integer multiple of tau" % name)
        if self.input_pitch_mode not in ("paper", "half"):
            raise ConfigError("unknown input_pitch_mode %r" % (self.input_pitch_mode,))
        return self

    @property
    def j_min(self):
        return int(round(self.ell_min / self.tau))

    @property
    def j_max(self):
        return int(round(self.ell_max / self.tau))


class ControlSignal:
    """Piecewise-constant signal: per-segment inputs, each held for tau."""

    __slots__ = ("inputs", "tau")

    def __init__(self, inputs, tau):
        inputs = tuple(tuple(u) for u in inputs)
        if not inputs:
            raise ConfigError("a control signal needs at least one segment")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "tau", float(tau))

    def __setattr__(self, k, v):
        raise AttributeError("ControlSignal is immutable")

    @property
    def length(self):
        return len(self.inputs) * self.tau

    @property
    def segments(self):
        return len(self.inputs)

    def __eq__(self, other):
        return (isinstance(other, ControlSignal)
                and self.inputs == other.inputs and self.tau == other.tau)

    def __hash__(self):
        return hash((self.inputs, self.tau))

    def __repr__(self):
        return "ControlSignal(%r, tau=%g)" % (list(self.inputs), self.tau)


def _axis_points(lo, hi, pitch):
    lmin = math.ceil(lo / pitch - _TOL)
    lmax = math.floor(hi / pitch + _TOL)
    return [l * pitch for l in range(lmin, lmax + 1)]


def input_grid(input_lo, input_hi, mu, mode="half"):
    """Finite input set: lattice points of the chosen pitch inside the box."""
    if mode not in ("paper", "half"):
        raise ConfigError("unknown input_pitch_mode %r" % (mode,))
    axes = []
    for lo, hi, m in zip(input_lo, input_hi, mu):
        pitch = 2.0 * m if mode == "paper" else m
        pts = _axis_points(lo, hi, pitch)
        if not pts:
            raise ConfigError(
                "input grid empty on axis [%g, %g] with pitch %g" % (lo, hi, pitch))
        axes.append(pts)
    return [tuple(p) for p in itertools.product(*axes)]


def signal_set(inputs, tau, ell_min, ell_max) -> List[ControlSignal]:
    """All signals over the input set with length in [ell_min, ell_max].

    Ordered by segment count, then lexicographically by input index.
    """
    j_min = int(round(ell_min / tau))
    j_max = int(round(ell_max / tau))
    if j_min < 1:
        raise ConfigError("signals need at least one segment (ell_min >= tau)")
    out = []
    for j in range(j_min, j_max + 1):
        for combo in itertools.product(inputs, repeat=j):
            out.append(ControlSignal(combo, tau))
    return out


class Grid:
    """Uniform state grid with integer ids in row-major (first axis slowest) order."""

    def __init__(self, state_lo, state_hi, wrap, eta):
        eta = tuple(float(e) for e in eta)
        if len(eta) != len(state_lo):
            raise ConfigError("eta dimension mismatch")
        if any(e <= 0 for e in eta):
            raise ConfigError("eta entries must be positive")
        self.state_lo = tuple(state_lo)
        self.state_hi = tuple(state_hi)
        self.wrap = tuple(bool(w) for w in wrap)
        self.eta = eta
        self.n = len(eta)
        lmins, counts = [], []
        for i in range(self.n):
            pitch = 2.0 * eta[i]
            if self.wrap[i]:
                if abs(self.state_lo[i]) > _TOL:
                    raise ConfigError(
                        "wrapped axis %d must start at 0 (got %g)" % (i, self.state_lo[i]))
                period = self.state_hi[i] - self.state_lo[i]
                ncells = period / pitch
                if abs(ncells - round(ncells)) > 1e-6:
                    raise ConfigError(
                        "period %g of wrapped axis %d is not a multiple of pitch %g"
                        % (period, i, pitch))
                lmins.append(0)
                counts.append(int(round(ncells)))
            else:
                lmin = math.ceil(self.state_lo[i] / pitch - 0.5 - _TOL)
                lmax = math.floor(self.state_hi[i] / pitch + 0.5 + _TOL)
                if lmax < lmin:
                    raise ConfigError("state grid empty on axis %d" % i)
                lmins.append(lmin)
                counts.append(lmax - lmin + 1)
        self.lmin = tuple(lmins)
        self.counts = tuple(counts)
        strides = [1] * self.n
        for i in range(self.n - 2, -1, -1):
            strides[i] = strides[i + 1] * counts[i + 1]
        self.strides = tuple(strides)
        self.size = strides[0] * counts[0]
        self._coords_cache = None

    # -- index <-> id <-> coords ------------------------------------------

    def id_of_index(self, index):
        sid = 0
        for i in range(self.n):
            off = index[i] - self.lmin[i]
            if not (0 <= off < self.counts[i]):
                raise ValueError("index %r outside grid on axis %d" % (index, i))
            sid += off * self.strides[i]
        return sid

    def index_of_id(self, sid):
        out = []
        for i in range(self.n):
            off, sid = divmod(sid, self.strides[i])
            out.append(off + self.lmin[i])
        return tuple(out)

    def coords_of_index(self, index):
        out = []
        for i in range(self.n):
            c = 2.0 * self.eta[i] * index[i]
            if self.wrap[i]:
                c = c % (self.state_hi[i] - self.state_lo[i])
            out.append(c)
        return tuple(out)

    def coords_of_id(self, sid):
        return self.coords_of_index(self.index_of_id(sid))

    def all_coords(self):
        """(size, n) array of cell centres, id order; built once and cached."""
        if self._coords_cache is None:
            axes = []
            for i in range(self.n):
                vals = (np.arange(self.counts[i]) + self.lmin[i]) * (2.0 * self.eta[i])
                axes.append(vals)
            mesh = np.meshgrid(*axes, indexing="ij")
            self._coords_cache = np.stack([m.ravel() for m in mesh], axis=1)
        return self._coords_cache

    # -- projection --------------------------------------------------------

    def project_index(self, x):
        """Nearest grid index per axis; exact ties go to the smaller index."""
        out = []
        for i in range(self.n):
            v = x[i]
            pitch = 2.0 * self.eta[i]
            if self.wrap[i]:
                period = self.state_hi[i] - self.state_lo[i]
                l = math.ceil((v % period) / pitch - 0.5) % self.counts[i]
            else:
                if v < self.state_lo[i] - 1e-9 or v > self.state_hi[i] + 1e-9:
                    raise ValueError("state %r outside box on axis %d" % (x, i))
                l = math.ceil(v / pitch - 0.5)
                # boundary cells still cover the box edge
                l = min(max(l, self.lmin[i]), self.lmin[i] + self.counts[i] - 1)
            out.append(l)
        return tuple(out)

    def project_id(self, x):
        return self.id_of_index(self.project_index(x))

    def project_coords(self, x):
        return self.coords_of_index(self.project_index(x))

    # -- axis windows (candidate enumeration) ------------------------------

    def axis_window(self, i, lo_idx, hi_idx):
        """Valid axis-i indices intersecting [lo_idx, hi_idx] (wrap-aware)."""
        if self.wrap[i]:
            ncells = self.counts[i]
            if hi_idx - lo_idx + 1 >= ncells:
                return np.arange(ncells)
            return np.unique(np.arange(lo_idx, hi_idx + 1) % ncells)
        lo = max(lo_idx, self.lmin[i])
        hi = min(hi_idx, self.lmin[i] + self.counts[i] - 1)
        if hi < lo:
            return np.empty(0, dtype=np.int64)
        return np.arange(lo, hi + 1)

    def ids_of_index_array(self, idx):
        """Vectorized id computation for an (N, n) integer index array."""
        idx = np.asarray(idx, dtype=np.int64)
        off = idx - np.asarray(self.lmin, dtype=np.int64)
        return off @ np.asarray(self.strides, dtype=np.int64)

    def dump_lines(self):
        for sid in range(self.size):
            ix = self.index_of_id(sid)
            c = self.coords_of_index(ix)
            yield "%s\t%s" % (",".join(str(v) for v in ix),
                              ",".join(repr(v) for v in c))


def state_grid(state_lo, state_hi, wrap, eta) -> Grid:
    return Grid(state_lo, state_hi, wrap, eta)


def initial_ids(grid: Grid, init_states) -> Tuple[int, ...]:
    """Grid ids of the projected initial states (deduplicated, sorted)."""
    return tuple(sorted({grid.project_id(x) for x in init_states}))
