"""Waveform rendering and piecewise-constant Schrodinger integration."""

from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np
from scipy.interpolate import CubicSpline

from .hamiltonians import ControlSystem

DEFAULT_DT = 0.1e-6


def _n_steps(total_time: float, dt: float) -> int:
    n = int(round(total_time / dt))
    if n < 1 or abs(n * dt - total_time) > 1e-9 * total_time:
        raise ValueError(f"total time {total_time} is not a whole number of {dt} steps")
    return n


def knot_count(total_time: float, slew: float) -> int:
    """Interior knots per raw row: ceil(T / slew) - 1."""
    return max(int(np.ceil(total_time / slew - 1e-9)) - 1, 0)


@dataclass
class _Block:
    name: str
    groups: list  # indices into system.groups
    n_rows: int
    n_knots: int
    offset: int

    @property
    def size(self) -> int:
        return self.n_rows * self.n_knots


class WaveformLayout:
    """Maps a raw vector in [-1, 1]^M onto a system's channels.

    kind "spline": per field group, knots every slew time, rendered with
    natural cubic splines pinned to zero at both ends.
    kind "pwc": one raw value per channel per time step, field = bound * raw.
    """

    def __init__(self, system: ControlSystem, total_time: float, dt: float = DEFAULT_DT, kind: str = "spline"):
        if kind not in ("spline", "pwc"):
            raise ValueError(f"unknown layout kind {kind!r}")
        self.system = system
        self.total_time = float(total_time)
        self.dt = float(dt)
        self.kind = kind
        self.n_steps = _n_steps(self.total_time, self.dt)
        self.blocks: List[_Block] = []
        if kind == "pwc":
            self.n_params = len(system.channels) * self.n_steps
            return
        order = []
        for gi, g in enumerate(system.groups):
            if g.block not in order:
                order.append(g.block)
        offset = 0
        for name in order:
            members = [gi for gi, g in enumerate(system.groups) if g.block == name]
            slews = {system.groups[gi].slew for gi in members}
            if len(slews) != 1:
                raise ValueError(f"groups in block {name!r} disagree on slew time")
            rows = sum(system.groups[gi].n_rows for gi in members)
            blk = _Block(name, members, rows, knot_count(self.total_time, slews.pop()), offset)
            self.blocks.append(blk)
            offset += blk.size
        self.n_params = offset

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "total_time": self.total_time,
            "dt": self.dt,
            "n_params": self.n_params,
            "blocks": [{"name": b.name, "rows": b.n_rows, "knots": b.n_knots} for b in self.blocks],
        }


@dataclass
class WaveformParams:
    raw: np.ndarray
    layout: WaveformLayout

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float)
        if self.raw.shape != (self.layout.n_params,):
            raise ValueError(f"raw vector has {self.raw.size} entries, layout needs {self.layout.n_params}")
        if np.any(np.abs(self.raw) > 1 + 1e-12):
            raise ValueError("raw values must lie in [-1, 1]")


@dataclass
class SampledFields:
    """Channel values (rad/s) on the grid t_k = k*dt, k = 0..N."""

    values: np.ndarray
    dt: float
    labels: list

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[1]) * self.dt

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1

    def to_table(self, path, delimiter=","):
        """Write time (s) then one column per channel (rad/s)."""
        data = np.column_stack([self.times, self.values.T])
        header = delimiter.join(["time"] + list(self.labels))
        np.savetxt(path, data, delimiter=delimiter, header=header, comments="", fmt="%.12e")

    @classmethod
    def from_table(cls, path, delimiter=","):
        with open(path) as fh:
            labels = fh.readline().strip().split(delimiter)[1:]
        data = np.loadtxt(path, delimiter=delimiter, skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(data[:, 1:].T.copy(), dt, labels)


@lru_cache(maxsize=64)
def _spline_matrix(total_time: float, dt: float, n_knots: int) -> np.ndarray:
    """Linear map from interior knot values to samples (endpoints pinned at 0)."""
    n = _n_steps(total_time, dt)
    t = np.arange(n + 1) * dt
    knots = np.linspace(0.0, total_time, n_knots + 2)
    basis = CubicSpline(knots, np.eye(n_knots + 2), bc_type="natural")(t)
    out = np.ascontiguousarray(basis[:, 1:-1])
    out.setflags(write=False)
    return out


def _group_knot_values(group, rows):
    """Knot values of each channel in a group and the intermediates for the chain rule."""
    if group.mode == "a":
        return [group.bound * rows[0]], None
    if group.mode == "ap":
        amp = group.bound * rows[0]
        phase = 2 * np.pi * np.cumsum(rows[1])
    else:
        amp = np.full_like(rows[0], group.bound)
        phase = 2 * np.pi * np.cumsum(rows[0])
    return [amp * np.cos(phase), amp * np.sin(phase)], (amp, phase)


def _block_rows(layout, blk, raw):
    return raw[blk.offset:blk.offset + blk.size].reshape(blk.n_rows, blk.n_knots, order="F")


def render(params: WaveformParams, system: ControlSystem = None) -> SampledFields:
    """Turn raw optimization variables into sampled channel fields."""
    layout = params.layout
    system = system or layout.system
    if system is not layout.system and len(system.channels) != len(layout.system.channels):
        raise ValueError("layout does not match the system's channels")
    n_ch = len(system.channels)
    n = layout.n_steps
    if layout.kind == "pwc":
        vals = params.raw.reshape(n_ch, n) * np.array([c.bound for c in system.channels])[:, None]
        return SampledFields(np.concatenate([vals, vals[:, -1:]], axis=1), layout.dt, system.labels)
    out = np.zeros((n_ch, n + 1))
    for blk in layout.blocks:
        rows = _block_rows(layout, blk, params.raw)
        if blk.n_knots == 0:
            continue
        basis = _spline_matrix(layout.total_time, layout.dt, blk.n_knots)
        r = 0
        for gi in blk.groups:
            g = system.groups[gi]
            knots, _ = _group_knot_values(g, rows[r:r + g.n_rows])
            for ch, kv in zip(g.channels, knots):
                out[ch] = basis @ kv
            r += g.n_rows
    return SampledFields(out, layout.dt, system.labels)


def render_vjp(params: WaveformParams, sample_grad: np.ndarray) -> np.ndarray:
    """Pull a gradient with respect to field samples back onto the raw vector."""
    layout = params.layout
    system = layout.system
    n = layout.n_steps
    sample_grad = np.asarray(sample_grad, dtype=float)
    if sample_grad.shape[1] == n:
        sample_grad = np.concatenate([sample_grad, np.zeros((sample_grad.shape[0], 1))], axis=1)
    if layout.kind == "pwc":
        g = sample_grad[:, :n].copy()
        g[:, -1] += sample_grad[:, n]
        return (g * np.array([c.bound for c in system.channels])[:, None]).ravel()
    grad = np.zeros(layout.n_params)
    for blk in layout.blocks:
        if blk.n_knots == 0:
            continue
        rows = _block_rows(layout, blk, params.raw)
        basis = _spline_matrix(layout.total_time, layout.dt, blk.n_knots)
        grows = np.zeros_like(rows)
        r = 0
        for gi in blk.groups:
            g = system.groups[gi]
            kgrad = [basis.T @ sample_grad[ch] for ch in g.channels]
            if g.mode == "a":
                grows[r] = g.bound * kgrad[0]
            else:
                _, (amp, phase) = _group_knot_values(g, rows[r:r + g.n_rows])
                c, s = np.cos(phase), np.sin(phase)
                g_phase = amp * (-s * kgrad[0] + c * kgrad[1])
                # phase = 2 pi cumsum(row): adjoint is a reversed cumulative sum
                g_row = 2 * np.pi * np.cumsum(g_phase[::-1])[::-1]
                if g.mode == "ap":
                    grows[r] = g.bound * (c * kgrad[0] + s * kgrad[1])
                    grows[r + 1] = g_row
                else:
                    grows[r] = g_row
            r += g.n_rows
        grad[blk.offset:blk.offset + blk.size] = grows.ravel(order="F")
    return grad


def step_hamiltonians(system: ControlSystem, fields: SampledFields) -> np.ndarray:
    """H(t_k) for the N left-endpoint samples, shape (N, d, d)."""
    vals = np.asarray(fields.values, dtype=float)
    if vals.shape[0] != len(system.channels):
        raise ValueError(f"fields have {vals.shape[0]} channels, system has {len(system.channels)}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("field values must be finite")
    held = vals[:, :-1] if vals.shape[1] > 1 else vals
    ops = system.operators
    d = system.dim
    return system.drift[None] + (held.T @ ops.reshape(len(ops), d * d)).reshape(-1, d, d)


def step_propagators(system: ControlSystem, fields: SampledFields):
    """Eigen-data and exp(-i dt H_k) for every step."""
    h = step_hamiltonians(system, fields)
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * fields.dt * w)
    u = (v * phases[:, None, :]) @ np.swapaxes(v.conj(), 1, 2)
    return w, v, phases, u


def _chain(us) -> np.ndarray:
    out = np.eye(us.shape[1], dtype=complex)
    for u in us:
        out = u @ out
    return out


def propagate(system: ControlSystem, fields: SampledFields) -> np.ndarray:
    """U = prod_k exp(-i dt H(t_k)), latest step leftmost."""
    return _chain(step_propagators(system, fields)[3])


def evolve_state(psi0, system: ControlSystem, fields: SampledFields) -> np.ndarray:
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("initial state must be normalized")
    for u in step_propagators(system, fields)[3]:
        psi = u @ psi
    return psi


class DriftError(RuntimeError):
    """Raised when an operation needs a drift-free system."""


def time_reverse(fields: SampledFields, system: ControlSystem) -> SampledFields:
    """Fields whose propagator undoes `fields` exactly.

    The held samples are played backwards with flipped sign; the unused
    final sample is negated in place so spline endpoints stay zero.
    """
    if system.has_drift:
        raise DriftError("time reversal needs a system without drift")
    v = np.asarray(fields.values, dtype=float)
    n = v.shape[1] - 1
    out = np.empty_like(v)
    out[:, :n] = -v[:, n - 1::-1] if n > 0 else v[:, :0]
    out[:, n] = -v[:, n]
    return SampledFields(out, fields.dt, list(fields.labels))


def constant_fields(system: ControlSystem, values, total_time: float, dt: float = DEFAULT_DT) -> SampledFields:
    n = _n_steps(total_time, dt)
    vals = np.repeat(np.asarray(values, dtype=float)[:, None], n + 1, axis=1)
    return SampledFields(vals, dt, system.labels)
