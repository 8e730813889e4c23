"""Control systems for alkali hyperfine spins.

Two physical models are built here:

* a single hyperfine manifold driven by a transverse magnetic field with a
  tensor light shift, H = beta*gamma_s Fx^2 + Omega_x Fx + Omega_y Fy;
* the full F=4 (+) F=3 ground state of cesium driven by two rf coils and
  resonant microwaves, in the rotating frame.

Every Hamiltonian entry is an angular frequency in rad/s.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .spin_algebra import angular_momentum_generators, is_hermitian

TWO_PI = 2 * np.pi
KHZ = TWO_PI * 1e3
US = 1e-6

F_UP = 4
F_DOWN = 3
G_RATIO = -1.00321

CONFIG_IDS = (
    "2rfap2struwap",
    "2rfa2struwa",
    "2rfp2struwp",
    "2rfap1struwap",
    "2rfa1struwa",
    "2rfp1struwp",
    "2rfap1struw0",
    "2rfa1struw0",
    "2rfp1struw0",
)


@dataclass
class Channel:
    label: str
    operator: np.ndarray
    bound: float
    slew: float
    kind: str = "amplitude"  # or "quadrature"


@dataclass
class FieldGroup:
    """How raw knot rows turn into one or two channel waveforms.

    mode "ap": rows (amplitude, phase) -> in-phase and quadrature channels
    mode "a":  one amplitude row -> one channel
    mode "p":  one phase row at fixed amplitude -> in-phase and quadrature
    Groups sharing a `block` name share a knot grid and are stored together
    in the raw vector, row-interleaved knot by knot.
    """

    mode: str
    channels: tuple
    bound: float
    slew: float
    block: str

    @property
    def n_rows(self) -> int:
        return 2 if self.mode == "ap" else 1


@dataclass
class ControlSystem:
    dim: int
    drift: np.ndarray
    channels: List[Channel]
    groups: List[FieldGroup] = field(default_factory=list)
    phase_primitive: Optional[np.ndarray] = None
    phase_strength: float = 0.0
    name: str = ""

    def __post_init__(self):
        self.drift = np.asarray(self.drift, dtype=complex)
        if self.drift.shape != (self.dim, self.dim) or not is_hermitian(self.drift, 1e-9 * max(1, np.abs(self.drift).max())):
            raise ValueError("drift must be a Hermitian dim x dim matrix")
        for ch in self.channels:
            if ch.operator.shape != (self.dim, self.dim) or not is_hermitian(ch.operator):
                raise ValueError(f"channel {ch.label} is not Hermitian of the right size")
            if ch.bound < 0:
                raise ValueError(f"channel {ch.label} has a negative bound")
        if not self.groups:
            self.groups = [FieldGroup("a", (i,), ch.bound, ch.slew, "all") for i, ch in enumerate(self.channels)]

    @property
    def operators(self) -> np.ndarray:
        return np.array([ch.operator for ch in self.channels])

    @property
    def labels(self):
        return [ch.label for ch in self.channels]

    @property
    def has_drift(self) -> bool:
        return bool(np.abs(self.drift).max() > 0)

    def hamiltonian(self, values) -> np.ndarray:
        return self.drift + np.tensordot(np.asarray(values, dtype=float), self.operators, axes=1)


@dataclass
class LightShiftConfig:
    F: float = 3
    nonlinearity: float = 0.5 * KHZ  # beta * gamma_s
    larmor_bound: float = 15 * KHZ
    slew: float = 10 * US
    constrained_angle_mode: bool = False


BETA_MAX = 8.2


def light_shift_system(cfg: LightShiftConfig = LightShiftConfig()) -> ControlSystem:
    """Single manifold with a tensor light shift and a transverse field."""
    g = angular_momentum_generators(cfg.F)
    fx, fy = g["Jx"], g["Jy"]
    d = fx.shape[0]
    if cfg.nonlinearity <= 0 or cfg.larmor_bound <= 0:
        raise ValueError("light-shift strength and Larmor bound must be positive")
    channels = [
        Channel("Bx", fx, cfg.larmor_bound, cfg.slew, "quadrature" if cfg.constrained_angle_mode else "amplitude"),
        Channel("By", fy, cfg.larmor_bound, cfg.slew, "quadrature" if cfg.constrained_angle_mode else "amplitude"),
    ]
    if cfg.constrained_angle_mode:
        groups = [FieldGroup("p", (0, 1), cfg.larmor_bound, cfg.slew, "field")]
    else:
        groups = [FieldGroup("a", (0,), cfg.larmor_bound, cfg.slew, "field"),
                  FieldGroup("a", (1,), cfg.larmor_bound, cfg.slew, "field")]
    return ControlSystem(d, cfg.nonlinearity * fx @ fx, channels, groups, name="light-shift")


@dataclass
class MwRfConfig:
    config_id: str = "2rfap2struwap"
    rf_amp: float = 15 * KHZ
    mw_amp: float = 40 * KHZ
    rf_slew: float = 10 * US
    mw_slew: float = 1 * US
    rf_detuning: float = 0.0
    mw_detuning: float = 0.0
    g_ratio: float = G_RATIO

    def __post_init__(self):
        if self.config_id not in CONFIG_IDS:
            raise ValueError(f"unknown config_id {self.config_id!r}; valid ids: {', '.join(CONFIG_IDS)}")
        if min(self.rf_amp, self.mw_amp, self.rf_slew, self.mw_slew) <= 0:
            raise ValueError("amplitudes and slew times must be positive")


def hyperfine_index(F: int, m: int) -> int:
    """Row of |F, m> in the 16-dim space (F=4 block first, m descending)."""
    if F == F_UP and abs(m) <= F_UP:
        return F_UP - m
    if F == F_DOWN and abs(m) <= F_DOWN:
        return 2 * F_UP + 1 + F_DOWN - m
    raise ValueError(f"no level |{F},{m}>")


def _block_diag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def microwave_pair(m_down: int, m_up: int, dim: int = 16):
    """sigma_x and sigma_y (elements 1/2) on one microwave transition.

    The pair (m_down, m_up) labels the transition the way the reference
    tables do; since rows run in descending m, (3, 4) lands on the
    |3,-3> <-> |4,-4> pair and (-3, -4) on |3,3> <-> |4,4>.
    """
    up = F_UP + m_up
    down = 2 * F_UP + 1 + F_DOWN + m_down
    sx = np.zeros((dim, dim), dtype=complex)
    sy = np.zeros((dim, dim), dtype=complex)
    sx[up, down] = sx[down, up] = 0.5
    sy[up, down] = -0.5j
    sy[down, up] = 0.5j
    return sx, sy


def manifold_projectors():
    d = 2 * (F_UP + F_DOWN + 1)
    p_up = np.zeros((d, d))
    p_up[: 2 * F_UP + 1, : 2 * F_UP + 1] = np.eye(2 * F_UP + 1)
    return p_up, np.eye(d) - p_up


def mwrf_system(cfg: MwRfConfig = None) -> ControlSystem:
    """Rotating-frame rf + microwave control system on the 16 cesium ground levels."""
    cfg = cfg or MwRfConfig()
    cid = cfg.config_id
    up = angular_momentum_generators(F_UP)
    dn = angular_momentum_generators(F_DOWN)
    g = cfg.g_ratio
    rf_ops = {
        "rf1_x": _block_diag(up["Jx"], g * dn["Jx"]),
        "rf1_y": _block_diag(up["Jy"], -g * dn["Jy"]),
        "rf2_y": _block_diag(up["Jy"], g * dn["Jy"]),
        "rf2_x": _block_diag(up["Jx"], -g * dn["Jx"]),
    }
    rf_mode = cid[3:cid.index("2stru") if "2stru" in cid else cid.index("1stru")]
    mw_part = cid.split("stru")[1]
    mw_mode = mw_part[1:] if mw_part.startswith("w") else mw_part
    ntrans = 2 if "2stru" in cid else 1
    transitions = [(3, 4), (-3, -4)][:ntrans]

    channels, groups = [], []
    rfs, mws = cfg.rf_slew, cfg.mw_slew
    if rf_mode in ("ap", "p"):
        for coil, (a, b) in enumerate((("rf1_x", "rf1_y"), ("rf2_y", "rf2_x")), start=1):
            i = len(channels)
            channels.append(Channel(f"rf{coil}_in", rf_ops[a], cfg.rf_amp, rfs, "quadrature"))
            channels.append(Channel(f"rf{coil}_quad", rf_ops[b], cfg.rf_amp, rfs, "quadrature"))
            groups.append(FieldGroup(rf_mode, (i, i + 1), cfg.rf_amp, rfs, "rf"))
    else:
        x_op = _block_diag(up["Jx"], g * dn["Jx"])
        y_op = _block_diag(up["Jy"], g * dn["Jy"])
        for lab, op in (("rf_x", x_op), ("rf_y", y_op)):
            groups.append(FieldGroup("a", (len(channels),), cfg.rf_amp, rfs, "rf"))
            channels.append(Channel(lab, op, cfg.rf_amp, rfs, "amplitude"))

    p_up, p_dn = manifold_projectors()
    fz = _block_diag(up["Jz"], -dn["Jz"])
    drift = 0.5 * cfg.mw_detuning * (p_up - p_dn) + cfg.rf_detuning * fz
    for t, (m_down, m_up) in enumerate(transitions, start=1):
        sx, sy = microwave_pair(m_down, m_up)
        if mw_mode == "0":
            # constant microwave drive: part of the drift, not a control
            drift = drift + cfg.mw_amp * sx
        elif mw_mode == "a":
            groups.append(FieldGroup("a", (len(channels),), cfg.mw_amp, mws, "mw"))
            channels.append(Channel(f"mw{t}_x", sx, cfg.mw_amp, mws, "amplitude"))
        else:
            i = len(channels)
            channels.append(Channel(f"mw{t}_in", sx, cfg.mw_amp, mws, "quadrature"))
            channels.append(Channel(f"mw{t}_quad", sy, cfg.mw_amp, mws, "quadrature"))
            groups.append(FieldGroup(mw_mode, (i, i + 1), cfg.mw_amp, mws, "mw"))
    return ControlSystem(16, drift, channels, groups, name=cid)


def six_operator_set(transition=(3, 4)):
    """Fx, Fy on each manifold separately plus sigma_x, sigma_y of one transition."""
    up = angular_momentum_generators(F_UP)
    dn = angular_momentum_generators(F_DOWN)
    z_up, z_dn = np.zeros((2 * F_UP + 1,) * 2), np.zeros((2 * F_DOWN + 1,) * 2)
    sx, sy = microwave_pair(*transition)
    return [
        _block_diag(up["Jx"], z_dn),
        _block_diag(up["Jy"], z_dn),
        _block_diag(z_up, dn["Jx"]),
        _block_diag(z_up, dn["Jy"]),
        sx,
        sy,
    ]


RESTRICTED_PHASE_STRENGTH = 10 * KHZ


def restricted_phase_system(aux_m: int = 4, rf_amp: float = 15 * KHZ, mw_amp: float = 40 * KHZ,
                            rf_slew: float = 10 * US, mw_slew: float = 1 * US,
                            phase_strength: float = RESTRICTED_PHASE_STRENGTH) -> ControlSystem:
    """The F=3 manifold plus one stretched F=4 level used as a phase ancilla.

    Index 0 is |4, aux_m>, indices 1..7 are |3, 3> ... |3, -3>. rf rotates
    the F=3 block; a microwave pair couples |3, sign(aux_m)*3> to the ancilla.
    """
    if aux_m not in (4, -4):
        raise ValueError("aux_m must be +4 or -4")
    dn = angular_momentum_generators(F_DOWN)
    d = 8
    emb = lambda a: _block_diag(np.zeros((1, 1)), a)
    partner = 1 if aux_m > 0 else 7
    sx = np.zeros((d, d), dtype=complex)
    sy = np.zeros((d, d), dtype=complex)
    sx[0, partner] = sx[partner, 0] = 0.5
    sy[0, partner] = -0.5j
    sy[partner, 0] = 0.5j
    channels = [
        Channel("rf_in", emb(dn["Jx"]), rf_amp, rf_slew, "quadrature"),
        Channel("rf_quad", emb(dn["Jy"]), rf_amp, rf_slew, "quadrature"),
        Channel("mw_in", sx, mw_amp, mw_slew, "quadrature"),
        Channel("mw_quad", sy, mw_amp, mw_slew, "quadrature"),
    ]
    groups = [FieldGroup("ap", (0, 1), rf_amp, rf_slew, "rf"),
              FieldGroup("ap", (2, 3), mw_amp, mw_slew, "mw")]
    primitive = np.zeros((d, d), dtype=complex)
    primitive[0, 0] = 1
    return ControlSystem(d, np.zeros((d, d)), channels, groups, primitive, phase_strength,
                         name=f"restricted{aux_m:+d}")
