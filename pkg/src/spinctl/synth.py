"""Unitary and subspace-map synthesis from state maps plus a rank-1 phase.

A target U = sum_j e^{-i l_j} |p_j><p_j| is realized as the product of
V_j^dagger exp(-i l_j |0><0|) V_j, where each V_j carries |p_j> onto the
fiducial |0>. Subspace maps are products of two-state reflections.
"""

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg

from .hamiltonians import F_DOWN, F_UP, G_RATIO, _block_diag, hyperfine_index, manifold_projectors
from .optimize import Objective, multistart
from .propagation import DriftError, SampledFields, WaveformLayout, propagate, render, time_reverse
from .spin_algebra import angular_momentum_generators, is_unitary, rotation_operator

PHASE_CUTOFF = 1e-9


class SynthesisError(RuntimeError):
    """A state map could not be produced; `index` names the eigenvector."""

    def __init__(self, index, message):
        super().__init__(f"step {index}: {message}")
        self.index = index


class UnsupportedSystemError(ValueError):
    pass


def _branch(lam):
    # map onto (-pi, pi]
    lam = -((-np.asarray(lam, dtype=float) + np.pi) % (2 * np.pi) - np.pi)
    return lam


def eigendecompose(U, tol: float = 1e-10) -> list:
    """[(lambda, phi)] with U = sum e^{-i lambda} |phi><phi| and lambda in (-pi, pi].

    The complex Schur form of a normal matrix is diagonal, so its unitary
    factor gives orthonormal eigenvectors even inside degenerate groups.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or not is_unitary(U, tol=max(tol, 1e-10)):
        raise ValueError("eigendecompose needs a unitary matrix")
    t, z = scipy.linalg.schur(U, output="complex")
    lam = _branch(-np.angle(np.diag(t))) + 0.0
    return [(float(l), z[:, k].copy()) for k, l in enumerate(lam)]


def reconstruct(pairs, d=None) -> np.ndarray:
    d = d or len(pairs[0][1])
    out = np.zeros((d, d), dtype=complex)
    for lam, phi in pairs:
        out += np.exp(-1j * lam) * np.outer(phi, phi.conj())
    return out


@dataclass
class PhaseSegment:
    """Constant primitive Hamiltonian strength * P held for `duration` seconds."""

    eigenphase: float
    duration: float
    strength: float
    primitive: np.ndarray

    @property
    def unitary(self) -> np.ndarray:
        d = self.primitive.shape[0]
        return np.eye(d) + (np.exp(-1j * self.strength * self.duration) - 1) * self.primitive


def phase_primitive_pulse(lam: float, system) -> PhaseSegment:
    """exp(-i lam |0><0|) as the shortest nonnegative-duration primitive segment."""
    prim = getattr(system, "phase_primitive", None)
    strength = getattr(system, "phase_strength", 0.0)
    if prim is None or strength <= 0:
        raise UnsupportedSystemError(f"system {getattr(system, 'name', '')!r} has no phase primitive")
    duration = (float(lam) % (2 * np.pi)) / strength
    return PhaseSegment(float(lam), duration, strength, np.asarray(prim, dtype=complex))


def fiducial_index(system) -> int:
    prim = np.asarray(system.phase_primitive)
    k = int(np.argmax(np.real(np.diag(prim))))
    ref = np.zeros_like(prim)
    ref[k, k] = 1
    if np.abs(prim - ref).max() > 1e-12:
        raise UnsupportedSystemError("phase primitive must be a projector onto one basis state")
    return k


# state-map providers

@dataclass
class StateMap:
    """V with V|phi> ~ |fiducial>, plus the operator that undoes it."""

    forward: np.ndarray
    backward: np.ndarray
    fidelity: float
    fields: Optional[SampledFields] = None
    reversed_fields: Optional[SampledFields] = None
    report: Optional[dict] = None


def reflection(a, b) -> np.ndarray:
    """Hermitian involution swapping a and b (b re-phased) and fixing their complement."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if abs(np.linalg.norm(a) - 1) > 1e-9 or abs(np.linalg.norm(b) - 1) > 1e-9:
        raise ValueError("reflection needs unit vectors")
    ov = np.vdot(b, a)
    if abs(ov) > 0:
        b = b * (ov / abs(ov))
    d = len(a)
    if 1 - abs(ov) < 1e-12:
        return np.eye(d, dtype=complex)
    phi = (a - b) / np.sqrt(2 * (1 - abs(ov)))
    return np.eye(d) - 2 * np.outer(phi, phi.conj())


def exact_state_maps(fiducial: int = 0) -> Callable:
    """Provider using Householder-type reflections as matrices, not pulses."""

    def provide(phi, index):
        e = np.zeros(len(phi), dtype=complex)
        e[fiducial] = 1
        s = reflection(phi, e)
        return StateMap(s, s.conj().T, float(abs(np.vdot(e, s @ phi)) ** 2))

    return provide


class PulseStateMaps:
    """Provider that optimizes control waveforms for each map |phi> -> |fiducial>.

    The inverse map is the time-reversed waveform, so the system must be
    drift-free. Results are cached by eigenvector up to a global phase.
    """

    def __init__(self, system, total_time: float, dt: float = 0.1e-6, n_seeds: int = 5, rng_seed: int = 0,
                 threshold: float = 0.99, stop_at: float = 0.999, method: str = "lbfgsb",
                 max_iters: int = 3000, embed: Optional[list] = None):
        if system.has_drift:
            raise DriftError("pulse state maps need a drift-free system")
        self.system = system
        self.layout = WaveformLayout(system, total_time, dt)
        self.fiducial = fiducial_index(system)
        self.n_seeds = n_seeds
        self.rng_seed = rng_seed
        self.threshold = threshold
        self.stop_at = stop_at
        self.method = method
        self.max_iters = max_iters
        self.embed = embed
        self._cache = []

    def _lift(self, phi):
        phi = np.asarray(phi, dtype=complex)
        if self.embed is None or len(phi) == self.system.dim:
            return phi
        out = np.zeros(self.system.dim, dtype=complex)
        out[self.embed] = phi
        return out

    def __call__(self, phi, index):
        phi = self._lift(phi)
        for key, sm in self._cache:
            if abs(abs(np.vdot(key, phi)) - 1) < 1e-12:
                return sm
        e = np.zeros(self.system.dim, dtype=complex)
        e[self.fiducial] = 1
        obj = Objective.state_prep(self.system, self.layout, phi, e)
        # per-step seed so cached and uncached runs agree
        rep = multistart(obj, self.n_seeds, self.rng_seed + 7919 * (len(self._cache) + 1), method=self.method,
                         stop_at=self.stop_at, max_iters=self.max_iters)
        if rep.best_value < self.threshold:
            raise SynthesisError(index, f"best state-map fidelity {rep.best_value:.4f} below {self.threshold}")
        fields = render(rep.best_params)
        back = time_reverse(fields, self.system)
        sm = StateMap(propagate(self.system, fields), propagate(self.system, back), float(rep.best_value),
                      fields, back, rep.metadata(obj))
        self._cache.append((phi, sm))
        return sm


@dataclass
class SynthesisStep:
    eigenphase: float
    eigenvector: np.ndarray
    state_map: StateMap
    phase: Optional[PhaseSegment]

    @property
    def map_fidelity(self) -> float:
        return self.state_map.fidelity


@dataclass
class SynthesisPlan:
    target: np.ndarray
    fiducial_index: int
    steps: List[SynthesisStep] = field(default_factory=list)
    embed: Optional[list] = None

    @property
    def n_phase_steps(self) -> int:
        return len(self.steps)

    @property
    def n_state_maps(self) -> int:
        return 2 * len(self.steps)

    def realized(self, dim: int = None) -> np.ndarray:
        """Product of every step, first step rightmost."""
        dim = dim or (self.steps[0].state_map.forward.shape[0] if self.steps else len(self.target))
        out = np.eye(dim, dtype=complex)
        for st in self.steps:
            ph = st.phase.unitary if st.phase is not None else _ideal_phase(st.eigenphase, dim, self.fiducial_index)
            out = st.state_map.backward @ ph @ st.state_map.forward @ out
        return out

    def fidelity(self, realized=None) -> float:
        r = self.realized() if realized is None else realized
        if self.embed is not None and r.shape[0] != len(self.target):
            r = r[np.ix_(self.embed, self.embed)]
        d = len(self.target)
        return float(abs(np.trace(self.target.conj().T @ r)) / d)

    def total_duration(self) -> float:
        t = 0.0
        for st in self.steps:
            if st.state_map.fields is not None:
                t += 2 * st.state_map.fields.n_steps * st.state_map.fields.dt
            if st.phase is not None:
                t += st.phase.duration
        return t

    def manifest(self, directory=None, prefix: str = "step") -> dict:
        """Ordered step list; with a directory, waveform tables are written next to it."""
        rows = []
        for k, st in enumerate(self.steps):
            row = {
                "index": k,
                "eigenphase": st.eigenphase,
                "phase_duration": st.phase.duration if st.phase is not None else None,
                "map_fidelity": st.map_fidelity,
            }
            if directory is not None and st.state_map.fields is not None:
                fwd = f"{prefix}{k:02d}_map.csv"
                bwd = f"{prefix}{k:02d}_reverse.csv"
                st.state_map.fields.to_table(os.path.join(directory, fwd))
                st.state_map.reversed_fields.to_table(os.path.join(directory, bwd))
                row["waveform"] = fwd
                row["reversed_waveform"] = bwd
            rows.append(row)
        return {
            "fiducial_index": self.fiducial_index,
            "target_dim": len(self.target),
            "embed": self.embed,
            "n_phase_steps": self.n_phase_steps,
            "n_state_maps": self.n_state_maps,
            "fidelity": self.fidelity(),
            "total_duration": self.total_duration(),
            "steps": rows,
        }

    def write_manifest(self, path, waveforms: bool = True):
        directory = os.path.dirname(os.path.abspath(path))
        data = self.manifest(directory if waveforms else None, prefix=os.path.splitext(os.path.basename(path))[0] + "_")
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
        return data


def _ideal_phase(lam, dim, k):
    out = np.eye(dim, dtype=complex)
    out[k, k] = np.exp(-1j * lam)
    return out


def synthesize_unitary(target, system=None, state_map_provider=None, embed=None, fiducial: int = 0):
    """Build a SynthesisPlan for `target` and return (plan, realized operator).

    With a system, phases come from its primitive pulse; without one the
    ideal exp(-i l |f><f|) is used. `embed` lists the system indices that
    carry the target's basis (for a target smaller than the system).
    """
    target = np.asarray(target, dtype=complex)
    if system is not None:
        if system.has_drift:
            raise DriftError("synthesis needs a drift-free system")
        fiducial = fiducial_index(system)
        dim = system.dim
    else:
        dim = len(target)
    if embed is None and dim != len(target):
        raise ValueError("target and system dimensions differ; pass embed")
    if embed is not None and fiducial in embed:
        raise ValueError("the fiducial state cannot carry the target")
    provider = state_map_provider or exact_state_maps(fiducial)
    pairs = eigendecompose(target)
    plan = SynthesisPlan(target, fiducial, embed=list(embed) if embed is not None else None)
    for k, (lam, phi) in enumerate(pairs):
        if abs(lam) < PHASE_CUTOFF:
            continue
        if embed is not None:
            full = np.zeros(dim, dtype=complex)
            full[list(embed)] = phi
        else:
            full = phi
        try:
            sm = provider(full, k)
        except SynthesisError:
            raise
        except (ValueError, RuntimeError, FloatingPointError) as exc:
            raise SynthesisError(k, str(exc)) from exc
        seg = phase_primitive_pulse(lam, system) if system is not None else None
        plan.steps.append(SynthesisStep(lam, phi, sm, seg))
    realized = plan.realized(dim)
    return plan, realized


# subspace maps

def _check_frame(vecs, name):
    a = np.array([np.asarray(v, dtype=complex) for v in vecs])
    if a.ndim != 2:
        raise ValueError(f"{name} must be a list of equal-length vectors")
    if np.abs(a.conj() @ a.T - np.eye(len(a))).max() > 1e-9:
        raise ValueError(f"{name} is not orthonormal")
    return a


@dataclass
class SubspaceFactor:
    """One factor of a subspace map.

    kind "reflection": I - 2|phi><phi| swapping `state` and `partner`.
    kind "phase": exp(-i phase |state><state|), aligning the image phase.
    Both are a phase primitive (pi or `phase`) conjugated by a map of one
    state onto the fiducial.
    """

    kind: str
    operator: np.ndarray
    state: np.ndarray
    partner: Optional[np.ndarray] = None
    phase: float = float(np.pi)

    def pivot(self) -> np.ndarray:
        """The state that must be carried onto the fiducial to realize this factor."""
        if self.kind == "phase":
            return self.state
        a, b = self.state, self.partner
        ov = np.vdot(b, a)
        if abs(ov) > 0:
            b = b * (ov / abs(ov))
        v = a - b
        return v / np.linalg.norm(v)


def subspace_map(A_basis, B_basis, align_phases: bool = True):
    """T = s_n ... s_1 with s_j swapping s_{j-1}...s_1 a_j and b_j.

    Returns (T, factors). Reflections only fix <b_j|T|a_j> up to a phase;
    with align_phases a rank-1 phase on b_j follows each reflection so the
    overlaps are exactly 1. Every factor is the identity on the complement
    of its own states, so earlier images stay put.
    """
    a = _check_frame(A_basis, "A basis")
    b = _check_frame(B_basis, "B basis")
    if a.shape != b.shape:
        raise ValueError("bases must have the same size and dimension")
    d = a.shape[1]
    t = np.eye(d, dtype=complex)
    factors = []
    for aj, bj in zip(a, b):
        at = t @ aj
        s = reflection(at, bj)
        if not np.allclose(s, np.eye(d), atol=0):
            factors.append(SubspaceFactor("reflection", s, at, bj))
        t = s @ t
        ov = np.vdot(bj, t @ aj)
        theta = float(np.angle(ov))
        if align_phases and abs(theta) > 1e-14:
            p = np.eye(d, dtype=complex) + (np.exp(-1j * theta) - 1) * np.outer(bj, bj.conj())
            factors.append(SubspaceFactor("phase", p, bj, phase=theta))
            t = p @ t
    return t, factors


def realize_factors(factors, provider, dim, fiducial: int = 0) -> np.ndarray:
    """Rebuild a subspace map from state maps and phase primitives.

    Each factor becomes V^dagger exp(-i l |f><f|) V with V carrying its
    pivot state onto the fiducial.
    """
    out = np.eye(dim, dtype=complex)
    for k, fac in enumerate(factors):
        sm = provider(fac.pivot(), k)
        out = sm.backward @ _ideal_phase(fac.phase, dim, fiducial) @ sm.forward @ out
    return out


def naive_state_map(a, b, rng=None) -> np.ndarray:
    """A generic unitary carrying a onto b with a random action on the complement."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = len(a)
    rng = rng if rng is not None else np.random.default_rng(0)

    def frame(v):
        m = np.column_stack([v, rng.standard_normal((d, d - 1)) + 1j * rng.standard_normal((d, d - 1))])
        q, _ = np.linalg.qr(m)
        q[:, 0] = v
        return q

    return frame(b) @ frame(a).conj().T


def naive_product_map(A_basis, B_basis, rng=None) -> np.ndarray:
    """prod_i T_1(a_i -> b_i) with independent one-state maps."""
    a = _check_frame(A_basis, "A basis")
    b = _check_frame(B_basis, "B basis")
    rng = rng if rng is not None else np.random.default_rng(0)
    t = np.eye(a.shape[1], dtype=complex)
    for aj, bj in zip(a, b):
        t = naive_state_map(aj, bj, rng) @ t
    return t


def frame_overlaps(T, A_basis, B_basis) -> np.ndarray:
    return np.array([np.vdot(bj, T @ aj) for aj, bj in zip(A_basis, B_basis)])


# qudit gates

@dataclass(frozen=True)
class GateSpec:
    kind: str
    d: int
    a: int = 1
    convention: str = "piecewise"

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate {self.kind!r}; choose from {sorted(GATE_KINDS)}")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.kind == "G" and math.gcd(self.a, self.d) != 1:
            raise ValueError(f"G_{self.a} needs gcd(a, d) = 1 (d={self.d})")


GATE_KINDS = {"X", "Z", "H", "S", "G"}
GATE_ALIASES = {"x": "X", "z": "Z", "h": "H", "dft": "H", "s": "S", "phase": "S", "g": "G"}


def parse_gate(name: str, d: int) -> GateSpec:
    """'X', 'Z', 'H'/'dft', 'S', 'G3' -> GateSpec."""
    n = name.strip()
    if n[:1].lower() == "g" and n[1:].isdigit():
        return GateSpec("G", d, int(n[1:]))
    kind = GATE_ALIASES.get(n.lower())
    if kind is None:
        raise ValueError(f"unknown gate {name!r}")
    return GateSpec(kind, d)


def _s_exponent(j, convention):
    if convention == "clifford" or j % 2:
        return j * (j - 1) / 2
    return j * j / 2


def gate_matrix(spec: GateSpec) -> np.ndarray:
    """Exact gate on basis index j = 0..d-1 (index 0 is the highest m)."""
    d = spec.d
    w = np.exp(2j * np.pi / d)
    j = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    if spec.kind == "X":
        out[(j + 1) % d, j] = 1
    elif spec.kind == "Z":
        out = np.diag(w ** j)
    elif spec.kind == "H":
        out = w ** np.outer(j, j) / np.sqrt(d)
    elif spec.kind == "S":
        if spec.convention not in ("piecewise", "clifford"):
            raise ValueError(f"unknown S convention {spec.convention!r}")
        out = np.diag([np.exp(2j * np.pi * _s_exponent(k, spec.convention) / d) for k in j])
    else:
        out[(spec.a * j) % d, j] = 1
    return out


def phase_residual(a, b) -> tuple:
    """(distance, phase) minimizing ||a - e^{i phase} b||."""
    ov = np.trace(b.conj().T @ a)
    ph = float(np.angle(ov)) if abs(ov) > 0 else 0.0
    return float(np.linalg.norm(a - np.exp(1j * ph) * b)), ph


# error-correction demo

def _basis_state(F, m):
    v = np.zeros(16, dtype=complex)
    v[hyperfine_index(F, m)] = 1
    return v


def ecc_states() -> dict:
    """Physical, encoded, error and parking states used by the demo."""
    ry = _block_diag(np.eye(9), rotation_operator(F_DOWN, (0, 1, 0), np.pi / 2))
    fz = total_fz()
    code = [ry @ _basis_state(F_DOWN, 3), ry @ _basis_state(F_DOWN, -3)]
    # error states defined as F_z applied to the code words so the syndrome
    # and restore maps carry the error amplitudes with matching phases
    err = [fz @ c / np.linalg.norm(fz @ c) for c in code]
    return {
        "physical": [_basis_state(F_UP, 4), _basis_state(F_DOWN, 3)],
        "code": code,
        "error": err,
        "park": [_basis_state(F_UP, 4), _basis_state(F_UP, -4)],
    }


def total_fz() -> np.ndarray:
    up = angular_momentum_generators(F_UP)["Jz"]
    dn = angular_momentum_generators(F_DOWN)["Jz"]
    return _block_diag(up, dn)


def zeeman_generator(g_ratio: float = G_RATIO) -> np.ndarray:
    """Field-rotation generator normalized to F_z on F=3.

    The upper manifold precesses with g_4/g_3 = 1/g_ratio, i.e. opposite
    sense for the physical ratio. g_ratio=1 gives the plain total F_z.
    """
    up = angular_momentum_generators(F_UP)["Jz"]
    dn = angular_momentum_generators(F_DOWN)["Jz"]
    return _block_diag(up / g_ratio, dn)


def _haar_avg_fidelity(ops) -> float:
    """Mean over pure inputs of sum_o |<psi|A_o|psi>|^2 on a qubit."""
    d = ops[0].shape[0]
    return float(sum(abs(np.trace(a)) ** 2 + np.real(np.trace(a.conj().T @ a)) for a in ops) / (d * (d + 1)))


def ecc_maps(map_provider=None) -> dict:
    """The three subspace maps: encode, syndrome (error -> parking), restore."""
    st = ecc_states()
    provider = map_provider or (lambda A, B: subspace_map(A, B)[0])
    return {
        "encode": provider(st["physical"], st["code"]),
        "syndrome": provider(st["error"], st["park"]),
        "restore": provider(st["park"], st["code"]),
    }


def ecc_demo(epsilons, map_provider=None, g_ratio: float = G_RATIO) -> list:
    """Average fidelity after a z-rotation error exp(-2i eps F_z), with and without correction.

    Corrected: encode, error, syndrome map, projective F measurement, then
    the restore map when F=4 is found. Uncorrected: the physical qubit
    {|4,4>, |3,3>} under the same field, which turns the two manifolds in
    opposite senses (see zeeman_generator). Returns rows
    (eps, corrected, uncorrected).
    """
    st = ecc_states()
    maps = ecc_maps(map_provider)
    fz = zeeman_generator(g_ratio)
    p_up, p_dn = manifold_projectors()
    phys = np.column_stack(st["physical"])
    enc = maps["encode"] @ phys  # logical qubit -> encoded 16-dim states
    rows = []
    for eps in epsilons:
        err = scipy.linalg.expm(-2j * eps * fz)
        after = maps["syndrome"] @ err
        kraus = [p_dn @ after, maps["restore"] @ p_up @ after]
        corrected = _haar_avg_fidelity([enc.conj().T @ k @ enc for k in kraus])
        uncorrected = _haar_avg_fidelity([phys.conj().T @ err @ phys])
        rows.append((float(eps), corrected, uncorrected))
    return rows


def fit_exponent(eps, infidelity) -> float:
    """Slope of log(infidelity) against log(eps)."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(infidelity, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
