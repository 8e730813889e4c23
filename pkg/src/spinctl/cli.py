"""qctl: command-line front end.

Every task reads an optional INI file with sections [system],
[optimization], [io] and exactly one task section; command-line flags
override file values. Reports are JSON with the resolved configuration.
"""

import argparse
import configparser
import json
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .hamiltonians import (
    CONFIG_IDS,
    F_DOWN,
    F_UP,
    LightShiftConfig,
    MwRfConfig,
    hyperfine_index,
    light_shift_system,
    mwrf_system,
    restricted_phase_system,
)

TASKS = ("controllability", "stateprep", "synth", "gates", "landscape", "wigner", "ecc")
SYSTEM_IDS = CONFIG_IDS + ("light-shift", "restricted+4", "restricted-4")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line else ""
        super().__init__(where + message)
        self.line = line


# units

_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ]*)"


def _with_unit(text, table, kind):
    m = re.fullmatch(_NUM, text.strip())
    if not m:
        raise ValueError(f"cannot read {kind} {text!r}")
    unit = m.group(2).lower()
    if unit not in table:
        raise ValueError(f"{kind} {text!r} needs a unit suffix from {sorted(table)}")
    return float(m.group(1)) * table[unit]


def parse_frequency(text) -> float:
    """'15kHz' -> angular frequency in rad/s."""
    return 2 * np.pi * _with_unit(text, _FREQ, "frequency")


def parse_duration(text) -> float:
    """'150us' -> seconds."""
    val = _with_unit(text, _TIME, "duration")
    if val <= 0:
        raise ValueError(f"duration {text!r} must be positive")
    return val


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {text!r}")
    return v


def _system_id(text):
    if text not in SYSTEM_IDS:
        raise ValueError(f"unknown config_id {text!r}; valid ids: {', '.join(SYSTEM_IDS)}")
    return text


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text
    return conv


SCHEMA = {
    "system": {
        "config_id": _system_id,
        "rf_amp": parse_frequency,
        "mw_amp": parse_frequency,
        "rf_slew": parse_duration,
        "mw_slew": parse_duration,
        "rf_detuning": parse_frequency,
        "mw_detuning": parse_frequency,
        "g_ratio": float,
        "nonlinearity": parse_frequency,
        "larmor_bound": parse_frequency,
        "slew": parse_duration,
        "phase_strength": parse_frequency,
    },
    "optimization": {
        "time": parse_duration,
        "dt": parse_duration,
        "seeds": _positive_int,
        "rng_seed": int,
        "tol": float,
        "max_iters": _positive_int,
        "method": _choice("lbfgsb", "ascent"),
        "stop_at": float,
        "threshold": float,
        "jobs": _positive_int,
    },
    "io": {
        "output_dir": str,
        "formats": str,
    },
    "controllability": {},
    "stateprep": {"target": str, "initial": str},
    "synth": {"target": str, "d": _positive_int, "mode": _choice("exact-maps", "pulses")},
    "gates": {"gate": str, "d": _positive_int, "mode": _choice("exact-maps", "pulses")},
    "landscape": {"dims": str, "instances": _positive_int},
    "wigner": {"state": str, "grid": str},
    "ecc": {"eps_min": float, "eps_max": float, "n_eps": _positive_int},
}

DEFAULTS = {
    "system": {"config_id": "2rfap2struwap"},
    "optimization": {"dt": "0.1us", "seeds": "20", "rng_seed": "0", "tol": "1e-3", "max_iters": "2000",
                     "method": "lbfgsb", "jobs": "1", "threshold": "0.99"},
    "io": {"output_dir": "qctl-output", "formats": "json,csv"},
    "controllability": {},
    "stateprep": {"target": "cat", "initial": "|4,4>"},
    "synth": {"target": "haar-random", "d": "4", "mode": "exact-maps"},
    "gates": {"gate": "dft", "d": "7", "mode": "exact-maps"},
    "landscape": {"dims": "2-5", "instances": "50"},
    "wigner": {"state": "cat", "grid": "91x180"},
    "ecc": {"eps_min": "0.01", "eps_max": "0.3", "n_eps": "30"},
}

# task-dependent defaults that differ from the table above
TASK_DEFAULTS = {
    "stateprep": {"optimization": {"time": "150us"}},
    "synth": {"system": {"config_id": "restricted+4"}, "optimization": {"time": "80us", "seeds": "6", "stop_at": "0.99"}},
    "gates": {"system": {"config_id": "restricted+4"}, "optimization": {"time": "80us", "seeds": "6", "stop_at": "0.99"}},
}


@dataclass
class RunConfig:
    task: str
    raw: dict  # section -> key -> string as given (after defaults)
    values: dict = field(default_factory=dict)  # section -> key -> parsed value

    def get(self, section, key, default=None):
        return self.values.get(section, {}).get(key, default)

    def resolved(self) -> dict:
        return {sec: dict(sorted(keys.items())) for sec, keys in sorted(self.raw.items())}


def _line_numbers(text):
    """(section, key) -> line number, plus the line of each section header."""
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def read_config_text(text) -> tuple:
    """Parse INI text into (task or None, {section: {key: str}}) with line-aware errors."""
    lines = _line_numbers(text)
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        cp.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    data = {}
    tasks = []
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]; expected system, optimization, io or one of {', '.join(TASKS)}",
                              lines.get((sec, None)))
        if sec in TASKS:
            tasks.append(sec)
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                allowed = ", ".join(sorted(SCHEMA[sec])) or "none"
                raise ConfigError(f"unknown key {key!r} in [{sec}] (allowed: {allowed})", lines.get((sec, key)))
        data[sec] = dict(cp.items(sec))
    if len(tasks) > 1:
        raise ConfigError(f"more than one task section: {', '.join(tasks)}", lines.get((tasks[1], None)))
    return (tasks[0] if tasks else None), data, lines


def build_config(task, file_data=None, overrides=None, lines=None) -> RunConfig:
    """Merge defaults, file values and flag overrides, then validate every value."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    lines = lines or {}
    raw = {}
    for sec in ("system", "optimization", "io", task):
        merged = dict(DEFAULTS[sec])
        merged.update(TASK_DEFAULTS.get(task, {}).get(sec, {}))
        merged.update((file_data or {}).get(sec, {}))
        merged.update({k: v for k, v in (overrides or {}).get(sec, {}).items() if v is not None})
        raw[sec] = merged
    values = {}
    for sec, keys in raw.items():
        values[sec] = {}
        for key, text in keys.items():
            try:
                values[sec][key] = SCHEMA[sec][key](str(text))
            except (ValueError, TypeError) as exc:
                src = (file_data or {}).get(sec, {}).get(key)
                line = lines.get((sec, key)) if src is not None and src == text else None
                raise ConfigError(f"[{sec}] {key}: {exc}", line) from None
    cfg = RunConfig(task, raw, values)
    if task in ("stateprep",) and "time" not in values["optimization"]:
        raise ConfigError("stateprep needs a total time")
    return cfg


def parse_config(path, task=None, overrides=None) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    file_task, data, lines = read_config_text(text)
    if task is not None and file_task is not None and task != file_task:
        raise ConfigError(f"config file describes task {file_task!r} but {task!r} was requested",
                          lines.get((file_task, None)))
    task = task or file_task
    if task is None:
        raise ConfigError("no task section in config file")
    return build_config(task, data, overrides, lines)


# systems and states

def make_system(cfg: RunConfig):
    sysv = cfg.values["system"]
    cid = sysv["config_id"]
    pick = lambda *keys: {k: sysv[k] for k in keys if k in sysv}
    if cid == "light-shift":
        kw = pick("nonlinearity", "larmor_bound", "slew")
        return light_shift_system(LightShiftConfig(**kw))
    if cid.startswith("restricted"):
        kw = pick("rf_amp", "mw_amp", "rf_slew", "mw_slew", "phase_strength")
        return restricted_phase_system(aux_m=4 if cid.endswith("+4") else -4, **kw)
    kw = pick("rf_amp", "mw_amp", "rf_slew", "mw_slew", "rf_detuning", "mw_detuning", "g_ratio")
    return mwrf_system(MwRfConfig(config_id=cid, **kw))


def state_index(system, F, m) -> int:
    d = system.dim
    if d == 16:
        return hyperfine_index(F, m)
    if d == 8:
        aux = 4 if system.name.endswith("+4") else -4
        if F == F_UP and m == aux:
            return 0
        if F == F_DOWN and abs(m) <= F_DOWN:
            return 1 + F_DOWN - m
    if d == 2 * F + 1 and abs(m) <= F:
        return F - m
    raise ValueError(f"level |{F},{m}> is not part of this {d}-level system")


def parse_state(spec, system, rng=None) -> np.ndarray:
    """Target mini-language: '|F,m>', sums like '|4,4>+|3,-3>', 'cat', 'haar-random', or a file."""
    d = system.dim
    s = spec.strip()
    if s == "haar-random":
        if rng is None:
            raise ValueError("haar-random needs an rng seed")
        from .optimize import haar_state
        return haar_state(d, rng)
    if s == "cat":
        if d == 16 or d == 8:
            s = "|4,4>+|3,-3>" if d == 16 or system.name.endswith("+4") else "|4,-4>+|3,3>"
        else:
            F = (d - 1) // 2
            s = f"|{F},{F}>+|{F},{-F}>"
    kets = re.findall(r"([-+]?)\s*\|\s*(\d+)\s*,\s*([-+]?\d+)\s*>", s)
    if kets and re.fullmatch(r"(\s*[-+]?\s*\|\s*\d+\s*,\s*[-+]?\d+\s*>\s*)+", s):
        v = np.zeros(d, dtype=complex)
        for sign, F, m in kets:
            v[state_index(system, int(F), int(m))] += -1 if sign == "-" else 1
        return v / np.linalg.norm(v)
    if os.path.exists(s):
        return load_amplitudes(s, d)
    raise ValueError(f"cannot understand state {spec!r}")


def load_amplitudes(path, d=None) -> np.ndarray:
    """Amplitude file: one row per level with 're' or 're im' columns (or a .npy vector)."""
    if path.endswith(".npy"):
        v = np.load(path).astype(complex).ravel()
    else:
        data = np.loadtxt(path, ndmin=2, comments="#")
        v = data[:, 0] + (1j * data[:, 1] if data.shape[1] > 1 else 0)
    if d is not None and len(v) != d:
        raise ValueError(f"amplitude file has {len(v)} entries, system has {d}")
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("amplitude file holds a zero vector")
    return v / n


def load_matrix(path) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path).astype(complex)
    data = np.loadtxt(path, ndmin=2, comments="#")
    n = data.shape[0]
    if data.shape[1] == 2 * n:
        return data[:, :n] + 1j * data[:, n:]
    if data.shape[1] == n:
        return data.astype(complex)
    raise ValueError("matrix file must be n x n (real) or n x 2n (real then imaginary parts)")


# output helpers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _outdir(cfg):
    path = cfg.values["io"]["output_dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _formats(cfg):
    return {f.strip() for f in cfg.values["io"]["formats"].split(",") if f.strip()}


def write_report(cfg, name, payload) -> str:
    path = os.path.join(_outdir(cfg), name)
    payload = dict(payload)
    payload["task"] = cfg.task
    payload["config"] = cfg.resolved()
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _rng(cfg):
    return np.random.default_rng(cfg.values["optimization"]["rng_seed"])


# tasks

def task_controllability(cfg, out):
    from .controllability import lie_closure

    system = make_system(cfg)
    gens = list(system.operators)
    if system.has_drift:
        gens.append(system.drift)
    dim, basis = lie_closure(gens)
    full = system.dim ** 2 - 1
    print(f"system {system.name or cfg.values['system']['config_id']}: dimension {dim} of {full}", file=out)
    print(f"controllable={str(dim == full).lower()} stable={str(basis.stable).lower()}", file=out)
    write_report(cfg, "controllability.json", {"dimension": dim, "full_dimension": full,
                                               "controllable": dim == full, "stable": basis.stable})
    return 0


def task_stateprep(cfg, out):
    from .optimize import Objective, multistart
    from .propagation import WaveformLayout, render

    opt = cfg.values["optimization"]
    system = make_system(cfg)
    rng = _rng(cfg)
    target = parse_state(cfg.values["stateprep"]["target"], system, rng)
    initial = parse_state(cfg.values["stateprep"]["initial"], system, rng)
    layout = WaveformLayout(system, opt["time"], opt["dt"])
    obj = Objective.state_prep(system, layout, initial, target)
    rep = multistart(obj, opt["seeds"], opt["rng_seed"], method=opt["method"], jobs=opt["jobs"],
                     stop_at=opt.get("stop_at"), tol=opt["tol"], max_iters=opt["max_iters"])
    fields = render(rep.best_params)
    formats = _formats(cfg)
    files = {}
    if "csv" in formats:
        files["waveform"] = "waveform.csv"
        fields.to_table(os.path.join(_outdir(cfg), "waveform.csv"))
    write_report(cfg, "stateprep.json", {
        "result": rep.metadata(obj),
        "layout": layout.describe(),
        "target": target,
        "initial": initial,
        "best_raw": rep.best_params.raw,
        "files": files,
    })
    print(f"best fidelity {rep.best_value:.6f} over {rep.seeds_run} seeds (rng_seed {rep.rng_seed})", file=out)
    return 0


def _synthesize(cfg, target, label, out):
    from .synth import PulseStateMaps, synthesize_unitary

    mode = cfg.values[cfg.task]["mode"]
    opt = cfg.values["optimization"]
    if mode == "exact-maps":
        plan, realized = synthesize_unitary(target)
    else:
        system = make_system(cfg)
        d = len(target)
        if system.phase_primitive is None:
            raise ValueError(f"system {cfg.values['system']['config_id']} has no phase primitive")
        if d == system.dim:
            embed = None
        elif d == system.dim - 1:
            embed = list(range(1, system.dim))
        else:
            raise ValueError(f"a {d}-dim target does not fit the {system.dim}-level system")
        provider = PulseStateMaps(system, opt["time"], opt["dt"], n_seeds=opt["seeds"], rng_seed=opt["rng_seed"],
                                  threshold=opt["threshold"], stop_at=opt.get("stop_at", 0.999),
                                  method=opt["method"], max_iters=opt["max_iters"], embed=embed)
        plan, realized = synthesize_unitary(target, system, provider, embed=embed)
    fid = plan.fidelity(realized)
    manifest_path = os.path.join(_outdir(cfg), f"{label}_manifest.json")
    manifest = plan.manifest(_outdir(cfg) if "csv" in _formats(cfg) else None, prefix=f"{label}_")
    manifest.update({"task": cfg.task, "config": cfg.resolved(), "label": label, "mode": mode, "fidelity": fid,
                     "fidelity_measure": "|Tr(W^dagger U)| / d on the target block"})
    with open(manifest_path, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{label}: fidelity {fid:.12f} with {plan.n_phase_steps} phase steps, {plan.n_state_maps} state maps",
          file=out)
    return fid


def task_synth(cfg, out):
    sec = cfg.values["synth"]
    if sec["target"] == "haar-random":
        from .optimize import haar_unitary
        target = haar_unitary(sec["d"], _rng(cfg))
    else:
        target = load_matrix(sec["target"])
    _synthesize(cfg, target, "synth", out)
    return 0


def task_gates(cfg, out):
    from .synth import gate_matrix, parse_gate

    sec = cfg.values["gates"]
    spec = parse_gate(sec["gate"], sec["d"])
    label = spec.kind + (str(spec.a) if spec.kind == "G" else "")
    _synthesize(cfg, gate_matrix(spec), f"gate_{label}", out)
    return 0


def _parse_dims(text):
    m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", text)
    if m:
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def task_landscape(cfg, out):
    from .landscape import critical_values, signature_sweep

    sec = cfg.values["landscape"]
    dims = _parse_dims(sec["dims"])
    rows = signature_sweep(dims, sec["instances"], cfg.values["optimization"]["rng_seed"])
    print(f"{'d':>3} {'n':>3} {'expected (+,-,0)':>18} {'matches':>9} values_ok", file=out)
    for r in rows:
        print(f"{r['d']:>3} {r['n']:>3} {str(r['expected']):>18} {r['matches']:>4}/{r['instances']:<4} "
              f"{r['critical_value_ok']}", file=out)
    ok = all(r["matches"] == r["instances"] and r["critical_value_ok"] for r in rows)
    write_report(cfg, "landscape.json", {"rows": rows, "all_match": ok,
                                         "critical_values": {d: critical_values(d) for d in dims}})
    return 0


def task_wigner(cfg, out):
    from .wigner import Grid, WignerField, multipole_coefficients, wigner_coupled, wigner_single

    sec = cfg.values["wigner"]
    m = re.fullmatch(r"\s*(\d+)\s*x\s*(\d+)\s*", sec["grid"])
    if not m:
        raise ValueError(f"grid must look like 91x180, got {sec['grid']!r}")
    grid = Grid.equiangular(int(m.group(1)), int(m.group(2)))
    state = sec["state"]
    if cfg.values["system"]["config_id"] == "light-shift":
        system = make_system(cfg)
    else:
        system = mwrf_system()
    psi = parse_state(state, system, _rng(cfg))
    rho = np.outer(psi, psi.conj())
    if system.dim == 16:
        wf = wigner_coupled(rho, grid=grid)
    else:
        F = (system.dim - 1) // 2
        wf = WignerField(grid, {f"{F}{F}": wigner_single(rho, F, grid)}, {f"{F}{F}": 1.0},
                         {f"{F}{F}": multipole_coefficients(rho, F)})
    paths = wf.export(_outdir(cfg))
    write_report(cfg, "wigner.json", {"radii": wf.radii, "grid": list(grid.shape),
                                      "files": [os.path.basename(p) for p in paths]})
    for name, r in wf.radii.items():
        print(f"block {name}: radius {r:.6f}", file=out)
    return 0


def task_ecc(cfg, out):
    from .synth import ecc_demo, fit_exponent

    sec = cfg.values["ecc"]
    if not 0 <= sec["eps_min"] < sec["eps_max"]:
        raise ValueError("need 0 <= eps_min < eps_max")
    eps = np.linspace(sec["eps_min"], sec["eps_max"], sec["n_eps"])
    rows = ecc_demo(eps)
    small = [r for r in rows if 0 < r[0] <= 0.1 and r[1] < 1 and r[2] < 1]
    exps = {}
    if len(small) >= 2:
        e = [r[0] for r in small]
        exps = {"corrected": fit_exponent(e, [1 - r[1] for r in small]),
                "uncorrected": fit_exponent(e, [1 - r[2] for r in small])}
    print(f"{'eps':>8} {'corrected':>12} {'uncorrected':>12}", file=out)
    for e, c, u in rows:
        print(f"{e:8.4f} {c:12.8f} {u:12.8f}", file=out)
    if exps:
        print(f"infidelity exponents: corrected {exps['corrected']:.3f}, uncorrected {exps['uncorrected']:.3f}",
              file=out)
    if "csv" in _formats(cfg):
        np.savetxt(os.path.join(_outdir(cfg), "ecc.csv"), np.array(rows), delimiter=",",
                   header="eps,corrected,uncorrected", comments="", fmt="%.12e")
    write_report(cfg, "ecc.json", {"rows": rows, "exponents": exps})
    return 0


RUNNERS = {
    "controllability": task_controllability,
    "stateprep": task_stateprep,
    "synth": task_synth,
    "gates": task_gates,
    "landscape": task_landscape,
    "wigner": task_wigner,
    "ecc": task_ecc,
}


def run(cfg: RunConfig, out=None) -> int:
    """Execute one task; returns the exit status."""
    return RUNNERS[cfg.task](cfg, out or sys.stdout)


# argument parsing

def _common(p):
    p.add_argument("--config", help="INI file with [system], [optimization], [io] and a task section")
    p.add_argument("--system", dest="config_id", help=f"system id ({', '.join(SYSTEM_IDS)})")
    p.add_argument("--time", help="total waveform time, e.g. 150us")
    p.add_argument("--dt", help="integration step, e.g. 0.1us")
    p.add_argument("--seeds", help="number of random starts")
    p.add_argument("--rng-seed", dest="rng_seed", help="seed for every random draw")
    p.add_argument("--method", help="lbfgsb or ascent")
    p.add_argument("--tol", help="projected-gradient tolerance")
    p.add_argument("--max-iters", dest="max_iters")
    p.add_argument("--stop-at", dest="stop_at", help="stop searching once a seed reaches this value")
    p.add_argument("--threshold", help="minimum accepted state-map fidelity")
    p.add_argument("--jobs", help="worker processes for seed-level parallelism")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--formats", help="comma list of json,csv")


_SECTION_OF = {k: "system" for k in ("config_id",)}
_SECTION_OF.update({k: "optimization" for k in SCHEMA["optimization"]})
_SECTION_OF.update({k: "io" for k in SCHEMA["io"]})


def build_parser():
    parser = argparse.ArgumentParser(prog="qctl", description="Spin control toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", dest="top_config", help="run the task described in this INI file")
    parser.add_argument("--out", dest="top_output_dir", help="output directory (with --config)")
    sub = parser.add_subparsers(dest="task")
    helps = {
        "controllability": "Lie-closure dimension of a control system",
        "stateprep": "optimize a state-preparation waveform",
        "synth": "synthesize a unitary from state maps",
        "gates": "synthesize a qudit Pauli/Clifford gate",
        "landscape": "check critical-point signatures of the gate landscape",
        "wigner": "export spherical Wigner function data",
        "ecc": "qubit-in-qudit error-correction demo",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=helps[task], description=helps[task])
        _common(p)
        if task == "stateprep":
            p.add_argument("--target", help="'|4,4>', 'cat', 'haar-random', a ket sum or an amplitude file")
            p.add_argument("--initial", help="initial state, same syntax as --target")
        if task == "synth":
            p.add_argument("--target", help="'haar-random' or a matrix file")
            p.add_argument("--d", help="dimension for haar-random targets")
            p.add_argument("--mode", help="exact-maps or pulses")
        if task == "gates":
            p.add_argument("--gate", help="X, Z, H (dft), S or G<a>")
            p.add_argument("--d", help="qudit dimension")
            p.add_argument("--mode", help="exact-maps or pulses")
        if task == "landscape":
            p.add_argument("--dims", help="e.g. 2-5 or 2,3,4")
            p.add_argument("--instances", help="random instances per (d, n)")
        if task == "wigner":
            p.add_argument("--state", help="state, same syntax as stateprep targets")
            p.add_argument("--grid", help="n_theta x n_phi, e.g. 91x180")
        if task == "ecc":
            p.add_argument("--eps-min", dest="eps_min")
            p.add_argument("--eps-max", dest="eps_max")
            p.add_argument("--n-eps", dest="n_eps")
    return parser


def _overrides(args, task):
    out = {"system": {}, "optimization": {}, "io": {}, task: {}}
    for key, val in vars(args).items():
        if val is None or key in ("task", "config", "top_config", "top_output_dir"):
            continue
        if key in SCHEMA[task]:
            out[task][key] = val
        elif key in _SECTION_OF:
            out[_SECTION_OF[key]][key] = val
    return out


def _error_record(exc, task, code):
    rec = {"error": type(exc).__name__, "message": str(exc), "task": task, "exit_code": code}
    if isinstance(exc, ConfigError):
        rec["line"] = exc.line
    return rec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    task = args.task
    try:
        path = getattr(args, "config", None) or args.top_config
        if task is None and path is None:
            build_parser().print_help()
            return 2
        overrides = _overrides(args, task) if task else None
        if task is None and args.top_output_dir:
            overrides = {"io": {"output_dir": args.top_output_dir}}
        if path:
            cfg = parse_config(path, task, overrides)
        else:
            cfg = build_config(task, None, overrides)
        task = cfg.task
    except (ConfigError, OSError) as exc:
        print(json.dumps(_error_record(exc, task, 2)), file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except Exception as exc:  # surfaced with task context as a machine-readable record
        print(json.dumps(_error_record(exc, task, 1)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
