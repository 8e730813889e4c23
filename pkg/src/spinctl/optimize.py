"""Objectives, gradients and multistart search for state and gate targets."""

from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .propagation import (
    SampledFields,
    WaveformLayout,
    WaveformParams,
    render,
    render_vjp,
    step_propagators,
)


def haar_unitary(d: int, rng) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_state(d: int, rng) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


class Objective:
    """State-preparation or gate objective on a waveform layout.

    state_prep:     F = |<target| U |initial>|^2
    unitary_target: J = |Tr(W^dagger U)| / d
    """

    def __init__(self, kind, system, layout: WaveformLayout, target, initial=None):
        if kind not in ("state_prep", "unitary_target"):
            raise ValueError(f"unknown objective kind {kind!r}")
        self.kind = kind
        self.system = system
        self.layout = layout
        d = system.dim
        if kind == "state_prep":
            initial = np.asarray(initial, dtype=complex)
            target = np.asarray(target, dtype=complex)
            for v in (initial, target):
                if v.shape != (d,) or abs(np.linalg.norm(v) - 1) > 1e-9:
                    raise ValueError("states must be normalized vectors of the system dimension")
        else:
            target = np.asarray(target, dtype=complex)
            if target.shape != (d, d) or np.abs(target.conj().T @ target - np.eye(d)).max() > 1e-9:
                raise ValueError("gate target must be a unitary of the system dimension")
        self.target = target
        self.initial = initial

    @classmethod
    def state_prep(cls, system, layout, initial, target):
        return cls("state_prep", system, layout, target, initial)

    @classmethod
    def unitary_target(cls, system, layout, gate):
        return cls("unitary_target", system, layout, gate)

    def fields(self, raw) -> SampledFields:
        return render(_unchecked(raw, self.layout), self.system)

    def value(self, raw) -> float:
        return self.value_and_grad(raw, need_grad=False)[0]

    def value_and_grad(self, raw, need_grad=True, exact=True):
        params = _unchecked(raw, self.layout)
        fields = render(params, self.system)
        val, sample_grad = _fields_value_and_grad(self, fields, need_grad, exact)
        if not need_grad:
            return val, None
        return val, render_vjp(params, sample_grad)

    def final_state(self, raw) -> np.ndarray:
        u = _propagators(self.system, self.fields(raw))[3]
        psi = self.initial.copy()
        for uk in u:
            psi = uk @ psi
        return psi


def _unchecked(raw, layout) -> WaveformParams:
    # skip the [-1, 1] check so finite differences can step past a bound
    p = object.__new__(WaveformParams)
    p.raw = np.asarray(raw, dtype=float)
    p.layout = layout
    if p.raw.shape != (layout.n_params,):
        raise ValueError(f"raw vector has {p.raw.size} entries, layout needs {layout.n_params}")
    return p


def _propagators(system, fields):
    return step_propagators(system, fields)


def _divided_differences(w, dt):
    """(e^{-i dt w_a} - e^{-i dt w_b}) / (w_a - w_b), with the diagonal limit."""
    mean = 0.5 * (w[:, :, None] + w[:, None, :])
    half = 0.5 * dt * (w[:, :, None] - w[:, None, :])
    return -1j * dt * np.exp(-1j * dt * mean) * np.sinc(half / np.pi)


def _fields_value_and_grad(obj, fields, need_grad=True, exact=True):
    """Objective value and its gradient with respect to each held field sample."""
    system = obj.system
    w, v, phases, u = _propagators(system, fields)
    n, d = w.shape
    if obj.kind == "state_prep":
        fwd = np.empty((n + 1, d), dtype=complex)
        fwd[0] = obj.initial
        for k in range(n):
            fwd[k + 1] = u[k] @ fwd[k]
        amp = np.vdot(obj.target, fwd[n])
        val = float(abs(amp) ** 2)
        if not need_grad:
            return val, None
        bwd = np.empty((n, d), dtype=complex)
        chi = obj.target.copy()
        for k in range(n - 1, -1, -1):
            bwd[k] = chi
            chi = u[k].conj().T @ chi
        # sensitivity X_k = psi_{k-1} chi_k^dagger, so dA = Tr(X_k dU_k)
        x = fwd[:n, :, None] * bwd.conj()[:, None, :]
        weight = np.conj(amp) * 2.0
    else:
        total = np.eye(d, dtype=complex)
        left = np.empty((n, d, d), dtype=complex)
        for k in range(n):
            left[k] = total
            total = u[k] @ total
        tr = np.trace(obj.target.conj().T @ total)
        val = float(abs(tr) / d)
        if not need_grad:
            return val, None
        right = np.empty((n, d, d), dtype=complex)
        acc = obj.target.conj().T.copy()
        for k in range(n - 1, -1, -1):
            right[k] = acc
            acc = acc @ u[k]
        x = left @ right
        weight = np.conj(tr) / (abs(tr) * d) if abs(tr) > 0 else 0.0
    if exact:
        g = _divided_differences(w, fields.dt)
        vh = np.swapaxes(v.conj(), 1, 2)
        xt = vh @ x @ v
        k_mat = v @ (np.swapaxes(g, 1, 2) * xt) @ vh  # V M^T V^dagger with M = G o xt^T
    else:
        # leading order: dU_k ~ -i dt H_j U_k
        k_mat = -1j * fields.dt * (u @ x)
    ops = system.operators
    dcomplex = ops.reshape(len(ops), -1) @ np.swapaxes(k_mat, 1, 2).reshape(n, -1).T
    grad = np.zeros((ops.shape[0], n + 1))
    grad[:, :n] = np.real(weight * dcomplex)
    return val, grad


def state_fidelity(objective: Objective, params) -> float:
    if objective.kind != "state_prep":
        raise ValueError("state_fidelity needs a state_prep objective")
    return objective.value(_raw(params))


def unitary_fidelity(objective: Objective, params) -> float:
    if objective.kind != "unitary_target":
        raise ValueError("unitary_fidelity needs a unitary_target objective")
    return objective.value(_raw(params))


def _raw(params):
    return params.raw if isinstance(params, WaveformParams) else np.asarray(params, dtype=float)


def fd_gradient(objective, params, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of any callable or Objective."""
    f = objective.value if isinstance(objective, Objective) else objective
    x = _raw(params).copy()
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


class LayoutError(ValueError):
    pass


def grape_gradient(objective: Objective, params, exact: bool = True) -> np.ndarray:
    """Forward/backward sweep gradient for piecewise-constant layouts.

    With exact=False each step derivative is the leading-order -i dt H_j U_k;
    the default differentiates every step exponential exactly.
    """
    if objective.layout.kind != "pwc":
        raise LayoutError("grape_gradient needs a piecewise-constant layout")
    return objective.value_and_grad(_raw(params), exact=exact)[1]


def analytic_gradient(objective: Objective, params) -> np.ndarray:
    """Exact gradient for any layout, chained through the waveform renderer."""
    return objective.value_and_grad(_raw(params))[1]


@dataclass
class SearchReport:
    best_params: Optional[WaveformParams]
    best_value: float
    seeds_run: int
    iterations: int
    converged: bool
    rng_seed: Optional[int] = None
    seed_values: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    grad_norm: float = float("nan")
    method: str = "ascent"

    def metadata(self, objective: Objective = None) -> dict:
        out = {
            "best_value": self.best_value,
            "seeds_run": self.seeds_run,
            "iterations": self.iterations,
            "converged": self.converged,
            "rng_seed": self.rng_seed,
            "seed_values": [float(v) for v in self.seed_values],
            "grad_norm": self.grad_norm,
            "method": self.method,
        }
        if objective is not None:
            out["objective"] = objective.kind
            out["normalization"] = "|<f|U|i>|^2" if objective.kind == "state_prep" else "|Tr(W^dagger U)|/d"
        return out


def _projected_norm(x, g):
    return float(np.linalg.norm(np.clip(x + g, -1, 1) - x))


def gradient_ascent(objective: Objective, seed_params, step: float = 1.0, tol: float = 1e-3,
                    max_iters: int = 2000, armijo: float = 1e-4, target: float = None) -> SearchReport:
    """Projected steepest ascent on [-1, 1]^M with Armijo backtracking.

    Stops when the projected gradient norm drops to `tol`, when the value
    reaches `target`, or after `max_iters` accepted steps.
    """
    if step <= 0 or tol <= 0:
        raise ValueError("step and tol must be positive")
    x = np.clip(_raw(seed_params), -1, 1)
    f, g = objective.value_and_grad(x)
    trace = [f]
    it = 0
    eps = step
    converged = False
    while True:
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite objective or gradient at iteration {it}")
        pg = _projected_norm(x, g)
        if pg <= tol or (target is not None and f >= target):
            converged = pg <= tol
            break
        if it >= max_iters:
            break
        accepted = False
        while eps > 1e-14:
            xn = np.clip(x + eps * g, -1, 1)
            fn = objective.value(xn)
            if not np.isfinite(fn):
                raise FloatingPointError(f"non-finite objective during line search at iteration {it}")
            if fn >= f + armijo * float(g @ (xn - x)) and fn >= f:
                accepted = True
                break
            eps *= 0.5
        if not accepted:
            break
        x = xn
        f, g = objective.value_and_grad(x)
        trace.append(f)
        it += 1
        eps *= 2.0
    params = WaveformParams(x, objective.layout)
    return SearchReport(params, f, 1, it, converged, trace=trace, grad_norm=_projected_norm(x, g),
                        seed_values=[f])


def lbfgsb_search(objective: Objective, seed_params, tol: float = 1e-3, max_iters: int = 2000,
                  target: float = None) -> SearchReport:
    """Box-constrained quasi-Newton search (scipy L-BFGS-B) on the same objective."""
    x0 = np.clip(_raw(seed_params), -1, 1)
    trace = []

    class _Done(Exception):
        pass

    best = {"x": x0, "f": -np.inf}

    def fun(x):
        f, g = objective.value_and_grad(x)
        if not np.isfinite(f):
            raise FloatingPointError("non-finite objective")
        if f > best["f"]:
            best["x"], best["f"] = x.copy(), f
        return -f, -g

    def callback(xk):
        trace.append(best["f"])
        if target is not None and best["f"] >= target:
            raise _Done

    try:
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=[(-1, 1)] * x0.size,
                       callback=callback, options={"maxiter": max_iters, "gtol": tol * 1e-3, "ftol": 1e-12,
                                                   "maxcor": 30})
        nit = res.nit
    except _Done:
        nit = len(trace)
    x = best["x"]
    f, g = objective.value_and_grad(x)
    pg = _projected_norm(x, g)
    return SearchReport(WaveformParams(np.clip(x, -1, 1), objective.layout), f, 1, nit, pg <= tol,
                        trace=trace, grad_norm=pg, seed_values=[f], method="lbfgsb")


def random_seed_params(layout: WaveformLayout, rng, low: float = 0.0, high: float = 1.0) -> WaveformParams:
    """Uniform draw on [0, 1] mapped affinely onto [low, high]."""
    u = rng.uniform(0.0, 1.0, layout.n_params)
    return WaveformParams(low + (high - low) * u, layout)


def _run_one(args):
    objective, seed, method, kwargs = args
    if method == "lbfgsb":
        return lbfgsb_search(objective, seed, **kwargs)
    return gradient_ascent(objective, seed, **kwargs)


def multistart(objective: Objective, n_seeds: int, rng_seed: int, method: str = "ascent",
               jobs: int = 1, stop_at: float = None, seed_range=(0.0, 1.0), **kwargs) -> SearchReport:
    """Best of n_seeds independent searches, deterministic in rng_seed.

    With stop_at set, remaining seeds are skipped once a run reaches it.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be at least 1")
    if method not in ("ascent", "lbfgsb"):
        raise ValueError(f"unknown search method {method!r}")
    rng = np.random.default_rng(rng_seed)
    seeds = [random_seed_params(objective.layout, rng, *seed_range) for _ in range(n_seeds)]
    if stop_at is not None:
        kwargs.setdefault("target", stop_at)
    reports = []
    if jobs > 1 and stop_at is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, [(objective, s, method, kwargs) for s in seeds]))
    else:
        for s in seeds:
            reports.append(_run_one((objective, s, method, kwargs)))
            if stop_at is not None and reports[-1].best_value >= stop_at:
                break
    # ties broken by the earliest seed
    order = sorted(range(len(reports)), key=lambda i: (-reports[i].best_value, i))
    best = reports[order[0]]
    return SearchReport(best.best_params, best.best_value, len(reports),
                        sum(r.iterations for r in reports), best.converged, rng_seed,
                        [r.best_value for r in reports], best.trace, best.grad_norm, method)
