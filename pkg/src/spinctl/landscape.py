"""Numerical checks of control-landscape critical points.

Gate objective J(U) = 2 Re Tr(V^dagger U): its critical points are the
unitaries U = V T W_n T^dagger with W_n = diag(1,...,1,-1,...,-1) (n minus
signs). The curvature along e^{-ih} U is -Re Tr(V^dagger h^2 U).
"""

from dataclasses import dataclass

import numpy as np

from .optimize import Objective, gradient_ascent, haar_state, haar_unitary, lbfgsb_search, random_seed_params
from .spin_algebra import hermitian_basis


@dataclass
class CriticalManifoldInfo:
    d: int
    n: int
    critical_value: float
    hessian_counts: tuple
    grassmannian_dim: int


def critical_values(d: int) -> list:
    """The d+1 critical values -2d, -2d+4, ..., 2d."""
    if d < 1:
        raise ValueError("d must be positive")
    return [float(2 * (d - 2 * n)) for n in range(d, -1, -1)]


def hessian_signature(d: int, n: int) -> tuple:
    """(positive, negative, zero) curvature counts on the n-th critical manifold."""
    if not 0 <= n <= d:
        raise ValueError(f"n={n} outside 0..{d}")
    return n * n, (d - n) ** 2, 2 * n * (d - n)


def grassmannian_dim(d: int, n: int) -> int:
    return 2 * n * (d - n)


def critical_point(V, n, T):
    d = V.shape[0]
    w = np.diag(np.r_[np.ones(d - n), -np.ones(n)]).astype(complex)
    return V @ T @ w @ T.conj().T


def hessian_form(V, U) -> np.ndarray:
    """Symmetric d^2 x d^2 matrix of -Re Tr(V^dagger h^2 U) on the Hermitian basis."""
    d = V.shape[0]
    basis = np.array(hermitian_basis(d))
    c = U @ V.conj().T  # Tr(V^dagger h1 h2 U) = Tr(h1 h2 C)
    left = basis @ c  # h_j C
    # Tr(h_i h_j C) for all pairs
    prod = np.einsum("iab,jba->ij", basis, left)
    return -0.5 * np.real(prod + prod.T)


def count_signs(eigs, rel_tol: float = 1e-8) -> tuple:
    scale = np.max(np.abs(eigs)) if len(eigs) else 0.0
    tol = rel_tol * scale
    return int(np.sum(eigs > tol)), int(np.sum(eigs < -tol)), int(np.sum(np.abs(eigs) <= tol))


def numeric_hessian_check(V, n: int, rng=None, T=None) -> CriticalManifoldInfo:
    """Measure curvature signs at a random point of the n-th critical manifold."""
    V = np.asarray(V, dtype=complex)
    d = V.shape[0]
    if T is None:
        T = haar_unitary(d, rng if rng is not None else np.random.default_rng())
    U = critical_point(V, n, T)
    eigs = np.linalg.eigvalsh(hessian_form(V, U))
    value = 2 * np.real(np.trace(V.conj().T @ U))
    counts = count_signs(eigs)
    return CriticalManifoldInfo(d, n, float(value), counts, counts[2])


def signature_sweep(dims=range(2, 6), n_instances: int = 50, rng_seed: int = 0) -> list:
    """Compare measured and predicted signatures; returns a list of result rows."""
    rng = np.random.default_rng(rng_seed)
    rows = []
    for d in dims:
        cvals = critical_values(d)
        for n in range(d + 1):
            expected = hessian_signature(d, n)
            matches = 0
            value_ok = True
            for _ in range(n_instances):
                info = numeric_hessian_check(haar_unitary(d, rng), n, rng)
                matches += info.hessian_counts == expected
                value_ok &= abs(info.critical_value - cvals[d - n]) < 1e-9 * d
            rows.append({"d": d, "n": n, "expected": expected, "matches": matches,
                         "instances": n_instances, "critical_value_ok": bool(value_ok)})
    return rows


def brute_force_critical_values(d: int) -> list:
    """2 Re Tr(W) over every diagonal sign matrix W."""
    vals = set()
    for bits in range(2 ** d):
        signs = [(-1) ** ((bits >> k) & 1) for k in range(d)]
        vals.add(float(2 * sum(signs)))
    return sorted(vals)


def commutator_residual(psi, target) -> float:
    """Frobenius norm of [|psi><psi|, |f><f|]."""
    a = np.outer(psi, psi.conj())
    b = np.outer(target, target.conj())
    return float(np.linalg.norm(a @ b - b @ a))


def stateprep_hessian_nullity(U, initial, target, tol: float = 1e-8) -> tuple:
    """Zero-curvature directions of |<f| e^{-ih} U |i>|^2 over traceless h.

    Returns (nullity, number of directions). At a perfect state map the
    nullity is (d-1)^2 out of d^2 - 1.
    """
    d = U.shape[0]
    psi = U @ initial
    ops = _traceless_frame(d)
    a0 = np.vdot(target, psi)
    a1 = -1j * np.conj(ops @ target) @ psi  # -i <f|h_j|psi>
    f_hh = (np.conj(target) @ ops) @ (ops @ psi).T  # <f|h_i h_j|psi>
    a2 = -0.25 * (f_hh + f_hh.T)
    hess = 2 * np.real(np.outer(np.conj(a1), a1)) + 4 * np.real(np.conj(a0) * a2)
    eigs = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    scale = max(np.max(np.abs(eigs)), 1e-300)
    return int(np.sum(np.abs(eigs) <= tol * scale)), len(ops)


def _traceless_frame(d):
    from .controllability import _from_coords

    return _from_coords(np.eye(d * d - 1), d)


def stateprep_critical_sampler(system, layout, n_samples: int, rng_seed: int = 0, initial=None,
                               target=None, success: float = 0.99, tol: float = 1e-6,
                               method: str = "lbfgsb", max_iters: int = 5000) -> dict:
    """Run local searches from random seeds and summarize where they end up.

    Reports the fraction reaching F > success and, over all converged runs,
    the largest commutator residual between evolved and target states.
    """
    rng = np.random.default_rng(rng_seed)
    d = system.dim
    if initial is None:
        initial = np.zeros(d, dtype=complex)
        initial[0] = 1
    if target is None:
        target = haar_state(d, rng)
    obj = Objective.state_prep(system, layout, initial, target)
    values, residuals, paths, converged = [], [], [], []
    for _ in range(n_samples):
        seed = random_seed_params(layout, rng)
        if method == "lbfgsb":
            rep = lbfgsb_search(obj, seed, tol=tol, max_iters=max_iters)
        else:
            rep = gradient_ascent(obj, seed, tol=tol, max_iters=max_iters)
        psi = obj.final_state(rep.best_params.raw)
        values.append(rep.best_value)
        converged.append(rep.converged)
        residuals.append(commutator_residual(psi, target))
        paths.append(float(np.linalg.norm(rep.best_params.raw - seed.raw)))
    values = np.array(values)
    conv = np.array(converged)
    res = np.array(residuals)
    return {
        "n_samples": n_samples,
        "fraction_success": float(np.mean(values > success)),
        "fraction_converged": float(np.mean(conv)),
        "max_residual_converged": float(res[conv].max()) if conv.any() else float("nan"),
        "max_residual_success": float(res[values > success].max()) if np.any(values > success) else float("nan"),
        "values": values.tolist(),
        "residuals": res.tolist(),
        "displacements": paths,
        "target": target,
    }
