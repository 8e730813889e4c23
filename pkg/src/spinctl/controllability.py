"""Lie-algebra closure and the rank-2 controllability test."""

from dataclasses import dataclass

import numpy as np

from .spin_algebra import Spin, angular_momentum_generators, is_hermitian, spherical_tensor

ZEROISH = 1e-10


@dataclass
class AlgebraBasis:
    """Orthonormal real coordinates (over traceless Hermitian d x d) of an algebra."""

    dim_hilbert: int
    vectors: np.ndarray  # shape (count, d*d - 1)
    stable: bool = True

    @property
    def count(self) -> int:
        return len(self.vectors)

    def operators(self) -> np.ndarray:
        return _from_coords(self.vectors, self.dim_hilbert)


def _diag_frame(d):
    # generalized Gell-Mann diagonals, each with unit trace norm
    rows = []
    for i in range(1, d):
        v = np.zeros(d)
        v[:i] = 1.0
        v[i] = -i
        rows.append(v / np.sqrt(i * i + i))
    return np.array(rows).reshape(d - 1, d)


def _to_coords(ops: np.ndarray, d: int) -> np.ndarray:
    """Real coordinates of traceless Hermitian matrices (batched, ..., d, d)."""
    iu = np.triu_indices(d, 1)
    diag = np.real(np.diagonal(ops, axis1=-2, axis2=-1)) @ _diag_frame(d).T
    off = ops[..., iu[0], iu[1]]
    s = np.sqrt(2)
    return np.concatenate([diag, s * off.real, -s * off.imag], axis=-1)


def _from_coords(vecs: np.ndarray, d: int) -> np.ndarray:
    vecs = np.atleast_2d(vecs)
    n = d - 1
    m = d * (d - 1) // 2
    iu = np.triu_indices(d, 1)
    out = np.zeros((len(vecs), d, d), dtype=complex)
    diag = vecs[:, :n] @ _diag_frame(d)
    out[:, np.arange(d), np.arange(d)] = diag
    upper = (vecs[:, n:n + m] - 1j * vecs[:, n + m:]) / np.sqrt(2)
    out[:, iu[0], iu[1]] = upper
    out[:, iu[1], iu[0]] = upper.conj()
    return out


def _traceless(h):
    d = h.shape[0]
    return h - np.trace(h) / d * np.eye(d)


class _Orthonormalizer:
    """Incremental Gram-Schmidt with one re-orthogonalization pass."""

    def __init__(self, n, tol):
        self.q = np.zeros((0, n))
        self.tol = tol

    def add(self, vecs: np.ndarray) -> int:
        vecs = np.atleast_2d(vecs)
        norms = np.linalg.norm(vecs, axis=1)
        vecs = vecs[norms > self.tol] / norms[norms > self.tol, None]
        # cheap batch projection first, then exact sequential insertion
        for _ in range(2):
            vecs = vecs - (vecs @ self.q.T) @ self.q
        vecs = vecs[np.linalg.norm(vecs, axis=1) > self.tol]
        added = 0
        for v in vecs:
            for _ in range(2):
                v = v - self.q.T @ (self.q @ v)
            r = np.linalg.norm(v)
            if r > self.tol:
                self.q = np.vstack([self.q, v / r])
                added += 1
            if len(self.q) == self.q.shape[1]:
                break
        return added


def lie_closure(generators, tol: float = ZEROISH):
    """Dimension of the real Lie algebra spanned by the traceless generators.

    Commutators are taken breadth first between every newly added element
    and all earlier ones until nothing new appears. Returns the dimension and
    an AlgebraBasis; basis.stable is False when the final orthonormal frame
    fails the projector residual check (result then indeterminate).
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise ValueError("generators must share one dimension")
        if not is_hermitian(g, tol=1e-10 * max(1.0, np.abs(g).max())):
            raise ValueError("generators must be Hermitian")
    full = d * d - 1
    ortho = _Orthonormalizer(full, tol)
    for g in gens:
        scale = np.abs(g).max()
        if scale > 0:
            ortho.add(_to_coords(_traceless(g / scale), d))
    if full == 0:
        return 0, AlgebraBasis(d, ortho.q)

    mm = 1
    while mm < len(ortho.q) and len(ortho.q) < full:
        ops = _from_coords(ortho.q[: mm + 1], d)
        a = ops[mm]
        b = ops[:mm]
        comm = -1j * (a @ b - b @ a)
        ortho.add(_to_coords(comm, d))
        mm += 1

    q = ortho.q
    # stability check: residual of the projector complement and orthonormality
    p = np.eye(q.shape[1]) - q.T @ q
    residual = float(np.sum(np.diag(p) ** 2)) if len(q) == full else 0.0
    ortho_err = float(np.abs(q @ q.T - np.eye(len(q))).max()) if len(q) else 0.0
    stable = residual <= 1e-10 and ortho_err <= 1e-8
    return len(q), AlgebraBasis(d, q, stable)


def is_controllable(generators, tol: float = ZEROISH) -> bool:
    """True when the generators span su(d) under commutation."""
    dim, basis = lie_closure(generators, tol)
    d = basis.dim_hilbert
    return dim == d * d - 1


def rank2_overlaps(h, spin) -> np.ndarray:
    """|Tr(h T^(2)_q)| for q = -2..2."""
    spin = spin if isinstance(spin, Spin) else Spin(spin)
    h = np.asarray(h, dtype=complex)
    if h.shape != (spin.dim, spin.dim):
        raise ValueError("operator does not match the spin dimension")
    return np.array([abs(np.trace(h @ spherical_tensor(spin, 2, q))) for q in range(-2, 3)])


def rank2_criterion(h, spin, tol: float = 1e-10) -> bool:
    """Does h overlap some rank-2 tensor? Together with Jx, Jy this gives su(d) for d > 2."""
    spin = spin if isinstance(spin, Spin) else Spin(spin)
    if spin.dim <= 2:
        raise ValueError("the rank-2 test needs d > 2")
    if not is_hermitian(h, tol=1e-10):
        raise ValueError("h must be Hermitian")
    return bool(np.any(rank2_overlaps(h, spin) > tol))


def spin_generators(spin):
    g = angular_momentum_generators(spin)
    return g["Jx"], g["Jy"], g["Jz"]
