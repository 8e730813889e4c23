"""Angular momentum matrices, Clebsch-Gordan coefficients and operator bases.

All matrices use the |j, m> basis with m running from +j down to -j, so
index 0 is the stretched state m = +j.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Spin:
    """A spin quantum number j with 2j a non-negative integer."""

    j: Fraction

    def __init__(self, j):
        jj = Fraction(j).limit_denominator(2)
        if jj < 0 or jj.denominator not in (1, 2) or abs(float(jj) - float(j)) > 1e-12:
            raise ValueError(f"invalid spin quantum number {j!r}")
        object.__setattr__(self, "j", jj)

    @property
    def dim(self) -> int:
        return int(2 * self.j + 1)

    @property
    def m_values(self):
        return [self.j - k for k in range(self.dim)]


def _as_spin(spin) -> Spin:
    return spin if isinstance(spin, Spin) else Spin(spin)


def is_hermitian(a, tol=HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) < tol


def is_unitary(u, tol=UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def angular_momentum_generators(spin) -> dict:
    """Return Jx, Jy, Jz, Jplus and Jminus for the given spin."""
    spin = _as_spin(spin)
    j = float(spin.j)
    m = np.array([float(x) for x in spin.m_values])
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> sits just above the diagonal in descending-m order
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jm = jp.conj().T
    return {
        "Jx": (jp + jm) / 2,
        "Jy": (jp - jm) / 2j,
        "Jz": jz,
        "Jplus": jp,
        "Jminus": jm,
    }


def _check_pair(j, m):
    if j < 0 or (2 * j).denominator != 1 or (j - m).denominator != 1 or abs(m) > j:
        raise ValueError(f"invalid angular momentum pair j={j}, m={m}")


@lru_cache(maxsize=None)
def _cg_exact(j1, m1, j2, m2, J, M):
    if M != m1 + m2 or J < abs(j1 - j2) or J > j1 + j2 or (j1 + j2 + J).denominator != 1:
        return Fraction(0), 1
    f = lambda x: factorial(int(x))
    # squared prefactor kept as an exact rational
    pre = Fraction((2 * J + 1).numerator * f(J + j1 - j2) * f(J - j1 + j2) * f(j1 + j2 - J),
                   f(j1 + j2 + J + 1))
    pre *= f(J + M) * f(J - M) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    kmin = int(max(0, j2 - J - m1, j1 - J + m2))
    kmax = int(min(j1 + j2 - J, j1 - m1, j2 + m2))
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (f(k) * f(j1 + j2 - J - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
               * f(J - j2 + m1 + k) * f(J - j1 - m2 + k))
        total += Fraction((-1) ** k, den)
    return total, pre


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<J,M|j1,m1;j2,m2> in the Condon-Shortley convention."""
    args = [Fraction(x).limit_denominator(2) for x in (j1, m1, j2, m2, J, M)]
    for a, b in zip(args, (j1, m1, j2, m2, J, M)):
        if abs(float(a) - float(b)) > 1e-12:
            raise ValueError(f"{b!r} is not a half-integer")
    j1, m1, j2, m2, J, M = args
    for j, m in ((j1, m1), (j2, m2), (J, M)):
        _check_pair(j, m)
    total, pre = _cg_exact(j1, m1, j2, m2, J, M)
    if total == 0:
        return 0.0
    value = sqrt(total * total * pre)
    return value if total > 0 else -value


def tensor_block(F, Fp, k: int, q: int) -> np.ndarray:
    """Tensor operator T^(k)_q(F, F') as a bare (2F+1) x (2F'+1) block.

    Built as sqrt((2k+1)/(2F+1)) sum_m <F,m+q|k,q;F',m> |F,m+q><F',m|.
    """
    F, Fp = _as_spin(F), _as_spin(Fp)
    if k < 0 or abs(q) > k or not (abs(F.j - Fp.j) <= k <= F.j + Fp.j) or (F.j + Fp.j - k).denominator != 1:
        raise ValueError(f"rank k={k}, q={q} outside the allowed range for F={F.j}, F'={Fp.j}")
    block = np.zeros((F.dim, Fp.dim), dtype=complex)
    norm = np.sqrt((2 * k + 1) / F.dim)
    for col, m in enumerate(Fp.m_values):
        mq = m + q
        if abs(mq) > F.j:
            continue
        row = int(F.j - mq)
        block[row, col] = norm * clebsch_gordan(k, q, Fp.j, m, F.j, mq)
    return block


def spherical_tensor(spin, k: int, q: int) -> np.ndarray:
    """Irreducible tensor operator T^(k)_q on a single spin, unit trace norm."""
    spin = _as_spin(spin)
    if k > 2 * spin.j or k < 0:
        raise ValueError(f"rank {k} exceeds 2j = {2 * spin.j}")
    return tensor_block(spin, spin, k, q)


def _embed(block, F, Fp, manifolds):
    """Place a block into the direct sum of `manifolds` (listed top to bottom)."""
    manifolds = [_as_spin(s) for s in manifolds]
    offs, pos = {}, 0
    for s in manifolds:
        offs[s.j] = pos
        pos += s.dim
    out = np.zeros((pos, pos), dtype=complex)
    r, c = offs[F.j], offs[Fp.j]
    out[r:r + F.dim, c:c + Fp.dim] = block
    return out


def cross_tensor(F, Fp, k: int, q: int, manifolds=None) -> np.ndarray:
    """T^(k)_q(F, F') embedded in the two-manifold space.

    For F != F' the result lives on the (2F+1)+(2F'+1) space with the larger
    manifold first, unless `manifolds` gives another order. For F == F' and
    no `manifolds`, this is just the single-spin tensor.
    """
    F, Fp = _as_spin(F), _as_spin(Fp)
    block = tensor_block(F, Fp, k, q)
    if manifolds is None:
        if F.j == Fp.j:
            return block
        manifolds = sorted([F, Fp], key=lambda s: s.j, reverse=True)
    return _embed(block, F, Fp, manifolds)


def two_manifold_tensor_basis(Fa, Fb):
    """All T^(k)_q(F, F') over both orderings and both diagonal blocks.

    Returns a list of ((F, F', k, q), matrix) pairs on the (2Fa+1)+(2Fb+1)
    dimensional space, Fa block first.
    """
    Fa, Fb = _as_spin(Fa), _as_spin(Fb)
    out = []
    for F in (Fa, Fb):
        for Fp in (Fa, Fb):
            for k in range(int(abs(F.j - Fp.j)), int(F.j + Fp.j) + 1):
                for q in range(-k, k + 1):
                    out.append(((F.j, Fp.j, k, q), cross_tensor(F, Fp, k, q, manifolds=(Fa, Fb))))
    return out


def hermitian_basis(d: int) -> list:
    """Orthonormal Hermitian basis of d x d matrices.

    Ordering: d diagonal projectors, then the symmetric and antisymmetric
    off-diagonal pairs for each j < k.
    """
    if d < 1:
        raise ValueError("d must be positive")
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1
        basis.append(e)
    sym, asym = [], []
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = s
            sym.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = -1j * s
            e[k, j] = 1j * s
            asym.append(e)
    return basis + sym + asym


def trace_inner_product(a, b) -> complex:
    """Tr(A^dagger B)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def rotation_operator(spin, axis, angle) -> np.ndarray:
    """exp(-i angle n.J) for a unit axis n."""
    gens = angular_momentum_generators(spin)
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    h = n[0] * gens["Jx"] + n[1] * gens["Jy"] + n[2] * gens["Jz"]
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T
