"""Spherical Wigner functions from multipole coefficients.

W(n) = sum_{k,q} Tr[rho T^(k)_q^dagger] Y_kq(n). For a two-manifold state
the diagonal blocks give real fields and each coherence block a complex one.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .hamiltonians import F_DOWN, F_UP
from .spin_algebra import Spin, is_hermitian, tensor_block

DEFAULT_GRID = (91, 180)


def spherical_harmonic(k: int, q: int, theta, phi):
    """Orthonormal Y_kq with the Condon-Shortley phase; theta polar, phi azimuth."""
    if k < 0 or abs(q) > k:
        raise ValueError(f"need |q| <= k, got k={k}, q={q}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if hasattr(special, "sph_harm_y"):
        return special.sph_harm_y(k, q, theta, phi)
    return special.sph_harm(q, k, phi, theta)


@dataclass
class Grid:
    theta: np.ndarray
    phi: np.ndarray

    @classmethod
    def equiangular(cls, n_theta: int = DEFAULT_GRID[0], n_phi: int = DEFAULT_GRID[1]):
        return cls(np.linspace(0, np.pi, n_theta), np.linspace(0, 2 * np.pi, n_phi, endpoint=False))

    @property
    def shape(self):
        return len(self.theta), len(self.phi)

    def mesh(self):
        return np.meshgrid(self.theta, self.phi, indexing="ij")


def _block_coefficients(block, F, Fp) -> dict:
    """{(k, q): Tr[block T^(k)_q(F, F')^dagger]} for a (2F+1) x (2F'+1) block.

    The tensors here use the coupling order <F',m;k,q|F,m+q>, which differs
    from tensor_block by (-1)^(k+F'-F). With it |F,F> peaks at +z.
    """
    F, Fp = Spin(F), Spin(Fp)
    out = {}
    kmin = int(abs(F.j - Fp.j))
    kmax = int(F.j + Fp.j)
    for k in range(kmin, kmax + 1):
        sign = (-1) ** int(round(k + Fp.j - F.j))
        for q in range(-k, k + 1):
            t = tensor_block(F.j, Fp.j, k, q)
            out[(k, q)] = sign * complex(np.vdot(t, block))
    return out


def multipole_coefficients(rho, spin) -> dict:
    """Multipole moments of a single-manifold density matrix."""
    spin = spin if isinstance(spin, Spin) else Spin(spin)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spin.dim, spin.dim):
        raise ValueError(f"rho must be {spin.dim} x {spin.dim}")
    return _block_coefficients(rho, spin.j, spin.j)


def evaluate(coeffs: dict, theta, phi) -> np.ndarray:
    """Sum c_kq Y_kq at arbitrary points (broadcast shapes)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    out = np.zeros(theta.shape, dtype=complex)
    for (k, q), c in coeffs.items():
        if c != 0:
            out += c * spherical_harmonic(k, q, theta, phi)
    return out


def wigner_single(rho, spin, grid: Grid = None, imag_tol: float = 1e-10) -> np.ndarray:
    """Real Wigner field of a single-manifold state on the grid, shape (n_theta, n_phi)."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, tol=1e-10):
        raise ValueError("rho must be Hermitian")
    grid = grid or Grid.equiangular()
    th, ph = grid.mesh()
    w = evaluate(multipole_coefficients(rho, spin), th, ph)
    scale = max(1.0, float(np.abs(w).max()))
    if np.abs(w.imag).max() > imag_tol * scale:
        raise ArithmeticError("Wigner field has an imaginary residue")
    return w.real


@dataclass
class WignerField:
    grid: Grid
    blocks: dict  # block id -> sampled field
    radii: dict
    coefficients: dict = field(default_factory=dict)  # block id -> {(k, q): c}

    def export(self, directory, prefix: str = "wigner") -> list:
        """One text file per block plus a coefficients file; returns the paths."""
        os.makedirs(directory, exist_ok=True)
        th, ph = self.grid.mesh()
        paths = []
        for name, values in self.blocks.items():
            path = os.path.join(directory, f"{prefix}_{name}.dat")
            header = f"block={name} radius={self.radii[_radius_key(name)]:.12g} grid={self.grid.shape[0]}x{self.grid.shape[1]}\ntheta phi value"
            np.savetxt(path, np.column_stack([th.ravel(), ph.ravel(), np.asarray(values).ravel()]),
                       header=header, fmt="%.12e")
            paths.append(path)
        path = os.path.join(directory, f"{prefix}_coefficients.dat")
        with open(path, "w") as fh:
            fh.write("# block k q re im\n")
            for name, coeffs in self.coefficients.items():
                for (k, q), c in sorted(coeffs.items()):
                    fh.write(f"{name} {k} {q} {c.real:.15e} {c.imag:.15e}\n")
        paths.append(path)
        return paths


def _radius_key(name):
    return name[3:] if name[:3] in ("re_", "im_") else name


def wigner_coupled(rho, F: int = F_UP, Fp: int = F_DOWN, grid: Grid = None) -> WignerField:
    """Four-block field of a state on the F (+) F' space, F-manifold first.

    Blocks "FF" and "F'F'" are real. The coherence block is complex and is
    split into re_/im_ parts. Radii: populations for the diagonal blocks,
    Frobenius norm of the coherence block otherwise.
    """
    a, b = int(2 * F + 1), int(2 * Fp + 1)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (a + b, a + b):
        raise ValueError(f"rho must be {a + b} x {a + b}")
    if not is_hermitian(rho, tol=1e-10):
        raise ValueError("rho must be Hermitian")
    grid = grid or Grid.equiangular()
    th, ph = grid.mesh()
    up, dn, coh = rho[:a, :a], rho[a:, a:], rho[:a, a:]
    names = {"up": f"{F}{F}", "down": f"{Fp}{Fp}", "coh": f"{F}{Fp}"}
    coeffs = {
        names["up"]: _block_coefficients(up, F, F),
        names["down"]: _block_coefficients(dn, Fp, Fp),
        names["coh"]: _block_coefficients(coh, F, Fp),
    }
    blocks = {
        names["up"]: evaluate(coeffs[names["up"]], th, ph).real,
        names["down"]: evaluate(coeffs[names["down"]], th, ph).real,
    }
    wc = evaluate(coeffs[names["coh"]], th, ph)
    blocks["re_" + names["coh"]] = wc.real
    blocks["im_" + names["coh"]] = wc.imag
    radii = {
        names["up"]: float(np.real(np.trace(up))),
        names["down"]: float(np.real(np.trace(dn))),
        names["coh"]: float(np.linalg.norm(coh)),
    }
    return WignerField(grid, blocks, radii, coeffs)


def rotate_direction(theta, phi, R3):
    """Angles of R3 @ n(theta, phi)."""
    n = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    m = np.tensordot(R3, n, axes=1)
    return np.arccos(np.clip(m[2], -1, 1)), np.arctan2(m[1], m[0]) % (2 * np.pi)


def rotation_matrix(axis, angle) -> np.ndarray:
    """SO(3) rotation by angle about the unit axis (right hand)."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k
