import numpy as np
import pytest

from spinctl.hamiltonians import hyperfine_index
from spinctl.optimize import haar_state
from spinctl.spin_algebra import angular_momentum_generators, rotation_operator
from spinctl.wigner import (
    Grid,
    evaluate,
    multipole_coefficients,
    rotate_direction,
    rotation_matrix,
    spherical_harmonic,
    wigner_coupled,
    wigner_single,
)


def _quad(grid, values):
    """Integrate over the sphere with trapezoid in theta and a periodic sum in phi."""
    th = grid.theta
    w_th = np.trapezoid(np.eye(len(th)) * np.sin(th)[:, None], th, axis=0) if hasattr(np, "trapezoid") else None
    dphi = 2 * np.pi / len(grid.phi)
    return float(np.sum(w_th[:, None] * values) * dphi)


def test_spherical_harmonic_values():
    th, ph = 0.7, 1.3
    assert spherical_harmonic(0, 0, th, ph) == pytest.approx(1 / np.sqrt(4 * np.pi))
    assert spherical_harmonic(1, 0, th, ph) == pytest.approx(np.sqrt(3 / (4 * np.pi)) * np.cos(th))
    y11 = -np.sqrt(3 / (8 * np.pi)) * np.sin(th) * np.exp(1j * ph)
    assert spherical_harmonic(1, 1, th, ph) == pytest.approx(y11)
    with pytest.raises(ValueError):
        spherical_harmonic(1, 2, th, ph)


def test_maximally_mixed_is_flat():
    d = 9
    w = wigner_single(np.eye(d) / d, 4, Grid.equiangular(11, 12))
    assert np.allclose(w, 1 / np.sqrt(4 * np.pi * d))


def test_coefficients_parseval(rng):
    psi = haar_state(7, rng)
    rho = np.outer(psi, psi.conj())
    c = multipole_coefficients(rho, 3)
    assert len(c) == 49
    assert sum(abs(v) ** 2 for v in c.values()) == pytest.approx(1.0)


def test_normalization_integral(rng):
    psi = haar_state(5, rng)
    g = Grid.equiangular(181, 64)
    w = wigner_single(np.outer(psi, psi.conj()), 2, g)
    assert _quad(g, w) == pytest.approx(np.sqrt(4 * np.pi / 5), rel=1e-4)


def test_rotation_covariance(rng):
    F = 3
    psi = haar_state(7, rng)
    rho = np.outer(psi, psi.conj())
    axis, angle = np.array([0.3, -0.5, 0.8]), 1.1
    R = rotation_operator(F, axis / np.linalg.norm(axis), angle)
    c0 = multipole_coefficients(rho, F)
    c1 = multipole_coefficients(R @ rho @ R.conj().T, F)
    th = rng.uniform(0, np.pi, 20)
    ph = rng.uniform(0, 2 * np.pi, 20)
    R3 = rotation_matrix(axis, angle)
    th0, ph0 = rotate_direction(th, ph, R3.T)
    assert np.allclose(evaluate(c1, th, ph), evaluate(c0, th0, ph0), atol=1e-12)


def test_coherent_state_peaks_on_axis():
    w = wigner_single(np.diag([1.0] + [0] * 8), 4, Grid.equiangular(37, 8))
    assert np.unravel_index(np.argmax(w), w.shape)[0] == 0


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        wigner_single(np.triu(np.ones((3, 3))), 1)


def test_coupled_cat(tmp_path):
    v = np.zeros(16, dtype=complex)
    v[hyperfine_index(4, 4)] = v[hyperfine_index(3, -3)] = 1 / np.sqrt(2)
    wf = wigner_coupled(np.outer(v, v.conj()), grid=Grid.equiangular(19, 24))
    assert set(wf.blocks) == {"44", "33", "re_43", "im_43"}
    assert wf.radii == pytest.approx({"44": 0.5, "33": 0.5, "43": 0.5})
    ranks = {k for k, q in wf.coefficients["43"]}
    assert ranks == set(range(1, 8))
    paths = wf.export(tmp_path)
    assert len(paths) == 5
    first = open(paths[0]).readline()
    assert first.startswith("# block=44 radius=0.5 grid=19x24")
    data = np.loadtxt(paths[0])
    assert data.shape == (19 * 24, 3)


def test_coupled_shape_check():
    with pytest.raises(ValueError):
        wigner_coupled(np.eye(9) / 9)


def test_dipole_term_follows_orientation():
    # for |F,m> the rank-1 coefficient is proportional to +m
    F = 4
    c = [multipole_coefficients(np.diag(np.eye(9)[F - m]), F)[(1, 0)].real for m in (4, 1, -2)]
    assert c[0] > c[1] > 0 > c[2]
