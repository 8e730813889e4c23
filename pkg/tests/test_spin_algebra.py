from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from spinctl.spin_algebra import (
    Spin,
    angular_momentum_generators,
    clebsch_gordan,
    cross_tensor,
    hermitian_basis,
    is_hermitian,
    is_unitary,
    rotation_operator,
    spherical_tensor,
    tensor_block,
    trace_inner_product,
    two_manifold_tensor_basis,
)

SPINS = [Fraction(1, 2), 1, Fraction(3, 2), 2, 3, 4]


@pytest.mark.parametrize("j", SPINS)
def test_commutators_and_casimir(j):
    g = angular_momentum_generators(j)
    jx, jy, jz = g["Jx"], g["Jy"], g["Jz"]
    assert np.allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)
    assert np.allclose(jy @ jz - jz @ jy, 1j * jx, atol=1e-12)
    assert np.allclose(jz @ jx - jx @ jz, 1j * jy, atol=1e-12)
    jj = float(j)
    assert np.allclose(jx @ jx + jy @ jy + jz @ jz, jj * (jj + 1) * np.eye(Spin(j).dim), atol=1e-12)
    assert all(is_hermitian(g[k]) for k in ("Jx", "Jy", "Jz"))


def test_descending_m_order():
    g = angular_momentum_generators(3)
    assert np.allclose(np.diag(g["Jz"]).real, [3, 2, 1, 0, -1, -2, -3])
    up = np.zeros(7)
    up[1] = 1  # |3,2>
    assert np.allclose(g["Jplus"] @ up, np.sqrt(6) * np.eye(7)[0])


def test_spin_validation():
    assert Spin(Fraction(5, 2)).dim == 6
    with pytest.raises(ValueError):
        Spin(-1)
    with pytest.raises(ValueError):
        Spin(0.3)


def test_clebsch_gordan_textbook_values():
    # two spin-1/2: singlet and triplet
    h = Fraction(1, 2)
    assert clebsch_gordan(h, h, h, -h, 1, 0) == pytest.approx(np.sqrt(0.5))
    assert clebsch_gordan(h, h, h, -h, 0, 0) == pytest.approx(np.sqrt(0.5))
    assert clebsch_gordan(h, -h, h, h, 0, 0) == pytest.approx(-np.sqrt(0.5))
    assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / np.sqrt(3))
    assert clebsch_gordan(1, 0, 1, 0, 0, 0) == pytest.approx(-1 / np.sqrt(3))
    assert clebsch_gordan(1, 0, 1, 0, 1, 0) == pytest.approx(0.0)
    assert clebsch_gordan(2, 1, 1, 0, 3, 1) == pytest.approx(np.sqrt(8 / 15))
    assert clebsch_gordan(1, 1, 1, 1, 1, 1) == 0.0  # M mismatch


def test_clebsch_gordan_errors():
    with pytest.raises(ValueError):
        clebsch_gordan(1, 2, 1, 0, 1, 2)
    with pytest.raises(ValueError):
        clebsch_gordan(1, 0.3, 1, 0, 1, 0.3)


@pytest.mark.parametrize("j1,j2", [(1, 1), (Fraction(3, 2), 1), (2, Fraction(1, 2)), (3, 4)])
def test_clebsch_gordan_unitary(j1, j2):
    s1, s2 = Spin(j1), Spin(j2)
    rows = []
    for J in np.arange(abs(s1.j - s2.j), s1.j + s2.j + 1):
        for M in Spin(J).m_values:
            rows.append([clebsch_gordan(j1, m1, j2, m2, J, M) for m1 in s1.m_values for m2 in s2.m_values])
    c = np.array(rows)
    assert np.allclose(c @ c.T, np.eye(len(c)), atol=1e-12)


@pytest.mark.parametrize("j", [1, Fraction(3, 2), 3, 4])
def test_spherical_tensors_orthonormal(j):
    s = Spin(j)
    ts = [spherical_tensor(s, k, q) for k in range(int(2 * s.j) + 1) for q in range(-k, k + 1)]
    assert len(ts) == s.dim ** 2
    gram = np.array([[trace_inner_product(a, b) for b in ts] for a in ts])
    assert np.allclose(gram, np.eye(len(ts)), atol=1e-12)


def test_spherical_tensor_low_ranks():
    g = angular_momentum_generators(3)
    assert np.allclose(spherical_tensor(3, 0, 0), np.eye(7) / np.sqrt(7))
    t10 = spherical_tensor(3, 1, 0)
    c = t10[0, 0] / 3
    assert np.allclose(t10, c * g["Jz"])
    # spherical components of a vector: T_{+1} = -c J+ / sqrt(2) whatever the rank sign
    assert np.allclose(spherical_tensor(3, 1, 1), -c * g["Jplus"] / np.sqrt(2))
    assert np.allclose(spherical_tensor(3, 1, -1), c * g["Jminus"] / np.sqrt(2))


def test_tensor_adjoint_relation():
    for k in range(5):
        for q in range(-k, k + 1):
            t = spherical_tensor(4, k, q)
            assert np.allclose(t.conj().T, (-1) ** q * spherical_tensor(4, k, -q), atol=1e-12)


def test_tensor_rotation_covariance(rng):
    # R T^k_q R^dagger stays inside the rank-k span
    axis = rng.standard_normal(3)
    r = rotation_operator(3, axis, 0.7)
    for k in range(7):
        span = np.array([spherical_tensor(3, k, q).ravel() for q in range(-k, k + 1)])
        for q in range(-k, k + 1):
            rt = (r @ spherical_tensor(3, k, q) @ r.conj().T).ravel()
            coef = span.conj() @ rt
            assert np.allclose(coef @ span, rt, atol=1e-12)


def test_rank_two_fx_squared_overlap():
    g = angular_momentum_generators(3)
    val = np.trace(g["Jx"] @ g["Jx"] @ spherical_tensor(3, 2, 0))
    assert val.real == pytest.approx(-4.58257569495584, abs=1e-9)
    assert abs(val.imag) < 1e-12


def test_tensor_block_range_checked():
    with pytest.raises(ValueError):
        tensor_block(4, 3, 0, 0)
    with pytest.raises(ValueError):
        spherical_tensor(1, 3, 0)
    with pytest.raises(ValueError):
        tensor_block(3, 3, 2, 3)


def test_two_manifold_basis_orthonormal():
    basis = two_manifold_tensor_basis(4, 3)
    assert len(basis) == 256
    m = np.array([b.ravel() for _, b in basis])
    assert np.allclose(m.conj() @ m.T, np.eye(256), atol=1e-12)
    ct = cross_tensor(4, 3, 1, 0)
    assert ct.shape == (16, 16) and np.abs(ct[9:, :]).max() == 0 and np.abs(ct[:9, 9:]).max() > 0


@pytest.mark.parametrize("d", [1, 2, 5])
def test_hermitian_basis(d):
    b = hermitian_basis(d)
    assert len(b) == d * d
    assert all(is_hermitian(x) for x in b)
    gram = np.array([[trace_inner_product(x, y) for y in b] for x in b])
    assert np.allclose(gram, np.eye(d * d))


def test_trace_inner_product_shape_check():
    with pytest.raises(ValueError):
        trace_inner_product(np.eye(2), np.eye(3))


def test_rotation_operator(rng):
    g = angular_momentum_generators(2)
    r = rotation_operator(2, (0, 1, 0), 0.4)
    assert is_unitary(r)
    assert np.allclose(r, expm(-0.4j * g["Jy"]))
    # pi about x carries the stretched state to the opposite pole
    up = np.eye(5)[0]
    down = np.eye(5)[4]
    assert abs(np.vdot(down, rotation_operator(2, (1, 0, 0), np.pi) @ up)) == pytest.approx(1.0)


def test_is_unitary_shapes():
    assert not is_unitary(np.ones((2, 3)))
    assert not is_unitary(2 * np.eye(2))
