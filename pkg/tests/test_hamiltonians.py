import numpy as np
import pytest

from spinctl.controllability import lie_closure
from spinctl.hamiltonians import (
    CONFIG_IDS,
    G_RATIO,
    KHZ,
    LightShiftConfig,
    MwRfConfig,
    hyperfine_index,
    light_shift_system,
    manifold_projectors,
    microwave_pair,
    mwrf_system,
    restricted_phase_system,
)
from spinctl.spin_algebra import angular_momentum_generators, is_hermitian


def test_light_shift_defaults():
    s = light_shift_system()
    g = angular_momentum_generators(3)
    assert s.dim == 7
    assert np.allclose(s.hamiltonian([0, 0]), 0.5 * KHZ * g["Jx"] @ g["Jx"])
    assert s.channels[0].bound == pytest.approx(2 * np.pi * 15e3)
    angle = light_shift_system(LightShiftConfig(constrained_angle_mode=True))
    assert [grp.mode for grp in angle.groups] == ["p"]


def test_light_shift_validation():
    with pytest.raises(ValueError):
        light_shift_system(LightShiftConfig(nonlinearity=0))


def test_hyperfine_index():
    assert hyperfine_index(4, 4) == 0
    assert hyperfine_index(4, -4) == 8
    assert hyperfine_index(3, 3) == 9
    assert hyperfine_index(3, -3) == 15
    with pytest.raises(ValueError):
        hyperfine_index(3, 4)


def test_microwave_pair_entries():
    sx, sy = microwave_pair(-3, -4)
    nz = np.argwhere(np.abs(sx) > 0)
    assert len(nz) == 2 and np.allclose(sx[tuple(nz.T)], 0.5)
    assert {tuple(x) for x in nz} == {(0, 9), (9, 0)}
    assert is_hermitian(sy) and abs(sy[0, 9]) == 0.5


def test_default_config_channels():
    s = mwrf_system()
    assert s.dim == 16 and len(s.channels) == 8
    assert s.labels[:4] == ["rf1_in", "rf1_quad", "rf2_in", "rf2_quad"]
    assert not s.has_drift
    p_up, _ = manifold_projectors()
    up = angular_momentum_generators(4)
    assert np.allclose((p_up @ s.channels[0].operator @ p_up)[:9, :9], up["Jx"])
    lower = s.channels[0].operator[9:, 9:]
    assert np.allclose(lower, G_RATIO * angular_momentum_generators(3)["Jx"])


@pytest.mark.parametrize("cid", CONFIG_IDS)
def test_every_config_hermitian_and_controllable(cid):
    s = mwrf_system(MwRfConfig(config_id=cid))
    for ch in s.channels:
        assert is_hermitian(ch.operator)
        radius = np.abs(np.linalg.eigvalsh(ch.operator)).max()
        assert radius <= 4 * abs(G_RATIO) + 1e-12
        if ch.label.startswith("mw"):
            assert radius == pytest.approx(0.5)
    gens = list(s.operators) + ([s.drift] if s.has_drift else [])
    dim, basis = lie_closure(gens)
    assert dim == 255 and basis.stable


def test_struw0_folds_microwave_into_drift():
    s = mwrf_system(MwRfConfig(config_id="2rfap1struw0"))
    assert s.has_drift and not any(lab.startswith("mw") for lab in s.labels)
    sx, _ = microwave_pair(3, 4)
    assert np.allclose(s.drift, 2 * np.pi * 40e3 * sx)


def test_detuning_drift():
    s = mwrf_system(MwRfConfig(rf_detuning=KHZ, mw_detuning=2 * KHZ))
    d = np.real(np.diag(s.drift))
    assert d[hyperfine_index(4, 4)] == pytest.approx(KHZ + 4 * KHZ)
    assert d[hyperfine_index(3, 3)] == pytest.approx(-KHZ - 3 * KHZ)


def test_unknown_config():
    with pytest.raises(ValueError, match="valid ids"):
        MwRfConfig(config_id="3rf")


def test_restricted_system():
    s = restricted_phase_system(4)
    assert s.dim == 8 and not s.has_drift
    assert np.linalg.matrix_rank(s.phase_primitive) == 1 and s.phase_primitive[0, 0] == 1
    assert abs(s.channels[2].operator[0, 1]) == 0.5
    assert abs(restricted_phase_system(-4).channels[2].operator[0, 7]) == 0.5
    with pytest.raises(ValueError):
        restricted_phase_system(3)


def test_system_validation():
    from spinctl.hamiltonians import Channel, ControlSystem

    with pytest.raises(ValueError):
        ControlSystem(2, np.array([[0, 1], [0, 0]]), [])
    with pytest.raises(ValueError):
        ControlSystem(2, np.zeros((2, 2)), [Channel("c", np.eye(2), -1.0, 1e-6)])
