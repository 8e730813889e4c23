import json

import numpy as np
import pytest

from spinctl.cli import (
    ConfigError,
    build_config,
    main,
    make_system,
    parse_config,
    parse_duration,
    parse_frequency,
    parse_state,
    read_config_text,
    state_index,
)
from spinctl.hamiltonians import KHZ, US, hyperfine_index


def test_units():
    assert parse_frequency("25kHz") == pytest.approx(25 * KHZ)
    assert parse_frequency("1.5 MHz") == pytest.approx(2 * np.pi * 1.5e6)
    assert parse_duration("150us") == pytest.approx(150 * US)
    assert parse_duration("150µs") == pytest.approx(150e-6)
    assert parse_duration("2ms") == pytest.approx(2e-3)
    for bad in ("25", "25 furlongs", "kHz"):
        with pytest.raises(ValueError):
            parse_frequency(bad)


def test_config_errors_carry_lines():
    text = "[system]\nconfig_id = 2rfap2struwap\n\n[stateprep]\ntarget = cat\nbogus = 1\n"
    with pytest.raises(ConfigError) as info:
        read_config_text(text)
    assert info.value.line == 6
    with pytest.raises(ConfigError) as info:
        read_config_text("[system]\nrf_amp = 1\n[system]\n")
    assert info.value.line == 3
    with pytest.raises(ConfigError) as info:
        read_config_text("[nope]\n")
    assert info.value.line == 1
    with pytest.raises(ConfigError):
        read_config_text("[ecc]\n[wigner]\n")


def test_value_error_line(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[system]\nrf_amp = 25\n[controllability]\n")
    with pytest.raises(ConfigError) as info:
        parse_config(p)
    assert info.value.line == 2
    assert "unit" in str(info.value)


def test_flags_override_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[optimization]\nseeds = 3\ntime = 20us\n[stateprep]\ntarget = |4,3>\n")
    cfg = parse_config(p, overrides={"optimization": {"seeds": "5"}})
    assert cfg.values["optimization"]["seeds"] == 5
    assert cfg.values["optimization"]["time"] == pytest.approx(20e-6)
    assert cfg.values["stateprep"]["target"] == "|4,3>"
    with pytest.raises(ConfigError):
        parse_config(p, task="ecc")


def test_task_defaults():
    cfg = build_config("gates")
    assert cfg.values["system"]["config_id"] == "restricted+4"
    assert build_config("stateprep").values["optimization"]["time"] == pytest.approx(150e-6)
    with pytest.raises(ConfigError):
        build_config("nothing")


def test_states():
    cfg = build_config("stateprep")
    s = make_system(cfg)
    v = parse_state("|4,4> - |3,-3>", s)
    assert v[hyperfine_index(4, 4)] == pytest.approx(1 / np.sqrt(2))
    assert v[hyperfine_index(3, -3)] == pytest.approx(-1 / np.sqrt(2))
    assert np.allclose(parse_state("cat", s), np.abs(v))
    rng = np.random.default_rng(1)
    assert np.linalg.norm(parse_state("haar-random", s, rng)) == pytest.approx(1)
    with pytest.raises(ValueError):
        parse_state("|5,0>", s)
    with pytest.raises(ValueError):
        parse_state("something", s)
    r = make_system(build_config("gates"))
    assert state_index(r, 4, 4) == 0 and state_index(r, 3, -3) == 7


def test_amplitude_file(tmp_path):
    s = make_system(build_config("stateprep"))
    p = tmp_path / "amp.txt"
    np.savetxt(p, np.column_stack([np.ones(16), np.zeros(16)]))
    assert np.allclose(parse_state(str(p), s), np.ones(16) / 4)
    np.savetxt(p, np.ones(5))
    with pytest.raises(ValueError):
        parse_state(str(p), s)


def test_controllability_command(tmp_path, capsys):
    assert main(["controllability", "--system", "2rfap1struwap", "--out", str(tmp_path)]) == 0
    assert "controllable=true" in capsys.readouterr().out
    rep = json.loads((tmp_path / "controllability.json").read_text())
    assert rep["dimension"] == 255 and rep["task"] == "controllability"


def test_stateprep_reproducible(tmp_path):
    args = ["stateprep", "--system", "light-shift", "--time", "30us", "--seeds", "2", "--max-iters", "15",
            "--rng-seed", "4", "--target", "haar-random", "--initial", "|3,3>"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "waveform.csv").read_bytes() == (tmp_path / "b" / "waveform.csv").read_bytes()
    a = json.loads((tmp_path / "a" / "stateprep.json").read_text())
    b = json.loads((tmp_path / "b" / "stateprep.json").read_text())
    a["config"]["io"].pop("output_dir")
    b["config"]["io"].pop("output_dir")
    assert a == b


def test_gates_exact(tmp_path, capsys):
    assert main(["gates", "--gate", "G3", "--d", "7", "--mode", "exact-maps", "--out", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "gate_G3_manifest.json").read_text())
    assert m["fidelity"] == pytest.approx(1.0)
    assert m["n_state_maps"] == 2 * m["n_phase_steps"]


def test_config_file_run(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[ecc]\neps_min = 0.01\neps_max = 0.1\nn_eps = 5\n")
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "ecc.json").read_text())
    assert len(rep["rows"]) == 5
    assert rep["exponents"]["corrected"] > rep["exponents"]["uncorrected"]


def test_wigner_and_landscape(tmp_path):
    assert main(["wigner", "--grid", "10x12", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "wigner.json").read_text())
    assert rep["radii"]["43"] == pytest.approx(0.5)
    assert (tmp_path / "wigner_coefficients.dat").exists()
    assert main(["landscape", "--dims", "2,3", "--instances", "3", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "landscape.json").read_text())["all_match"]


def test_error_records(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[system]\nrf_amp = 3\n[controllability]\n")
    assert main(["--config", str(p)]) == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["exit_code"] == 2 and rec["line"] == 2
    assert main(["wigner", "--grid", "ten", "--out", str(tmp_path)]) == 1
    rec = json.loads(capsys.readouterr().err)
    assert rec["task"] == "wigner" and rec["error"] == "ValueError"
