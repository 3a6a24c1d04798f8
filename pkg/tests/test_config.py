import pytest

from chtumor.config import (DEFAULTS, ConfigError, build, builtin_scenarios, calibration_path,
                            config_hash, dumps, load, read_calibration, resolve, snapshot_times,
                            write_calibration)
from chtumor.potential import RegularPotential, SingularPotential


def test_builtin_scenarios_all_load():
    names = builtin_scenarios()
    assert {"default", "obstacle", "ctsdep", "mms", "stationary", "pure_ch"} <= set(names)
    for name in names:
        sc = load(name)
        assert sc.problem.grid.size > 0


def test_overrides_and_unknown_keys():
    cfg = resolve("default", ["params.kappa=0.25", "grid.n = 31"])
    assert cfg["params"]["kappa"] == "0.25" and cfg["grid"]["n"] == "31"
    with pytest.raises(ConfigError, match="unknown key"):
        resolve("default", ["params.kapa=1"])
    with pytest.raises(ConfigError, match="unknown section"):
        resolve({"physics": {"kappa": 1}})
    with pytest.raises(ConfigError, match="section.key=value"):
        resolve("default", ["kappa=1"])
    with pytest.raises(ConfigError, match="no config file"):
        resolve("does-not-exist")


def test_unknown_key_in_file_rejected(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[params]\nkappa = 1\nnutrient_gain = 3\n")
    with pytest.raises(ConfigError, match="nutrient_gain"):
        resolve(p)


def test_bad_values_rejected():
    for override in ("params.kappa=abc", "potential.kind=cubic", "params.diffusivity=variable",
                     "initial.phi0=sin(", "grid.n=2", "time.tau=0", "mode.model=fast",
                     "mode.snapshot_times=a,b"):
        with pytest.raises(ConfigError):
            load("default", [override])


def test_build_objects():
    sc = load("obstacle", ["potential.yosida_n=0.001"])
    assert isinstance(sc.problem.potential, SingularPotential) and sc.problem.potential.n == 0.001
    assert sc.mode == "singular"
    sc = load("default", ["mode.model=quasistatic", "params.kappa=0"])
    assert isinstance(sc.problem.potential, RegularPotential) and sc.mode == "quasistatic"
    sc = load({"grid": {"extent": "1.0, 2.0", "n": "7"}})
    assert sc.problem.grid.n == (7, 7) and sc.problem.grid.extent == (1.0, 2.0)
    sc = load("mms")
    assert sc.problem.forcing is not None


def test_hash_stable_and_round_trip(tmp_path):
    cfg = resolve("default")
    reordered = {s: dict(reversed(list(kv.items()))) for s, kv in reversed(list(cfg.items()))}
    assert config_hash(cfg) == config_hash(reordered)
    p = tmp_path / "resolved.ini"
    p.write_text(dumps(cfg))
    assert resolve(p) == cfg
    assert config_hash(resolve("default", ["params.kappa=0.5"])) != config_hash(cfg)
    assert set(cfg) == set(DEFAULTS)


def test_snapshot_times_sorted():
    assert snapshot_times(resolve(None, ["mode.snapshot_times=0.5, 0.1"])) == [0.1, 0.5]


def test_calibration_files(tmp_path):
    scenario = tmp_path / "s.ini"
    scenario.write_text("[params]\nkappa = 1\n")
    assert calibration_path(scenario) == tmp_path / "s.calibration.ini"
    with pytest.raises(ConfigError, match="calibrate"):
        read_calibration(scenario)
    write_calibration({"yosida": {"beta_cap": 1.5}}, calibration_path(scenario), header="test")
    assert read_calibration(scenario) == {"yosida": {"beta_cap": 1.5}}
    assert build(resolve(scenario)).problem.params.kappa == 1.0


def test_shipped_calibrations_present():
    for name, section in (("default", "energy"), ("default", "kappa"), ("obstacle", "yosida"),
                          ("ctsdep", "ctsdep")):
        assert section in read_calibration(name)
