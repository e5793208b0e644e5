#!/usr/bin/env python3
"""
Tests for the configuration layer
"""

import json
import math
import os
import sys

import pytest

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from config import Config, parse_config_text, resolve_config_path
from errors import ConfigError


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults_without_a_file():
    config = Config()
    assert config.get("solver.name") == "qwf"
    assert config.get("sweep.snr_db") == (math.inf,)
    assert config.get("solver.init_truncation") is None
    assert config.get("solver.restarts") is None
    assert config.get("solver.truncation_residual") == math.inf
    assert config.get("run.timing") is False
    assert config.file_keys == set()


def test_file_values_merge_over_defaults(tmp_path):
    path = write_cfg(tmp_path, """
# comment line
model.n = 9
sweep.m_over_n = 2, 4.5, 6   # trailing comment
sweep.snr_db = inf, 20
solver.backtracking = no
solver.init_truncation = 3
""")
    config = Config(path)
    assert config.get("model.n") == 9
    assert config.get("sweep.m_over_n") == (2.0, 4.5, 6.0)
    assert config.get("sweep.snr_db") == (math.inf, 20.0)
    assert config.get("solver.backtracking") is False
    assert config.get("solver.init_truncation") == 3.0
    assert config.get("solver.step_size") == 0.1
    assert config.file_keys == {"model.n", "sweep.m_over_n", "sweep.snr_db", "solver.backtracking",
                                "solver.init_truncation"}


@pytest.mark.parametrize("text", [
    "model.depth = 3",
    "model.n = many",
    "solver.pure_quaternion = maybe",
    "just some words",
    " = 4",
])
def test_bad_files_are_config_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        Config(write_cfg(tmp_path, text))


def test_missing_config_is_an_error():
    with pytest.raises(ConfigError):
        Config("no_such_experiment")


def test_named_configs_resolve_to_the_bundled_directory():
    path = resolve_config_path("qwf_gaussian")
    assert path.name == "qwf_gaussian.cfg"
    assert path.parent.name == "configs"
    config = Config("qwf_gaussian.cfg")
    assert config.get("solver.name") == "qwf"
    assert config.get("sweep.m_over_n")[0] == 2.0


def test_every_bundled_config_loads():
    directory = resolve_config_path("qwf_gaussian").parent
    names = sorted(p.stem for p in directory.glob("*.cfg"))
    assert "recover_rgb" in names
    for name in names:
        assert Config(name).file_keys


def test_parse_config_text_keeps_raw_strings():
    assert parse_config_text("a.b = 1, 2\n\n# x\nc = none") == {"a.b": "1, 2", "c": "none"}


def test_overrides_and_typed_set():
    config = Config()
    config.apply_overrides(["solver.step_size=0.05", "sweep.trials = 7", "solver.init_truncation=none"])
    assert config.get("solver.step_size") == 0.05
    assert config.get("sweep.trials") == 7
    assert config.get("solver.init_truncation") is None

    config.set("run.seed", 12)
    config.set("sweep.m_over_n", 3)
    assert config.get("run.seed") == 12
    assert config.get("sweep.m_over_n") == (3.0,)
    with pytest.raises(ConfigError):
        config.apply_overrides(["solver.step_size"])
    with pytest.raises(ConfigError):
        config.set("run.seed", 1.5)
    with pytest.raises(ConfigError):
        config.set("run.timing", "sometimes")
    with pytest.raises(ConfigError):
        config.set("solver.nesterov", "true")

    config.apply_overrides(["solver.restarts=3", "solver.step_growth=1.5", "solver.truncation_residual=5"])
    assert config.get("solver.restarts") == 3
    assert config.get("solver.step_growth") == 1.5
    assert config.get("solver.truncation_residual") == 5.0
    config.set("solver.restarts", "none")
    assert config.get("solver.restarts") is None
    with pytest.raises(ConfigError):
        config.set("solver.restarts", 1.5)
    with pytest.raises(ConfigError):
        config.set("solver.restarts", "often")


def test_section_strips_the_prefix():
    section = Config().section("recover")
    assert section["patch"] == 32
    assert section["synthetic"] == "rgb"
    assert all("." not in key for key in section)


def test_save_config_writes_json(tmp_path):
    config = Config()
    config.set("run.seed", 5)
    path = tmp_path / "manifest.json"
    config.save_config(path)
    saved = json.loads(path.read_text())
    assert saved["run.seed"] == 5
    assert saved["sweep.snr_db"] == ["inf"]
    assert saved["solver.init_truncation"] is None
    assert list(saved) == sorted(saved)
