"""Tests for the configuration manager."""

import json

import pytest

import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../..')))

from src.config.config import DEFAULT_CONFIG, ConfigManager


@pytest.fixture
def clean_env(monkeypatch):
    """Remove SCHMIDTWIT_* variables from the environment."""
    for name in list(os.environ):
        if name.startswith("SCHMIDTWIT_"):
            monkeypatch.delenv(name)
    return monkeypatch


def test_defaults(clean_env):
    manager = ConfigManager(use_env=False)
    assert manager.get("optimizer.seed") == 42
    assert manager.get("optimizer.starts") == 32
    assert manager.get("run.k") == 1
    assert manager.get("missing.path", "fallback") == "fallback"


def test_defaults_are_not_shared():
    manager = ConfigManager(use_env=False)
    manager.set("optimizer.seed", 1)
    assert DEFAULT_CONFIG["optimizer"]["seed"] == 42
    assert ConfigManager(use_env=False).get("optimizer.seed") == 42


def test_file_is_merged(tmp_path, clean_env):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"optimizer": {"starts": 4}}))
    manager = ConfigManager(str(path), use_env=False)
    assert manager.get("optimizer.starts") == 4
    assert manager.get("optimizer.seed") == 42


def test_missing_or_broken_file(tmp_path):
    manager = ConfigManager(use_env=False)
    assert not manager.load_config(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert not manager.load_config(str(broken))


def test_environment_overrides(clean_env):
    clean_env.setenv("SCHMIDTWIT_SEED", "7")
    clean_env.setenv("SCHMIDTWIT_STARTS", "not-a-number")
    clean_env.setenv("SCHMIDTWIT_LOG_LEVEL", "DEBUG")
    manager = ConfigManager()
    assert manager.get("optimizer.seed") == 7
    assert manager.get("optimizer.starts") == 32
    assert manager.get("logging.level") == "DEBUG"


def test_save_roundtrip(tmp_path):
    manager = ConfigManager(use_env=False)
    manager.set("experiment.trials", 10)
    path = tmp_path / "nested" / "config.json"
    assert manager.save(str(path))
    assert ConfigManager(str(path), use_env=False).get_all() == manager.get_all()
