"""Unit tests for configuration loading."""

from pathlib import Path

import pytest

from reactor.config import (
    API_KEY_ENV,
    BackendConfig,
    ServiceConfig,
    SessionConfig,
    config_from_dict,
    load_config,
    override,
)
from reactor.errors import ConfigError


def test_defaults_without_file():
    """Should use every default when no file is given."""
    assert load_config(None) == ServiceConfig()


def test_load_nested_sections(tmp_path: Path):
    """Should map YAML sections onto their dataclasses."""
    path = tmp_path / "reactor.yaml"
    path.write_text(
        "port: 9000\n"
        "cost_ceiling: null\n"
        "session:\n  max_turns: 4\n  prompt_rate: 1\n  stream: true\n"
        "dispatcher:\n  worker_limit: 2\n"
        "backend:\n  kind: http\n  model: local\n",
        encoding="utf-8",
    )

    config = load_config(path)

    assert config.port == 9000
    assert config.cost_ceiling is None
    assert config.session == SessionConfig(max_turns=4, prompt_rate=1.0, stream=True)
    assert config.dispatcher.worker_limit == 2
    assert (config.backend.kind, config.backend.model) == ("http", "local")


def test_empty_file_is_default(tmp_path: Path):
    """Should treat an empty document as all defaults."""
    path = tmp_path / "reactor.yaml"
    path.write_text("", encoding="utf-8")

    assert load_config(path) == ServiceConfig()


@pytest.mark.parametrize(
    ("document", "message"),
    [
        ({"colour": "red"}, "unknown config key 'colour'"),
        ({"session": {"colour": 1}}, "unknown config key 'session.colour'"),
        ({"port": "80"}, "config key 'port' expects int"),
        ({"max_sessions": True}, "config key 'max_sessions' expects int"),
        ({"session": {"stream": "yes"}}, "config key 'session.stream' expects bool"),
        ({"session": 3}, "session must be a mapping"),
        ({"session": {"max_turns": 0}}, "max_turns must be at least 1"),
        ({"dispatcher": {"default_timeout_seconds": 0}}, "must be positive"),
        ({"backend": {"kind": "grpc"}}, "backend.kind must be"),
        ({"max_sessions": 0}, "max_sessions must be at least 1"),
    ],
)
def test_invalid_documents(document, message):
    """Should name the offending key or rule."""
    with pytest.raises(ConfigError, match=message.replace(".", r"\.")):
        config_from_dict(document)


def test_unreadable_files(tmp_path: Path):
    """Should report missing files and invalid YAML as config errors."""
    broken = tmp_path / "broken.yaml"
    broken.write_text("session: [unclosed\n", encoding="utf-8")

    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_config(broken)


def test_override_skips_none():
    """Should apply validated command-line overrides and ignore unset ones."""
    config = override(SessionConfig(), max_turns=3, stream=None)

    assert config.max_turns == 3
    assert not config.stream
    with pytest.raises(ConfigError):
        override(config, colour="red")
    with pytest.raises(ConfigError):
        override(config, max_turns="many")


def test_api_key_comes_from_environment(monkeypatch):
    """Should read the backend key from the environment only."""
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    assert BackendConfig().api_key is None

    monkeypatch.setenv(API_KEY_ENV, "k")
    assert BackendConfig().api_key == "k"
    with pytest.raises(ConfigError):
        config_from_dict({"backend": {"api_key": "k"}})
