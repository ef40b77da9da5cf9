"""
Configuration of the engine and the service.

One YAML document maps onto frozen dataclasses. Every section is optional and
every key has a default; unknown keys and wrongly typed values raise
`ConfigError` naming the dotted key. Credentials are never read from the
document: the HTTP backend takes its key from `REACTOR_API_KEY`.
"""

from __future__ import annotations

import dataclasses
import os
import types
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union, get_args, get_origin, get_type_hints

import yaml

from reactor.common import (
    DEFAULT_COOLDOWN_SECONDS,
    DEFAULT_FAILURE_THRESHOLD,
    DEFAULT_MAX_SESSIONS,
    DEFAULT_MAX_TURNS,
    DEFAULT_RETAINED_SESSIONS,
    DEFAULT_TOOL_TIMEOUT_SECONDS,
    DEFAULT_VERBATIM_TURNS,
    DEFAULT_WORKER_LIMIT,
)
from reactor.errors import ConfigError

API_KEY_ENV = "REACTOR_API_KEY"

FORCED_FINALIZE_PROMPT = (
    "You have reached the turn limit. Do not call any more tools. "
    "Produce your best final answer now.\nFinal Answer:"
)


@dataclass(frozen=True)
class SessionConfig:
    """Limits, pricing and prompt settings of one planner session."""

    max_turns: int = DEFAULT_MAX_TURNS
    context_budget_tokens: int = 8000
    verbatim_turns: int = DEFAULT_VERBATIM_TURNS
    prompt_rate: float = 0.005
    completion_rate: float = 0.015
    forced_finalize_prompt: str = FORCED_FINALIZE_PROMPT
    background_wait_seconds: float = 0.5
    max_completion_tokens: int = 512
    stream: bool = False
    cost_hints: bool = True

    def __post_init__(self):
        if self.max_turns < 1:
            raise ConfigError("session.max_turns must be at least 1")
        if self.context_budget_tokens < 1:
            raise ConfigError("session.context_budget_tokens must be positive")
        if self.verbatim_turns < 0:
            raise ConfigError("session.verbatim_turns must not be negative")
        if self.prompt_rate < 0 or self.completion_rate < 0:
            raise ConfigError("session rates must not be negative")


@dataclass(frozen=True)
class DispatcherConfig:
    """Thread pool, deadline and quarantine settings."""

    worker_limit: int = DEFAULT_WORKER_LIMIT
    default_timeout_seconds: float = DEFAULT_TOOL_TIMEOUT_SECONDS
    failure_threshold: int = DEFAULT_FAILURE_THRESHOLD
    cooldown_seconds: float = DEFAULT_COOLDOWN_SECONDS
    sequential: bool = False

    def __post_init__(self):
        if self.worker_limit < 1:
            raise ConfigError("dispatcher.worker_limit must be at least 1")
        if self.failure_threshold < 1:
            raise ConfigError("dispatcher.failure_threshold must be at least 1")
        if self.default_timeout_seconds <= 0:
            raise ConfigError("dispatcher.default_timeout_seconds must be positive")


@dataclass(frozen=True)
class BackendConfig:
    """Which planner backend to use and how to reach it."""

    kind: str = "scripted"
    script: str | None = None
    endpoint: str = "http://localhost:8000/v1"
    model: str = "gpt-4o"
    temperature: float = 0.0
    timeout_seconds: float = 120.0
    max_retries: int = 2
    chunk_size: int | None = None

    def __post_init__(self):
        if self.kind not in {"scripted", "http"}:
            raise ConfigError(f"backend.kind must be 'scripted' or 'http', not {self.kind!r}")
        if self.max_retries < 0:
            raise ConfigError("backend.max_retries must not be negative")

    @property
    def api_key(self) -> str | None:
        """API key from the environment."""
        return os.environ.get(API_KEY_ENV)


@dataclass(frozen=True)
class ServiceConfig:
    """Top-level configuration document."""

    host: str = "127.0.0.1"
    port: int = 8080
    trace_dir: str | None = None
    max_sessions: int = DEFAULT_MAX_SESSIONS
    retained_sessions: int = DEFAULT_RETAINED_SESSIONS
    registry_file: str | None = None
    cost_ceiling: float | None = None
    log_level: str = "INFO"
    backend: BackendConfig = field(default_factory=BackendConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    dispatcher: DispatcherConfig = field(default_factory=DispatcherConfig)

    def __post_init__(self):
        if self.max_sessions < 1:
            raise ConfigError("max_sessions must be at least 1")
        if self.retained_sessions < 1:
            raise ConfigError("retained_sessions must be at least 1")


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """
    Load the service configuration.

    :param path: YAML document; defaults apply when None.
    :raises ConfigError: if the file cannot be read or holds invalid keys.
    """
    if path is None:
        return ServiceConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"config {path} is not valid YAML: {err}") from err
    return config_from_dict(document or {})


def config_from_dict(document: dict[str, Any]) -> ServiceConfig:
    """Build a `ServiceConfig` from an already parsed document."""
    return build_section(ServiceConfig, document, "")


def build_section(cls: type, document: Any, prefix: str) -> Any:
    """
    Build one config dataclass from a mapping, checking keys and types.

    :param cls: Dataclass to build.
    :param document: Mapping of its fields.
    :param prefix: Dotted path of the section, for error messages.
    """
    if not isinstance(document, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'} must be a mapping")
    hints = get_type_hints(cls)
    fields = {f.name for f in dataclasses.fields(cls)}
    values = {}
    for key, value in document.items():
        if key not in fields:
            raise ConfigError(f"unknown config key '{prefix}{key}'")
        values[key] = _convert(hints[key], value, f"{prefix}{key}")
    try:
        return cls(**values)
    except TypeError as err:
        raise ConfigError(f"invalid section '{prefix.rstrip('.')}': {err}") from err


def override(config: Any, **changes: Any) -> Any:
    """Copy a config dataclass with validated changes; None values are ignored."""
    hints = get_type_hints(type(config))
    values = {}
    for key, value in changes.items():
        if value is None:
            continue
        if key not in hints:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = _convert(hints[key], value, key)
    return dataclasses.replace(config, **values)


def _convert(hint: Any, value: Any, key: str) -> Any:  # noqa: C901
    origin = get_origin(hint)
    if origin in (Union, types.UnionType):
        options = get_args(hint)
        if value is None and type(None) in options:
            return None
        (hint,) = [option for option in options if option is not type(None)]
    if dataclasses.is_dataclass(hint):
        return build_section(hint, value, f"{key}.")
    if hint is bool:
        if isinstance(value, bool):
            return value
    elif hint is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif hint is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif hint is str:
        if isinstance(value, str):
            return value
    expected = getattr(hint, "__name__", hint)
    raise ConfigError(f"config key '{key}' expects {expected}, got {value!r}")
