"""
Task files for one-shot `reactor run` sessions.

A task file is a YAML document::

    task: Summarize the attached notes.
    attachments:
      - {name: notes.txt, path: notes.txt}
    max_turns: 5
    script: planner.script.yaml
    registry: tools.yaml
    config: {session: {stream: true}}

`script` (a path, or a list of steps inline) selects the scripted backend and
`registry` merges a registry file into the engine. `preset: golden` runs the
built-in report comparison with its fake tools, script and attachment.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from reactor.backends.scripted import ScriptedBackend, load_script, script_from_document
from reactor.config import ServiceConfig, config_from_dict
from reactor.dispatcher.privacy import Attachment, attachment_from_dict
from reactor.errors import ConfigError
from reactor.harness.golden import GOLDEN_TASK, GoldenVariant, build_golden_engine
from reactor.registry.loader import load_registry_file
from reactor.runtime import Engine

_TASK_KEYS = frozenset(
    {"task", "attachments", "max_turns", "script", "registry", "config", "preset"}
)
PRESETS = ("golden",)


@dataclass
class TaskFile:
    """A parsed task file."""

    task: str
    base_dir: Path
    attachments: list[Attachment] = field(default_factory=list)
    max_turns: int | None = None
    script: Any = None
    registry: str | None = None
    config: dict[str, Any] = field(default_factory=dict)
    preset: str | None = None

    @classmethod
    def from_dict(cls, doc: Any, base_dir: Path) -> TaskFile:
        if not isinstance(doc, dict):
            raise ConfigError("a task file must be a mapping")
        unknown = set(doc) - _TASK_KEYS
        if unknown:
            raise ConfigError(f"unknown task file key '{sorted(unknown)[0]}'")
        preset = doc.get("preset")
        if preset is not None and preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}'")
        task = doc.get("task", GOLDEN_TASK if preset == "golden" else None)
        if not isinstance(task, str) or not task.strip():
            raise ConfigError("a task file needs a non-empty 'task'")
        return cls(
            task=task,
            base_dir=base_dir,
            attachments=[
                attachment_from_dict(entry, base_dir) for entry in doc.get("attachments", [])
            ],
            max_turns=doc.get("max_turns"),
            script=doc.get("script"),
            registry=doc.get("registry"),
            config=doc.get("config") or {},
            preset=preset,
        )

    def engine(self, config: ServiceConfig) -> Engine:
        """
        Build the engine this task runs on.

        :param config: Service configuration; the file's `config` section is applied on top.
        """
        if self.config:
            config = _merge(config, self.config)
        if self.preset == "golden":
            engine, _recorder, report = build_golden_engine(
                GoldenVariant.NOMINAL, stream=config.session.stream
            )
            if not self.attachments:
                self.attachments = [report]
            return engine
        backend = None
        if isinstance(self.script, str):
            backend = ScriptedBackend(
                load_script(self.base_dir / self.script), chunk_size=config.backend.chunk_size
            )
        elif self.script is not None:
            backend = ScriptedBackend(
                script_from_document(self.script), chunk_size=config.backend.chunk_size
            )
        engine = Engine(config, backend=backend)
        if self.registry is not None:
            load_registry_file(engine.registry, self.base_dir / self.registry)
        return engine


def load_task_file(path: str | Path) -> TaskFile:
    """Read a task file; relative paths inside it resolve against its directory."""
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read task file {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"task file {path} is not valid YAML: {err}") from err
    return TaskFile.from_dict(document, path.parent)


def _merge(config: ServiceConfig, changes: dict[str, Any]) -> ServiceConfig:
    # Sections merge key by key, so a task can change a single session limit.
    document = dataclasses.asdict(config)
    for key, value in changes.items():
        if isinstance(value, dict) and isinstance(document.get(key), dict):
            document[key] = {**document[key], **value}
        else:
            document[key] = value
    return config_from_dict(document)
