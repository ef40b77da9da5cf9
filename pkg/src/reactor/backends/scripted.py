"""
Deterministic planner backend that replays a script.

Each call consumes the next step. A step may name a substring the prompt must
contain; a prompt without it raises `ScriptDivergenceError` instead of
silently continuing, which is what makes scripted sessions usable as
regression gates.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from reactor.backends.base import BackendRequest, Completion, CompletionStream
from reactor.common import estimate_tokens
from reactor.errors import ConfigError, ScriptDivergenceError, ScriptExhaustedError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScriptStep:
    """One scripted completion."""

    response: str
    expect: str | None = None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None

    @classmethod
    def from_dict(cls, doc: Any) -> ScriptStep:
        """Build a step from a script document entry; a bare string is a response."""
        if isinstance(doc, str):
            return cls(response=doc)
        if not isinstance(doc, dict) or not isinstance(doc.get("response"), str):
            raise ConfigError(f"script step needs a 'response' string: {doc!r}")
        unknown = set(doc) - {"response", "expect", "prompt_tokens", "completion_tokens"}
        if unknown:
            raise ConfigError(f"unknown script step keys: {', '.join(sorted(unknown))}")
        return cls(
            response=doc["response"],
            expect=doc.get("expect"),
            prompt_tokens=doc.get("prompt_tokens"),
            completion_tokens=doc.get("completion_tokens"),
        )

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"response": self.response}
        if self.expect is not None:
            doc["expect"] = self.expect
        if self.prompt_tokens is not None:
            doc["prompt_tokens"] = self.prompt_tokens
        if self.completion_tokens is not None:
            doc["completion_tokens"] = self.completion_tokens
        return doc


class ScriptedBackend:
    """Returns scripted responses verbatim, one step per call."""

    def __init__(self, steps: Iterable[ScriptStep | str], chunk_size: int | None = None):
        """
        Initialize the backend.

        :param steps: Steps in call order; strings are responses without expectation.
        :param chunk_size: Characters per chunk when streaming; whole response when None.
        """
        self.steps = [step if isinstance(step, ScriptStep) else ScriptStep(step) for step in steps]
        self.chunk_size = chunk_size
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def cursor(self) -> int:
        """Index of the next step."""
        with self._lock:
            return self._cursor

    @property
    def exhausted(self) -> bool:
        """Whether every step has been consumed."""
        with self._lock:
            return self._cursor >= len(self.steps)

    def complete(self, request: BackendRequest) -> Completion:
        """Consume the next step."""
        step = self._next_step(request.prompt)
        return _completion(request.prompt, step)

    def stream(self, request: BackendRequest) -> CompletionStream:
        """Consume the next step and stream its response in chunks."""
        step = self._next_step(request.prompt)
        completion = _completion(request.prompt, step)
        return CompletionStream(
            request.prompt,
            _chunks(step.response, self.chunk_size),
            usage=lambda: (completion.prompt_tokens, completion.completion_tokens),
        )

    def _next_step(self, prompt: str) -> ScriptStep:
        with self._lock:
            if self._cursor >= len(self.steps):
                raise ScriptExhaustedError(f"script of {len(self.steps)} steps is exhausted")
            step = self.steps[self._cursor]
            if step.expect is not None and step.expect not in prompt:
                raise ScriptDivergenceError(step.expect, prompt)
            self._cursor += 1
            index = self._cursor
        logger.debug("Script step %d of %d", index, len(self.steps))
        return step


def load_script(path: str | Path) -> list[ScriptStep]:
    """
    Read a script file: a YAML list of steps, or a mapping with a `steps` list.

    :raises ConfigError: if the document is not a list of steps.
    """
    try:
        document = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot load script {path}: {err}") from err
    return script_from_document(document)


def script_from_document(document: Any) -> list[ScriptStep]:
    """Build steps from a parsed script document."""
    if isinstance(document, dict):
        document = document.get("steps")
    if not isinstance(document, list):
        raise ConfigError("a script is a list of steps")
    return [ScriptStep.from_dict(entry) for entry in document]


def _completion(prompt: str, step: ScriptStep) -> Completion:
    return Completion(
        step.response,
        estimate_tokens(prompt) if step.prompt_tokens is None else step.prompt_tokens,
        (
            estimate_tokens(step.response)
            if step.completion_tokens is None
            else step.completion_tokens
        ),
    )


def _chunks(text: str, size: int | None) -> Iterator[str]:
    if not size:
        yield text
        return
    for start in range(0, len(text), size):
        yield text[start : start + size]
