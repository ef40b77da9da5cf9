"""
Planner backend abstraction.

A backend turns one assembled prompt into completion text. It can answer in
one piece (`complete`) or as a stream of text chunks (`stream`) that the
planner parses while it arrives. Token counts are always reported: from the
backend when it knows them, else estimated at four characters per token.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass
from typing import Protocol

from reactor.common import estimate_tokens

# Stop after one Action line: the next line would be an invented Observation or a new Thought.
DEFAULT_STOP_SEQUENCES = ("\nObservation:", "\nThought:")
DEFAULT_MAX_COMPLETION_TOKENS = 512


@dataclass(frozen=True)
class BackendRequest:
    """One completion request."""

    prompt: str
    stop_sequences: tuple[str, ...] = DEFAULT_STOP_SEQUENCES
    max_completion_tokens: int = DEFAULT_MAX_COMPLETION_TOKENS
    stream: bool = False

    def __post_init__(self):
        if not self.stop_sequences:
            raise ValueError("a completion request needs at least one stop sequence")
        if self.max_completion_tokens < 1:
            raise ValueError("max_completion_tokens must be positive")


@dataclass(frozen=True)
class Completion:
    """Completion text with its token usage."""

    text: str
    prompt_tokens: int
    completion_tokens: int

    @classmethod
    def estimated(cls, prompt: str, text: str) -> Completion:
        """Build a completion whose usage is estimated from the texts."""
        return cls(text, estimate_tokens(prompt), estimate_tokens(text))


class CompletionStream:
    """
    Iterable of completion chunks.

    `prompt_tokens` and `completion_tokens` are meaningful once the stream is exhausted.
    """

    def __init__(
        self,
        prompt: str,
        chunks: Iterable[str],
        usage: Callable[[], tuple[int | None, int | None]] | None = None,
    ):
        """
        Initialize the stream.

        :param prompt: Prompt the stream answers, for usage estimation.
        :param chunks: Text chunks; iteration may raise `BackendError`.
        :param usage: Returns reported (prompt, completion) tokens after exhaustion.
        """
        self._prompt = prompt
        self._chunks = chunks
        self._usage = usage
        self._parts: list[str] = []
        self._exhausted = False

    def __iter__(self) -> Iterator[str]:
        for chunk in self._chunks:
            self._parts.append(chunk)
            yield chunk
        self._exhausted = True

    @property
    def text(self) -> str:
        """Text received so far."""
        return "".join(self._parts)

    @property
    def exhausted(self) -> bool:
        """Whether every chunk has been read."""
        return self._exhausted

    def completion(self) -> Completion:
        """Completion built from the received text and the reported or estimated usage."""
        prompt_tokens, completion_tokens = self._usage() if self._usage else (None, None)
        return Completion(
            self.text,
            estimate_tokens(self._prompt) if prompt_tokens is None else prompt_tokens,
            estimate_tokens(self.text) if completion_tokens is None else completion_tokens,
        )


class PlannerBackend(Protocol):
    """Anything that can complete planner prompts."""

    def complete(self, request: BackendRequest) -> Completion:
        """Return the whole completion; raises `BackendError` on failure."""

    def stream(self, request: BackendRequest) -> CompletionStream:
        """Return the completion as a stream of chunks."""


class RecordingBackend:
    """Wraps a backend and records every prompt with the text it produced."""

    def __init__(self, inner: PlannerBackend):
        """Initialize the wrapper around `inner`."""
        self.inner = inner
        self._lock = threading.Lock()
        self.exchanges: list[tuple[str, str]] = []

    @property
    def prompts(self) -> list[str]:
        """Recorded prompts in call order."""
        with self._lock:
            return [prompt for prompt, _ in self.exchanges]

    @property
    def responses(self) -> list[str]:
        """Recorded completion texts in call order."""
        with self._lock:
            return [text for _, text in self.exchanges]

    def complete(self, request: BackendRequest) -> Completion:
        """Delegate and record."""
        completion = self.inner.complete(request)
        with self._lock:
            self.exchanges.append((request.prompt, completion.text))
        return completion

    def stream(self, request: BackendRequest) -> CompletionStream:
        """Delegate and record once the stream is exhausted."""
        inner = self.inner.stream(request)

        def chunks() -> Iterator[str]:
            yield from inner
            with self._lock:
                self.exchanges.append((request.prompt, inner.text))

        return CompletionStream(
            request.prompt,
            chunks(),
            usage=lambda: (inner.completion().prompt_tokens, inner.completion().completion_tokens),
        )
