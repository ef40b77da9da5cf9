"""Dispatch requests, results and handles exchanged between the planner and the dispatcher."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from reactor.dispatcher.privacy import ContextExcerpt
from reactor.planner.actions import Action


class Outcome(str, Enum):
    """How a dispatched call ended."""

    OK = "ok"
    TIMEOUT = "timeout"
    TOOL_ERROR = "tool_error"
    UNAVAILABLE = "unavailable"
    CAPACITY_EXHAUSTED = "capacity_exhausted"
    PRIVACY_VIOLATION = "privacy_violation"


# Outcomes that count towards a tool's consecutive failures.
FAILURE_OUTCOMES = frozenset({Outcome.TIMEOUT, Outcome.TOOL_ERROR, Outcome.UNAVAILABLE})


@dataclass(frozen=True)
class DispatchRequest:
    """One validated call, ready to be dispatched."""

    action: Action
    payload: str
    deadline: float
    session_id: str
    group: str
    args: dict[str, Any] = field(default_factory=dict)
    context: ContextExcerpt | None = None
    inject_failure: bool = False

    @property
    def tool(self) -> str:
        """Name of the called tool."""
        return self.action.tool

    def wire_document(self) -> dict[str, Any]:
        """The `{tool, args, context}` document sent to the tool."""
        document: dict[str, Any] = {"tool": self.tool, "args": self.args}
        if self.context is not None:
            document["context"] = self.context.to_dict()
        return document


@dataclass(frozen=True)
class DispatchResult:
    """Exactly one result per request."""

    group: str
    tool: str
    outcome: Outcome
    text: str = ""
    elapsed: float = 0.0
    tokens: int = 0

    @property
    def ok(self) -> bool:
        """Whether the call produced a result."""
        return self.outcome is Outcome.OK

    @property
    def is_failure(self) -> bool:
        """Whether the outcome counts towards quarantine."""
        return self.outcome in FAILURE_OUTCOMES

    def to_dict(self) -> dict[str, Any]:
        """Report form."""
        return {
            "group": self.group,
            "tool": self.tool,
            "outcome": self.outcome.value,
            "text": self.text,
            "elapsed": round(self.elapsed, 3),
            "tokens": self.tokens,
        }


class DispatchHandle:
    """A pending dispatch: poll it with `done()` or block with `wait()`."""

    def __init__(self, request: DispatchRequest):
        """Initialize the handle of `request`."""
        self.request = request
        self._lock = threading.Lock()
        self._done = threading.Event()
        self._result: DispatchResult | None = None

    def done(self) -> bool:
        """Whether the result is available."""
        return self._done.is_set()

    def resolved(self) -> bool:
        """Whether a result has been stored, possibly not yet published."""
        with self._lock:
            return self._result is not None

    def wait(self, timeout: float | None = None) -> DispatchResult | None:
        """Block until the result is available; None if `timeout` expires first."""
        if not self._done.wait(timeout):
            return None
        return self._result

    @property
    def result(self) -> DispatchResult | None:
        """The result, if available."""
        return self._result if self.done() else None

    def resolve(self, result: DispatchResult) -> bool:
        """
        Store the result unless one is already stored.

        :return: False when the handle had already been resolved.
        """
        with self._lock:
            if self._result is not None:
                return False
            self._result = result
        return True

    def publish(self) -> None:
        """Wake up waiters; called once the resolved result has been accounted for."""
        self._done.set()
