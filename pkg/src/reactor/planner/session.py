"""Session state of one planner run."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from reactor.common import DEFAULT_MAX_TURNS
from reactor.dispatcher.privacy import Attachment
from reactor.dispatcher.requests import DispatchHandle
from reactor.planner.cost import CostLedger
from reactor.planner.scratchpad import EntryKind, Scratchpad


class SessionStatus(str, Enum):
    RUNNING = "running"
    AWAITING_RESULTS = "awaiting_results"
    FINALIZING = "finalizing"
    DONE = "done"
    FAILED = "failed"


_TRANSITIONS = {
    SessionStatus.RUNNING: {SessionStatus.AWAITING_RESULTS, SessionStatus.FINALIZING},
    SessionStatus.AWAITING_RESULTS: {SessionStatus.RUNNING},
    SessionStatus.FINALIZING: {SessionStatus.DONE},
    SessionStatus.DONE: set(),
    SessionStatus.FAILED: set(),
}

TERMINAL_STATUSES = frozenset({SessionStatus.DONE, SessionStatus.FAILED})


def new_session_id() -> str:
    return uuid.uuid4().hex[:12]


@dataclass
class SessionState:
    """
    Everything the planner knows about one session.

    `pending` holds the handles of dispatched calls whose results have not
    been appended yet; background calls stay in it across turns.
    """

    task: str
    session_id: str = field(default_factory=new_session_id)
    attachments: list[Attachment] = field(default_factory=list)
    scratchpad: Scratchpad = field(default_factory=Scratchpad)
    turn: int = 0
    max_turns: int = DEFAULT_MAX_TURNS
    status: SessionStatus = SessionStatus.RUNNING
    cost: CostLedger = field(default_factory=CostLedger)
    pending: list[DispatchHandle] = field(default_factory=list)
    final_answer: str | None = None
    failure: str | None = None
    forced_finalize: bool = False

    def __post_init__(self):
        self._lock = threading.Lock()

    @property
    def is_terminal(self) -> bool:
        """Whether the session is done or failed."""
        return self.status in TERMINAL_STATUSES

    @property
    def backend_calls(self) -> int:
        """Planner backend calls made so far."""
        return self.cost.backend_calls

    def transition(self, status: SessionStatus) -> None:
        """
        Move to `status`.

        :raises ValueError: if the move is not allowed; any live status may fail.
        """
        with self._lock:
            if status is SessionStatus.FAILED and self.status not in TERMINAL_STATUSES:
                self.status = status
                return
            if status not in _TRANSITIONS[self.status]:
                raise ValueError(f"session cannot go from {self.status.value} to {status.value}")
            self.status = status

    def fail(self, reason: str) -> None:
        """Mark the session failed with a reason."""
        self.failure = reason
        self.transition(SessionStatus.FAILED)

    def advance_turn(self) -> int:
        """Count one planner turn."""
        if self.turn >= self.max_turns:
            raise ValueError(f"session already used its {self.max_turns} turns")
        self.turn += 1
        return self.turn

    def last_error(self) -> str | None:
        """Content of the newest Error entry."""
        entry = self.scratchpad.last(EntryKind.ERROR)
        return entry.content if entry else None

    def to_dict(self) -> dict[str, Any]:
        """Status document served by the API and printed by the CLI."""
        doc: dict[str, Any] = {
            "session_id": self.session_id,
            "status": self.status.value,
            "turn": self.turn,
            "max_turns": self.max_turns,
            "cost": self.cost.to_dict(),
        }
        if self.status is SessionStatus.DONE:
            doc["answer"] = self.final_answer
        if self.status is SessionStatus.FAILED:
            doc["error"] = self.failure
            doc["last_error"] = self.last_error()
        return doc
