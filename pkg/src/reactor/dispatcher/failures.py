"""
FailureTracker module: consecutive-failure counting and quarantine.

The tracker is a small automaton per tool: each failure increments a counter,
a success resets it, and reaching the threshold quarantines the tool for the
cooldown and resets the counter. Quarantine itself lives in the registry, so
a quarantined tool disappears from prompts and is refused at dispatch.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from reactor.common import DEFAULT_COOLDOWN_SECONDS, DEFAULT_FAILURE_THRESHOLD
from reactor.dispatcher.requests import FAILURE_OUTCOMES, Outcome
from reactor.observability.notifier import NullNotifier, SessionNotifier
from reactor.registry.registry import ToolRegistry


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuarantineNotice:
    """Emitted when a tool crosses the failure threshold."""

    tool: str
    failures: int
    until: float


class FailureTracker:
    """Per-tool consecutive failure counters driving quarantine."""

    def __init__(
        self,
        registry: ToolRegistry,
        threshold: int = DEFAULT_FAILURE_THRESHOLD,
        cooldown_seconds: float = DEFAULT_COOLDOWN_SECONDS,
        notifier: SessionNotifier | None = None,
    ):
        """
        Initialize the tracker.

        :param registry: Registry whose clock and quarantine are used.
        :param threshold: Consecutive failures that trigger a quarantine.
        :param cooldown_seconds: Length of a quarantine.
        :param notifier: Receives quarantine events.
        """
        if threshold < 1:
            raise ValueError("failure threshold must be at least 1")
        self.registry = registry
        self.threshold = threshold
        self.cooldown_seconds = cooldown_seconds
        self.notifier = notifier or NullNotifier()
        self._lock = threading.Lock()
        self._failures: dict[str, int] = {}
        self._quarantine_until: dict[str, float] = {}

    def consecutive_failures(self, tool: str) -> int:
        """Current consecutive failure count."""
        with self._lock:
            return self._failures.get(tool, 0)

    def quarantine_until(self, tool: str) -> float | None:
        """End of the tool's current quarantine, if it is quarantined."""
        with self._lock:
            until = self._quarantine_until.get(tool)
        if until is not None and self.registry.clock() >= until:
            return None
        return until

    def record_outcome(
        self,
        tool: str,
        outcome: Outcome,
        session_id: str | None = None,
    ) -> QuarantineNotice | None:
        """
        Feed one outcome into the automaton.

        :param tool: Tool name.
        :param outcome: Outcome of an invocation.
        :param session_id: Session that receives the quarantine event, if any.
        :return: A notice when this outcome quarantined the tool.
        """
        with self._lock:
            if outcome is Outcome.OK:
                self._failures[tool] = 0
                return None
            if outcome not in FAILURE_OUTCOMES:
                return None
            failures = self._failures.get(tool, 0) + 1
            if failures < self.threshold:
                self._failures[tool] = failures
                return None
            self._failures[tool] = 0
            until = self.registry.clock() + self.cooldown_seconds
            self._quarantine_until[tool] = until

        logger.info("Tool %s quarantined after %d consecutive failures", tool, failures)
        self.registry.quarantine(tool, until)
        if session_id is not None:
            self.notifier.send_quarantine(session_id, tool, failures, until)
        return QuarantineNotice(tool=tool, failures=failures, until=until)
