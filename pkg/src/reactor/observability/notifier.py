"""
SessionNotifier module: typed helpers that turn engine steps into bus events.

The planner, the dispatcher and the registry never talk to the `EventBus`
directly; they hold a notifier, which is a `NullNotifier` until a bus is
attached. That keeps every component usable (and testable) on its own.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from typing import TYPE_CHECKING, Any

from reactor.observability.events import ENTRY_EVENT_TYPES, Event, EventType

if TYPE_CHECKING:
    from reactor.observability.event_bus import EventBus
    from reactor.planner.scratchpad import ScratchpadEntry


logger = logging.getLogger(__name__)


class SessionNotifier:
    """Class for publishing engine events to the event bus."""

    def __init__(self, bus: EventBus | None):
        """
        Initialize the SessionNotifier.

        :param bus: The `EventBus` the events are emitted on.
        """
        self.bus = bus
        self.notifier_is_active = True

    def send_event(self, session_id: str, event_type: EventType, content: Any) -> Event | None:
        """
        Emit one event on a session's stream.

        :param session_id: Target session.
        :param event_type: Kind of the event.
        :param content: Text or JSON-compatible payload.
        :return: The emitted event, or None while the notifier is suspended.
        """
        if self.bus is None or not self.notifier_is_active:
            logger.debug("Notifier inactive, %s event of %s not sent", event_type.value, session_id)
            return None
        return self.bus.emit(session_id, event_type, content)

    def send_entry_event(self, session_id: str, entry: ScratchpadEntry) -> Event | None:
        """
        Mirror a scratchpad append as an event.

        :param session_id: Session owning the scratchpad.
        :param entry: The appended entry; its dict form is the event content.
        """
        return self.send_event(session_id, ENTRY_EVENT_TYPES[entry.kind.value], entry.to_dict())

    def send_registry_changed(self, change: str, tool: str) -> None:
        """
        Broadcast a registry change to every open session.

        :param change: "registered" or "removed".
        :param tool: Name of the affected tool.
        """
        if self.bus is None or not self.notifier_is_active:
            return
        self.bus.broadcast(EventType.REGISTRY_CHANGED, {"change": change, "tool": tool})

    def send_quarantine(self, session_id: str, tool: str, failures: int, until: float) -> None:
        """
        Report that a tool was quarantined after a dispatch of this session.

        :param failures: Consecutive failures that triggered the quarantine.
        :param until: Clock value at which the quarantine is lifted.
        """
        self.send_event(
            session_id,
            EventType.QUARANTINE,
            {"tool": tool, "consecutive_failures": failures, "until": until},
        )

    def send_dropped_result(self, session_id: str, tool: str, group: str, elapsed: float) -> None:
        """Report a result that arrived after its call had already timed out."""
        self.send_event(
            session_id,
            EventType.DROPPED_RESULT,
            {"tool": tool, "group": group, "elapsed": round(elapsed, 3)},
        )

    def stop_notifier(self) -> None:
        """Deactivate the notifier."""
        self.notifier_is_active = False

    def start_notifier(self) -> None:
        """Activate the notifier."""
        self.notifier_is_active = True

    @contextmanager
    def suspend(self):
        """Context manager that temporarily disables event notifications."""
        self.stop_notifier()
        try:
            yield
        finally:
            self.start_notifier()


class NullNotifier(SessionNotifier):
    """
    A no-operation notifier that implements the same interface as SessionNotifier.

    Used by components that run without an event bus attached.
    """

    def __init__(self, *_):
        """Initialize the NullNotifier; arguments are accepted and ignored."""
        super().__init__(bus=None)

    def send_event(self, *args, **kwargs) -> None:
        """No-op implementation of send_event."""

    def send_entry_event(self, *args, **kwargs) -> None:
        """No-op implementation of send_entry_event."""

    def send_registry_changed(self, *args, **kwargs) -> None:
        """No-op implementation of send_registry_changed."""

    def send_quarantine(self, *args, **kwargs) -> None:
        """No-op implementation of send_quarantine."""

    def send_dropped_result(self, *args, **kwargs) -> None:
        """No-op implementation of send_dropped_result."""

    def stop_notifier(self) -> None:
        """No-op implementation of stop_notifier."""

    def start_notifier(self) -> None:
        """No-op implementation of start_notifier."""

    @contextmanager
    def suspend(self):
        """No-op context manager."""
        yield
