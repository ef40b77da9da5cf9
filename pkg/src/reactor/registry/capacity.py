"""
Per-tool capacity ledger.

Leases are granted while a tool's in-flight count is below its max_parallel;
beyond that they queue FIFO up to the tool's queue limit. A release hands the
slot directly to the oldest queued ticket, so the in-flight count never
exceeds max_parallel and queued callers are served in arrival order.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

from reactor.errors import CapacityExhaustedError


logger = logging.getLogger(__name__)


class LeaseGrant(str, Enum):
    """Immediate answer to a lease request."""

    GRANTED = "granted"
    QUEUED = "queued"


@dataclass(eq=False)
class LeaseTicket:
    """A lease request. `granted` is set once the slot is held."""

    tool: str
    grant: LeaseGrant
    on_grant: Callable[[LeaseTicket], None] | None = None
    granted: threading.Event = field(default_factory=threading.Event)

    def wait(self, timeout: float | None = None) -> bool:
        """Block until the lease is granted; returns False on timeout."""
        return self.granted.wait(timeout)


@dataclass
class _ToolSlots:
    in_flight: int = 0
    high_water: int = 0
    queue: deque[LeaseTicket] = field(default_factory=deque)


class CapacityLedger:
    """Linearizable in-flight/queued counters for every tool."""

    def __init__(self):
        """Initialize an empty ledger."""
        self._lock = threading.Lock()
        self._slots: dict[str, _ToolSlots] = {}

    def lease(
        self,
        tool: str,
        max_parallel: int,
        queue_limit: int,
        on_grant: Callable[[LeaseTicket], None] | None = None,
    ) -> LeaseTicket:
        """
        Request one slot of `tool`.

        :param tool: Tool name.
        :param max_parallel: Concurrent calls the tool accepts.
        :param queue_limit: Queued requests allowed beyond max_parallel.
        :param on_grant: Called once the slot is held (immediately for a direct grant,
            from the releasing thread for a queued one).
        :return: The ticket, `GRANTED` or `QUEUED`.
        :raises CapacityExhaustedError: if the queue is full.
        """
        with self._lock:
            slots = self._slots.setdefault(tool, _ToolSlots())
            if slots.in_flight < max_parallel:
                slots.in_flight += 1
                slots.high_water = max(slots.high_water, slots.in_flight)
                ticket = LeaseTicket(tool=tool, grant=LeaseGrant.GRANTED, on_grant=on_grant)
                ticket.granted.set()
            elif len(slots.queue) < queue_limit:
                ticket = LeaseTicket(tool=tool, grant=LeaseGrant.QUEUED, on_grant=on_grant)
                slots.queue.append(ticket)
                logger.debug("Lease on %s queued (%d waiting)", tool, len(slots.queue))
                return ticket
            else:
                raise CapacityExhaustedError(tool, queue_limit)

        if on_grant is not None:
            on_grant(ticket)
        return ticket

    def release(self, tool: str) -> None:
        """Release one slot of `tool`, handing it to the oldest queued ticket if any."""
        with self._lock:
            slots = self._slots.get(tool)
            if slots is None or slots.in_flight == 0:
                logger.warning("Release of %s without a held lease ignored", tool)
                return
            if not slots.queue:
                slots.in_flight -= 1
                return
            ticket = slots.queue.popleft()
            ticket.granted.set()

        if ticket.on_grant is not None:
            ticket.on_grant(ticket)

    def in_flight(self, tool: str) -> int:
        """Currently granted, unreleased leases."""
        with self._lock:
            slots = self._slots.get(tool)
            return slots.in_flight if slots else 0

    def queued(self, tool: str) -> int:
        """Requests waiting for a slot."""
        with self._lock:
            slots = self._slots.get(tool)
            return len(slots.queue) if slots else 0

    def high_water(self, tool: str) -> int:
        """Largest in-flight count observed since the ledger was created."""
        with self._lock:
            slots = self._slots.get(tool)
            return slots.high_water if slots else 0
