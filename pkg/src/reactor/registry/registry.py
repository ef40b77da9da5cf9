"""
ToolRegistry module: the hot-pluggable catalogue of tools.

The registry holds one record per tool name, in registration order. Writers
(register, deregister, quarantine) take an exclusive lock; readers work on an
immutable `RegistrySnapshot`, which is what the planner renders at each turn
boundary and what the dispatcher validates against. Capacity leasing is
delegated to a `CapacityLedger` after the tool's effective status is checked.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable
from dataclasses import dataclass, replace
from decimal import Decimal

from reactor.common import Clock, CommandResult, monotonic_clock
from reactor.errors import (
    CapacityExhaustedError,
    DescriptorValidationError,
    DuplicateToolError,
    ToolNotFoundError,
    ToolUnavailableError,
)
from reactor.observability.notifier import NullNotifier, SessionNotifier
from reactor.registry.capacity import CapacityLedger, LeaseTicket
from reactor.registry.descriptors import ToolDescriptor, ToolStatus


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegistrySnapshot:
    """Immutable view of every registered tool with its effective status."""

    tools: tuple[ToolDescriptor, ...] = ()
    cost_ceiling: Decimal | None = None

    def get(self, name: str) -> ToolDescriptor | None:
        """Return the descriptor for `name`, including removed and quarantined tools."""
        for tool in self.tools:
            if tool.name == name:
                return tool
        return None

    def within_ceiling(self, tool: ToolDescriptor) -> bool:
        """Whether the tool passes the optional cost ceiling."""
        if self.cost_ceiling is None or tool.cost_per_1k_tokens is None:
            return True
        return tool.cost_per_1k_tokens <= self.cost_ceiling

    def available(self) -> tuple[ToolDescriptor, ...]:
        """Tools the planner may be offered, in registration order."""
        return tuple(
            tool
            for tool in self.tools
            if tool.status is ToolStatus.AVAILABLE and self.within_ceiling(tool)
        )

    def is_dispatchable(self, name: str) -> bool:
        """Whether a call to `name` may be dispatched right now."""
        tool = self.get(name)
        return tool is not None and tool in self.available()


class ToolRegistry:
    """Registry of tool descriptors with runtime registration and capacity leasing."""

    def __init__(
        self,
        clock: Clock = monotonic_clock,
        cost_ceiling: Decimal | None = None,
    ):
        """
        Initialize an empty registry.

        :param clock: Monotonic clock used to lift quarantines.
        :param cost_ceiling: Optional hard cost constraint; off when None.
        """
        self._lock = threading.RLock()
        self._clock = clock
        self._records: dict[str, ToolDescriptor] = {}
        self._quarantine_until: dict[str, float] = {}
        self._cost_ceiling = cost_ceiling
        self._notifier: SessionNotifier = NullNotifier()
        self.ledger = CapacityLedger()

    @property
    def notifier(self) -> SessionNotifier:
        """Get the notifier used for `registry_changed` events."""
        return self._notifier

    @notifier.setter
    def notifier(self, value: SessionNotifier) -> None:
        """Set the notifier used for `registry_changed` events."""
        self._notifier = value

    @property
    def clock(self) -> Clock:
        """The clock quarantines are measured against."""
        return self._clock

    @property
    def cost_ceiling(self) -> Decimal | None:
        """The hard cost constraint, if enabled."""
        return self._cost_ceiling

    def register_tool(self, descriptor: ToolDescriptor) -> CommandResult:
        """
        Register a tool; it becomes eligible from the next planner turn.

        A removed tool's name is free again and may be registered as a fresh descriptor.

        :param descriptor: A validated descriptor.
        :return: CommandResult(success, message).
        """
        try:
            self.add(descriptor)
        except DuplicateToolError as err:
            return CommandResult(success=False, message=str(err))
        return CommandResult(success=True, message=f"Registered tool '{descriptor.name}'")

    def add(self, descriptor: ToolDescriptor) -> None:
        """
        Register a tool, raising instead of returning an outcome.

        :raises DuplicateToolError: if a live tool already has this name.
        """
        if not isinstance(descriptor, ToolDescriptor):
            raise DescriptorValidationError("descriptor", "must be a ToolDescriptor")
        with self._lock:
            existing = self._records.get(descriptor.name)
            if existing is not None and existing.status is not ToolStatus.REMOVED:
                raise DuplicateToolError(descriptor.name)
            # A re-registered name moves to the end of the registration order.
            self._records.pop(descriptor.name, None)
            self._quarantine_until.pop(descriptor.name, None)
            self._records[descriptor.name] = replace(descriptor, status=ToolStatus.AVAILABLE)
        logger.info("Tool %s registered", descriptor.name)
        self.notifier.send_registry_changed(change="registered", tool=descriptor.name)

    def deregister_tool(self, name: str) -> CommandResult:
        """
        Mark a tool removed. In-flight calls run to completion; new calls fail as unavailable.

        :param name: Tool name.
        :return: CommandResult(success, message).
        """
        try:
            self.remove(name)
        except ToolNotFoundError as err:
            return CommandResult(success=False, message=str(err))
        return CommandResult(success=True, message=f"Removed tool '{name}'")

    def remove(self, name: str) -> None:
        """
        Mark a tool removed, raising instead of returning an outcome.

        :raises ToolNotFoundError: if no live tool has this name.
        """
        with self._lock:
            existing = self._records.get(name)
            if existing is None or existing.status is ToolStatus.REMOVED:
                raise ToolNotFoundError(name)
            self._records[name] = replace(existing, status=ToolStatus.REMOVED)
            self._quarantine_until.pop(name, None)
        logger.info("Tool %s removed", name)
        self.notifier.send_registry_changed(change="removed", tool=name)

    def quarantine(self, name: str, until: float) -> None:
        """Exclude a tool from planning and dispatch until the clock passes `until`."""
        with self._lock:
            existing = self._records.get(name)
            if existing is None or existing.status is ToolStatus.REMOVED:
                return
            self._records[name] = replace(existing, status=ToolStatus.QUARANTINED)
            self._quarantine_until[name] = until
        logger.info("Tool %s quarantined until %.3f", name, until)

    def snapshot(self) -> RegistrySnapshot:
        """Return an immutable view with quarantines that have expired lifted."""
        with self._lock:
            self._lift_expired_quarantines()
            return RegistrySnapshot(
                tools=tuple(self._records.values()),
                cost_ceiling=self._cost_ceiling,
            )

    def list_tools(self, include_removed: bool = False) -> list[ToolDescriptor]:
        """List registered tools in registration order."""
        return [
            tool
            for tool in self.snapshot().tools
            if include_removed or tool.status is not ToolStatus.REMOVED
        ]

    def get(self, name: str) -> ToolDescriptor:
        """
        Return the current descriptor of `name`.

        :raises ToolNotFoundError: if the tool was never registered.
        """
        tool = self.snapshot().get(name)
        if tool is None:
            raise ToolNotFoundError(name)
        return tool

    def lease_capacity(
        self,
        name: str,
        on_grant: Callable[[LeaseTicket], None] | None = None,
    ) -> LeaseTicket:
        """
        Lease one concurrent-call slot of a tool.

        :param name: Tool name.
        :param on_grant: Called once the slot is held.
        :return: A `GRANTED` or `QUEUED` ticket.
        :raises ToolNotFoundError: unknown tool.
        :raises ToolUnavailableError: removed, quarantined or above the cost ceiling.
        :raises CapacityExhaustedError: the tool's queue is full.
        """
        snapshot = self.snapshot()
        tool = snapshot.get(name)
        if tool is None:
            raise ToolNotFoundError(name)
        if tool.status is not ToolStatus.AVAILABLE:
            raise ToolUnavailableError(name, tool.status.value)
        if not snapshot.within_ceiling(tool):
            raise ToolUnavailableError(name, "above cost ceiling")
        try:
            return self.ledger.lease(name, tool.max_parallel, tool.queue_limit, on_grant)
        except CapacityExhaustedError:
            logger.warning("Capacity of %s exhausted", name)
            raise

    def release_capacity(self, name: str) -> None:
        """Release a slot leased with `lease_capacity`."""
        self.ledger.release(name)

    def busy_tools(self) -> list[str]:
        """Available tools whose every slot is currently leased."""
        return [
            tool.name
            for tool in self.snapshot().available()
            if self.ledger.in_flight(tool.name) >= tool.max_parallel
        ]

    def _lift_expired_quarantines(self) -> None:
        now = self._clock()
        for name, until in list(self._quarantine_until.items()):
            if now >= until:
                del self._quarantine_until[name]
                record = self._records[name]
                if record.status is ToolStatus.QUARANTINED:
                    self._records[name] = replace(record, status=ToolStatus.AVAILABLE)
                    logger.info("Quarantine of %s lifted", name)
