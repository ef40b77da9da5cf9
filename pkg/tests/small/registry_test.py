"""Unit tests for the ToolRegistry."""

from decimal import Decimal
from unittest.mock import Mock, call

import pytest

from reactor.errors import DuplicateToolError, ToolNotFoundError, ToolUnavailableError
from reactor.registry.capacity import LeaseGrant
from reactor.registry.descriptors import ToolStatus
from reactor.registry.registry import ToolRegistry

from tests.small.conftest import FakeClock, make_descriptor


def test_register_tool(registry: ToolRegistry):
    """Should register a descriptor and report success."""
    result = registry.register_tool(make_descriptor("Lookup"))

    assert result.success is True
    assert result.message == "Registered tool 'Lookup'"
    assert [tool.name for tool in registry.list_tools()] == ["Lookup"]


def test_register_duplicate(registry: ToolRegistry):
    """Should refuse a second live tool with the same name."""
    registry.add(make_descriptor("Lookup"))

    result = registry.register_tool(make_descriptor("Lookup"))

    assert result.success is False
    assert result.message == "Tool 'Lookup' is already registered"
    with pytest.raises(DuplicateToolError):
        registry.add(make_descriptor("Lookup"))


def test_deregister_tool(registry: ToolRegistry):
    """Should mark a tool removed and keep it only in the full listing."""
    registry.add(make_descriptor("Lookup"))

    result = registry.deregister_tool("Lookup")

    assert result.success is True
    assert registry.list_tools() == []
    assert registry.get("Lookup").status is ToolStatus.REMOVED
    assert [tool.name for tool in registry.list_tools(include_removed=True)] == ["Lookup"]


def test_deregister_unknown(registry: ToolRegistry):
    """Should report unknown and already removed tools as not registered."""
    registry.add(make_descriptor("Lookup"))
    registry.remove("Lookup")

    assert registry.deregister_tool("Lookup") == (False, "Tool 'Lookup' is not registered")
    assert registry.deregister_tool("Ghost").success is False
    with pytest.raises(ToolNotFoundError):
        registry.get("Ghost")


def test_reregister_moves_to_end(registry: ToolRegistry):
    """Should accept a removed name again as a fresh, last-registered tool."""
    registry.add(make_descriptor("Lookup"))
    registry.add(make_descriptor("Summarizer"))
    registry.remove("Lookup")

    registry.add(make_descriptor("Lookup", max_parallel=3))

    assert [tool.name for tool in registry.list_tools()] == ["Summarizer", "Lookup"]
    assert registry.get("Lookup").max_parallel == 3


def test_registry_notifies_changes(registry: ToolRegistry, notifier_mock: Mock):
    """Should announce every registration and removal."""
    registry.notifier = notifier_mock

    registry.add(make_descriptor("Lookup"))
    registry.remove("Lookup")

    notifier_mock.send_registry_changed.assert_has_calls(
        [call(change="registered", tool="Lookup"), call(change="removed", tool="Lookup")]
    )


def test_snapshot_is_immutable_view(registry: ToolRegistry):
    """Should not let later registrations leak into an earlier snapshot."""
    registry.add(make_descriptor("Lookup"))
    snapshot = registry.snapshot()

    registry.add(make_descriptor("Summarizer"))

    assert [tool.name for tool in snapshot.available()] == ["Lookup"]
    assert snapshot.get("Summarizer") is None


def test_quarantine_expires(registry: ToolRegistry, clock: FakeClock):
    """Should hide a quarantined tool until the clock passes its deadline."""
    registry.add(make_descriptor("Lookup"))

    registry.quarantine("Lookup", until=clock() + 60)

    assert registry.get("Lookup").status is ToolStatus.QUARANTINED
    assert not registry.snapshot().is_dispatchable("Lookup")
    clock.advance(59)
    assert registry.list_tools()[0].status is ToolStatus.QUARANTINED
    clock.advance(1)
    assert registry.snapshot().is_dispatchable("Lookup")


def test_quarantine_of_removed_tool_ignored(registry: ToolRegistry, clock: FakeClock):
    """Should leave removed tools removed."""
    registry.add(make_descriptor("Lookup"))
    registry.remove("Lookup")

    registry.quarantine("Lookup", until=clock() + 60)

    assert registry.get("Lookup").status is ToolStatus.REMOVED


def test_cost_ceiling_filters_tools(clock: FakeClock):
    """Should neither offer nor dispatch tools above the cost ceiling."""
    registry = ToolRegistry(clock=clock, cost_ceiling=Decimal("0.01"))
    registry.add(make_descriptor("Cheap", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("Pricey", cost_per_1k_tokens=Decimal("0.02")))
    registry.add(make_descriptor("Free"))

    assert [tool.name for tool in registry.snapshot().available()] == ["Cheap", "Free"]
    with pytest.raises(ToolUnavailableError) as err:
        registry.lease_capacity("Pricey")
    assert err.value.status == "above cost ceiling"


@pytest.mark.parametrize("action", ["remove", "quarantine"])
def test_lease_unavailable_tool(registry: ToolRegistry, clock: FakeClock, action: str):
    """Should refuse to lease a slot of a removed or quarantined tool."""
    registry.add(make_descriptor("Lookup"))
    if action == "remove":
        registry.remove("Lookup")
    else:
        registry.quarantine("Lookup", until=clock() + 10)

    with pytest.raises(ToolUnavailableError) as err:
        registry.lease_capacity("Lookup")

    assert err.value.status == ("removed" if action == "remove" else "quarantined")


def test_lease_unknown_tool(registry: ToolRegistry):
    """Should refuse to lease a slot of a tool that was never registered."""
    with pytest.raises(ToolNotFoundError):
        registry.lease_capacity("Ghost")


def test_busy_tools(registry: ToolRegistry):
    """Should list tools whose every slot is leased."""
    registry.add(make_descriptor("Lookup", max_parallel=2))
    registry.add(make_descriptor("Summarizer"))

    first = registry.lease_capacity("Lookup")
    registry.lease_capacity("Lookup")

    assert first.grant is LeaseGrant.GRANTED
    assert registry.busy_tools() == ["Lookup"]
    registry.release_capacity("Lookup")
    assert registry.busy_tools() == []
