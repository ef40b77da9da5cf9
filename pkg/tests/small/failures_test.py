"""Unit tests for the FailureTracker."""

from unittest.mock import Mock

import pytest

from reactor.dispatcher.failures import FailureTracker, QuarantineNotice
from reactor.dispatcher.requests import Outcome
from reactor.registry.descriptors import ToolStatus
from reactor.registry.registry import ToolRegistry

from tests.small.conftest import FakeClock, make_descriptor


@pytest.fixture
def tracker(registry: ToolRegistry, notifier_mock: Mock) -> FailureTracker:
    """Tracker quarantining Lookup after three failures for 60 seconds."""
    registry.add(make_descriptor("Lookup"))
    return FailureTracker(registry, threshold=3, cooldown_seconds=60, notifier=notifier_mock)


@pytest.mark.parametrize("outcome", [Outcome.TIMEOUT, Outcome.TOOL_ERROR, Outcome.UNAVAILABLE])
def test_threshold_quarantines(
    tracker: FailureTracker, registry: ToolRegistry, notifier_mock: Mock, outcome: Outcome
):
    """Should quarantine on the third consecutive failure of any failure kind."""
    assert tracker.record_outcome("Lookup", outcome, "s1") is None
    assert tracker.record_outcome("Lookup", outcome, "s1") is None

    notice = tracker.record_outcome("Lookup", outcome, "s1")

    assert notice == QuarantineNotice("Lookup", 3, 160.0)
    assert registry.get("Lookup").status is ToolStatus.QUARANTINED
    assert tracker.consecutive_failures("Lookup") == 0
    assert tracker.quarantine_until("Lookup") == 160.0
    notifier_mock.send_quarantine.assert_called_once_with("s1", "Lookup", 3, 160.0)


@pytest.mark.parametrize("outcome", [Outcome.CAPACITY_EXHAUSTED, Outcome.PRIVACY_VIOLATION])
def test_refusals_do_not_count(tracker: FailureTracker, outcome: Outcome):
    """Should ignore outcomes that say nothing about the tool's health."""
    tracker.record_outcome("Lookup", Outcome.TIMEOUT)

    tracker.record_outcome("Lookup", outcome)

    assert tracker.consecutive_failures("Lookup") == 1


def test_success_resets(tracker: FailureTracker):
    """Should reset the counter on a success."""
    tracker.record_outcome("Lookup", Outcome.TIMEOUT)
    tracker.record_outcome("Lookup", Outcome.TIMEOUT)
    tracker.record_outcome("Lookup", Outcome.OK)

    assert tracker.record_outcome("Lookup", Outcome.TIMEOUT) is None
    assert tracker.consecutive_failures("Lookup") == 1


def test_quarantine_lifts_after_cooldown(
    tracker: FailureTracker, registry: ToolRegistry, clock: FakeClock
):
    """Should make the tool available again once the cooldown has passed."""
    for _ in range(3):
        tracker.record_outcome("Lookup", Outcome.TOOL_ERROR)

    clock.advance(60)

    assert tracker.quarantine_until("Lookup") is None
    assert registry.get("Lookup").status is ToolStatus.AVAILABLE


def test_without_session_no_event(tracker: FailureTracker, notifier_mock: Mock):
    """Should not emit a quarantine event outside a session."""
    for _ in range(3):
        tracker.record_outcome("Lookup", Outcome.TOOL_ERROR)

    notifier_mock.send_quarantine.assert_not_called()


def test_invalid_threshold(registry: ToolRegistry):
    """Should refuse a threshold below one."""
    with pytest.raises(ValueError):
        FailureTracker(registry, threshold=0)
