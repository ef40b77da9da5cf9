"""Unit tests for the CapacityLedger."""

import pytest
from hypothesis import given, strategies as st

from reactor.errors import CapacityExhaustedError
from reactor.registry.capacity import CapacityLedger, LeaseGrant


def test_grants_up_to_max_parallel():
    """Should grant immediately while slots are free, then queue."""
    ledger = CapacityLedger()

    first = ledger.lease("Lookup", max_parallel=2, queue_limit=4)
    second = ledger.lease("Lookup", max_parallel=2, queue_limit=4)
    third = ledger.lease("Lookup", max_parallel=2, queue_limit=4)

    assert [first.grant, second.grant, third.grant] == [
        LeaseGrant.GRANTED,
        LeaseGrant.GRANTED,
        LeaseGrant.QUEUED,
    ]
    assert first.granted.is_set()
    assert not third.wait(timeout=0)
    assert ledger.in_flight("Lookup") == 2
    assert ledger.queued("Lookup") == 1


def test_release_hands_slot_to_oldest():
    """Should pass a released slot to queued tickets in arrival order."""
    ledger = CapacityLedger()
    granted = []
    ledger.lease("Lookup", 1, 4, on_grant=lambda _: granted.append("a"))
    ledger.lease("Lookup", 1, 4, on_grant=lambda _: granted.append("b"))
    ledger.lease("Lookup", 1, 4, on_grant=lambda _: granted.append("c"))

    ledger.release("Lookup")

    assert granted == ["a", "b"]
    assert ledger.in_flight("Lookup") == 1
    assert ledger.queued("Lookup") == 1

    ledger.release("Lookup")
    ledger.release("Lookup")

    assert granted == ["a", "b", "c"]
    assert ledger.in_flight("Lookup") == 0


def test_queue_full():
    """Should refuse a lease once the queue limit is reached."""
    ledger = CapacityLedger()
    ledger.lease("Lookup", 1, 1)
    ledger.lease("Lookup", 1, 1)

    with pytest.raises(CapacityExhaustedError) as err:
        ledger.lease("Lookup", 1, 1)

    assert err.value.queue_limit == 1
    assert ledger.queued("Lookup") == 1


def test_spurious_release_ignored(caplog: pytest.LogCaptureFixture):
    """Should ignore and log a release without a held lease."""
    ledger = CapacityLedger()

    ledger.release("Lookup")

    assert ledger.in_flight("Lookup") == 0
    assert "without a held lease" in caplog.text


@given(
    max_parallel=st.integers(min_value=1, max_value=4),
    queue_limit=st.integers(min_value=0, max_value=4),
    operations=st.lists(st.booleans(), max_size=60),
)
def test_in_flight_never_exceeds_max_parallel(max_parallel, queue_limit, operations):
    """Should keep in-flight within max_parallel and account for every lease under any order."""
    ledger = CapacityLedger()
    held = 0
    waiting = 0
    for is_lease in operations:
        if is_lease:
            try:
                ticket = ledger.lease("Tool", max_parallel, queue_limit)
            except CapacityExhaustedError:
                assert waiting == queue_limit
                continue
            if ticket.grant is LeaseGrant.GRANTED:
                held += 1
            else:
                waiting += 1
        elif held:
            ledger.release("Tool")
            if waiting:
                waiting -= 1
            else:
                held -= 1

        assert ledger.in_flight("Tool") == held <= max_parallel
        assert ledger.queued("Tool") == waiting <= queue_limit
        assert ledger.high_water("Tool") <= max_parallel
