"""Unit tests for the terminal event tail."""

import io
from datetime import datetime, timezone

import colorama
import httpx
import pytest

from reactor.errors import ReactorError, SessionNotFoundError
from reactor.observability.events import Event, EventType, serialize_sse
from reactor.planner.scratchpad import EntryKind, ScratchpadEntry
from reactor.service.tail import format_event, iter_frames, tail

STAMP = datetime(2026, 3, 1, tzinfo=timezone.utc)


def _entry_event(seq: int, event_type: EventType, kind: EntryKind, content: str) -> Event:
    entry = ScratchpadEntry(kind, content, 0, "g0")
    return Event("s1", seq, event_type, entry.to_dict(), STAMP)


EVENTS = [
    _entry_event(0, EventType.THOUGHT, EntryKind.THOUGHT, "look it up"),
    _entry_event(1, EventType.ACTION, EntryKind.ACTION, 'Lookup(query="x")'),
    _entry_event(2, EventType.RESULT, EntryKind.OBSERVATION, "Lookup: 42"),
    _entry_event(3, EventType.FINAL_ANSWER, EntryKind.FINAL, "42"),
]


@pytest.mark.parametrize(
    ("event", "text"),
    [
        (EVENTS[0], "Thought: look it up"),
        (EVENTS[1], '[Lookup] Action: Lookup(query="x")'),
        (EVENTS[2], "Observation: Lookup: 42"),
        (_entry_event(0, EventType.ERROR, EntryKind.ERROR, "bad"), "Error: bad"),
        (EVENTS[3], "Final Answer: 42"),
        (
            Event("s1", 0, EventType.REGISTRY_CHANGED, {"change": "removed", "tool": "A"}, STAMP),
            "# tool A removed",
        ),
        (
            Event(
                "s1",
                0,
                EventType.QUARANTINE,
                {"tool": "A", "consecutive_failures": 3, "until": 1.0},
                STAMP,
            ),
            "# tool A quarantined after 3 failures",
        ),
        (
            Event("s1", 0, EventType.DROPPED_RESULT, {"tool": "A", "group": "g1"}, STAMP),
            "# late result of A (g1) dropped",
        ),
    ],
)
def test_format_event_plain(event, text):
    """Should print one readable record per event type."""
    assert format_event(event, color=False) == text


def test_format_event_colored():
    """Should wrap styled records in ANSI codes and reset afterwards."""
    text = format_event(EVENTS[3])

    assert text.startswith(colorama.Fore.GREEN)
    assert text.endswith(colorama.Style.RESET_ALL)
    assert format_event(EVENTS[2]) == "Observation: Lookup: 42"


def test_iter_frames_without_trailing_blank():
    """Should parse complete frames and a last frame missing its blank line."""
    lines = b"".join(serialize_sse(event, include_id=True) for event in EVENTS).decode()

    events = list(iter_frames(lines.rstrip("\n").split("\n")))

    assert events == EVENTS


def _client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_tail_prints_stream():
    """Should print every event of the stream and count them."""
    seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request.url)
        body = b"".join(serialize_sse(event, include_id=True) for event in EVENTS[2:])
        return httpx.Response(200, content=body)

    out = io.StringIO()

    printed = tail("http://svc.test/", "s1", out, from_seq=2, color=False, client=_client(handler))

    assert printed == 2
    assert out.getvalue() == "Observation: Lookup: 42\nFinal Answer: 42\n"
    assert seen[0].path == "/tasks/s1/events"
    assert seen[0].params["from_seq"] == "2"


def test_tail_unknown_session():
    """Should raise for a session the service does not know."""
    client = _client(lambda request: httpx.Response(404, json={"detail": "nope"}))

    with pytest.raises(SessionNotFoundError):
        tail("http://svc.test", "ghost", io.StringIO(), color=False, client=client)


def test_tail_server_error():
    """Should raise for any other failed status."""
    client = _client(lambda request: httpx.Response(500))

    with pytest.raises(ReactorError, match="answered 500"):
        tail("http://svc.test", "s1", io.StringIO(), color=False, client=client)
