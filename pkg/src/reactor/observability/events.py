"""
Observability events and their Server-Sent Events wire format.

A frame is an `event: <event_type>` line, a single `data: <json>` line and a
blank line. The JSON object carries session_id, seq, event_type, content and
an RFC 3339 timestamp; it is ASCII-escaped, so newlines inside content never
break the single data line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any

_LINE_BREAK = re.compile(r"\r\n|\r|\n")


class EventType(str, Enum):
    """Kinds of observability events."""

    THOUGHT = "thought"
    ACTION = "action"
    RESULT = "result"
    ERROR = "error"
    FINAL_ANSWER = "final_answer"
    REGISTRY_CHANGED = "registry_changed"
    QUARANTINE = "quarantine"
    DROPPED_RESULT = "dropped_result"


# Scratchpad entry kinds and the event type that mirrors each of them.
ENTRY_EVENT_TYPES = {
    "Thought": EventType.THOUGHT,
    "Action": EventType.ACTION,
    "Observation": EventType.RESULT,
    "Error": EventType.ERROR,
    "Final": EventType.FINAL_ANSWER,
}

SCRATCHPAD_EVENT_TYPES = frozenset(ENTRY_EVENT_TYPES.values())


def utc_now() -> datetime:
    """Current time with UTC offset, the default event clock."""
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Event:
    """One observability record of a session."""

    session_id: str
    seq: int
    event_type: EventType
    content: Any
    timestamp: datetime

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON object carried in a data line or a trace file."""
        return {
            "session_id": self.session_id,
            "seq": self.seq,
            "event_type": self.event_type.value,
            "content": self.content,
            "timestamp": self.timestamp.isoformat(),
        }

    def to_json(self) -> str:
        """Single-line JSON representation."""
        return json.dumps(self.to_dict(), ensure_ascii=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Event:
        """Inverse of `to_dict`."""
        return cls(
            session_id=str(doc["session_id"]),
            seq=int(doc["seq"]),
            event_type=EventType(doc["event_type"]),
            content=doc.get("content"),
            timestamp=datetime.fromisoformat(doc["timestamp"]),
        )


def serialize_sse(event: Event, include_id: bool = False) -> bytes:
    """
    Frame an event for an SSE stream.

    :param event: Event to frame.
    :param include_id: Prefix an `id: <seq>` line so clients resend Last-Event-ID.
    :return: Wire bytes ending with a blank line.
    """
    lines = []
    if include_id:
        lines.append(f"id: {event.seq}")
    lines.append(f"event: {event.event_type.value}")
    lines.append(f"data: {event.to_json()}")
    return ("\n".join(lines) + "\n\n").encode("ascii")


def parse_sse(stream: bytes | str) -> list[Event]:
    """
    Parse SSE frames back into events, following the standard field rules.

    Comment lines and unknown fields are ignored; multiple data lines of one
    frame are joined with newlines before JSON decoding.
    """
    text = stream.decode("utf-8") if isinstance(stream, bytes) else stream
    events = []
    data_lines: list[str] = []
    for line in _LINE_BREAK.split(text):
        if not line:
            if data_lines:
                events.append(Event.from_dict(json.loads("\n".join(data_lines))))
                data_lines = []
            continue
        if line.startswith(":"):
            continue
        name, _, value = line.partition(":")
        value = value.removeprefix(" ")
        if name == "data":
            data_lines.append(value)
    return events
