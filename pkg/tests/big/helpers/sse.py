"""
Helper module for reading the service's Server-Sent Events streams.

Contains:
- read_stream: fetch a session's event stream as raw text.
- split_frames: cut raw SSE text into frames and check each one's fields.
- stream_events: the checked frames parsed back into events.
"""

import json

import httpx
import pytest

from reactor.observability.events import Event, parse_sse

FRAME_FIELDS = ("id", "event", "data")


def read_stream(
    base_url: str,
    session_id: str,
    from_seq: int | None = None,
    last_event_id: str | None = None,
    timeout: float = 10.0,
) -> str:
    """
    Read a session's event stream until the service closes it.

    :param from_seq: Sent as the `from_seq` query parameter.
    :param last_event_id: Sent as the `Last-Event-ID` header.
    :return: The raw stream text.
    """
    params = {} if from_seq is None else {"from_seq": from_seq}
    headers = {} if last_event_id is None else {"Last-Event-ID": last_event_id}
    chunks = []
    with httpx.stream(
        "GET",
        f"{base_url}/tasks/{session_id}/events",
        params=params,
        headers=headers,
        timeout=timeout,
    ) as response:
        if response.status_code != 200:
            pytest.fail(f"event stream answered {response.status_code}")
        for chunk in response.iter_text():
            chunks.append(chunk)
    return "".join(chunks)


def split_frames(raw: str) -> list[dict[str, str]]:
    """
    Split raw SSE text into frames of `field -> value`.

    Fails the test when a frame has an unknown or repeated field, lacks an
    event or data line, or carries data that is not one JSON object.
    """
    if raw and not raw.endswith("\n\n"):
        pytest.fail("stream does not end with a blank line")
    frames = []
    for block in raw.split("\n\n"):
        if not block:
            continue
        frame: dict[str, str] = {}
        for line in block.split("\n"):
            name, sep, value = line.partition(": ")
            if not sep or name not in FRAME_FIELDS or name in frame:
                pytest.fail(f"malformed SSE line {line!r}")
            frame[name] = value
        if "event" not in frame or "data" not in frame:
            pytest.fail(f"frame without event or data: {block!r}")
        if not isinstance(json.loads(frame["data"]), dict):
            pytest.fail(f"frame data is not a JSON object: {frame['data']!r}")
        frames.append(frame)
    return frames


def stream_events(raw: str) -> list[Event]:
    """Events of a raw stream, after checking every frame."""
    split_frames(raw)
    return parse_sse(raw)
