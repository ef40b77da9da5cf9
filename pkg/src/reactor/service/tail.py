"""
Terminal rendering of a session's SSE stream for `reactor tail`.

Each event becomes one printed record: thoughts dimmed, actions labeled
with the tool they call, observations and errors verbatim, the final answer
highlighted and engine notices in yellow.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Iterator
from typing import TextIO

import colorama
import httpx

from reactor.errors import ReactorError, SessionNotFoundError
from reactor.observability.events import Event, EventType, parse_sse


logger = logging.getLogger(__name__)

_TOOL_NAME = re.compile(r"^([^\W\d]\w*)\(")


def format_event(event: Event, color: bool = True) -> str:
    """Text printed for one event."""
    style, text = _style_and_text(event)
    if not color or not style:
        return text
    return f"{style}{text}{colorama.Style.RESET_ALL}"


def _style_and_text(event: Event) -> tuple[str, str]:
    content = event.content
    if event.event_type is EventType.THOUGHT:
        return colorama.Style.DIM, f"Thought: {content['content']}"
    if event.event_type is EventType.ACTION:
        call = content["content"]
        match = _TOOL_NAME.match(call)
        label = match.group(1) if match else "?"
        return colorama.Fore.CYAN, f"[{label}] Action: {call}"
    if event.event_type is EventType.RESULT:
        return "", f"Observation: {content['content']}"
    if event.event_type is EventType.ERROR:
        return colorama.Fore.RED, f"Error: {content['content']}"
    if event.event_type is EventType.FINAL_ANSWER:
        return colorama.Fore.GREEN + colorama.Style.BRIGHT, f"Final Answer: {content['content']}"
    if event.event_type is EventType.REGISTRY_CHANGED:
        return colorama.Fore.YELLOW, f"# tool {content['tool']} {content['change']}"
    if event.event_type is EventType.QUARANTINE:
        return (
            colorama.Fore.YELLOW,
            f"# tool {content['tool']} quarantined after "
            f"{content['consecutive_failures']} failures",
        )
    return (
        colorama.Fore.YELLOW,
        f"# late result of {content['tool']} ({content['group']}) dropped",
    )


def iter_frames(lines: Iterable[str]) -> Iterator[Event]:
    """Parse SSE lines into events as each frame completes."""
    frame: list[str] = []
    for line in lines:
        if line:
            frame.append(line)
            continue
        if frame:
            yield from parse_sse("\n".join(frame) + "\n\n")
            frame = []
    if frame:
        yield from parse_sse("\n".join(frame) + "\n\n")


def tail(
    url: str,
    session_id: str,
    out: TextIO,
    from_seq: int = 0,
    color: bool = True,
    client: httpx.Client | None = None,
) -> int:
    """
    Print a session's events until its stream ends.

    :param url: Base URL of the service.
    :param session_id: Session to follow.
    :param out: Destination of the printed records.
    :param from_seq: First seq to print.
    :param color: Style the records with ANSI codes.
    :param client: HTTP client; a fresh one when None.
    :return: Number of events printed.
    :raises SessionNotFoundError: if the service does not know the session.
    """
    if color:
        colorama.just_fix_windows_console()
    owned = client is None
    http = client or httpx.Client(timeout=httpx.Timeout(10.0, read=None))
    printed = 0
    try:
        with http.stream(
            "GET",
            f"{url.rstrip('/')}/tasks/{session_id}/events",
            params={"from_seq": from_seq},
        ) as response:
            if response.status_code == 404:
                raise SessionNotFoundError(session_id)
            if response.status_code != 200:
                raise ReactorError(f"event stream answered {response.status_code}")
            for event in iter_frames(response.iter_lines()):
                print(format_event(event, color), file=out, flush=True)
                printed += 1
    finally:
        if owned:
            http.close()
    logger.debug("Printed %d events of %s", printed, session_id)
    return printed
