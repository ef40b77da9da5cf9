"""Incremental parsing of a streamed planner completion for speculative dispatch."""

from __future__ import annotations

import logging

from reactor.planner.actions import Action
from reactor.planner.grammar import (
    ACTION_PREFIX,
    FINAL_PREFIX,
    PlannerOutput,
    directive_of,
    parse_call_line,
    parse_planner_output,
    split_lines,
)


logger = logging.getLogger(__name__)


class StreamParser:
    """
    Emit calls of the Action line while the completion is still streaming.

    A call is emitted once the `&&` following it has been read, or when its
    line ends. Everything emitted is a prefix of what `parse_planner_output`
    returns for the full text, so a stream and a batch parse agree.
    """

    def __init__(self, group: str):
        """
        Initialize the parser.

        :param group: Group id of the calls on this completion's Action line.
        """
        self.group = group
        self._text = ""
        self._emitted: list[Action] = []
        self._closed = False

    @property
    def text(self) -> str:
        """Text received so far."""
        return self._text

    @property
    def emitted(self) -> tuple[Action, ...]:
        """Calls emitted so far."""
        return tuple(self._emitted)

    def feed(self, chunk: str) -> list[Action]:
        """
        Consume a chunk of streamed text.

        :return: Calls that became complete with this chunk.
        """
        if self._closed:
            raise RuntimeError("stream parser already finished")
        self._text += chunk
        return self._advance(final=False)

    def finish(self) -> tuple[list[Action], PlannerOutput]:
        """
        Close the stream.

        :return: Calls completed by the end of the stream, and the parse of the full text.
        """
        remaining = self._advance(final=True)
        self._closed = True
        return remaining, parse_planner_output(self._text, self.group)

    def abort(self, reason: str) -> PlannerOutput:
        """
        Close an interrupted stream; a partially streamed call is discarded.

        :return: A malformed output carrying the interruption reason.
        """
        self._closed = True
        logger.debug("Stream aborted after %d calls: %s", len(self._emitted), reason)
        return PlannerOutput(error=f"backend interrupted: {reason}")

    def _advance(self, final: bool) -> list[Action]:
        lines = split_lines(self._text)
        for index, line in enumerate(lines):
            line_complete = final or index < len(lines) - 1
            directive = directive_of(line)
            if directive == FINAL_PREFIX:
                return []
            if directive == ACTION_PREFIX:
                body = line.lstrip()[len(ACTION_PREFIX) :]
                parsed = parse_call_line(body, self.group, complete=line_complete)
                fresh = parsed.actions[len(self._emitted) :]
                self._emitted.extend(fresh)
                return fresh
            if not line_complete:
                return []
        return []
