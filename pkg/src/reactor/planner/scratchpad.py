"""
Scratchpad module: the append-only ReAct transcript and its compaction.

Entries are rendered into the planner prompt as `Kind: content` lines. When the
transcript no longer fits the context budget, older turns are replaced by
one mechanical digest line per turn while the newest turns stay verbatim.
"""

from __future__ import annotations

import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

from reactor.common import DIGEST_CHARS, estimate_tokens
from reactor.errors import ContextOverflowError


class EntryKind(str, Enum):
    """Kinds of scratchpad entries."""

    THOUGHT = "Thought"
    ACTION = "Action"
    OBSERVATION = "Observation"
    ERROR = "Error"
    FINAL = "Final"


_RENDER_PREFIX = {
    EntryKind.THOUGHT: "Thought",
    EntryKind.ACTION: "Action",
    EntryKind.OBSERVATION: "Observation",
    EntryKind.ERROR: "Error",
    EntryKind.FINAL: "Final Answer",
}


@dataclass(frozen=True)
class ScratchpadEntry:
    """One step of the transcript."""

    kind: EntryKind
    content: str
    turn: int
    group: str | None = None

    def render(self) -> str:
        """Prompt line(s) for this entry."""
        return f"{_RENDER_PREFIX[self.kind]}: {self.content}"

    def to_dict(self) -> dict[str, Any]:
        """Event payload form."""
        return {
            "kind": self.kind.value,
            "content": self.content,
            "turn": self.turn,
            "group": self.group,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ScratchpadEntry:
        """Rebuild an entry from its event payload."""
        return cls(
            kind=EntryKind(doc["kind"]),
            content=str(doc["content"]),
            turn=int(doc["turn"]),
            group=doc.get("group"),
        )


class Scratchpad:
    """Append-only, ordered list of entries."""

    def __init__(self, entries: Iterable[ScratchpadEntry] = ()):
        """Initialize the scratchpad, optionally from existing entries."""
        self._lock = threading.Lock()
        self._entries: list[ScratchpadEntry] = []
        self._action_groups: set[str] = set()
        for entry in entries:
            self.append(entry)

    def append(self, entry: ScratchpadEntry) -> ScratchpadEntry:
        """
        Append an entry.

        :raises ValueError: if the entry would break turn order, or an
            Observation/Error names a group no Action was appended for.
        """
        with self._lock:
            if self._entries and entry.turn < self._entries[-1].turn:
                raise ValueError(
                    f"entry of turn {entry.turn} after an entry of turn {self._entries[-1].turn}"
                )
            if entry.group is not None:
                if entry.kind is EntryKind.ACTION:
                    self._action_groups.add(entry.group)
                elif entry.group not in self._action_groups:
                    raise ValueError(f"{entry.kind.value} references unknown group {entry.group!r}")
            self._entries.append(entry)
        return entry

    @property
    def entries(self) -> tuple[ScratchpadEntry, ...]:
        """Snapshot of all entries in append order."""
        with self._lock:
            return tuple(self._entries)

    def last(self, kind: EntryKind | None = None) -> ScratchpadEntry | None:
        """The newest entry, optionally of one kind."""
        for entry in reversed(self.entries):
            if kind is None or entry.kind is kind:
                return entry
        return None

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __iter__(self) -> Iterator[ScratchpadEntry]:
        return iter(self.entries)


@dataclass(frozen=True)
class ScratchpadView:
    """A compacted rendering: one summary line per older turn, then verbatim entries."""

    summaries: tuple[str, ...] = ()
    verbatim: tuple[ScratchpadEntry, ...] = ()

    def render(self) -> str:
        """Prompt text of the view."""
        lines = list(self.summaries)
        lines.extend(entry.render() for entry in self.verbatim)
        return "\n".join(lines)

    @property
    def tokens(self) -> int:
        """Estimated size of the rendering."""
        return estimate_tokens(self.render())

    @property
    def is_empty(self) -> bool:
        """Whether nothing would be rendered."""
        return not self.summaries and not self.verbatim


def summarize_turn(turn: int, entries: Sequence[ScratchpadEntry]) -> str:
    """
    Digest one turn as `Turn n: called <tools>; result digest: <...>`.

    Turns are numbered from 1 in digests.
    """
    tools = []
    for entry in entries:
        if entry.kind is EntryKind.ACTION:
            tool = entry.content.split("(", 1)[0].strip()
            if tool not in tools:
                tools.append(tool)
    digests = [
        entry.content[:DIGEST_CHARS] for entry in entries if entry.kind is EntryKind.OBSERVATION
    ]
    called = ", ".join(tools) if tools else "no tools"
    digest = " | ".join(digests) if digests else "none"
    return f"Turn {turn + 1}: called {called}; result digest: {digest}"


def compact_scratchpad(
    pad: Scratchpad | ScratchpadView | Sequence[ScratchpadEntry],
    budget: int,
    verbatim_turns: int = 2,
) -> ScratchpadView:
    """
    Fit a scratchpad into `budget` estimated tokens.

    A pad that already fits is rendered unchanged. Otherwise every turn but the
    newest `verbatim_turns` is replaced by its digest line; if that is still too
    large the oldest digests are dropped. Compacting a view that fits returns
    it as is, so compaction is idempotent.

    :raises ContextOverflowError: if even the verbatim turns alone do not fit.
    """
    if isinstance(pad, ScratchpadView):
        summaries, entries = list(pad.summaries), tuple(pad.verbatim)
    else:
        summaries, entries = [], tuple(pad)

    view = ScratchpadView(tuple(summaries), entries)
    if view.tokens <= budget:
        return view

    turns = sorted({entry.turn for entry in entries})
    keep = set(turns[-verbatim_turns:]) if verbatim_turns > 0 else set()
    for turn in turns:
        if turn not in keep:
            summaries.append(summarize_turn(turn, [e for e in entries if e.turn == turn]))
    verbatim = tuple(entry for entry in entries if entry.turn in keep)

    while True:
        view = ScratchpadView(tuple(summaries), verbatim)
        if view.tokens <= budget:
            return view
        if not summaries:
            raise ContextOverflowError(
                f"the newest {verbatim_turns} turns need {view.tokens} tokens, budget is {budget}"
            )
        summaries.pop(0)
