"""Parsed tool invocations produced by the planner and consumed by the registry and dispatcher."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

ArgValue = Union[str, int, float, bool, list[str]]


class ActionMode(str, Enum):
    """Whether the planner waits for the call (blocking) or continues reasoning (background)."""

    BLOCKING = "blocking"
    BACKGROUND = "background"


@dataclass(frozen=True)
class Action:
    """
    One tool call parsed from an `Action:` line.

    Named arguments keep their source order; positional arguments are bound to
    signature parameters in declaration order during validation.
    """

    tool: str
    args: dict[str, ArgValue] = field(default_factory=dict)
    positional: tuple[ArgValue, ...] = ()
    mode: ActionMode = ActionMode.BLOCKING
    group: str = ""

    @property
    def is_background(self) -> bool:
        """Whether the call carries the `&` background suffix."""
        return self.mode is ActionMode.BACKGROUND
