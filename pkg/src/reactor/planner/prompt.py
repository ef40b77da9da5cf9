"""
Prompt assembly for the planner backend.

Sections, in order: system instructions, the registry's tool fragment, the
task, the attachments manifest, the scratchpad and finally turn hints. The
scratchpad is the only section that shrinks to fit the context budget.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

from reactor.common import CHARS_PER_TOKEN, DEFAULT_VERBATIM_TURNS
from reactor.errors import ContextOverflowError
from reactor.planner.scratchpad import Scratchpad, ScratchpadView, compact_scratchpad

if TYPE_CHECKING:
    from reactor.dispatcher.privacy import Attachment

SYSTEM_INSTRUCTIONS = """\
You are a planner that solves tasks by reasoning step by step and calling tools.
Answer in exactly this format:
Thought: <your reasoning>
Action: Tool(name=value, ...)
or, when you know the answer:
Thought: <your reasoning>
Final Answer: <the answer>
Calls joined with && on one Action line run in parallel. \
Put & after a call to run it in the background and keep reasoning.
Values are "quoted strings", numbers, true/false or ["lists", "of strings"]."""

BACKGROUND_HINT = "Some tasks are still running in the background."
SECTION_SEPARATOR = "\n\n"


def capacity_hint(busy_tools: Sequence[str]) -> str:
    """Hint naming tools whose every slot is taken; new calls to them will queue."""
    return "These tools are at capacity and new calls will wait: " + ", ".join(busy_tools) + "."


def attachments_manifest(attachments: Sequence[Attachment]) -> str:
    """List attachments by name and size only; their content never enters the prompt."""
    lines = ["Attachments:"]
    for attachment in attachments:
        lines.append(
            f"- {attachment.name} ({attachment.page_count} pages, {attachment.size} bytes)"
        )
    return "\n".join(lines)


def assemble_prompt(
    task: str,
    tool_fragment: str,
    scratchpad: Scratchpad | Sequence,
    budget_tokens: int,
    attachments: Sequence[Attachment] = (),
    hints: Sequence[str] = (),
    verbatim_turns: int = DEFAULT_VERBATIM_TURNS,
    suffix: str | None = None,
) -> tuple[str, ScratchpadView]:
    """
    Build the planner prompt within the context budget.

    :param task: Task text.
    :param tool_fragment: Output of `render_tool_prompt` for this turn.
    :param scratchpad: Transcript so far.
    :param budget_tokens: Context budget in estimated tokens.
    :param attachments: Session attachments, listed by name and size.
    :param hints: Extra lines appended after the scratchpad.
    :param verbatim_turns: Newest turns kept verbatim when compacting.
    :param suffix: Closing instruction (used by the forced finalize).
    :return: The prompt and the scratchpad view it contains.
    :raises ContextOverflowError: if the budget cannot be met.
    """
    head = [SYSTEM_INSTRUCTIONS, tool_fragment, f"Task: {task}"]
    if attachments:
        head.append(attachments_manifest(attachments))
    tail = list(hints)
    if suffix:
        tail.append(suffix)

    fixed = SECTION_SEPARATOR.join(head + tail)
    entries = scratchpad.entries if isinstance(scratchpad, Scratchpad) else tuple(scratchpad)
    if not entries:
        if len(fixed) > budget_tokens * CHARS_PER_TOKEN:
            raise ContextOverflowError(
                f"prompt without scratchpad exceeds the budget of {budget_tokens} tokens"
            )
        return fixed, ScratchpadView()

    available_chars = budget_tokens * CHARS_PER_TOKEN - len(fixed) - len(SECTION_SEPARATOR)
    if available_chars <= 0:
        raise ContextOverflowError(
            f"system, tools and task leave no room in the budget of {budget_tokens} tokens"
        )
    view = compact_scratchpad(entries, available_chars // CHARS_PER_TOKEN, verbatim_turns)
    sections = [*head, view.render(), *tail] if not view.is_empty else head + tail
    return SECTION_SEPARATOR.join(sections), view
