"""
Planner output grammar.

    output    := [thought] directive
    thought   := ["Thought:"] text              (every line before the directive)
    directive := "Action:" call ("&&" call)*    (rest of that line)
               | "Final Answer:" text           (rest of the output)
    call      := NAME "(" [arg ("," arg)*] ")" ["&"]
    arg       := NAME "=" value | value
    value     := STRING | NUMBER | "true" | "false" | "[" [STRING ("," STRING)*] "]"

The first line starting with a directive wins. Strings are JSON double-quoted
strings; single quotes are accepted as well. A trailing `&` marks a call as
background. All calls of one Action line share the group id given by the caller.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from reactor.planner.actions import Action, ActionMode, ArgValue

THOUGHT_PREFIX = "Thought:"
ACTION_PREFIX = "Action:"
FINAL_PREFIX = "Final Answer:"

_NAME = re.compile(r"[^\W\d]\w*")
_NUMBER = re.compile(r"-?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?")
_LINE_BREAK = re.compile(r"\r\n|\r")
_BOOLEANS = {"true": True, "false": False, "True": True, "False": False}
_BLANKS = " \t"


@dataclass(frozen=True)
class PlannerOutput:
    """Structured result of parsing one planner completion."""

    thought: str | None = None
    actions: tuple[Action, ...] = ()
    final: str | None = None
    error: str | None = None

    def __post_init__(self):
        if self.final is not None and self.actions:
            raise ValueError("a planner output cannot carry both a final answer and actions")

    @property
    def is_malformed(self) -> bool:
        """Whether parsing failed."""
        return self.error is not None


@dataclass
class CallLineParse:
    """Calls recognized on an Action line; `actions` holds only settled calls."""

    actions: list[Action] = field(default_factory=list)
    error: str | None = None


class _Malformed(Exception):
    """Raised inside the call-line parser."""


def split_lines(text: str) -> list[str]:
    """Split on any line break convention."""
    return _LINE_BREAK.sub("\n", text).split("\n")


def directive_of(line: str) -> str | None:
    """Return the directive prefix a line starts with, if any."""
    stripped = line.lstrip()
    if stripped.startswith(ACTION_PREFIX):
        return ACTION_PREFIX
    if stripped.startswith(FINAL_PREFIX):
        return FINAL_PREFIX
    return None


def parse_planner_output(raw: str, group: str = "g0") -> PlannerOutput:
    """
    Parse one planner completion.

    Never raises: malformed text yields a `PlannerOutput` whose `error` says why.

    :param raw: Completion text.
    :param group: Group id given to every call on the Action line.
    """
    if not isinstance(raw, str):
        return PlannerOutput(error=f"expected text, got {type(raw).__name__}")
    lines = split_lines(raw)
    for index, line in enumerate(lines):
        directive = directive_of(line)
        if directive is None:
            continue
        thought = _thought(lines[:index])
        body = line.lstrip()[len(directive) :]
        if directive == FINAL_PREFIX:
            final = "\n".join([body, *lines[index + 1 :]]).strip()
            if not final:
                return PlannerOutput(thought=thought, error="empty final answer")
            return PlannerOutput(thought=thought, final=final)
        parsed = parse_call_line(body, group, complete=True)
        if parsed.error is not None:
            return PlannerOutput(thought=thought, error=parsed.error)
        return PlannerOutput(thought=thought, actions=tuple(parsed.actions))
    return PlannerOutput(
        thought=_thought(lines),
        error="no Action or Final Answer line",
    )


def parse_call_line(text: str, group: str, complete: bool = True) -> CallLineParse:
    """
    Parse the text after `Action:`.

    With `complete=False` the text is a prefix of a line still being streamed:
    a call is settled once the `&&` that follows it has been read, and errors
    only stop the scan. With `complete=True` the end of text settles the last
    call and any error is reported.
    """
    parser = _CallLineParser(text, group, complete)
    try:
        parser.parse()
    except _Malformed as err:
        return CallLineParse(actions=parser.settled, error=None if not complete else str(err))
    return CallLineParse(actions=parser.settled)


def render_call(action: Action) -> str:
    """Canonical text of one call, e.g. `PDFParser(page=45, query="ARR")`."""
    args = [render_value(value) for value in action.positional]
    args.extend(f"{name}={render_value(value)}" for name, value in action.args.items())
    suffix = " &" if action.mode is ActionMode.BACKGROUND else ""
    return f"{action.tool}({', '.join(args)}){suffix}"


def render_value(value: ArgValue) -> str:
    """Canonical text of one argument value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    return "[" + ", ".join(json.dumps(item, ensure_ascii=False) for item in value) + "]"


def render_planner_output(output: PlannerOutput) -> str:
    """
    Render a well-formed output back to planner text.

    :raises ValueError: for outputs that carry a parse error or neither actions nor a final answer.
    """
    if output.error is not None:
        raise ValueError("cannot render a malformed planner output")
    lines = []
    if output.thought:
        lines.append(f"{THOUGHT_PREFIX} {output.thought}")
    if output.final is not None:
        lines.append(f"{FINAL_PREFIX} {output.final}")
    elif output.actions:
        lines.append(f"{ACTION_PREFIX} " + " && ".join(render_call(a) for a in output.actions))
    else:
        raise ValueError("a planner output needs actions or a final answer")
    return "\n".join(lines)


def _thought(lines: list[str]) -> str | None:
    text = "\n".join(lines).strip()
    if text.startswith(THOUGHT_PREFIX):
        text = text[len(THOUGHT_PREFIX) :].strip()
    return text or None


class _CallLineParser:
    """Recursive-descent parser over a single Action line."""

    def __init__(self, text: str, group: str, complete: bool):
        self.text = text
        self.pos = 0
        self.group = group
        self.complete = complete
        self.settled: list[Action] = []

    def parse(self) -> None:
        self._skip_blanks()
        if self._at_end():
            raise _Malformed("empty Action line")
        while True:
            action = self._call()
            self._skip_blanks()
            if self._consume("&&"):
                self.settled.append(action)
                self._skip_blanks()
                continue
            if self._peek() == "&":
                self.pos += 1
                action = Action(
                    tool=action.tool,
                    args=action.args,
                    positional=action.positional,
                    mode=ActionMode.BACKGROUND,
                    group=action.group,
                )
                self._skip_blanks()
                if self._consume("&&"):
                    self.settled.append(action)
                    self._skip_blanks()
                    continue
            if self._at_end():
                if not self.complete:
                    raise _Malformed("line not finished")
                self.settled.append(action)
                return
            raise _Malformed(f"expected '&&' or end of line at column {self.pos + 1}")

    def _call(self) -> Action:
        tool = self._name("tool name")
        self._skip_blanks()
        self._expect("(")
        positional: list[ArgValue] = []
        named: dict[str, ArgValue] = {}
        self._skip_blanks()
        if self._consume(")"):
            return Action(tool=tool, args=named, positional=tuple(positional), group=self.group)
        while True:
            name, value = self._arg()
            if name is None:
                if named:
                    raise _Malformed(f"positional argument after named arguments in {tool}")
                positional.append(value)
            else:
                if name in named:
                    raise _Malformed(f"argument '{name}' repeated in {tool}")
                named[name] = value
            self._skip_blanks()
            if self._consume(","):
                self._skip_blanks()
                continue
            self._expect(")")
            return Action(tool=tool, args=named, positional=tuple(positional), group=self.group)

    def _arg(self) -> tuple[str | None, ArgValue]:
        match = _NAME.match(self.text, self.pos)
        if match is not None:
            word = match.group()
            after = match.end()
            while after < len(self.text) and self.text[after] in _BLANKS:
                after += 1
            if after < len(self.text) and self.text[after] == "=":
                self.pos = after + 1
                self._skip_blanks()
                return word, self._value()
        return None, self._value()

    def _value(self) -> ArgValue:
        char = self._peek()
        if char in {'"', "'"}:
            return self._string()
        if char == "[":
            return self._string_list()
        match = _NUMBER.match(self.text, self.pos)
        if match is not None:
            self.pos = match.end()
            literal = match.group()
            if any(marker in literal for marker in ".eE"):
                number = float(literal)
                if not math.isfinite(number):
                    raise _Malformed(f"number {literal} out of range")
                return number
            return int(literal)
        match = _NAME.match(self.text, self.pos)
        if match is not None and match.group() in _BOOLEANS:
            self.pos = match.end()
            return _BOOLEANS[match.group()]
        if self._at_end():
            raise _Malformed("line ends inside an argument list")
        raise _Malformed(f"unexpected {self.text[self.pos]!r} at column {self.pos + 1}")

    def _string_list(self) -> list[str]:
        self._expect("[")
        items: list[str] = []
        self._skip_blanks()
        if self._consume("]"):
            return items
        while True:
            if self._peek() not in {'"', "'"}:
                raise _Malformed("lists may only contain strings")
            items.append(self._string())
            self._skip_blanks()
            if self._consume(","):
                self._skip_blanks()
                continue
            self._expect("]")
            return items

    def _string(self) -> str:
        quote = self.text[self.pos]
        self.pos += 1
        body: list[str] = []
        while True:
            if self._at_end():
                raise _Malformed("unterminated string")
            char = self.text[self.pos]
            if char == quote:
                self.pos += 1
                break
            if char == "\\":
                if self.pos + 1 >= len(self.text):
                    raise _Malformed("unterminated string")
                escaped = self.text[self.pos + 1]
                body.append("'" if escaped == "'" else "\\" + escaped)
                self.pos += 2
                continue
            body.append('\\"' if char == '"' else char)
            self.pos += 1
        try:
            return json.loads('"' + "".join(body) + '"', strict=False)
        except json.JSONDecodeError as err:
            raise _Malformed(f"bad string escape: {err.msg}") from err

    def _name(self, what: str) -> str:
        match = _NAME.match(self.text, self.pos)
        if match is None:
            raise _Malformed(f"expected {what} at column {self.pos + 1}")
        self.pos = match.end()
        return match.group()

    def _skip_blanks(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in _BLANKS:
            self.pos += 1

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _consume(self, token: str) -> bool:
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def _expect(self, token: str) -> None:
        if not self._consume(token):
            found = repr(self.text[self.pos]) if not self._at_end() else "end of line"
            raise _Malformed(f"expected {token!r}, found {found}")

    def _at_end(self) -> bool:
        return self.pos >= len(self.text)
