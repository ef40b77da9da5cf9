"""
Deterministic planner doubles for experiments.

`FallbackPolicyBackend` decides from the prompt alone, so it is safe to share
between concurrent sessions: it calls the first tool of its list, answers with
the first successful observation and, after an error, either replans to the
next tool in the list or gives up.
"""

from __future__ import annotations

import re
from collections.abc import Sequence

from reactor.backends.base import BackendRequest, Completion, CompletionStream
from reactor.config import FORCED_FINALIZE_PROMPT
from reactor.planner.grammar import render_value

GIVE_UP_ANSWER = "I could not complete the task."
UNAVAILABLE_MARK = "tool unavailable"

_ACTION_LINE = re.compile(r"^Action: ([^\W\d]\w*)\(", re.MULTILINE)
_RESULT_LINE = re.compile(r"^(Observation|Error): ([^\W\d]\w*): (.*)$", re.MULTILINE)


class FallbackPolicyBackend:
    """Calls tools in order of preference and replans after failures."""

    def __init__(
        self,
        tools: Sequence[str],
        query: str = "lookup",
        replan: bool = True,
        finalize_marker: str = FORCED_FINALIZE_PROMPT.split(".", maxsplit=1)[0],
    ):
        """
        Initialize the policy.

        :param tools: Tool names, most preferred first; each takes a `query` argument.
        :param query: Query passed to every call.
        :param replan: Move to the next tool after an error instead of giving up.
        :param finalize_marker: Text identifying the forced-finalize prompt.
        """
        if not tools:
            raise ValueError("a fallback policy needs at least one tool")
        self.tools = list(tools)
        self.query = query
        self.replan = replan
        self.finalize_marker = finalize_marker

    def decide(self, prompt: str) -> str:
        """Planner text for a prompt."""
        results = _RESULT_LINE.findall(prompt)
        succeeded = [
            text
            for kind, _tool, text in results
            if kind == "Observation" and not text.startswith(UNAVAILABLE_MARK)
        ]
        if succeeded:
            return f"Thought: The lookup succeeded.\nFinal Answer: {succeeded[-1]}"
        if self.finalize_marker in prompt:
            return f"Final Answer: {GIVE_UP_ANSWER}"
        if not results:
            return self._call(self.tools[0], "Start with the preferred tool.")
        if not self.replan:
            return f"Thought: The tool failed and I will not retry.\nFinal Answer: {GIVE_UP_ANSWER}"
        called = _ACTION_LINE.findall(prompt)
        last = called[-1] if called else self.tools[0]
        index = self.tools.index(last) if last in self.tools else -1
        return self._call(
            self.tools[(index + 1) % len(self.tools)], f"{last} failed, so I replan."
        )

    def complete(self, request: BackendRequest) -> Completion:
        return Completion.estimated(request.prompt, self.decide(request.prompt))

    def stream(self, request: BackendRequest) -> CompletionStream:
        return CompletionStream(request.prompt, [self.decide(request.prompt)])

    def _call(self, tool: str, thought: str) -> str:
        return f"Thought: {thought}\nAction: {tool}(query={render_value(self.query)})"
