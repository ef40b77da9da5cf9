"""Rendering of the tool list shown to the planner."""

from __future__ import annotations

from reactor.registry.descriptors import ToolDescriptor
from reactor.registry.registry import RegistrySnapshot

NO_TOOLS_TEXT = "No tools are available. Answer from your own knowledge."
COST_TIERS = ("low", "medium", "high")


def render_tool_prompt(snapshot: RegistrySnapshot, cost_hints: bool = True) -> str:
    """
    Render the tool fragment of the planner prompt.

    Only available tools are listed, in registration order. When at least two
    listed tools carry cost metadata, each of them is annotated with a relative
    tier (low/medium/high by rank) rather than its raw price.

    :param snapshot: Registry snapshot taken at the turn boundary.
    :param cost_hints: Whether to annotate relative cost.
    :return: Deterministic prompt fragment.
    """
    tools = snapshot.available()
    if not tools:
        return NO_TOOLS_TEXT

    tiers = cost_tiers(tools) if cost_hints else {}
    lines = ["You have the following tools:"]
    for tool in tools:
        line = f"- {tool.name}{tool.signature.render()}"
        if tool.description:
            line += f": {tool.description}"
        tier = tiers.get(tool.name)
        if tier is not None:
            line += f" [cost: {tier}]"
        lines.append(line)
    return "\n".join(lines)


def cost_tiers(tools: tuple[ToolDescriptor, ...]) -> dict[str, str]:
    """
    Assign a cost tier to every tool with cost metadata.

    Ranks are split into thirds, cheapest first. Ties share the tier of their
    first rank; with fewer than two costed tools there is nothing to compare
    and no tier is assigned.
    """
    costed = [tool for tool in tools if tool.cost_per_1k_tokens is not None]
    if len(costed) < 2:
        return {}
    costs = sorted(tool.cost_per_1k_tokens for tool in costed)  # type: ignore[type-var]
    tiers = {}
    for tool in costed:
        rank = costs.index(tool.cost_per_1k_tokens)  # type: ignore[arg-type]
        tiers[tool.name] = COST_TIERS[(3 * rank) // len(costs)]
    return tiers
