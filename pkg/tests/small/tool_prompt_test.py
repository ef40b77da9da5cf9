"""Unit tests for the tool list rendered into planner prompts."""

from decimal import Decimal

from reactor.registry.descriptors import SemanticType
from reactor.registry.prompt import NO_TOOLS_TEXT, cost_tiers, render_tool_prompt
from reactor.registry.registry import ToolRegistry

from tests.small.conftest import make_descriptor


def test_no_tools(registry: ToolRegistry):
    """Should tell the planner to answer directly when nothing is registered."""
    assert render_tool_prompt(registry.snapshot()) == NO_TOOLS_TEXT


def test_renders_available_tools_in_order(registry: ToolRegistry):
    """Should list available tools with their signatures and skip removed ones."""
    registry.add(make_descriptor("PDFReader", params=(("page", SemanticType.INTEGER),)))
    registry.add(make_descriptor("Gone"))
    registry.add(make_descriptor("Lookup"))
    registry.remove("Gone")

    assert render_tool_prompt(registry.snapshot()) == (
        "You have the following tools:\n"
        "- PDFReader(page: integer) -> string: PDFReader tool\n"
        "- Lookup(query: string) -> string: Lookup tool"
    )


def test_cost_tiers_by_rank(registry: ToolRegistry):
    """Should annotate costed tools with low, medium and high by rank."""
    registry.add(make_descriptor("Pricey", cost_per_1k_tokens=Decimal("0.03")))
    registry.add(make_descriptor("Cheap", cost_per_1k_tokens=Decimal("0.001")))
    registry.add(make_descriptor("Middle", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("Unpriced"))

    prompt = render_tool_prompt(registry.snapshot())

    assert "- Pricey(query: string) -> string: Pricey tool [cost: high]" in prompt
    assert "- Cheap(query: string) -> string: Cheap tool [cost: low]" in prompt
    assert "- Middle(query: string) -> string: Middle tool [cost: medium]" in prompt
    assert prompt.endswith("- Unpriced(query: string) -> string: Unpriced tool")
    assert "0.03" not in prompt


def test_cost_tiers_ties_share_first_rank(registry: ToolRegistry):
    """Should give equally priced tools the tier of their first rank."""
    registry.add(make_descriptor("A", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("B", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("C", cost_per_1k_tokens=Decimal("0.05")))

    assert cost_tiers(registry.snapshot().available()) == {"A": "low", "B": "low", "C": "high"}


def test_cost_tiers_split_ranks_in_thirds(registry: ToolRegistry):
    """Should give each third of the costed tools, by rank, its own tier."""
    for index, name in enumerate("ABCDEF"):
        registry.add(make_descriptor(name, cost_per_1k_tokens=Decimal(index + 1) / 100))

    assert cost_tiers(registry.snapshot().available()) == {
        "A": "low",
        "B": "low",
        "C": "medium",
        "D": "medium",
        "E": "high",
        "F": "high",
    }


def test_cost_tiers_of_four_tools(registry: ToolRegistry):
    """Should keep a single tool in the top tier when four tools are costed."""
    for index, name in enumerate("ABCD"):
        registry.add(make_descriptor(name, cost_per_1k_tokens=Decimal(index + 1) / 100))

    tiers = cost_tiers(registry.snapshot().available())

    assert [tiers[name] for name in "ABCD"] == ["low", "low", "medium", "high"]


def test_single_costed_tool_has_no_tier(registry: ToolRegistry):
    """Should not rank a tool that has nothing to be compared with."""
    registry.add(make_descriptor("A", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("B"))

    assert "[cost:" not in render_tool_prompt(registry.snapshot())


def test_cost_hints_disabled(registry: ToolRegistry):
    """Should omit tiers when cost hints are off."""
    registry.add(make_descriptor("A", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("B", cost_per_1k_tokens=Decimal("0.02")))

    assert "[cost:" not in render_tool_prompt(registry.snapshot(), cost_hints=False)


def test_rendering_is_deterministic(registry: ToolRegistry):
    """Should render equal snapshots to identical text."""
    registry.add(make_descriptor("A", cost_per_1k_tokens=Decimal("0.01")))
    registry.add(make_descriptor("B", cost_per_1k_tokens=Decimal("0.02")))

    assert render_tool_prompt(registry.snapshot()) == render_tool_prompt(registry.snapshot())
