"""
Token and dollar accounting of a session.

Planner dollars follow the completion-pricing formula

    prompt_tokens / 1000 * prompt_rate + completion_tokens / 1000 * completion_rate

summed over every backend call; tool dollars price the tokens each tool
consumed at that tool's `cost_per_1k_tokens`. Amounts are `Decimal` so totals
match hand arithmetic exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from decimal import Decimal
from typing import Any

_THOUSAND = Decimal(1000)


@dataclass(frozen=True)
class PricingRates:
    """Dollar rates per 1000 planner tokens."""

    prompt: Decimal = Decimal("0.005")
    completion: Decimal = Decimal("0.015")

    @classmethod
    def of(cls, prompt: float | str | Decimal, completion: float | str | Decimal) -> PricingRates:
        """Build rates from config values without float rounding."""
        return cls(prompt=Decimal(str(prompt)), completion=Decimal(str(completion)))


class CostLedger:
    """Running token totals and dollar estimate of one session."""

    def __init__(self, rates: PricingRates | None = None):
        """
        Initialize an empty ledger.

        :param rates: Planner pricing; the default rates when omitted.
        """
        self.rates = rates or PricingRates()
        self._lock = threading.Lock()
        self._calls: list[tuple[int, int]] = []
        self._tool_tokens: dict[str, int] = {}
        self._tool_rates: dict[str, Decimal] = {}

    def record(self, prompt_tokens: int, completion_tokens: int) -> None:
        """Add one backend call."""
        if prompt_tokens < 0 or completion_tokens < 0:
            raise ValueError("token counts must be non-negative")
        with self._lock:
            self._calls.append((prompt_tokens, completion_tokens))

    def record_tool(self, tool: str, tokens: int, rate: Decimal | None = None) -> None:
        """Add tokens consumed by one tool call, priced at `rate` per 1000 tokens."""
        if tokens < 0:
            raise ValueError("token counts must be non-negative")
        with self._lock:
            self._tool_tokens[tool] = self._tool_tokens.get(tool, 0) + tokens
            if rate is not None:
                self._tool_rates[tool] = rate

    @property
    def backend_calls(self) -> int:
        """Number of recorded backend calls."""
        with self._lock:
            return len(self._calls)

    @property
    def calls(self) -> tuple[tuple[int, int], ...]:
        """(prompt, completion) tokens of every backend call, in order."""
        with self._lock:
            return tuple(self._calls)

    @property
    def prompt_tokens(self) -> int:
        """Prompt tokens over all backend calls."""
        with self._lock:
            return sum(prompt for prompt, _ in self._calls)

    @property
    def completion_tokens(self) -> int:
        """Completion tokens over all backend calls."""
        with self._lock:
            return sum(completion for _, completion in self._calls)

    @property
    def tool_tokens(self) -> dict[str, int]:
        """Tokens per tool."""
        with self._lock:
            return dict(self._tool_tokens)

    @property
    def planner_dollars(self) -> Decimal:
        """Planner cost under the ledger's rates."""
        return (
            Decimal(self.prompt_tokens) / _THOUSAND * self.rates.prompt
            + Decimal(self.completion_tokens) / _THOUSAND * self.rates.completion
        )

    @property
    def tool_dollars(self) -> Decimal:
        """Cost of tools that declare a price."""
        with self._lock:
            return sum(
                (
                    Decimal(tokens) / _THOUSAND * self._tool_rates[tool]
                    for tool, tokens in self._tool_tokens.items()
                    if tool in self._tool_rates
                ),
                Decimal(0),
            )

    @property
    def dollars(self) -> Decimal:
        """Total estimate: planner plus tools."""
        return self.planner_dollars + self.tool_dollars

    def to_dict(self) -> dict[str, Any]:
        """Cost summary for reports and the HTTP API."""
        return {
            "backend_calls": self.backend_calls,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "tool_tokens": self.tool_tokens,
            "planner_dollars": str(self.planner_dollars),
            "tool_dollars": str(self.tool_dollars),
            "dollars": str(self.dollars),
        }


def record_tokens(ledger: CostLedger, prompt_tokens: int, completion_tokens: int) -> CostLedger:
    """
    Add one backend call's token counts to a ledger.

    :return: The same ledger, updated.
    """
    ledger.record(prompt_tokens, completion_tokens)
    return ledger
