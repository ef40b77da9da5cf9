"""Seeded fault injection at the tool invocation boundary."""

from __future__ import annotations

import random
import threading
from collections.abc import Mapping


class FaultInjector:
    """
    Decides which calls fail, reproducibly for a given seed.

    Decisions are drawn when a group is dispatched, in request order, so the
    same workload and seed always fail the same calls whatever the thread timing.
    """

    def __init__(
        self,
        failure_probability: float | Mapping[str, float],
        seed: int | None = None,
    ):
        """
        Initialize the injector.

        :param failure_probability: One probability for every tool, or one per tool name.
        :param seed: Seed of the generator.
        """
        self._probabilities = failure_probability
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self.injected = 0

    def probability(self, tool: str) -> float:
        """Failure probability of a tool."""
        if isinstance(self._probabilities, Mapping):
            return float(self._probabilities.get(tool, 0.0))
        return float(self._probabilities)

    def should_fail(self, tool: str) -> bool:
        """Draw the decision for one call."""
        probability = self.probability(tool)
        with self._lock:
            draw = self._rng.random()
            failed = draw < probability
            if failed:
                self.injected += 1
        return failed
