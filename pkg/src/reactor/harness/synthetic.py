"""
Synthetic tools for experiments and offline end-to-end runs.

A synthetic tool sleeps for a seeded latency and renders a response template
from its arguments. Every call is recorded with its start and end time, the
arguments and the attachment excerpt it received, so experiments can measure
overlap, concurrency high-water marks and released data.
"""

from __future__ import annotations

import random
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

from reactor.dispatcher.faults import FaultInjector
from reactor.dispatcher.invokers import InProcessInvoker
from reactor.errors import ConfigError
from reactor.registry.descriptors import (
    Locality,
    ParamSpec,
    SemanticType,
    ToolDescriptor,
    TypeSignature,
)


@dataclass(frozen=True)
class Latency:
    """Fixed latency, or uniform between `low` and `high` seconds."""

    low: float
    high: float | None = None

    def __post_init__(self):
        if self.low < 0 or (self.high is not None and self.high < self.low):
            raise ConfigError(f"invalid latency range {self.low}..{self.high}")

    @classmethod
    def parse(cls, raw: Any) -> Latency:
        """Read `0.2`, `[0.1, 0.3]` or `{uniform: [0.1, 0.3]}`."""
        if isinstance(raw, Latency):
            return raw
        if isinstance(raw, dict) and "uniform" in raw:
            raw = raw["uniform"]
        if isinstance(raw, (list, tuple)) and len(raw) == 2:
            return cls(float(raw[0]), float(raw[1]))
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return cls(float(raw))
        raise ConfigError(f"cannot read latency {raw!r}")

    def draw(self, rng: random.Random) -> float:
        if self.high is None:
            return self.low
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class SyntheticToolSpec:  # pylint: disable=too-many-instance-attributes
    """Describes a synthetic tool and how it behaves."""

    name: str
    latency: Latency = Latency(0.0)
    failure_probability: float = 0.0
    response_template: str = "{tool} done"
    max_parallel: int = 1
    cost_per_1k_tokens: Decimal | None = None
    params: tuple[ParamSpec, ...] = ()
    locality: Locality = Locality.LOCAL
    accepts_attachments: bool = False
    description: str = ""
    timeout_seconds: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ConfigError(f"failure_probability of {self.name} must be within [0, 1]")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> SyntheticToolSpec:
        """Build a spec from a scenario document entry."""
        if not isinstance(doc, dict) or not isinstance(doc.get("name"), str):
            raise ConfigError(f"a synthetic tool needs a name: {doc!r}")
        params = tuple(
            ParamSpec(
                name=param["name"],
                type=SemanticType.parse(param.get("type", "string"), "params.type"),
                required=bool(param.get("required", True)),
                description=param.get("description", ""),
            )
            for param in doc.get("params", [])
        )
        cost = doc.get("cost_per_1k_tokens")
        return cls(
            name=doc["name"],
            latency=Latency.parse(doc.get("latency", 0.0)),
            failure_probability=float(doc.get("failure_probability", 0.0)),
            response_template=doc.get("response", "{tool} done"),
            max_parallel=int(doc.get("max_parallel", 1)),
            cost_per_1k_tokens=None if cost is None else Decimal(str(cost)),
            params=params,
            locality=Locality(doc.get("locality", Locality.LOCAL.value)),
            accepts_attachments=bool(doc.get("accepts_attachments", False)),
            description=doc.get("description", ""),
            timeout_seconds=doc.get("timeout_seconds"),
        )

    def descriptor(self, endpoint: str) -> ToolDescriptor:
        """Registry descriptor of the tool served at `endpoint`."""
        return ToolDescriptor(
            name=self.name,
            description=self.description or f"synthetic tool {self.name}",
            endpoint=endpoint,
            signature=TypeSignature(params=self.params),
            max_parallel=self.max_parallel,
            cost_per_1k_tokens=self.cost_per_1k_tokens,
            locality=self.locality,
            timeout_seconds=self.timeout_seconds,
            accepts_attachments=self.accepts_attachments,
        )


@dataclass(frozen=True)
class CallRecord:
    """One finished call of a synthetic tool."""

    tool: str
    start: float
    end: float
    args: dict[str, Any]
    context: dict[str, Any] | None = None

    def overlaps(self, other: CallRecord) -> bool:
        return self.start < other.end and other.start < self.end


@dataclass
class CallRecorder:
    """Collects calls of every synthetic tool and tracks concurrency."""

    clock: Callable[[], float] = time.monotonic
    calls: list[CallRecord] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()
        self._active: dict[str, int] = {}
        self._high_water: dict[str, int] = {}

    def enter(self, tool: str) -> float:
        with self._lock:
            active = self._active.get(tool, 0) + 1
            self._active[tool] = active
            self._high_water[tool] = max(self._high_water.get(tool, 0), active)
        return self.clock()

    def leave(self, record: CallRecord) -> None:
        with self._lock:
            self._active[record.tool] -= 1
            self.calls.append(record)

    def high_water(self, tool: str) -> int:
        """Most calls of `tool` ever running at once."""
        with self._lock:
            return self._high_water.get(tool, 0)

    def calls_of(self, tool: str) -> list[CallRecord]:
        with self._lock:
            return sorted((call for call in self.calls if call.tool == tool), key=lambda c: c.start)

    def any_overlap(self, tool: str) -> bool:
        """Whether two calls of `tool` ever ran at the same time."""
        calls = self.calls_of(tool)
        return any(a.overlaps(b) for i, a in enumerate(calls) for b in calls[i + 1 :])


class _Defaulting(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


class SyntheticTool:
    """In-process handler implementing a `SyntheticToolSpec`."""

    def __init__(
        self,
        spec: SyntheticToolSpec,
        recorder: CallRecorder,
        seed: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
        respond: Callable[[dict[str, Any]], str] | None = None,
    ):
        """
        Initialize the tool.

        :param spec: Behaviour of the tool.
        :param recorder: Receives a record of every call.
        :param seed: Seed of the latency generator.
        :param sleep: Waits out the drawn latency.
        :param respond: Computes the result text instead of the template.
        """
        self.spec = spec
        self.recorder = recorder
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()
        self._sleep = sleep
        self._respond = respond

    def __call__(self, document: dict[str, Any]) -> dict[str, Any]:
        args = dict(document.get("args") or {})
        context = document.get("context")
        with self._rng_lock:
            latency = self.spec.latency.draw(self._rng)
        start = self.recorder.enter(self.spec.name)
        try:
            self._sleep(latency)
            text = self._respond(document) if self._respond else self.render(args, context)
        finally:
            self.recorder.leave(
                CallRecord(self.spec.name, start, self.recorder.clock(), args, context)
            )
        return {"result": text}

    def render(self, args: dict[str, Any], context: dict[str, Any] | None) -> str:
        values = _Defaulting(args)
        values["tool"] = self.spec.name
        values["context"] = context["text"] if context else ""
        return self.spec.response_template.format_map(values)


def install_tools(
    specs: list[SyntheticToolSpec],
    invoker: InProcessInvoker,
    recorder: CallRecorder,
    seed: int | None = None,
) -> list[ToolDescriptor]:
    """
    Register a handler per spec on `invoker`.

    :return: Descriptors pointing at the handlers, ready for the registry.
    """
    descriptors = []
    for index, spec in enumerate(specs):
        tool_seed = None if seed is None else seed * 1000 + index
        endpoint = invoker.register(spec.name, SyntheticTool(spec, recorder, seed=tool_seed))
        descriptors.append(spec.descriptor(endpoint))
    return descriptors


def spec_fault_injector(
    specs: list[SyntheticToolSpec],
    seed: int | None = None,
) -> FaultInjector | None:
    """
    Injector failing calls at each spec's `failure_probability`.

    Failures are decided at the dispatcher's invocation boundary, not inside
    the handlers, so they travel the same error path as real tool failures.
    """
    probabilities = {
        spec.name: spec.failure_probability for spec in specs if spec.failure_probability
    }
    if not probabilities:
        return None
    return FaultInjector(probabilities, seed=seed)
