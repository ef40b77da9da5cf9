"""Shared pytest fixtures for reactor unit tests."""

import threading
from collections.abc import Callable, Generator, Sequence
from typing import Any
from unittest.mock import Mock

import pytest

from reactor.backends.base import BackendRequest, Completion, CompletionStream
from reactor.backends.scripted import ScriptedBackend, ScriptStep
from reactor.config import SessionConfig
from reactor.dispatcher.dispatcher import Dispatcher
from reactor.dispatcher.invokers import InProcessInvoker, RoutingInvoker
from reactor.observability.event_bus import EventBus
from reactor.observability.notifier import SessionNotifier
from reactor.planner.engine import Planner
from reactor.registry.descriptors import ParamSpec, SemanticType, ToolDescriptor, TypeSignature
from reactor.registry.registry import ToolRegistry


class FakeClock:
    """Clock that only moves when a test advances it."""

    def __init__(self, now: float = 100.0):
        self.now = now

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


class BlockingBackend:
    """Planner backend that answers only once released, so sessions stay running."""

    def __init__(self):
        self.release = threading.Event()

    def complete(self, request: BackendRequest) -> Completion:
        self.release.wait(5)
        return Completion.estimated(request.prompt, "Final Answer: released")

    def stream(self, request: BackendRequest) -> CompletionStream:
        self.release.wait(5)
        return CompletionStream(request.prompt, ["Final Answer: released"])


def make_descriptor(
    name: str = "Lookup",
    params: Sequence[tuple[str, SemanticType]] = (("query", SemanticType.STRING),),
    max_input_chars: int | None = None,
    **fields: Any,
) -> ToolDescriptor:
    """Descriptor of an in-process tool with required parameters."""
    return ToolDescriptor(
        name=name,
        description=f"{name} tool",
        endpoint=f"inproc://{name}",
        signature=TypeSignature(
            params=tuple(ParamSpec(param, kind) for param, kind in params),
            max_input_chars=max_input_chars,
        ),
        **fields,
    )


def echo(document: dict[str, Any]) -> dict[str, Any]:
    """In-process handler answering with its arguments."""
    args = document["args"]
    return {"result": "echo " + " ".join(str(value) for value in args.values())}


@pytest.fixture
def clock() -> FakeClock:
    """Provide a manually advanced clock."""
    return FakeClock()


@pytest.fixture
def registry(clock: FakeClock) -> ToolRegistry:  # noqa: WPS442
    """Provide an empty registry on the fake clock."""
    return ToolRegistry(clock=clock)


@pytest.fixture
def notifier_mock() -> Mock:
    """Provide a mock instance of the SessionNotifier interface."""
    return Mock(spec=SessionNotifier)


@pytest.fixture
def inproc() -> InProcessInvoker:
    """Provide an invoker without handlers."""
    return InProcessInvoker()


@pytest.fixture
def dispatcher(
    registry: ToolRegistry,  # noqa: WPS442
    inproc: InProcessInvoker,  # noqa: WPS442
) -> Generator[Dispatcher, None, None]:
    """Provide a dispatcher over the registry and the in-process handlers."""
    instance = Dispatcher(registry, invoker=RoutingInvoker(inproc), default_timeout=2.0)
    yield instance
    instance.shutdown()


@pytest.fixture
def add_tool(
    registry: ToolRegistry,  # noqa: WPS442
    inproc: InProcessInvoker,  # noqa: WPS442
) -> Callable[..., ToolDescriptor]:
    """Provide a helper registering a descriptor together with its handler."""

    def add(name: str = "Lookup", handler=echo, **fields: Any) -> ToolDescriptor:
        descriptor = make_descriptor(name, **fields)
        inproc.register(name, handler)
        registry.add(descriptor)
        return descriptor

    return add


@pytest.fixture
def make_planner(
    registry: ToolRegistry,  # noqa: WPS442
    dispatcher: Dispatcher,  # noqa: WPS442
) -> Callable[..., Planner]:
    """Provide a factory of planners driven by a script."""

    def make(steps: Sequence[ScriptStep | str], chunk_size: int | None = None, **config: Any):
        backend = ScriptedBackend(steps, chunk_size=chunk_size)
        return Planner(registry, dispatcher, backend, SessionConfig(**config))

    return make


@pytest.fixture
def bus() -> EventBus:
    """Provide an in-memory event bus."""
    return EventBus()
