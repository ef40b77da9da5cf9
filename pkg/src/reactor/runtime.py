"""Wiring of one engine instance: registry, dispatcher, event bus and planner."""

from __future__ import annotations

import logging
from decimal import Decimal

from reactor.backends.base import PlannerBackend
from reactor.backends.http_client import HttpCompletionBackend
from reactor.backends.scripted import ScriptedBackend, load_script
from reactor.config import BackendConfig, ServiceConfig
from reactor.dispatcher.dispatcher import Dispatcher
from reactor.dispatcher.faults import FaultInjector
from reactor.dispatcher.invokers import InProcessInvoker, RoutingInvoker
from reactor.errors import ConfigError
from reactor.observability.event_bus import EventBus
from reactor.observability.notifier import SessionNotifier
from reactor.planner.engine import Planner
from reactor.registry.loader import load_registry_file
from reactor.registry.registry import ToolRegistry


logger = logging.getLogger(__name__)


def build_backend(config: BackendConfig) -> PlannerBackend:
    """Create the configured planner backend."""
    if config.kind == "http":
        return HttpCompletionBackend.from_config(config)
    if config.script is None:
        raise ConfigError("backend.script is required for the scripted backend")
    return ScriptedBackend(load_script(config.script), chunk_size=config.chunk_size)


class Engine:  # pylint: disable=too-many-instance-attributes
    """Every collaborator of a running engine, wired together."""

    def __init__(
        self,
        config: ServiceConfig | None = None,
        backend: PlannerBackend | None = None,
        invoker: RoutingInvoker | None = None,
        registry: ToolRegistry | None = None,
        fault_injector: FaultInjector | None = None,
    ):
        """
        Initialize the engine.

        :param config: Service configuration; defaults when None.
        :param backend: Planner backend; built from `config.backend` when None.
        :param invoker: Tool transport; in-process plus HTTP when None.
        :param registry: Registry to share; a fresh one when None.
        :param fault_injector: Fails selected tool calls.
        """
        self.config = config or ServiceConfig()
        ceiling = self.config.cost_ceiling
        self.registry = registry or ToolRegistry(
            cost_ceiling=None if ceiling is None else Decimal(str(ceiling))
        )
        self.invoker = invoker or RoutingInvoker()
        self.bus = EventBus(
            trace_dir=self.config.trace_dir, retained_sessions=self.config.retained_sessions
        )
        self.notifier = SessionNotifier(self.bus)
        self.registry.notifier = self.notifier

        dispatcher_config = self.config.dispatcher
        self.dispatcher = Dispatcher(
            self.registry,
            invoker=self.invoker,
            worker_limit=dispatcher_config.worker_limit,
            default_timeout=dispatcher_config.default_timeout_seconds,
            failure_threshold=dispatcher_config.failure_threshold,
            cooldown_seconds=dispatcher_config.cooldown_seconds,
            sequential=dispatcher_config.sequential,
            fault_injector=fault_injector,
        )
        self.dispatcher.notifier = self.notifier

        self.backend = backend if backend is not None else build_backend(self.config.backend)
        self.planner = Planner(self.registry, self.dispatcher, self.backend, self.config.session)
        self.planner.notifier = self.notifier

        if self.config.registry_file:
            added = load_registry_file(self.registry, self.config.registry_file)
            logger.info("Loaded %d tools from %s", len(added), self.config.registry_file)

    @property
    def inproc(self) -> InProcessInvoker:
        """In-process tool handlers."""
        return self.invoker.inproc

    def shutdown(self) -> None:
        """Stop the dispatcher's workers."""
        self.dispatcher.shutdown()
