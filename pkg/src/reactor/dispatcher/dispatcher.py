"""
Dispatcher module: concurrent, capacity-gated execution of tool calls.

A group of requests is checked in the caller's thread (registry status,
minimal-context rules, fault injection), then each request leases a slot of
its tool. A granted lease submits the call to a shared thread pool; the
deadline timer is armed when a worker starts the call. Whichever of the call
or the timer finishes first resolves the request's handle and records the
outcome. The lease is held until the tool actually returns, so a timed-out
call still counts against max_parallel. Its late result is dropped and
reported.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from reactor.common import (
    DEFAULT_COOLDOWN_SECONDS,
    DEFAULT_FAILURE_THRESHOLD,
    DEFAULT_TOOL_TIMEOUT_SECONDS,
    DEFAULT_WORKER_LIMIT,
    estimate_tokens,
    monotonic_clock,
)
from reactor.dispatcher.failures import FailureTracker
from reactor.dispatcher.faults import FaultInjector
from reactor.dispatcher.invokers import RoutingInvoker, ToolInvoker, read_response
from reactor.dispatcher.privacy import AttachmentStore, enforce_minimal_context
from reactor.dispatcher.requests import DispatchHandle, DispatchRequest, DispatchResult, Outcome
from reactor.errors import (
    CapacityExhaustedError,
    PrivacyViolationError,
    ToolInvocationError,
    ToolNotFoundError,
    ToolUnavailableError,
)
from reactor.observability.notifier import NullNotifier, SessionNotifier
from reactor.registry.descriptors import ToolDescriptor, ToolStatus
from reactor.registry.registry import ToolRegistry
from reactor.registry.validation import ValidatedAction


logger = logging.getLogger(__name__)

INJECTED_FAILURE_MESSAGE = "injected failure"


class Dispatcher:
    """Executes validated actions under capacity leases, deadlines and privacy rules."""

    def __init__(
        self,
        registry: ToolRegistry,
        invoker: ToolInvoker | None = None,
        attachments: AttachmentStore | None = None,
        worker_limit: int = DEFAULT_WORKER_LIMIT,
        default_timeout: float = DEFAULT_TOOL_TIMEOUT_SECONDS,
        failure_threshold: int = DEFAULT_FAILURE_THRESHOLD,
        cooldown_seconds: float = DEFAULT_COOLDOWN_SECONDS,
        sequential: bool = False,
        fault_injector: FaultInjector | None = None,
    ):
        """
        Initialize the dispatcher.

        :param registry: Registry the calls are checked and leased against.
        :param invoker: Transport to the tools.
        :param attachments: Session attachments for page-scoped context.
        :param worker_limit: Threads shared by all tools.
        :param default_timeout: Deadline for tools without their own.
        :param failure_threshold: Consecutive failures before quarantine.
        :param cooldown_seconds: Quarantine length.
        :param sequential: Run the requests of a group one after another.
        :param fault_injector: Fails selected calls at the invocation boundary.
        """
        self.registry = registry
        self.invoker = invoker or RoutingInvoker()
        self.attachments = attachments or AttachmentStore()
        self.default_timeout = default_timeout
        self.sequential = sequential
        self.fault_injector = fault_injector
        self._notifier: SessionNotifier = NullNotifier()
        self.tracker = FailureTracker(
            registry,
            threshold=failure_threshold,
            cooldown_seconds=cooldown_seconds,
            notifier=self._notifier,
        )
        self._executor = ThreadPoolExecutor(
            max_workers=worker_limit, thread_name_prefix="reactor-tool"
        )
        self._clock = monotonic_clock

    @property
    def notifier(self) -> SessionNotifier:
        """Get the notifier used for quarantine and dropped-result events."""
        return self._notifier

    @notifier.setter
    def notifier(self, value: SessionNotifier) -> None:
        """Set the notifier used for quarantine and dropped-result events."""
        self._notifier = value
        self.tracker.notifier = value

    def make_request(
        self,
        validated: ValidatedAction,
        session_id: str,
    ) -> DispatchRequest:
        """Turn a validated action into a request with the tool's deadline."""
        descriptor = validated.descriptor
        deadline = descriptor.timeout_seconds or self.default_timeout
        return DispatchRequest(
            action=validated.action,
            payload=validated.payload,
            deadline=deadline,
            session_id=session_id,
            group=validated.action.group,
            args=dict(validated.args),
        )

    def dispatch_group(self, requests: list[DispatchRequest]) -> list[DispatchResult]:
        """
        Dispatch a group and wait for every result.

        :return: One result per request, in request order.
        """
        return [self._wait(handle) for handle in self.submit_group(requests)]

    def submit_group(self, requests: list[DispatchRequest]) -> list[DispatchHandle]:
        """
        Dispatch a group without waiting for it.

        In sequential mode each call is awaited before the next one is leased,
        so the returned handles are all resolved.

        :return: One handle per request, in request order.
        """
        snapshot = self.registry.snapshot()
        handles = []
        for request in requests:
            handle = DispatchHandle(request)
            handles.append(handle)
            descriptor = snapshot.get(request.tool)
            if descriptor is None or not snapshot.is_dispatchable(request.tool):
                self._refuse(handle, Outcome.UNAVAILABLE, _unavailable_reason(descriptor))
                continue
            try:
                approved = enforce_minimal_context(request, descriptor, self.attachments)
            except PrivacyViolationError as err:
                self._refuse(handle, Outcome.PRIVACY_VIOLATION, str(err))
                continue
            if self.fault_injector is not None and self.fault_injector.should_fail(request.tool):
                approved = replace(approved, inject_failure=True)
            handle.request = approved
            self._lease(handle, descriptor)
            if self.sequential:
                handle.wait()
        return handles

    def invoke_tool(self, request: DispatchRequest) -> DispatchResult:
        """
        Invoke one tool under a capacity lease the caller already holds.

        The lease is released once the tool returns, even after a timeout.
        """
        descriptor = self.registry.snapshot().get(request.tool)
        handle = DispatchHandle(request)
        if descriptor is None:
            self.registry.release_capacity(request.tool)
            self._refuse(handle, Outcome.UNAVAILABLE, _unavailable_reason(None))
        else:
            self._start(handle, descriptor)
        return self._wait(handle)

    def shutdown(self, wait: bool = False) -> None:
        """Stop accepting calls; running calls are abandoned unless `wait`."""
        self._executor.shutdown(wait=wait, cancel_futures=True)

    def _lease(self, handle: DispatchHandle, descriptor: ToolDescriptor) -> None:
        try:
            self.registry.lease_capacity(
                descriptor.name,
                on_grant=lambda _ticket: self._start(handle, descriptor),
            )
        except ToolNotFoundError:
            self._refuse(handle, Outcome.UNAVAILABLE, _unavailable_reason(None))
        except ToolUnavailableError as err:
            self._refuse(handle, Outcome.UNAVAILABLE, err.status)
        except CapacityExhaustedError as err:
            self._refuse(handle, Outcome.CAPACITY_EXHAUSTED, str(err))

    def _start(self, handle: DispatchHandle, descriptor: ToolDescriptor) -> None:
        """Queue the call of a granted lease on the tool pool."""
        try:
            future = self._executor.submit(self._invoke, handle, descriptor)
        except RuntimeError:
            self.registry.release_capacity(handle.request.tool)
            self._stopped(handle)
            return
        future.add_done_callback(
            lambda done: self._cancelled(handle) if done.cancelled() else None
        )

    def _invoke(self, handle: DispatchHandle, descriptor: ToolDescriptor) -> None:
        """Run one call on a worker; the lease is held until the tool returns."""
        request = handle.request
        if handle.resolved():
            self.registry.release_capacity(request.tool)
            logger.debug("Skipping %s in group %s: already resolved", request.tool, request.group)
            return
        started = self._clock()
        timer = threading.Timer(
            request.deadline, self._expire, args=(handle, descriptor, started)
        )
        timer.daemon = True
        timer.start()
        try:
            if request.context is not None:
                self.attachments.record_release(
                    request.session_id, descriptor.locality, request.context.size
                )
            outcome, text, tokens = self._call_tool(request, descriptor)
        finally:
            timer.cancel()
            self.registry.release_capacity(request.tool)
        elapsed = self._clock() - started
        if tokens is None:
            tokens = estimate_tokens(request.payload + text)
        result = DispatchResult(request.group, request.tool, outcome, text, elapsed, tokens)
        if not self._finish(handle, result, invoked=True):
            logger.warning(
                "Result of %s arrived after %.3fs, past its %.3fs deadline; dropped",
                request.tool,
                elapsed,
                request.deadline,
            )
            self.notifier.send_dropped_result(
                request.session_id, request.tool, request.group, elapsed
            )

    def _call_tool(
        self, request: DispatchRequest, descriptor: ToolDescriptor
    ) -> tuple[Outcome, str, int | None]:
        if request.inject_failure:
            return Outcome.TOOL_ERROR, INJECTED_FAILURE_MESSAGE, 0
        try:
            response = self.invoker.invoke(descriptor, request.wire_document(), request.deadline)
        except ToolInvocationError as err:
            outcome = Outcome.UNAVAILABLE if err.unavailable else Outcome.TOOL_ERROR
            return outcome, str(err), 0
        except Exception as err:  # noqa: BLE001 # pylint: disable=broad-exception-caught
            logger.exception("Tool %s raised", request.tool)
            return Outcome.TOOL_ERROR, f"{type(err).__name__}: {err}", 0
        ok, text, tokens = read_response(response)
        return (Outcome.OK if ok else Outcome.TOOL_ERROR), text, tokens

    def _expire(self, handle: DispatchHandle, descriptor: ToolDescriptor, started: float) -> None:
        request = handle.request
        result = DispatchResult(
            request.group,
            request.tool,
            Outcome.TIMEOUT,
            f"no result within {request.deadline:g}s",
            self._clock() - started,
        )
        if self._finish(handle, result, invoked=True):
            logger.info("Call to %s timed out after %.3fs", descriptor.name, request.deadline)

    def _cancelled(self, handle: DispatchHandle) -> None:
        """A queued call dropped by `shutdown` still holds its lease."""
        self.registry.release_capacity(handle.request.tool)
        self._stopped(handle)

    def _stopped(self, handle: DispatchHandle) -> None:
        self._refuse(handle, Outcome.UNAVAILABLE, "dispatcher stopped")

    def _refuse(self, handle: DispatchHandle, outcome: Outcome, message: str) -> None:
        request = handle.request
        result = DispatchResult(request.group, request.tool, outcome, message)
        self._finish(handle, result, invoked=False)

    def _finish(self, handle: DispatchHandle, result: DispatchResult, invoked: bool) -> bool:
        """
        Resolve a handle once: record the outcome of an invoked call, wake waiters.

        Leases are not touched here; the worker running the call releases its
        lease when the tool returns, even after a timeout has resolved the handle.
        """
        if not handle.resolve(result):
            return False
        request = handle.request
        if invoked:
            self.tracker.record_outcome(request.tool, result.outcome, request.session_id)
        logger.debug(
            "%s in group %s: %s after %.3fs",
            request.tool,
            request.group,
            result.outcome.value,
            result.elapsed,
        )
        handle.publish()
        return True

    @staticmethod
    def _wait(handle: DispatchHandle) -> DispatchResult:
        result = handle.wait()
        assert result is not None
        return result


def _unavailable_reason(descriptor: ToolDescriptor | None) -> str:
    if descriptor is None:
        return "not registered"
    if descriptor.status is ToolStatus.AVAILABLE:
        return "above cost ceiling"
    return descriptor.status.value
