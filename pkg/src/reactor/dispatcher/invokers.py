"""
Tool invokers: how a wire document reaches a tool.

Every tool speaks the same protocol. The request is `{tool, args, context}`;
the response is `{result}` (optionally with `usage: {tokens}`) or
`{error: {message}}`. `inproc://<name>` endpoints resolve to Python callables
registered on the `InProcessInvoker`; `http(s)://` endpoints are POSTed to.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable
from typing import Any, Protocol

import httpx

from reactor.errors import ToolInvocationError
from reactor.registry.descriptors import ToolDescriptor


logger = logging.getLogger(__name__)

INPROC_SCHEME = "inproc://"

ToolHandler = Callable[[dict[str, Any]], dict[str, Any]]


class ToolInvoker(Protocol):
    """Sends one wire document to a tool and returns its response document."""

    def invoke(
        self, descriptor: ToolDescriptor, document: dict[str, Any], timeout: float
    ) -> dict[str, Any]:
        """
        Invoke a tool.

        :raises ToolInvocationError: if the endpoint cannot be reached or answers
            outside the protocol.
        """


class InProcessInvoker:
    """Invoker for tools implemented as Python callables."""

    def __init__(self, handlers: dict[str, ToolHandler] | None = None):
        """Initialize the invoker with optional handlers keyed by handle name."""
        self._lock = threading.Lock()
        self._handlers: dict[str, ToolHandler] = dict(handlers or {})

    def register(self, name: str, handler: ToolHandler) -> str:
        """
        Register a handler.

        :return: The endpoint to put in the tool's descriptor.
        """
        with self._lock:
            self._handlers[name] = handler
        return f"{INPROC_SCHEME}{name}"

    def unregister(self, name: str) -> None:
        """Remove a handler; later calls to its endpoint are unavailable."""
        with self._lock:
            self._handlers.pop(name, None)

    def invoke(
        self, descriptor: ToolDescriptor, document: dict[str, Any], timeout: float
    ) -> dict[str, Any]:
        """Call the handler behind an `inproc://` endpoint."""
        name = descriptor.endpoint.removeprefix(INPROC_SCHEME)
        with self._lock:
            handler = self._handlers.get(name)
        if handler is None:
            raise ToolInvocationError(f"no in-process handler {name!r}", unavailable=True)
        return handler(document)


class HttpToolInvoker:
    """Invoker for tools served over HTTP."""

    def __init__(self, client: httpx.Client | None = None):
        """
        Initialize the invoker.

        :param client: Client to send requests with; tests pass one with a mock transport.
        """
        self._client = client or httpx.Client()

    def invoke(
        self, descriptor: ToolDescriptor, document: dict[str, Any], timeout: float
    ) -> dict[str, Any]:
        """POST the document to the tool's endpoint."""
        try:
            response = self._client.post(descriptor.endpoint, json=document, timeout=timeout)
        except httpx.TimeoutException as err:
            raise ToolInvocationError(f"request to {descriptor.endpoint} timed out") from err
        except httpx.TransportError as err:
            raise ToolInvocationError(
                f"cannot reach {descriptor.endpoint}: {err}", unavailable=True
            ) from err

        if response.status_code in {404, 502, 503}:
            raise ToolInvocationError(
                f"{descriptor.endpoint} answered {response.status_code}", unavailable=True
            )
        try:
            body = response.json()
        except ValueError as err:
            raise ToolInvocationError(
                f"{descriptor.endpoint} answered {response.status_code} without a JSON body"
            ) from err
        if not isinstance(body, dict):
            raise ToolInvocationError(f"{descriptor.endpoint} answered a non-object JSON body")
        if response.is_error and "error" not in body:
            body = {"error": {"message": f"HTTP {response.status_code}"}}
        return body

    def close(self) -> None:
        """Close the underlying client."""
        self._client.close()


class RoutingInvoker:
    """Chooses the in-process or HTTP invoker from the endpoint scheme."""

    def __init__(
        self,
        inproc: InProcessInvoker | None = None,
        http: HttpToolInvoker | None = None,
    ):
        """Initialize the router with its two invokers."""
        self.inproc = inproc or InProcessInvoker()
        self._http = http

    @property
    def http(self) -> HttpToolInvoker:
        """HTTP invoker, created on first use."""
        if self._http is None:
            self._http = HttpToolInvoker()
        return self._http

    def invoke(
        self, descriptor: ToolDescriptor, document: dict[str, Any], timeout: float
    ) -> dict[str, Any]:
        """Route by endpoint scheme."""
        endpoint = descriptor.endpoint
        if endpoint.startswith(INPROC_SCHEME):
            return self.inproc.invoke(descriptor, document, timeout)
        if endpoint.startswith(("http://", "https://")):
            return self.http.invoke(descriptor, document, timeout)
        raise ToolInvocationError(f"unsupported endpoint {endpoint!r}", unavailable=True)


def read_response(body: dict[str, Any]) -> tuple[bool, str, int | None]:
    """
    Interpret a response document.

    :return: (ok, result text or error message, reported tokens).
    """
    error = body.get("error")
    if error is not None:
        message = error.get("message") if isinstance(error, dict) else error
        return False, str(message or "tool error"), None
    if "result" not in body:
        return False, "response carries neither result nor error", None
    result = body["result"]
    text = result if isinstance(result, str) else _to_text(result)
    usage = body.get("usage")
    tokens = usage.get("tokens") if isinstance(usage, dict) else None
    if isinstance(tokens, bool) or not isinstance(tokens, int) or tokens < 0:
        tokens = None
    return True, text, tokens


def _to_text(result: Any) -> str:
    if isinstance(result, list) and all(isinstance(item, str) for item in result):
        return "\n".join(result)
    return str(result)
