"""Unit tests for tool invokers."""

import json
from dataclasses import replace

import httpx
import pytest

from reactor.dispatcher.invokers import (
    HttpToolInvoker,
    InProcessInvoker,
    RoutingInvoker,
    read_response,
)
from reactor.errors import ToolInvocationError

from tests.small.conftest import make_descriptor

HTTP_TOOL = replace(make_descriptor("Summarizer"), endpoint="http://tools.test/summarize")


def _http_invoker(handler) -> HttpToolInvoker:
    return HttpToolInvoker(httpx.Client(transport=httpx.MockTransport(handler)))


def test_inproc_register_and_invoke():
    """Should call the handler behind an inproc endpoint with the wire document."""
    invoker = InProcessInvoker()
    endpoint = invoker.register("Lookup", lambda document: {"result": document["args"]["q"]})

    response = invoker.invoke(make_descriptor("Lookup"), {"tool": "Lookup", "args": {"q": 1}}, 1)

    assert endpoint == "inproc://Lookup"
    assert response == {"result": 1}


def test_inproc_missing_handler():
    """Should report a missing handler as unavailable."""
    invoker = InProcessInvoker()
    invoker.register("Lookup", lambda document: {"result": ""})
    invoker.unregister("Lookup")

    with pytest.raises(ToolInvocationError) as err:
        invoker.invoke(make_descriptor("Lookup"), {}, 1)

    assert err.value.unavailable


def test_http_posts_wire_document():
    """Should POST the wire document and return the JSON body."""
    seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(json.loads(request.content))
        return httpx.Response(200, json={"result": "short", "usage": {"tokens": 4}})

    body = _http_invoker(handler).invoke(HTTP_TOOL, {"tool": "Summarizer", "args": {}}, 2)

    assert body == {"result": "short", "usage": {"tokens": 4}}
    assert seen == [{"tool": "Summarizer", "args": {}}]


@pytest.mark.parametrize("status", [404, 502, 503])
def test_http_unavailable_statuses(status):
    """Should treat missing and overloaded endpoints as unavailable."""
    invoker = _http_invoker(lambda request: httpx.Response(status))

    with pytest.raises(ToolInvocationError) as err:
        invoker.invoke(HTTP_TOOL, {}, 1)

    assert err.value.unavailable


def test_http_error_status_without_error_body():
    """Should turn an error status into a tool error document."""
    invoker = _http_invoker(lambda request: httpx.Response(500, json={"detail": "x"}))

    assert invoker.invoke(HTTP_TOOL, {}, 1) == {"error": {"message": "HTTP 500"}}


def test_http_error_body_kept():
    """Should keep a protocol error document sent with an error status."""
    invoker = _http_invoker(
        lambda request: httpx.Response(400, json={"error": {"message": "bad page"}})
    )

    assert invoker.invoke(HTTP_TOOL, {}, 1) == {"error": {"message": "bad page"}}


@pytest.mark.parametrize(
    "response", [httpx.Response(200, text="not json"), httpx.Response(200, json=[1, 2])]
)
def test_http_non_protocol_body(response):
    """Should reject bodies outside the protocol as tool errors."""
    invoker = _http_invoker(lambda request: response)

    with pytest.raises(ToolInvocationError) as err:
        invoker.invoke(HTTP_TOOL, {}, 1)

    assert not err.value.unavailable


def test_http_connect_error():
    """Should report an unreachable endpoint as unavailable."""

    def refuse(request):
        raise httpx.ConnectError("refused", request=request)

    with pytest.raises(ToolInvocationError) as err:
        _http_invoker(refuse).invoke(HTTP_TOOL, {}, 1)

    assert err.value.unavailable


def test_http_timeout():
    """Should report a transport timeout as a tool error."""

    def hang(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(ToolInvocationError, match="timed out") as err:
        _http_invoker(hang).invoke(HTTP_TOOL, {}, 1)

    assert not err.value.unavailable


def test_routing_by_scheme():
    """Should route inproc and http endpoints to their invokers."""
    inproc = InProcessInvoker({"Lookup": lambda document: {"result": "local"}})
    http = _http_invoker(lambda request: httpx.Response(200, json={"result": "remote"}))
    router = RoutingInvoker(inproc, http)

    assert router.invoke(make_descriptor("Lookup"), {}, 1) == {"result": "local"}
    assert router.invoke(HTTP_TOOL, {}, 1) == {"result": "remote"}
    with pytest.raises(ToolInvocationError, match="unsupported endpoint"):
        router.invoke(replace(HTTP_TOOL, endpoint="grpc://x"), {}, 1)


@pytest.mark.parametrize(
    ("body", "expected"),
    [
        ({"result": "text"}, (True, "text", None)),
        ({"result": ["a", "b"]}, (True, "a\nb", None)),
        ({"result": {"n": 1}}, (True, "{'n': 1}", None)),
        ({"result": "t", "usage": {"tokens": 9}}, (True, "t", 9)),
        ({"result": "t", "usage": {"tokens": -1}}, (True, "t", None)),
        ({"result": "t", "usage": {"tokens": True}}, (True, "t", None)),
        ({"error": {"message": "no such page"}}, (False, "no such page", None)),
        ({"error": "plain"}, (False, "plain", None)),
        ({"error": {}}, (False, "tool error", None)),
        ({}, (False, "response carries neither result nor error", None)),
    ],
)
def test_read_response(body, expected):
    """Should interpret every response document shape."""
    assert read_response(body) == expected
