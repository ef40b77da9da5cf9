"""Unit tests for the HTTP API."""

import base64

import pytest
from fastapi.testclient import TestClient

from reactor.backends.scripted import ScriptedBackend
from reactor.errors import ReactorError, ServiceBusyError
from reactor.observability.events import EventType, parse_sse
from reactor.runtime import Engine
from reactor.service.app import create_app, resume_seq, status_of
from reactor.service.sessions import SessionManager

from tests.small.conftest import BlockingBackend, echo

SCRIPT = ['Thought: look\nAction: Echo(query="x")', "Final Answer: echo x"]
ECHO_TOOL = {
    "name": "Echo",
    "endpoint": "inproc://Echo",
    "signature": {"params": [{"name": "query", "type": "string"}]},
}


@pytest.fixture
def engine():
    """Provide an engine with the Echo handler installed but not registered."""
    instance = Engine(backend=ScriptedBackend(SCRIPT))
    instance.inproc.register("Echo", echo)
    yield instance
    instance.shutdown()


@pytest.fixture
def manager(engine: Engine) -> SessionManager:
    """Provide the session manager behind the app."""
    return SessionManager(engine)


@pytest.fixture
def client(engine: Engine, manager: SessionManager) -> TestClient:
    """Provide a test client of the app."""
    return TestClient(create_app(engine, manager))


def _run_task(client: TestClient, manager: SessionManager, **body) -> str:
    assert client.post("/registry/tools", json=ECHO_TOOL).status_code == 201
    response = client.post("/tasks", json={"task": "Echo x.", **body})
    assert response.status_code == 202
    session_id = response.json()["session_id"]
    manager.wait(session_id, timeout=5)
    return session_id


def test_task_lifecycle(client: TestClient, manager: SessionManager):
    """Should accept a task, run it and report the answer and cost."""
    session_id = _run_task(client, manager)

    status = client.get(f"/tasks/{session_id}").json()

    assert status["status"] == "done"
    assert status["answer"] == "echo x"
    assert status["cost"]["backend_calls"] == 2


def test_events_stream(client: TestClient, manager: SessionManager):
    """Should stream every event of the session with ids."""
    session_id = _run_task(client, manager)

    response = client.get(f"/tasks/{session_id}/events")
    events = parse_sse(response.content)

    assert response.headers["content-type"].startswith("text/event-stream")
    assert response.headers["cache-control"] == "no-cache"
    assert [event.event_type for event in events] == [
        EventType.THOUGHT,
        EventType.ACTION,
        EventType.RESULT,
        EventType.FINAL_ANSWER,
    ]
    assert [event.seq for event in events] == [0, 1, 2, 3]
    assert b"id: 3\n" in response.content


def test_events_resume(client: TestClient, manager: SessionManager):
    """Should resume after Last-Event-ID, or from from_seq."""
    session_id = _run_task(client, manager)
    url = f"/tasks/{session_id}/events"

    after_header = parse_sse(client.get(url, headers={"Last-Event-ID": "1"}).content)
    from_query = parse_sse(client.get(url, params={"from_seq": 3}).content)

    assert [event.seq for event in after_header] == [2, 3]
    assert [event.seq for event in from_query] == [3]


def test_unknown_session(client: TestClient):
    """Should answer 404 for unknown sessions."""
    assert client.get("/tasks/ghost").status_code == 404
    assert client.get("/tasks/ghost/events").status_code == 404


@pytest.mark.parametrize(
    "body",
    [
        {"task": "   "},
        {"task": "t", "max_turns": 0},
        {"task": "t", "attachments": [{"name": "a"}]},
        {"task": "t", "attachments": [{"name": "a", "text": "x", "content_base64": "eA=="}]},
        {"task": "t", "attachments": [{"name": "a", "content_base64": "***"}]},
        {"task": "t", "backend": {"kind": "grpc"}},
    ],
)
def test_invalid_submissions(client: TestClient, body):
    """Should answer 422 for invalid task bodies."""
    assert client.post("/tasks", json=body).status_code == 422


def test_attachment_upload(client: TestClient, manager: SessionManager):
    """Should decode uploaded attachments into the session."""
    content = base64.b64encode(b"page one\fpage two").decode()

    session_id = _run_task(
        client, manager, attachments=[{"name": "doc.txt", "content_base64": content}]
    )

    (attachment,) = manager.get(session_id).attachments
    assert attachment.page_count == 2


def test_busy_engine():
    """Should answer 503 when max_sessions sessions are running."""
    backend = BlockingBackend()
    engine = Engine(backend=backend)
    client = TestClient(create_app(engine, SessionManager(engine, max_sessions=1)))
    try:
        assert client.post("/tasks", json={"task": "one"}).status_code == 202
        response = client.post("/tasks", json={"task": "two"})
    finally:
        backend.release.set()
        engine.shutdown()

    assert response.status_code == 503
    assert "try again later" in response.json()["detail"]


def test_registry_administration(client: TestClient):
    """Should register, list and remove tools with the matching status codes."""
    assert client.post("/registry/tools", json=ECHO_TOOL).status_code == 201
    assert client.post("/registry/tools", json=ECHO_TOOL).status_code == 409
    assert client.post("/registry/tools", json={"name": "Bad", "colour": "red"}).status_code == 422
    assert [tool["name"] for tool in client.get("/registry/tools").json()] == ["Echo"]

    assert client.delete("/registry/tools/Echo").json() == {
        "success": True,
        "message": "Removed tool 'Echo'",
    }
    assert client.delete("/registry/tools/Echo").status_code == 404
    assert client.get("/registry/tools").json() == []
    removed = client.get("/registry/tools", params={"include_removed": True}).json()
    assert [tool["status"] for tool in removed] == ["removed"]


@pytest.mark.parametrize(
    ("from_seq", "header", "expected"),
    [(0, None, 0), (4, None, 4), (0, "7", 8), (2, "seven", 2)],
)
def test_resume_seq(from_seq, header, expected):
    """Should prefer a valid Last-Event-ID over from_seq."""
    assert resume_seq(from_seq, header) == expected


def test_status_of():
    """Should map engine errors to status codes, 500 for the rest."""
    assert status_of(ServiceBusyError("full")) == 503
    assert status_of(ReactorError("other")) == 500
