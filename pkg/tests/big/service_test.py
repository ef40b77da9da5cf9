"""
End-to-end tests of the HTTP service on a real socket.

Covers:
- The golden task submitted over HTTP with an uploaded report, followed over SSE.
- A tool served by a separate HTTP server, registered at runtime through the API.
- Resuming an event stream with Last-Event-ID.
"""

import base64
from collections.abc import Generator

import httpx
import pytest

from reactor.dispatcher.privacy import PAGE_BREAK
from reactor.harness.golden import GOLDEN_TASK, REPORT_NAME, build_golden_engine, build_report
from reactor.observability.events import EventType
from reactor.service.app import create_app
from tests.big.conftest import NOTES_PAGES
from tests.big.helpers.servers import ServerThread
from tests.big.helpers.sse import read_stream, split_frames, stream_events

NOTES_SCRIPT = (
    "Thought: I should read every page of the notes.\n"
    "Action: NotesReader(page=1) && NotesReader(page=2) && NotesReader(page=3)",
    "Thought: Page 2 mentions the launch.\nFinal Answer: Q2 mentions the launch.",
)


def _upload(name: str, pages) -> dict[str, str]:
    content = PAGE_BREAK.join(pages).encode("utf-8")
    return {"name": name, "content_base64": base64.b64encode(content).decode("ascii")}


@pytest.fixture()
def golden_service() -> Generator[ServerThread, None, None]:
    """Serve the golden engine: scripted planner and the three fake tools."""
    engine, _recorder, _report = build_golden_engine()
    server = ServerThread(create_app(engine))
    server.start()
    yield server
    server.stop()
    engine.shutdown()


def test_golden_task_over_http(golden_service: ServerThread):
    """Should answer the uploaded report question and stream the whole trace."""
    report = build_report()
    url = golden_service.url
    accepted = httpx.post(
        f"{url}/tasks",
        json={"task": GOLDEN_TASK, "attachments": [_upload(REPORT_NAME, report.pages)]},
    )
    assert accepted.status_code == 202
    session_id = accepted.json()["session_id"]
    assert accepted.json()["events_url"] == f"/tasks/{session_id}/events"

    events = stream_events(read_stream(url, session_id))
    status = httpx.get(f"{url}/tasks/{session_id}").json()

    assert events[0].event_type is EventType.THOUGHT
    assert events[-1].event_type is EventType.FINAL_ANSWER
    assert [event.seq for event in events] == list(range(len(events)))
    assert status["status"] == "done"
    assert "13%" in status["answer"]
    assert status["cost"]["backend_calls"] == 4


def test_http_tool_registered_at_runtime(start_service, notes_server: ServerThread):
    """Should dispatch to an HTTP tool added through the API, one page per call."""
    _engine, service = start_service(NOTES_SCRIPT)
    descriptor = {
        "name": "NotesReader",
        "description": "read one page of the attached notes",
        "endpoint": f"{notes_server.url}/tools/notes-reader",
        "max_parallel": 3,
        "accepts_attachments": True,
        "signature": {"params": [{"name": "page", "type": "integer"}]},
    }
    assert httpx.post(f"{service.url}/registry/tools", json=descriptor).status_code == 201

    session_id = httpx.post(
        f"{service.url}/tasks",
        json={
            "task": "Which quarter of the attached notes mentions the launch?",
            "attachments": [_upload("notes.txt", NOTES_PAGES)],
        },
    ).json()["session_id"]
    events = stream_events(read_stream(service.url, session_id))

    results = [
        event.content["content"] for event in events if event.event_type is EventType.RESULT
    ]
    assert results == [f"NotesReader: {page}" for page in NOTES_PAGES]
    documents = notes_server.app.state.documents
    assert sorted(document["context"]["pages"] for document in documents) == ["1", "2", "3"]
    status = httpx.get(f"{service.url}/tasks/{session_id}").json()
    assert status["answer"] == "Q2 mentions the launch."


def test_resume_with_last_event_id(start_service):
    """Should resume a finished stream right after the given event id."""
    _engine, service = start_service(["Thought: quick\nFinal Answer: done"])
    session_id = httpx.post(f"{service.url}/tasks", json={"task": "t"}).json()["session_id"]
    full = split_frames(read_stream(service.url, session_id))

    resumed = split_frames(read_stream(service.url, session_id, last_event_id="0"))
    from_query = split_frames(read_stream(service.url, session_id, from_seq=1))

    assert [frame["id"] for frame in full] == ["0", "1"]
    assert resumed == full[1:]
    assert from_query == full[1:]


def test_unknown_session_over_http(start_service):
    """Should answer 404 for a session the service never ran."""
    _engine, service = start_service(["Final Answer: unused"])

    assert httpx.get(f"{service.url}/tasks/ghost").status_code == 404
    assert httpx.get(f"{service.url}/tasks/ghost/events").status_code == 404
