"""
HTTP API of the engine.

Routes:

* ``POST /tasks`` submits a task and answers 202 with the session id and its events URL.
* ``GET /tasks/{session_id}`` returns the status, the answer once done and the cost summary.
* ``GET /tasks/{session_id}/events`` streams the session's events as SSE. Every
  frame carries an ``id: <seq>`` line; a ``Last-Event-ID`` header resumes after
  that id, a ``from_seq`` query parameter starts at that seq.
* ``GET /registry/tools``, ``POST /registry/tools`` and ``DELETE /registry/tools/{name}``
  administer tools.

Engine errors map onto status codes: unknown ids 404, duplicate tools 409,
invalid bodies 422 and a full engine 503.
"""

from __future__ import annotations

import base64
import binascii
import logging
from collections.abc import Iterator
from typing import Any

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field, field_validator, model_validator

from reactor.dispatcher.privacy import Attachment
from reactor.errors import (
    ConfigError,
    DescriptorValidationError,
    DuplicateToolError,
    ReactorError,
    ServiceBusyError,
    SessionNotFoundError,
    ToolNotFoundError,
)
from reactor.observability.events import serialize_sse
from reactor.registry.descriptors import descriptor_from_dict, descriptor_to_dict
from reactor.runtime import Engine
from reactor.service.sessions import SessionManager, SessionOverrides


logger = logging.getLogger(__name__)

SSE_HEADERS = {"Cache-Control": "no-cache", "X-Accel-Buffering": "no"}

_ERROR_STATUS: tuple[tuple[type[ReactorError], int], ...] = (
    (SessionNotFoundError, 404),
    (ToolNotFoundError, 404),
    (DuplicateToolError, 409),
    (DescriptorValidationError, 422),
    (ConfigError, 422),
    (ServiceBusyError, 503),
)


class AttachmentUpload(BaseModel):
    """An attached document, as text or base64-encoded bytes."""

    name: str = Field(min_length=1)
    text: str | None = None
    content_base64: str | None = None

    @model_validator(mode="after")
    def _one_content(self) -> AttachmentUpload:
        if (self.text is None) == (self.content_base64 is None):
            raise ValueError("give exactly one of 'text' and 'content_base64'")
        return self

    def to_attachment(self) -> Attachment:
        if self.text is not None:
            return Attachment.from_text(self.name, self.text)
        try:
            data = base64.b64decode(self.content_base64 or "", validate=True)
        except binascii.Error as err:
            raise ConfigError(f"attachment {self.name} is not valid base64") from err
        return Attachment.from_bytes(self.name, data)


class TaskSubmission(BaseModel):
    """Body of `POST /tasks`."""

    task: str
    attachments: list[AttachmentUpload] = Field(default_factory=list)
    max_turns: int | None = Field(default=None, ge=1)
    backend: dict[str, Any] | None = None

    @field_validator("task")
    @classmethod
    def _task_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("task text must not be empty")
        return value


class TaskAccepted(BaseModel):
    session_id: str
    events_url: str


class CommandOutcome(BaseModel):
    success: bool
    message: str


def create_app(engine: Engine, manager: SessionManager | None = None) -> FastAPI:
    """
    Build the FastAPI application around an engine.

    :param engine: Engine shared by every request.
    :param manager: Session manager; one over `engine` when None.
    """
    app = FastAPI(title="reactor", version="0.1")
    app.state.engine = engine
    app.state.sessions = manager or SessionManager(engine)

    @app.exception_handler(ReactorError)
    async def _reactor_error(_request: Request, err: ReactorError) -> JSONResponse:
        return JSONResponse(status_code=status_of(err), content={"detail": str(err)})

    @app.post("/tasks", status_code=202, response_model=TaskAccepted)
    def submit_task(submission: TaskSubmission) -> TaskAccepted:
        attachments = [upload.to_attachment() for upload in submission.attachments]
        session = app.state.sessions.submit(
            submission.task,
            attachments,
            SessionOverrides(max_turns=submission.max_turns, backend=submission.backend),
        )
        return TaskAccepted(
            session_id=session.session_id,
            events_url=f"/tasks/{session.session_id}/events",
        )

    @app.get("/tasks/{session_id}")
    def task_status(session_id: str) -> dict[str, Any]:
        return app.state.sessions.get(session_id).to_dict()

    @app.get("/tasks/{session_id}/events")
    def task_events(
        session_id: str,
        from_seq: int = Query(default=0, ge=0),
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
    ) -> StreamingResponse:
        if not engine.bus.has_session(session_id):
            raise SessionNotFoundError(session_id)
        start = resume_seq(from_seq, last_event_id)
        subscription = engine.bus.subscribe(session_id, start)

        def frames() -> Iterator[bytes]:
            try:
                for event in subscription:
                    yield serialize_sse(event, include_id=True)
            finally:
                subscription.close()

        return StreamingResponse(frames(), media_type="text/event-stream", headers=SSE_HEADERS)

    @app.get("/registry/tools")
    def list_tools(include_removed: bool = False) -> list[dict[str, Any]]:
        return [
            descriptor_to_dict(tool)
            for tool in engine.registry.list_tools(include_removed=include_removed)
        ]

    @app.post("/registry/tools", status_code=201, response_model=CommandOutcome)
    def register_tool(document: dict[str, Any]) -> CommandOutcome:
        descriptor = descriptor_from_dict(document)
        engine.registry.add(descriptor)
        return CommandOutcome(success=True, message=f"Registered tool '{descriptor.name}'")

    @app.delete("/registry/tools/{name}", response_model=CommandOutcome)
    def deregister_tool(name: str) -> CommandOutcome:
        engine.registry.remove(name)
        return CommandOutcome(success=True, message=f"Removed tool '{name}'")

    return app


def status_of(err: ReactorError) -> int:
    """HTTP status code of an engine error."""
    for error_type, status in _ERROR_STATUS:
        if isinstance(err, error_type):
            return status
    return 500


def resume_seq(from_seq: int, last_event_id: str | None) -> int:
    """
    First seq to send: right after `Last-Event-ID` when the header is valid,
    `from_seq` otherwise.
    """
    if last_event_id is not None:
        try:
            return int(last_event_id) + 1
        except ValueError:
            logger.warning("Ignoring malformed Last-Event-ID %r", last_event_id)
    return from_seq
