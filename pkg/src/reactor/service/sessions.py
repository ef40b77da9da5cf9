"""
SessionManager module: runs submitted tasks as concurrent sessions of one engine.

Every session runs on its own daemon thread and shares the engine's registry,
dispatcher and event bus. Creation is atomic: the capacity check and the
insertion happen under one lock, so at most `max_sessions` sessions run at once.
Finished sessions are kept for status queries until more than
`retained_sessions` have finished; the oldest are then forgotten.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any

from reactor.backends.base import PlannerBackend
from reactor.config import override
from reactor.dispatcher.privacy import Attachment
from reactor.errors import ServiceBusyError, SessionNotFoundError
from reactor.planner.engine import Planner
from reactor.planner.session import SessionState, new_session_id
from reactor.runtime import Engine, build_backend


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SessionOverrides:
    """Per-task changes to the engine configuration."""

    max_turns: int | None = None
    backend: dict[str, Any] | None = None


class SessionManager:
    """Starts, tracks and waits for the sessions of a service."""

    def __init__(
        self,
        engine: Engine,
        max_sessions: int | None = None,
        retained_sessions: int | None = None,
    ):
        """
        Initialize the manager.

        :param engine: Engine whose planner runs the sessions.
        :param max_sessions: Concurrent session limit; the config's when None.
        :param retained_sessions: Finished sessions kept; the config's when None.
        """
        self.engine = engine
        self.max_sessions = max_sessions or engine.config.max_sessions
        self._lock = threading.Lock()
        self._sessions: dict[str, SessionState] = {}
        self._threads: dict[str, threading.Thread] = {}
        self.retained_sessions = retained_sessions or engine.config.retained_sessions
        self._finished: deque[str] = deque()

    def submit(
        self,
        task: str,
        attachments: Iterable[Attachment] = (),
        overrides: SessionOverrides | None = None,
    ) -> SessionState:
        """
        Create a session and start running it in the background.

        :param task: Task text.
        :param attachments: Documents kept session-locally.
        :param overrides: Turn cap or backend selection for this session only.
        :raises ServiceBusyError: if `max_sessions` sessions are running.
        :raises ConfigError: if the backend override is invalid.
        """
        overrides = overrides or SessionOverrides()
        planner = self._planner_for(overrides)
        with self._lock:
            if self._running_count() >= self.max_sessions:
                raise ServiceBusyError(
                    f"{self.max_sessions} sessions are running, try again later"
                )
            session = planner.new_session(
                task,
                attachments,
                session_id=new_session_id(),
                max_turns=overrides.max_turns,
            )
            self.engine.bus.open_session(session.session_id)
            self._sessions[session.session_id] = session
            thread = threading.Thread(
                target=self._run,
                args=(planner, session),
                name=f"reactor-session-{session.session_id}",
                daemon=True,
            )
            self._threads[session.session_id] = thread
        thread.start()
        logger.info("Session %s submitted", session.session_id)
        return session

    def get(self, session_id: str) -> SessionState:
        """
        Return a session by id.

        :raises SessionNotFoundError: if the id is unknown.
        """
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(session_id)
        return session

    def wait(self, session_id: str, timeout: float | None = None) -> SessionState:
        """Block until a session's thread ends or `timeout` expires."""
        session = self.get(session_id)
        with self._lock:
            thread = self._threads.get(session_id)
        if thread is not None:
            thread.join(timeout)
        return session

    def sessions(self) -> list[SessionState]:
        with self._lock:
            return list(self._sessions.values())

    @property
    def running(self) -> int:
        """Number of sessions that have not finished."""
        with self._lock:
            return self._running_count()

    def _running_count(self) -> int:
        return sum(not session.is_terminal for session in self._sessions.values())

    def _planner_for(self, overrides: SessionOverrides) -> Planner:
        if not overrides.backend:
            return self.engine.planner
        backend: PlannerBackend = build_backend(
            override(self.engine.config.backend, **overrides.backend)
        )
        planner = Planner(
            self.engine.registry, self.engine.dispatcher, backend, self.engine.config.session
        )
        planner.notifier = self.engine.notifier
        return planner

    def _run(self, planner: Planner, session: SessionState) -> None:
        try:
            planner.run_session(session)
        except Exception as err:  # pylint: disable=broad-exception-caught
            logger.exception("Session %s crashed", session.session_id)
            if not session.is_terminal:
                session.fail(f"internal error: {err}")
        finally:
            planner.dispatcher.attachments.drop(session.session_id)
            self.engine.bus.close_session(session.session_id)
            self._retire(session.session_id)

    def _retire(self, session_id: str) -> None:
        with self._lock:
            self._finished.append(session_id)
            while len(self._finished) > self.retained_sessions:
                forgotten = self._finished.popleft()
                self._sessions.pop(forgotten, None)
                self._threads.pop(forgotten, None)
                logger.debug("Finished session %s forgotten", forgotten)
