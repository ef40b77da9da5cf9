"""
EventBus module: ordered per-session event streams with fan-out, persistence and replay.

Each session owns a channel: a sequence counter, the in-memory history, the
NDJSON trace file and the live subscribers. Emission assigns the next seq,
persists the event and fans it out while holding the channel lock, and a
subscription snapshots the history and registers itself under the same lock,
so replay followed by the live tail has neither gaps nor duplicates.

Subscribers get a bounded buffer; one that falls behind by more than the
buffer is disconnected instead of slowing the engine down.

Only the newest `retained_sessions` finished channels stay in memory. Older
ones are evicted and, when traces are persisted, replayed from disk.
"""

from __future__ import annotations

import json
import logging
import threading
from collections import deque
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from queue import Empty, Full, Queue
from typing import IO, Any

from reactor.common import DEFAULT_RETAINED_SESSIONS, SUBSCRIBER_BUFFER_SIZE
from reactor.errors import SessionNotFoundError
from reactor.observability.events import Event, EventType, utc_now


logger = logging.getLogger(__name__)

_POLL_INTERVAL = 0.05
_END = object()


class Subscription:
    """Iterator over a session's events: history from `from_seq`, then the live tail."""

    def __init__(self, session_id: str, history: list[Event], buffer_size: int):
        """
        Initialize the subscription.

        :param session_id: Session being followed.
        :param history: Events already emitted with seq >= from_seq.
        :param buffer_size: Live events buffered before the subscriber is disconnected.
        """
        self.session_id = session_id
        self._history = deque(history)
        self._queue: Queue[Any] = Queue(maxsize=buffer_size)
        self._finished = threading.Event()
        self.disconnected = False
        self._unsubscribe: Callable[[Subscription], None] | None = None

    def deliver(self, event: Event) -> bool:
        """Offer a live event; returns False when the buffer is full."""
        try:
            self._queue.put_nowait(event)
        except Full:
            return False
        return True

    def finish(self) -> None:
        """Mark the stream complete; iteration ends once the buffer is drained."""
        self._finished.set()
        try:
            self._queue.put_nowait(_END)
        except Full:
            pass

    def disconnect(self) -> None:
        """Terminate the stream immediately."""
        self.disconnected = True
        self._finished.set()

    def close(self) -> None:
        """Stop following the session."""
        if self._unsubscribe is not None:
            self._unsubscribe(self)
        self.disconnect()

    def get(self, timeout: float | None = None) -> Event | None:
        """
        Return the next event, or None when the stream has ended or `timeout` expires.
        """
        if self._history:
            return self._history.popleft()
        waited = 0.0
        while not self.disconnected:
            try:
                item = self._queue.get(timeout=_POLL_INTERVAL)
            except Empty:
                if self._finished.is_set():
                    return None
                waited += _POLL_INTERVAL
                if timeout is not None and waited >= timeout:
                    return None
                continue
            if item is _END:
                self._finished.set()
                return None
            return item
        return None

    def __iter__(self) -> Iterator[Event]:
        while True:
            event = self.get()
            if event is None:
                return
            yield event


@dataclass
class _Channel:
    session_id: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    events: list[Event] = field(default_factory=list)
    subscribers: list[Subscription] = field(default_factory=list)
    closed: bool = False
    trace: IO[str] | None = None


class EventBus:
    """Per-session ordered event streams shared by the planner, dispatcher and service."""

    def __init__(
        self,
        trace_dir: str | Path | None = None,
        buffer_size: int = SUBSCRIBER_BUFFER_SIZE,
        clock: Callable[[], datetime] = utc_now,
        retained_sessions: int = DEFAULT_RETAINED_SESSIONS,
    ):
        """
        Initialize the bus.

        :param trace_dir: Directory for `<session_id>.ndjson` traces; no persistence when None.
        :param buffer_size: Per-subscriber live buffer.
        :param clock: Source of event timestamps.
        :param retained_sessions: Finished channels kept in memory.
        """
        self._trace_dir = Path(trace_dir) if trace_dir is not None else None
        if self._trace_dir is not None:
            self._trace_dir.mkdir(parents=True, exist_ok=True)
        self._buffer_size = buffer_size
        self._clock = clock
        self._lock = threading.Lock()
        self._channels: dict[str, _Channel] = {}
        self._retained_sessions = retained_sessions
        self._finished: deque[str] = deque()

    def open_session(self, session_id: str) -> None:
        """Create the channel (and trace file) of a session."""
        self._channel(session_id)

    def close_session(self, session_id: str) -> None:
        """
        Mark a session finished: live subscribers drain and end, the trace file is closed.

        Closing evicts the oldest finished channels beyond `retained_sessions`.
        """
        with self._lock:
            channel = self._channels.get(session_id)
        if channel is None:
            return
        with channel.lock:
            if channel.closed:
                return
            channel.closed = True
            for subscriber in channel.subscribers:
                subscriber.finish()
            channel.subscribers.clear()
            if channel.trace is not None:
                channel.trace.close()
                channel.trace = None
        self._evict_finished(session_id)

    def has_session(self, session_id: str) -> bool:
        """Whether the session is known in memory or as a persisted trace."""
        with self._lock:
            if session_id in self._channels:
                return True
        path = self._trace_path(session_id)
        return path is not None and path.exists()

    def open_sessions(self) -> list[str]:
        """Ids of sessions that are still running."""
        with self._lock:
            channels = list(self._channels.values())
        return [channel.session_id for channel in channels if not channel.closed]

    def emit(self, session_id: str, event_type: EventType, content: Any) -> Event | None:
        """
        Append an event to a session's stream.

        Assigns the next seq, persists the event and offers it to every live
        subscriber. Subscriber failures are logged, never raised. A finished
        session takes no more events.

        :return: The emitted event, or None when the session has finished.
        """
        channel = self._channel(session_id, reopen=False)
        if channel is None:
            logger.debug("%s event of finished session %s dropped", event_type.value, session_id)
            return None
        with channel.lock:
            if channel.closed:
                logger.debug(
                    "%s event of finished session %s dropped", event_type.value, session_id
                )
                return None
            event = Event(
                session_id=session_id,
                seq=len(channel.events),
                event_type=event_type,
                content=content,
                timestamp=self._clock(),
            )
            channel.events.append(event)
            self._persist(channel, event)
            for subscriber in list(channel.subscribers):
                if not subscriber.deliver(event):
                    logger.warning(
                        "Subscriber of %s fell %d events behind and was disconnected",
                        session_id,
                        self._buffer_size,
                    )
                    subscriber.disconnect()
                    channel.subscribers.remove(subscriber)
        return event

    def broadcast(self, event_type: EventType, content: Any) -> list[Event]:
        """Emit the same event on every open session."""
        events = []
        for session_id in self.open_sessions():
            event = self.emit(session_id, event_type, content)
            if event is not None:
                events.append(event)
        return events

    def subscribe(self, session_id: str, from_seq: int = 0) -> Subscription:
        """
        Follow a session from `from_seq`: its history first, then live events.

        :raises SessionNotFoundError: if the session is unknown.
        """
        with self._lock:
            channel = self._channels.get(session_id)
        if channel is None:
            return Subscription(session_id, self._read_trace(session_id, from_seq), 1)
        with channel.lock:
            subscription = Subscription(
                session_id,
                channel.events[max(from_seq, 0) :],
                self._buffer_size,
            )
            if channel.closed:
                subscription.finish()
            else:
                subscription._unsubscribe = self._unsubscribe  # pylint: disable=W0212
                channel.subscribers.append(subscription)
        return subscription

    def replay(self, session_id: str, from_seq: int = 0) -> Iterator[Event]:
        """
        Iterate over every event with seq >= from_seq in order.

        For a live session the iteration continues into the live stream.

        :raises SessionNotFoundError: if the session is unknown.
        """
        return iter(self.subscribe(session_id, from_seq))

    def events(self, session_id: str) -> list[Event]:
        """Snapshot of a session's events so far."""
        with self._lock:
            channel = self._channels.get(session_id)
        if channel is None:
            return self._read_trace(session_id, 0)
        with channel.lock:
            return list(channel.events)

    def _unsubscribe(self, subscription: Subscription) -> None:
        with self._lock:
            channel = self._channels.get(subscription.session_id)
        if channel is None:
            return
        with channel.lock:
            if subscription in channel.subscribers:
                channel.subscribers.remove(subscription)

    def _channel(self, session_id: str, reopen: bool = True) -> _Channel | None:
        """
        Return the channel of a session, creating it on first use.

        With `reopen` False a session known only by its trace is left alone:
        its channel was evicted after it finished.
        """
        with self._lock:
            channel = self._channels.get(session_id)
            if channel is None:
                path = self._trace_path(session_id)
                if not reopen and path is not None and path.exists():
                    return None
                channel = _Channel(session_id=session_id)
                if path is not None:
                    channel.trace = path.open("a", encoding="utf-8")
                self._channels[session_id] = channel
            return channel

    def _evict_finished(self, session_id: str) -> None:
        with self._lock:
            self._finished.append(session_id)
            while len(self._finished) > self._retained_sessions:
                evicted = self._finished.popleft()
                self._channels.pop(evicted, None)
                logger.debug("Channel of finished session %s evicted", evicted)

    def _persist(self, channel: _Channel, event: Event) -> None:
        if channel.trace is None:
            return
        try:
            channel.trace.write(event.to_json() + "\n")
            channel.trace.flush()
        except OSError:
            logger.exception("Cannot persist event %d of %s", event.seq, channel.session_id)

    def _trace_path(self, session_id: str) -> Path | None:
        if self._trace_dir is None:
            return None
        return self._trace_dir / f"{session_id}.ndjson"

    def _read_trace(self, session_id: str, from_seq: int) -> list[Event]:
        path = self._trace_path(session_id)
        if path is None or not path.exists():
            raise SessionNotFoundError(session_id)
        events = []
        with path.open(encoding="utf-8") as trace:
            for line in trace:
                if line.strip():
                    event = Event.from_dict(json.loads(line))
                    if event.seq >= from_seq:
                        events.append(event)
        return events
