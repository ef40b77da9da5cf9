"""
Planner backend for OpenAI-compatible text-completion endpoints.

Requests go to `<endpoint>/completions` with the assembled prompt, the stop
sequences and the completion token limit. Transport errors, 429 and 5xx
answers are retried with jittered exponential backoff; other HTTP errors and
timeouts fail at once. In stream mode the server-sent `data:` lines are
yielded as text chunks, and a retry is only possible before the first chunk.
"""

from __future__ import annotations

import json
import logging
import random
import time
from collections.abc import Callable, Iterator
from typing import Any

import httpx

from reactor.backends.base import BackendRequest, Completion, CompletionStream
from reactor.common import estimate_tokens
from reactor.config import API_KEY_ENV, BackendConfig
from reactor.errors import BackendError


logger = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 0.5
DONE_MARKER = "[DONE]"


class _Retryable(Exception):
    """Transient failure worth another attempt."""

    def __init__(self, error: BackendError):
        super().__init__(str(error))
        self.error = error


class HttpCompletionBackend:
    """Completion client with retries and streaming."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.0,
        timeout_seconds: float = 120.0,
        max_retries: int = 2,
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        """
        Initialize the client.

        :param endpoint: Base URL, e.g. `http://localhost:8000/v1`.
        :param model: Model name sent with every request.
        :param temperature: Sampling temperature.
        :param timeout_seconds: Per-request timeout.
        :param max_retries: Retries of transient failures after the first attempt.
        :param api_key: Bearer token; normally taken from `REACTOR_API_KEY`.
        :param transport: httpx transport; tests pass a `MockTransport`.
        :param sleep: Called with each backoff delay.
        :param rng: Source of backoff jitter.
        """
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.timeout_seconds = timeout_seconds
        self.max_retries = max_retries
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(transport=transport, headers=headers, timeout=timeout_seconds)
        self._sleep = sleep
        self._rng = rng or random.Random()

    @classmethod
    def from_config(
        cls, config: BackendConfig, transport: httpx.BaseTransport | None = None
    ) -> HttpCompletionBackend:
        """Build the client from config; the key comes from the environment only."""
        if config.api_key is None:
            logger.info("%s is not set; sending requests without credentials", API_KEY_ENV)
        return cls(
            endpoint=config.endpoint,
            model=config.model,
            temperature=config.temperature,
            timeout_seconds=config.timeout_seconds,
            max_retries=config.max_retries,
            api_key=config.api_key,
            transport=transport,
        )

    @property
    def url(self) -> str:
        return f"{self.endpoint}/completions"

    def complete(self, request: BackendRequest) -> Completion:
        """Send one completion request."""
        body = self._with_retries(lambda: self._post(request))
        text = _choice_text(body)
        usage = body.get("usage") or {}
        return Completion(
            text,
            _count(usage.get("prompt_tokens"), request.prompt),
            _count(usage.get("completion_tokens"), text),
        )

    def stream(self, request: BackendRequest) -> CompletionStream:
        """Send a streaming request; chunks arrive as the server sends them."""
        usage: dict[str, Any] = {}
        return CompletionStream(
            request.prompt,
            self._stream_chunks(request, usage),
            usage=lambda: (usage.get("prompt_tokens"), usage.get("completion_tokens")),
        )

    def close(self) -> None:
        self._client.close()

    def _payload(self, request: BackendRequest, stream: bool) -> dict[str, Any]:
        return {
            "model": self.model,
            "prompt": request.prompt,
            "stop": list(request.stop_sequences),
            "max_tokens": request.max_completion_tokens,
            "temperature": self.temperature,
            "stream": stream,
        }

    def _post(self, request: BackendRequest) -> dict[str, Any]:
        try:
            response = self._client.post(self.url, json=self._payload(request, stream=False))
        except httpx.TimeoutException as err:
            message = f"completion request timed out after {self.timeout_seconds:g}s"
            raise BackendError(message) from err
        except httpx.TransportError as err:
            raise _Retryable(BackendError(f"cannot reach {self.url}: {err}")) from err
        _check_status(response)
        try:
            body = response.json()
        except ValueError as err:
            raise BackendError("completion response is not JSON", response.status_code) from err
        if not isinstance(body, dict):
            raise BackendError("completion response is not a JSON object", response.status_code)
        return body

    def _stream_chunks(self, request: BackendRequest, usage: dict[str, Any]) -> Iterator[str]:
        attempt = 0
        while True:
            started = False
            try:
                with self._client.stream(
                    "POST", self.url, json=self._payload(request, stream=True)
                ) as response:
                    if response.is_error:
                        response.read()
                    _check_status(response)
                    for line in response.iter_lines():
                        done, chunk = _stream_line(line, usage)
                        if done:
                            return
                        if chunk:
                            started = True
                            yield chunk
                    return
            except httpx.TimeoutException as err:
                raise BackendError(
                    f"completion stream timed out after {self.timeout_seconds:g}s"
                ) from err
            except httpx.TransportError as err:
                error = BackendError(f"stream from {self.url} broke: {err}")
                if started:
                    raise error from err
                retryable = _Retryable(error)
            except _Retryable as err:
                retryable = err
            attempt = self._back_off(attempt, retryable)

    def _with_retries(self, call: Callable[[], dict[str, Any]]) -> dict[str, Any]:
        attempt = 0
        while True:
            try:
                return call()
            except _Retryable as err:
                attempt = self._back_off(attempt, err)

    def _back_off(self, attempt: int, err: _Retryable) -> int:
        if attempt >= self.max_retries:
            raise err.error from err
        delay = BACKOFF_BASE_SECONDS * 2**attempt * (0.5 + self._rng.random())
        logger.warning(
            "Completion attempt %d failed (%s); retrying in %.2fs", attempt + 1, err, delay
        )
        self._sleep(delay)
        return attempt + 1


def _check_status(response: httpx.Response) -> None:
    status = response.status_code
    if status == 429 or status >= 500:
        raise _Retryable(BackendError(f"completion endpoint answered {status}", status))
    if response.is_error:
        message = f"completion endpoint answered {status}: {_error_message(response)}"
        raise BackendError(message, status)


def _error_message(response: httpx.Response) -> str:
    try:
        body = response.json()
    except ValueError:
        return response.text[:200]
    error = body.get("error") if isinstance(body, dict) else None
    if isinstance(error, dict):
        return str(error.get("message", error))
    return str(error or body)


def _choice_text(body: dict[str, Any]) -> str:
    choices = body.get("choices")
    if not isinstance(choices, list) or not choices or not isinstance(choices[0], dict):
        raise BackendError("completion response has no choices")
    text = choices[0].get("text")
    if not isinstance(text, str):
        raise BackendError("completion choice has no text")
    return text


def _stream_line(line: str, usage: dict[str, Any]) -> tuple[bool, str | None]:
    """Read one stream line: (reached the done marker, text of a `data:` event)."""
    if not line.startswith("data:"):
        return False, None
    data = line[len("data:") :].strip()
    if data == DONE_MARKER:
        return True, None
    try:
        event = json.loads(data)
    except ValueError as err:
        raise BackendError(f"unreadable stream event: {data[:80]}") from err
    if isinstance(event.get("usage"), dict):
        usage.update(event["usage"])
    choices = event.get("choices") or []
    text = choices[0].get("text") if choices and isinstance(choices[0], dict) else None
    return False, text if isinstance(text, str) else None


def _count(reported: Any, text: str) -> int:
    if isinstance(reported, int) and not isinstance(reported, bool) and reported >= 0:
        return reported
    return estimate_tokens(text)
