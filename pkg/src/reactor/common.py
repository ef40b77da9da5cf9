"""
This module serves as a shared utility for every component of the reactor engine.

It includes common data structures, constants, and utilities that are used
across the registry, planner, dispatcher and observability layers.
"""

import math
import time
from collections import namedtuple
from collections.abc import Callable

CommandResult = namedtuple("CommandResult", ["success", "message"])

Clock = Callable[[], float]

DEFAULT_MAX_PARALLEL = 1
DEFAULT_QUEUE_LIMIT = 32
DEFAULT_TOOL_TIMEOUT_SECONDS = 30.0
DEFAULT_WORKER_LIMIT = 32
DEFAULT_FAILURE_THRESHOLD = 3
DEFAULT_COOLDOWN_SECONDS = 60.0
DEFAULT_MAX_TURNS = 10
DEFAULT_VERBATIM_TURNS = 2
DEFAULT_MAX_SESSIONS = 64
DEFAULT_RETAINED_SESSIONS = 256
SUBSCRIBER_BUFFER_SIZE = 1024

CHARS_PER_TOKEN = 4
DIGEST_CHARS = 200


def monotonic_clock() -> float:
    """Default clock for timeouts, quarantine and elapsed measurements."""
    return time.monotonic()


def estimate_tokens(text: str) -> int:
    """
    Estimate a token count when the backend reports none.

    :param text: Any text sent to or received from a model or tool.
    :return: ceil(len(text) / 4).
    """
    return math.ceil(len(text) / CHARS_PER_TOKEN)
