"""
Session attachments and the minimal-context rules for tool calls.

Attachments stay in the session-local `AttachmentStore`. A call only carries
attachment content when its tool accepts attachments, and then only the
pages the planner named through a `page` or `pages` argument. Local tools may
receive a whole attachment; remote tools may not.
"""

from __future__ import annotations

import logging
import re
import threading
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

from reactor.errors import ConfigError, PrivacyViolationError
from reactor.registry.descriptors import Locality, ToolDescriptor

if TYPE_CHECKING:
    from reactor.dispatcher.requests import DispatchRequest


logger = logging.getLogger(__name__)

PAGE_BREAK = "\f"
_PAGE_RANGE = re.compile(r"\s*([0-9]+)\s*(?:-\s*([0-9]+)\s*)?")

RULE_MAX_INPUT = "max-input-chars"
RULE_WHOLE_ATTACHMENT = "remote-whole-attachment"
RULE_PAGE_RANGE = "page-out-of-range"
RULE_UNKNOWN_ATTACHMENT = "unknown-attachment"


@dataclass(frozen=True)
class Attachment:
    """A named document split into pages."""

    name: str
    pages: tuple[str, ...]

    @classmethod
    def from_text(cls, name: str, text: str) -> Attachment:
        """Split text into pages on form feeds."""
        return cls(name=name, pages=tuple(text.split(PAGE_BREAK)))

    @classmethod
    def from_bytes(cls, name: str, data: bytes) -> Attachment:
        """Decode an uploaded file as UTF-8 text and split it into pages."""
        return cls.from_text(name, data.decode("utf-8", errors="replace"))

    @property
    def page_count(self) -> int:
        """Number of pages."""
        return len(self.pages)

    @property
    def size(self) -> int:
        """Size of the whole document in UTF-8 bytes."""
        return len(PAGE_BREAK.join(self.pages).encode("utf-8"))

    def excerpt(self, first: int, last: int) -> str:
        """Text of pages `first`..`last` (1-based, inclusive)."""
        return PAGE_BREAK.join(self.pages[first - 1 : last])


def attachment_from_dict(entry: Any, base_dir: Path) -> Attachment:
    """
    Build an attachment from `{name, path}`, `{name, text}` or `{name, pages}`.

    Text and files are split into pages on form feeds.
    """
    if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
        raise ConfigError(f"an attachment needs a name: {entry!r}")
    if "path" in entry:
        path = base_dir / entry["path"]
        try:
            return Attachment.from_bytes(entry["name"], path.read_bytes())
        except OSError as err:
            raise ConfigError(f"cannot read attachment {path}: {err}") from err
    if "pages" in entry:
        return Attachment.from_text(entry["name"], PAGE_BREAK.join(map(str, entry["pages"])))
    return Attachment.from_text(entry["name"], str(entry.get("text", "")))


@dataclass(frozen=True)
class ContextExcerpt:
    """The slice of an attachment that travels with one call."""

    attachment: str
    first_page: int
    last_page: int
    text: str

    @property
    def size(self) -> int:
        """Released bytes."""
        return len(self.text.encode("utf-8"))

    def to_dict(self) -> dict[str, Any]:
        """Wire form, the `context` member of a tool request."""
        pages = (
            str(self.first_page)
            if self.first_page == self.last_page
            else f"{self.first_page}-{self.last_page}"
        )
        return {"attachment": self.attachment, "pages": pages, "text": self.text}


class AttachmentStore:
    """Session-local attachment storage with released-bytes accounting."""

    def __init__(self):
        """Initialize an empty store."""
        self._lock = threading.Lock()
        self._attachments: dict[str, dict[str, Attachment]] = {}
        self._released: dict[str, dict[Locality, int]] = defaultdict(
            lambda: dict.fromkeys(Locality, 0)
        )

    def put(self, session_id: str, attachment: Attachment) -> None:
        """Store an attachment for a session."""
        with self._lock:
            self._attachments.setdefault(session_id, {})[attachment.name] = attachment

    def list(self, session_id: str) -> list[Attachment]:
        """Attachments of a session in upload order."""
        with self._lock:
            return list(self._attachments.get(session_id, {}).values())

    def get(self, session_id: str, name: str | None = None) -> Attachment | None:
        """Return the named attachment, or the first one when `name` is None."""
        with self._lock:
            attachments = self._attachments.get(session_id, {})
            if name is None:
                return next(iter(attachments.values()), None)
            return attachments.get(name)

    def drop(self, session_id: str) -> None:
        """Forget a session's attachments and its released-bytes account."""
        with self._lock:
            self._attachments.pop(session_id, None)
            self._released.pop(session_id, None)

    def sessions(self) -> list[str]:
        """Sessions holding attachments."""
        with self._lock:
            return list(self._attachments)

    def record_release(self, session_id: str, locality: Locality, size: int) -> None:
        """Account bytes of attachment content sent to a tool; ignored once dropped."""
        with self._lock:
            if session_id in self._attachments:
                self._released[session_id][locality] += size

    def released_bytes(self, session_id: str, locality: Locality = Locality.REMOTE) -> int:
        """Attachment bytes a session has sent to tools of one locality."""
        with self._lock:
            return self._released[session_id][locality] if session_id in self._released else 0


def enforce_minimal_context(
    request: DispatchRequest,
    descriptor: ToolDescriptor,
    store: AttachmentStore,
) -> DispatchRequest:
    """
    Approve a request and attach only the attachment pages it names.

    :return: The request, with `context` set when the tool accepts attachments.
    :raises PrivacyViolationError: naming the rule the request breaks.
    """
    limit = descriptor.signature.max_input_chars
    if limit is not None and len(request.payload) > limit:
        raise PrivacyViolationError(
            RULE_MAX_INPUT, f"{len(request.payload)} chars sent to {descriptor.name}, limit {limit}"
        )
    if not descriptor.accepts_attachments:
        return request

    name = request.args.get("attachment")
    attachment = store.get(request.session_id, name if isinstance(name, str) else None)
    if attachment is None:
        if isinstance(name, str):
            raise PrivacyViolationError(RULE_UNKNOWN_ATTACHMENT, f"no attachment named {name!r}")
        return request

    selected = _selected_pages(request.args, attachment)
    if selected is None:
        if descriptor.locality is Locality.REMOTE:
            raise PrivacyViolationError(
                RULE_WHOLE_ATTACHMENT,
                f"remote tool {descriptor.name} needs a page or pages argument "
                f"to read {attachment.name}",
            )
        selected = (1, attachment.page_count)

    first, last = selected
    excerpt = ContextExcerpt(attachment.name, first, last, attachment.excerpt(first, last))
    logger.debug(
        "Releasing pages %d-%d of %s to %s", first, last, attachment.name, descriptor.name
    )
    return replace(request, context=excerpt)


def _selected_pages(args: dict[str, Any], attachment: Attachment) -> tuple[int, int] | None:
    if "page" in args:
        page = args["page"]
        if isinstance(page, bool) or not isinstance(page, int):
            raise PrivacyViolationError(RULE_PAGE_RANGE, f"page must be an integer, got {page!r}")
        first = last = page
    elif "pages" in args:
        match = _PAGE_RANGE.fullmatch(str(args["pages"]))
        if match is None:
            raise PrivacyViolationError(
                RULE_PAGE_RANGE, f"cannot read page range {args['pages']!r}"
            )
        first = int(match.group(1))
        last = int(match.group(2) or first)
    else:
        return None
    if not 1 <= first <= last <= attachment.page_count:
        raise PrivacyViolationError(
            RULE_PAGE_RANGE,
            f"pages {first}-{last} outside 1-{attachment.page_count} of {attachment.name}",
        )
    return first, last
