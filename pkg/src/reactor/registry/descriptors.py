"""
Tool descriptors and typed signatures.

A descriptor is the registry entry of one tool: how the planner sees it (name,
description, parameter signature, relative cost) and how the dispatcher reaches
it (endpoint, locality, max_parallel, timeout). Descriptors are immutable; the
registry replaces them with `dataclasses.replace` when their status changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Any

from reactor.common import DEFAULT_MAX_PARALLEL, DEFAULT_QUEUE_LIMIT
from reactor.errors import DescriptorValidationError


class SemanticType(str, Enum):
    """The closed set of argument and output types a signature may declare."""

    STRING = "string"
    INTEGER = "integer"
    NUMBER = "number"
    BOOLEAN = "boolean"
    STRING_LIST = "list[string]"

    @classmethod
    def parse(cls, raw: Any, field_name: str) -> SemanticType:
        """Parse a type name, accepting `list-of-string` as an alias."""
        if isinstance(raw, SemanticType):
            return raw
        text = str(raw).strip().lower()
        if text in {"list-of-string", "list_of_string", "list[str]"}:
            return cls.STRING_LIST
        try:
            return cls(text)
        except ValueError as err:
            allowed = ", ".join(member.value for member in cls)
            raise DescriptorValidationError(
                field_name, f"unknown type {raw!r}; use {allowed}"
            ) from err


class Locality(str, Enum):
    """Where a tool runs, which decides how much attachment data it may receive."""

    LOCAL = "local"
    REMOTE = "remote"


class ToolStatus(str, Enum):
    """Lifecycle status of a registered tool."""

    AVAILABLE = "available"
    QUARANTINED = "quarantined"
    REMOVED = "removed"


@dataclass(frozen=True)
class ParamSpec:
    """One declared parameter of a tool."""

    name: str
    type: SemanticType
    required: bool = True
    description: str = ""

    def render(self) -> str:
        """Render as `name: type`, with a `?` marking optional parameters."""
        marker = "" if self.required else "?"
        return f"{self.name}{marker}: {self.type.value}"


@dataclass(frozen=True)
class TypeSignature:
    """Ordered parameters, output type and optional input size cap of a tool."""

    params: tuple[ParamSpec, ...] = ()
    output: SemanticType = SemanticType.STRING
    max_input_chars: int | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for param in self.params:
            if not param.name or not param.name.isidentifier():
                raise DescriptorValidationError(
                    "signature.params", f"invalid parameter name {param.name!r}"
                )
            if param.name in seen:
                raise DescriptorValidationError(
                    "signature.params", f"duplicate parameter name {param.name!r}"
                )
            seen.add(param.name)
        if self.max_input_chars is not None and self.max_input_chars < 1:
            raise DescriptorValidationError("signature.max_input_chars", "must be positive")

    def param(self, name: str) -> ParamSpec | None:
        """Return the parameter with the given name, if declared."""
        for param in self.params:
            if param.name == name:
                return param
        return None

    def render(self) -> str:
        """Render as `(a: integer, b?: string) -> string`."""
        params = ", ".join(param.render() for param in self.params)
        return f"({params}) -> {self.output.value}"


@dataclass(frozen=True)
class ToolDescriptor:  # pylint: disable=too-many-instance-attributes
    """Registry entry describing one tool."""

    name: str
    description: str = ""
    endpoint: str = ""
    signature: TypeSignature = field(default_factory=TypeSignature)
    max_parallel: int = DEFAULT_MAX_PARALLEL
    cost_per_1k_tokens: Decimal | None = None
    locality: Locality = Locality.LOCAL
    status: ToolStatus = ToolStatus.AVAILABLE
    timeout_seconds: float | None = None
    queue_limit: int = DEFAULT_QUEUE_LIMIT
    accepts_attachments: bool = False

    def __post_init__(self):
        if not self.name or not self.name.isidentifier():
            raise DescriptorValidationError("name", "must be a non-empty identifier")
        if self.max_parallel < 1:
            raise DescriptorValidationError("max_parallel", "must be at least 1")
        if self.cost_per_1k_tokens is not None and self.cost_per_1k_tokens < 0:
            raise DescriptorValidationError("cost_per_1k_tokens", "must be non-negative")
        if self.timeout_seconds is not None and self.timeout_seconds <= 0:
            raise DescriptorValidationError("timeout_seconds", "must be positive")
        if self.queue_limit < 0:
            raise DescriptorValidationError("queue_limit", "must be non-negative")

    @property
    def is_remote(self) -> bool:
        """Whether calls leave the local machine."""
        return self.locality is Locality.REMOTE


def descriptor_from_dict(doc: dict[str, Any]) -> ToolDescriptor:
    """
    Build a validated descriptor from its document form.

    The document uses exactly the ToolDescriptor field names. `status` is
    ignored on input: every freshly registered tool starts available.

    :param doc: Mapping loaded from a registry file or an HTTP body.
    :return: The descriptor.
    :raises DescriptorValidationError: naming the first offending field.
    """
    if not isinstance(doc, dict):
        raise DescriptorValidationError("descriptor", "must be a mapping")
    known = {
        "name",
        "description",
        "endpoint",
        "signature",
        "max_parallel",
        "cost_per_1k_tokens",
        "locality",
        "status",
        "timeout_seconds",
        "queue_limit",
        "accepts_attachments",
    }
    for key in doc:
        if key not in known:
            raise DescriptorValidationError(str(key), "unknown field")

    name = doc.get("name")
    if not isinstance(name, str):
        raise DescriptorValidationError("name", "must be a non-empty identifier")

    return ToolDescriptor(
        name=name,
        description=_as_str(doc.get("description", ""), "description"),
        endpoint=_as_str(doc.get("endpoint", ""), "endpoint"),
        signature=_signature_from_dict(doc.get("signature") or {}),
        max_parallel=_as_int(doc.get("max_parallel", DEFAULT_MAX_PARALLEL), "max_parallel"),
        cost_per_1k_tokens=_as_decimal(doc.get("cost_per_1k_tokens"), "cost_per_1k_tokens"),
        locality=_as_locality(doc.get("locality", Locality.LOCAL.value)),
        timeout_seconds=_as_float(doc.get("timeout_seconds"), "timeout_seconds"),
        queue_limit=_as_int(doc.get("queue_limit", DEFAULT_QUEUE_LIMIT), "queue_limit"),
        accepts_attachments=bool(doc.get("accepts_attachments", False)),
    )


def descriptor_to_dict(descriptor: ToolDescriptor) -> dict[str, Any]:
    """Convert a descriptor back to its document form."""
    signature = descriptor.signature
    return {
        "name": descriptor.name,
        "description": descriptor.description,
        "endpoint": descriptor.endpoint,
        "signature": {
            "params": [
                {
                    "name": param.name,
                    "type": param.type.value,
                    "required": param.required,
                    "description": param.description,
                }
                for param in signature.params
            ],
            "output": signature.output.value,
            "max_input_chars": signature.max_input_chars,
        },
        "max_parallel": descriptor.max_parallel,
        "cost_per_1k_tokens": (
            None if descriptor.cost_per_1k_tokens is None else str(descriptor.cost_per_1k_tokens)
        ),
        "locality": descriptor.locality.value,
        "status": descriptor.status.value,
        "timeout_seconds": descriptor.timeout_seconds,
        "queue_limit": descriptor.queue_limit,
        "accepts_attachments": descriptor.accepts_attachments,
    }


def _signature_from_dict(doc: Any) -> TypeSignature:
    if not isinstance(doc, dict):
        raise DescriptorValidationError("signature", "must be a mapping")
    raw_params = doc.get("params", [])
    if not isinstance(raw_params, list):
        raise DescriptorValidationError("signature.params", "must be a list")
    params = []
    for index, raw in enumerate(raw_params):
        field_name = f"signature.params[{index}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
            raise DescriptorValidationError(field_name, "must be a mapping with a name")
        params.append(
            ParamSpec(
                name=raw["name"],
                type=SemanticType.parse(raw.get("type", "string"), f"{field_name}.type"),
                required=bool(raw.get("required", True)),
                description=_as_str(raw.get("description", ""), f"{field_name}.description"),
            ),
        )
    max_input_chars = doc.get("max_input_chars")
    return TypeSignature(
        params=tuple(params),
        output=SemanticType.parse(doc.get("output", "string"), "signature.output"),
        max_input_chars=(
            None
            if max_input_chars is None
            else _as_int(max_input_chars, "signature.max_input_chars")
        ),
    )


def _as_str(raw: Any, field_name: str) -> str:
    if not isinstance(raw, str):
        raise DescriptorValidationError(field_name, "must be a string")
    return raw


def _as_int(raw: Any, field_name: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise DescriptorValidationError(field_name, "must be an integer")
    return raw


def _as_float(raw: Any, field_name: str) -> float | None:
    if raw is None:
        return None
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise DescriptorValidationError(field_name, "must be a number")
    return float(raw)


def _as_decimal(raw: Any, field_name: str) -> Decimal | None:
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise DescriptorValidationError(field_name, "must be a number")
    try:
        return Decimal(str(raw))
    except InvalidOperation as err:
        raise DescriptorValidationError(field_name, "must be a number") from err


def _as_locality(raw: Any) -> Locality:
    try:
        return Locality(str(raw).lower())
    except ValueError as err:
        raise DescriptorValidationError("locality", "must be 'local' or 'remote'") from err
