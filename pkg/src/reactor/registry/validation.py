"""
Validation of parsed actions against tool signatures.

`validate_action` is total: whatever the planner (or a fuzzer) puts into an
action, the result is either a `ValidatedAction` with arguments coerced to the
declared semantic types or a `ValidationFailure` with one of four reasons.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any

from reactor.planner.actions import Action, ArgValue
from reactor.registry.descriptors import SemanticType, ToolDescriptor
from reactor.registry.registry import RegistrySnapshot

_INTEGER_TEXT = re.compile(r"[+-]?[0-9]+")
_TRUE_WORDS = frozenset({"true", "yes"})
_FALSE_WORDS = frozenset({"false", "no"})


class FailureReason(str, Enum):
    """Why an action was rejected before dispatch."""

    UNKNOWN_TOOL = "unknown tool"
    MISSING_PARAM = "missing required param"
    TYPE_MISMATCH = "type mismatch"
    OVERSIZE_INPUT = "oversize input"


@dataclass(frozen=True)
class ValidationFailure:
    """A structured rejection, rendered into the scratchpad as an Error entry."""

    reason: FailureReason
    tool: str
    message: str
    param: str | None = None

    def render(self) -> str:
        """Scratchpad text for this failure."""
        return f"{self.reason.value}: {self.message}"


@dataclass(frozen=True)
class ValidatedAction:
    """An action whose arguments are bound by name and coerced to declared types."""

    action: Action
    descriptor: ToolDescriptor
    args: dict[str, ArgValue]

    @property
    def payload(self) -> str:
        """Serialized arguments, as measured against max_input_chars."""
        return serialize_args(self.args)


class _Mismatch(Exception):
    """Internal signal for a value that cannot be coerced."""


def serialize_args(args: dict[str, Any]) -> str:
    """Serialize arguments the way they travel to a tool."""
    return json.dumps(args, ensure_ascii=False, sort_keys=False)


def validate_action(
    action: Action,
    snapshot: RegistrySnapshot,
) -> ValidatedAction | ValidationFailure:
    """
    Check an action against the signature of the tool it names.

    Removed and quarantined tools still validate: the dispatcher reports them
    unavailable, which is what the planner should observe.

    :param action: Parsed action.
    :param snapshot: Registry snapshot of the current turn.
    :return: The validated action or the first failure found.
    """
    tool_name = action.tool if isinstance(action.tool, str) else repr(action.tool)
    descriptor = snapshot.get(tool_name)
    if descriptor is None:
        return ValidationFailure(
            FailureReason.UNKNOWN_TOOL, tool_name, f"no tool named '{tool_name}'"
        )

    bound, failure = _bind_arguments(action, descriptor)
    if failure is not None:
        return failure

    signature = descriptor.signature
    for param in signature.params:
        if param.required and param.name not in bound:
            return ValidationFailure(
                FailureReason.MISSING_PARAM,
                tool_name,
                f"{tool_name} requires parameter '{param.name}'",
                param=param.name,
            )

    coerced: dict[str, ArgValue] = {}
    for name, raw in bound.items():
        param = signature.param(name)
        if param is None:
            return ValidationFailure(
                FailureReason.TYPE_MISMATCH,
                tool_name,
                f"{tool_name} has no parameter '{name}'",
                param=name,
            )
        try:
            coerced[name] = coerce_value(raw, param.type)
        except (_Mismatch, OverflowError, ValueError):
            return ValidationFailure(
                FailureReason.TYPE_MISMATCH,
                tool_name,
                f"parameter '{name}' expects {param.type.value}, got {_describe(raw)}",
                param=name,
            )

    limit = signature.max_input_chars
    if limit is not None:
        size = len(serialize_args(coerced))
        if size > limit:
            return ValidationFailure(
                FailureReason.OVERSIZE_INPUT,
                tool_name,
                f"arguments serialize to {size} chars, {tool_name} accepts at most {limit}",
            )
    return ValidatedAction(action=action, descriptor=descriptor, args=coerced)


def coerce_value(raw: Any, semantic_type: SemanticType) -> ArgValue:  # noqa: C901
    """
    Coerce one argument value to a declared semantic type.

    :raises _Mismatch: if the value cannot represent the type.
    """
    if semantic_type is SemanticType.STRING:
        if isinstance(raw, str):
            return raw
        if isinstance(raw, (bool, int)) or (isinstance(raw, float) and math.isfinite(raw)):
            return json.dumps(raw)
        raise _Mismatch
    if semantic_type is SemanticType.INTEGER:
        return _coerce_integer(raw)
    if semantic_type is SemanticType.NUMBER:
        return _coerce_number(raw)
    if semantic_type is SemanticType.BOOLEAN:
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str) and raw.strip().lower() in _TRUE_WORDS | _FALSE_WORDS:
            return raw.strip().lower() in _TRUE_WORDS
        raise _Mismatch
    if isinstance(raw, str):
        return [raw]
    if isinstance(raw, (list, tuple)) and all(isinstance(item, str) for item in raw):
        return list(raw)
    raise _Mismatch


def _coerce_integer(raw: Any) -> int:
    if isinstance(raw, bool):
        raise _Mismatch
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float) and math.isfinite(raw) and raw.is_integer():
        return int(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if _INTEGER_TEXT.fullmatch(text):
            return int(text)
    raise _Mismatch


def _coerce_number(raw: Any) -> float:
    if isinstance(raw, bool):
        raise _Mismatch
    if isinstance(raw, (int, float)):
        value = float(raw)
    elif isinstance(raw, str):
        try:
            value = float(raw.strip())
        except ValueError as err:
            raise _Mismatch from err
    else:
        raise _Mismatch
    if not math.isfinite(value):
        raise _Mismatch
    return value


def _bind_arguments(
    action: Action,
    descriptor: ToolDescriptor,
) -> tuple[dict[str, Any], ValidationFailure | None]:
    """Bind positional arguments to parameters in declaration order, then merge named ones."""
    params = descriptor.signature.params
    positional = tuple(action.positional or ())
    named = action.args if isinstance(action.args, dict) else {}
    if len(positional) > len(params):
        return {}, ValidationFailure(
            FailureReason.TYPE_MISMATCH,
            descriptor.name,
            f"{descriptor.name} takes {len(params)} arguments, {len(positional)} given",
        )
    bound: dict[str, Any] = {}
    for param, value in zip(params, positional):
        bound[param.name] = value
    for name, value in named.items():
        key = name if isinstance(name, str) else repr(name)
        if key in bound:
            return {}, ValidationFailure(
                FailureReason.TYPE_MISMATCH,
                descriptor.name,
                f"parameter '{key}' given more than once",
                param=key,
            )
        bound[key] = value
    return bound, None


def _describe(raw: Any) -> str:
    text = repr(raw)
    if len(text) > 40:
        text = text[:37] + "..."
    return f"{type(raw).__name__} {text}"
