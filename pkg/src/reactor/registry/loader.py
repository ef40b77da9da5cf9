"""Loading of registry files: a YAML or JSON list of tool descriptors."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import yaml

from reactor.errors import ConfigError, DuplicateToolError
from reactor.registry.descriptors import ToolDescriptor, descriptor_from_dict
from reactor.registry.registry import ToolRegistry


logger = logging.getLogger(__name__)


def read_registry_file(path: str | Path) -> list[ToolDescriptor]:
    """
    Parse a registry file.

    The document is either a list of descriptor mappings or a mapping with a
    `tools` key holding that list.

    :raises ConfigError: if the file is missing or malformed.
    :raises DescriptorValidationError: if a descriptor is invalid.
    """
    file_path = Path(path)
    try:
        document: Any = yaml.safe_load(file_path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"Cannot read registry file {file_path}: {err}") from err
    if isinstance(document, dict):
        document = document.get("tools", [])
    if document is None:
        return []
    if not isinstance(document, list):
        raise ConfigError(f"Registry file {file_path} must contain a list of tools")
    return [descriptor_from_dict(entry) for entry in document]


def load_registry_file(registry: ToolRegistry, path: str | Path) -> list[str]:
    """
    Merge the descriptors of a registry file into a live registry.

    Names that are already registered keep their runtime registration.

    :return: Names of the tools that were added.
    """
    added = []
    for descriptor in read_registry_file(path):
        try:
            registry.add(descriptor)
        except DuplicateToolError:
            logger.warning("Tool %s from %s already registered, skipped", descriptor.name, path)
            continue
        added.append(descriptor.name)
    return added


def write_registry_file(path: str | Path, descriptors: list[dict[str, Any]]) -> None:
    """Write descriptor documents back to a registry file."""
    Path(path).write_text(
        yaml.safe_dump({"tools": descriptors}, sort_keys=False, allow_unicode=True),
        encoding="utf-8",
    )
