"""Unit tests for registry files."""

from pathlib import Path

import pytest

from reactor.errors import ConfigError, DescriptorValidationError
from reactor.registry.descriptors import descriptor_to_dict
from reactor.registry.loader import load_registry_file, read_registry_file, write_registry_file
from reactor.registry.registry import ToolRegistry

from tests.small.conftest import make_descriptor

REGISTRY_YAML = """
tools:
  - name: Lookup
    endpoint: inproc://Lookup
    signature:
      params:
        - {name: query, type: string}
  - name: Summarizer
    endpoint: http://localhost:9000/summarize
    locality: remote
    cost_per_1k_tokens: 0.01
"""


def test_read_registry_file(tmp_path: Path):
    """Should parse every descriptor of a YAML registry file."""
    path = tmp_path / "tools.yaml"
    path.write_text(REGISTRY_YAML, encoding="utf-8")

    descriptors = read_registry_file(path)

    assert [descriptor.name for descriptor in descriptors] == ["Lookup", "Summarizer"]
    assert descriptors[1].is_remote


def test_read_plain_list(tmp_path: Path):
    """Should accept a bare JSON list of descriptors."""
    path = tmp_path / "tools.json"
    path.write_text('[{"name": "Echo"}]', encoding="utf-8")

    assert [descriptor.name for descriptor in read_registry_file(path)] == ["Echo"]


def test_load_skips_registered_names(tmp_path: Path, registry: ToolRegistry):
    """Should keep runtime registrations and add only new names."""
    path = tmp_path / "tools.yaml"
    path.write_text(REGISTRY_YAML, encoding="utf-8")
    registry.add(make_descriptor("Lookup", max_parallel=4))

    added = load_registry_file(registry, path)

    assert added == ["Summarizer"]
    assert registry.get("Lookup").max_parallel == 4


def test_write_then_read(tmp_path: Path):
    """Should write descriptor documents that read back unchanged."""
    path = tmp_path / "tools.yaml"
    descriptor = make_descriptor("Lookup", max_parallel=2)

    write_registry_file(path, [descriptor_to_dict(descriptor)])

    assert read_registry_file(path) == [descriptor]


@pytest.mark.parametrize("content", ["tools: {name: Echo}", "just text", "[unclosed"])
def test_malformed_file(tmp_path: Path, content: str):
    """Should report a file that is not a list of descriptors."""
    path = tmp_path / "tools.yaml"
    path.write_text(content, encoding="utf-8")

    with pytest.raises(ConfigError):
        read_registry_file(path)


def test_missing_file(tmp_path: Path):
    """Should report a missing file as a configuration error."""
    with pytest.raises(ConfigError):
        read_registry_file(tmp_path / "absent.yaml")


def test_invalid_descriptor(tmp_path: Path):
    """Should surface descriptor validation errors."""
    path = tmp_path / "tools.yaml"
    path.write_text("- {name: Echo, max_parallel: 0}", encoding="utf-8")

    with pytest.raises(DescriptorValidationError):
        read_registry_file(path)
