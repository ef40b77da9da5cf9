"""Unit tests for task files."""

from pathlib import Path

import pytest

from reactor.config import ServiceConfig, config_from_dict
from reactor.errors import ConfigError
from reactor.harness.golden import GOLDEN_TASK, REPORT_NAME
from reactor.planner.session import SessionStatus
from reactor.service.taskfile import TaskFile, load_task_file

from tests.small.conftest import echo


def test_inline_script_and_registry(tmp_path: Path):
    """Should run on a scripted backend with tools merged from the registry file."""
    (tmp_path / "tools.yaml").write_text(
        "- {name: Lookup, endpoint: 'inproc://Lookup',"
        " signature: {params: [{name: query, type: string}]}}\n",
        encoding="utf-8",
    )
    path = tmp_path / "task.yaml"
    path.write_text(
        "task: Find x.\n"
        "max_turns: 3\n"
        "registry: tools.yaml\n"
        "script:\n"
        "  - 'Action: Lookup(query=\"x\")'\n"
        "  - response: 'Final Answer: echo x'\n"
        "    expect: 'Observation: Lookup: echo x'\n",
        encoding="utf-8",
    )
    task_file = load_task_file(path)

    engine = task_file.engine(ServiceConfig())
    engine.inproc.register("Lookup", echo)
    try:
        session = engine.planner.new_session(task_file.task, max_turns=task_file.max_turns)
        engine.planner.run_session(session)
    finally:
        engine.shutdown()

    assert session.max_turns == 3
    assert session.status is SessionStatus.DONE
    assert session.final_answer == "echo x"


def test_script_file_relative_to_task(tmp_path: Path):
    """Should load a script path relative to the task file."""
    (tmp_path / "plan.yaml").write_text("- 'Final Answer: from file'\n", encoding="utf-8")
    task_file = TaskFile.from_dict({"task": "t", "script": "plan.yaml"}, tmp_path)

    engine = task_file.engine(ServiceConfig())
    try:
        session = engine.planner.run(task_file.task)
    finally:
        engine.shutdown()

    assert session.final_answer == "from file"


def test_config_section_merges_key_by_key(tmp_path: Path):
    """Should change only the keys the task file names."""
    base = config_from_dict({"session": {"max_turns": 7, "verbatim_turns": 1}})
    task_file = TaskFile.from_dict(
        {"task": "t", "script": ["Final Answer: x"], "config": {"session": {"max_turns": 2}}},
        tmp_path,
    )

    engine = task_file.engine(base)
    engine.shutdown()

    assert engine.config.session.max_turns == 2
    assert engine.config.session.verbatim_turns == 1


def test_golden_preset(tmp_path: Path):
    """Should supply the golden task, tools and report attachment."""
    task_file = TaskFile.from_dict({"preset": "golden"}, tmp_path)

    engine = task_file.engine(ServiceConfig())
    engine.shutdown()

    assert task_file.task == GOLDEN_TASK
    assert [attachment.name for attachment in task_file.attachments] == [REPORT_NAME]
    assert [tool.name for tool in engine.registry.list_tools()] == [
        "DocIndex",
        "PDFParser",
        "Summarizer",
    ]


@pytest.mark.parametrize(
    ("doc", "message"),
    [
        ([], "must be a mapping"),
        ({"script": []}, "non-empty 'task'"),
        ({"task": "  "}, "non-empty 'task'"),
        ({"task": "t", "budget": 1}, "unknown task file key 'budget'"),
        ({"task": "t", "preset": "demo"}, "unknown preset 'demo'"),
    ],
)
def test_invalid_task_files(tmp_path: Path, doc, message):
    """Should name what is wrong with a task file."""
    with pytest.raises(ConfigError, match=message):
        TaskFile.from_dict(doc, tmp_path)


def test_load_task_file_errors(tmp_path: Path):
    """Should report missing and unparsable task files."""
    broken = tmp_path / "broken.yaml"
    broken.write_text("task: [unclosed\n", encoding="utf-8")

    with pytest.raises(ConfigError, match="cannot read task file"):
        load_task_file(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_task_file(broken)
