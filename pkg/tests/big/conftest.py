"""Pytest configuration and fixtures for end-to-end testing of the engine and its service."""

from collections.abc import Callable, Generator, Sequence
from pathlib import Path

import pytest

from reactor.backends.scripted import ScriptedBackend, ScriptStep
from reactor.config import config_from_dict
from reactor.runtime import Engine
from reactor.service.app import create_app
from tests.big.helpers.servers import ServerThread, notes_tool_app

REPO_ROOT = Path(__file__).resolve().parents[2]
SCENARIOS_DIR = REPO_ROOT / "scenarios"
NOTES_PAGES = ("Q1: hiring plan.", "Q2: product launch in May.", "Q3: nothing planned.")


@pytest.fixture()
def notes_server() -> Generator[ServerThread, None, None]:
    """Run the HTTP NotesReader tool server in the background."""
    server = ServerThread(notes_tool_app(NOTES_PAGES))
    server.start()
    yield server
    server.stop()


@pytest.fixture()
def start_service(
    tmp_path: Path,
) -> Generator[Callable[..., tuple[Engine, ServerThread]], None, None]:
    """
    Provide a factory starting the HTTP service on a free port.

    The engine answers from the given script and writes traces under `tmp_path`.
    """
    started: list[tuple[Engine, ServerThread]] = []

    def start(script: Sequence[ScriptStep | str], **sections) -> tuple[Engine, ServerThread]:
        config = config_from_dict({"trace_dir": str(tmp_path / "traces"), **sections})
        engine = Engine(config, backend=ScriptedBackend(script))
        server = ServerThread(create_app(engine))
        server.start()
        started.append((engine, server))
        return engine, server

    yield start

    for engine, server in started:
        server.stop()
        engine.shutdown()
