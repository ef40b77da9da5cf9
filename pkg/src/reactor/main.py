"""Entry point of the `reactor` command line."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import TextIO

import httpx
import uvicorn
import yaml

from reactor.config import ServiceConfig, load_config, override
from reactor.errors import DuplicateToolError, ReactorError, ToolNotFoundError
from reactor.harness.golden import GoldenVariant, run_golden_trace
from reactor.harness.scenarios import load_scenario, run_scenario
from reactor.planner.session import SessionStatus
from reactor.registry.descriptors import descriptor_to_dict
from reactor.registry.loader import read_registry_file, write_registry_file
from reactor.runtime import Engine
from reactor.service.app import create_app
from reactor.service.tail import tail
from reactor.service.taskfile import load_task_file


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
DEFAULT_URL = "http://127.0.0.1:8080"
_TABLE_COLUMNS = ("name", "status", "max_parallel", "locality", "cost_per_1k_tokens")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of every subcommand."""
    parser = argparse.ArgumentParser(prog="reactor", description="ReAct orchestration engine")
    parser.add_argument("--config", type=Path, help="YAML configuration file")
    parser.add_argument("--log-level", help="Logging level, overrides the configuration")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="Start the HTTP service")
    serve.add_argument("--host", help="Listen address")
    serve.add_argument("--port", type=int, help="Listen port")

    run = commands.add_parser("run", help="Run one task file and print its trace")
    run.add_argument("taskfile", type=Path)
    run.add_argument("--max-turns", type=int, help="Turn cap of the session")

    registry = commands.add_parser("registry", help="Administer tools")
    registry_commands = registry.add_subparsers(dest="registry_command", required=True)
    add = registry_commands.add_parser("add", help="Register the tools of a descriptor file")
    add.add_argument("descriptors", type=Path)
    remove = registry_commands.add_parser("rm", help="Remove a tool")
    remove.add_argument("name")
    listing = registry_commands.add_parser("ls", help="List tools")
    listing.add_argument("--all", action="store_true", help="Include removed tools")
    for sub in (add, remove, listing):
        target = sub.add_mutually_exclusive_group()
        target.add_argument("--url", help=f"Running service (default {DEFAULT_URL})")
        target.add_argument("--file", type=Path, help="Registry file to edit instead")

    tail_command = commands.add_parser("tail", help="Follow the events of a session")
    tail_command.add_argument("session_id")
    tail_command.add_argument("--url", default=DEFAULT_URL, help="Running service")
    tail_command.add_argument("--from-seq", type=int, default=0, help="First seq to print")
    tail_command.add_argument("--no-color", action="store_true", help="Plain output")

    simulate = commands.add_parser("simulate", help="Run a scenario file")
    simulate.add_argument("scenario", type=Path)
    simulate.add_argument("--seed", type=int, help="Replaces the scenario's seed")
    simulate.add_argument("--json", type=Path, help="Also write the report as JSON")
    simulate.add_argument("--timings", action="store_true", help="Include wall times")

    golden = commands.add_parser("golden", help="Run the golden trace")
    golden.add_argument(
        "--variant",
        choices=[variant.value for variant in GoldenVariant],
        default=GoldenVariant.NOMINAL.value,
    )
    golden.add_argument("--stream", action="store_true", help="Use the streaming planner path")
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    """Entry point of the `reactor` command; returns the exit status."""
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        config = load_config(args.config)
        logging.basicConfig(
            level=(args.log_level or config.log_level).upper(),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        handler = _COMMANDS[args.command]
        return handler(args, config, out)
    except ReactorError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILED
    except httpx.HTTPError as err:
        print(f"error: service request failed: {err}", file=sys.stderr)
        return EXIT_FAILED


def _serve(args: argparse.Namespace, config: ServiceConfig, _out: TextIO) -> int:
    config = override(config, host=args.host, port=args.port)
    engine = Engine(config)
    app = create_app(engine)
    logger.info("Serving on %s:%d", config.host, config.port)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level=config.log_level.lower())
    finally:
        engine.shutdown()
    return EXIT_OK


def _run(args: argparse.Namespace, config: ServiceConfig, out: TextIO) -> int:
    taskfile = load_task_file(args.taskfile)
    engine = taskfile.engine(config)
    try:
        session = engine.planner.new_session(
            taskfile.task,
            taskfile.attachments,
            max_turns=args.max_turns or taskfile.max_turns,
        )
        engine.planner.run_session(session)
    finally:
        engine.shutdown()
    for entry in session.scratchpad:
        print(entry.render(), file=out)
    print(file=out)
    if session.status is SessionStatus.DONE:
        print(session.final_answer, file=out)
        return EXIT_OK
    print(f"session failed: {session.failure}", file=out)
    return EXIT_FAILED


def _registry(args: argparse.Namespace, _config: ServiceConfig, out: TextIO) -> int:
    if args.file is not None:
        return _registry_file(args, out)
    url = (args.url or DEFAULT_URL).rstrip("/")
    with httpx.Client(timeout=10.0) as client:
        if args.registry_command == "ls":
            response = client.get(f"{url}/registry/tools", params={"include_removed": args.all})
            response.raise_for_status()
            _print_table(response.json(), out)
            return EXIT_OK
        if args.registry_command == "rm":
            response = client.delete(f"{url}/registry/tools/{args.name}")
            return _report_outcome(response, out)
        status = EXIT_OK
        for descriptor in read_registry_file(args.descriptors):
            response = client.post(f"{url}/registry/tools", json=descriptor_to_dict(descriptor))
            status = max(status, _report_outcome(response, out))
        return status


def _registry_file(args: argparse.Namespace, out: TextIO) -> int:
    path: Path = args.file
    documents = (
        [descriptor_to_dict(tool) for tool in read_registry_file(path)] if path.exists() else []
    )
    names = [document["name"] for document in documents]
    if args.registry_command == "ls":
        _print_table(
            [doc for doc in documents if args.all or doc["status"] != "removed"],
            out,
        )
        return EXIT_OK
    if args.registry_command == "rm":
        if args.name not in names:
            raise ToolNotFoundError(args.name)
        write_registry_file(path, [doc for doc in documents if doc["name"] != args.name])
        print(f"Removed tool '{args.name}'", file=out)
        return EXIT_OK
    for descriptor in read_registry_file(args.descriptors):
        if descriptor.name in names:
            raise DuplicateToolError(descriptor.name)
        documents.append(descriptor_to_dict(descriptor))
        names.append(descriptor.name)
        print(f"Registered tool '{descriptor.name}'", file=out)
    write_registry_file(path, documents)
    return EXIT_OK


def _report_outcome(response: httpx.Response, out: TextIO) -> int:
    body = response.json()
    if response.is_success:
        print(body["message"], file=out)
        return EXIT_OK
    print(f"error: {body.get('detail', response.text)}", file=out)
    return EXIT_FAILED


def _print_table(documents: list[dict], out: TextIO) -> None:
    rows = [[str(doc.get(column) or "-") for column in _TABLE_COLUMNS] for doc in documents]
    widths = [
        max([len(column), *(len(row[index]) for row in rows)])
        for index, column in enumerate(_TABLE_COLUMNS)
    ]
    print("  ".join(col.ljust(width) for col, width in zip(_TABLE_COLUMNS, widths)), file=out)
    for row in rows:
        print("  ".join(cell.ljust(width) for cell, width in zip(row, widths)), file=out)


def _tail(args: argparse.Namespace, _config: ServiceConfig, out: TextIO) -> int:
    tail(args.url, args.session_id, out, from_seq=args.from_seq, color=not args.no_color)
    return EXIT_OK


def _simulate(args: argparse.Namespace, _config: ServiceConfig, out: TextIO) -> int:
    scenario = load_scenario(args.scenario)
    report = run_scenario(scenario, seed=args.seed)
    print(report.render_table(include_timings=args.timings), file=out)
    if args.json is not None:
        args.json.write_text(report.to_json(include_timings=args.timings) + "\n", encoding="utf-8")
    if scenario.experiment is not None:
        return EXIT_OK
    return EXIT_OK if all(run.success for run in report.runs) else EXIT_FAILED


def _golden(args: argparse.Namespace, _config: ServiceConfig, out: TextIO) -> int:
    report = run_golden_trace(GoldenVariant(args.variant), stream=args.stream)
    for line in report.transcript:
        print(line, file=out)
    print(file=out)
    print(yaml.safe_dump(report.to_dict(), sort_keys=False), file=out, end="")
    return EXIT_OK if report.passed else EXIT_FAILED


_COMMANDS = {
    "serve": _serve,
    "run": _run,
    "registry": _registry,
    "tail": _tail,
    "simulate": _simulate,
    "golden": _golden,
}


if __name__ == "__main__":
    sys.exit(main())
