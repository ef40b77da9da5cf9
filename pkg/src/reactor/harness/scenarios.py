"""
Scenario files for `reactor simulate`.

A scenario is a YAML document of one of three kinds.

A session scenario lists synthetic tools, a planner script and assertion
clauses::

    name: lookup
    task: Look up the answer.
    seed: 0
    runs: 3
    tools:
      - {name: Lookup, latency: [0.05, 0.1], max_parallel: 2, response: "42"}
    script:
      - 'Action: Lookup(query="answer")'
      - "Final Answer: 42"
    assert:
      status: done
      answer_contains: ["42"]

An experiment scenario names a runner and its parameters::

    name: robustness
    experiment: robustness
    params: {failure_probability: 0.2, runs: 200}

A cost scenario prices a token trace under rate configurations::

    name: cost
    experiment: cost
    trace: {calls: [[10000, 2000]], tool_tokens: {Summarizer: 500}}
    configs:
      - {name: uniform, prompt_rate: 0.005, completion_rate: 0.015, tool_rates: {Summarizer: 0.015}}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any

import yaml

from reactor.backends.scripted import ScriptedBackend, ScriptStep
from reactor.config import ServiceConfig, config_from_dict
from reactor.dispatcher.privacy import Attachment, attachment_from_dict
from reactor.errors import ConfigError
from reactor.harness.experiments import (
    EXPERIMENTS,
    CostConfig,
    ExperimentReport,
    RunRecord,
    TokenTrace,
    run_cost_experiment,
)
from reactor.harness.synthetic import (
    CallRecorder,
    SyntheticToolSpec,
    install_tools,
    spec_fault_injector,
)
from reactor.planner.cost import PricingRates
from reactor.planner.session import SessionState, SessionStatus
from reactor.runtime import Engine


logger = logging.getLogger(__name__)

_SCENARIO_KEYS = frozenset(
    {
        "name",
        "description",
        "task",
        "seed",
        "runs",
        "tools",
        "script",
        "attachments",
        "config",
        "assert",
        "experiment",
        "params",
        "trace",
        "configs",
    }
)
_ASSERT_KEYS = frozenset(
    {
        "status",
        "answer_contains",
        "max_backend_calls",
        "overlap",
        "no_overlap",
        "max_concurrency",
        "called",
    }
)


@dataclass(frozen=True)
class Assertions:
    """Clauses checked after every run of a session scenario."""

    status: str | None = "done"
    answer_contains: tuple[str, ...] = ()
    max_backend_calls: int | None = None
    overlap: tuple[str, ...] = ()
    no_overlap: tuple[str, ...] = ()
    max_concurrency: dict[str, int] = field(default_factory=dict)
    called: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict[str, Any] | None) -> Assertions:
        if doc is None:
            return cls()
        if not isinstance(doc, dict):
            raise ConfigError("scenario 'assert' must be a mapping")
        unknown = set(doc) - _ASSERT_KEYS
        if unknown:
            raise ConfigError(f"unknown assertion clause '{sorted(unknown)[0]}'")
        return cls(
            status=doc.get("status", "done"),
            answer_contains=tuple(doc.get("answer_contains", ())),
            max_backend_calls=doc.get("max_backend_calls"),
            overlap=tuple(doc.get("overlap", ())),
            no_overlap=tuple(doc.get("no_overlap", ())),
            max_concurrency=dict(doc.get("max_concurrency", {})),
            called=dict(doc.get("called", {})),
        )

    def check(self, session: SessionState, recorder: CallRecorder) -> dict[str, bool]:
        """Outcome of every clause, keyed by a readable name."""
        results: dict[str, bool] = {}
        if self.status is not None:
            results[f"status is {self.status}"] = session.status.value == self.status
        answer = session.final_answer or ""
        for part in self.answer_contains:
            results[f"answer contains {part!r}"] = part in answer
        if self.max_backend_calls is not None:
            results[f"at most {self.max_backend_calls} backend calls"] = (
                session.backend_calls <= self.max_backend_calls
            )
        for tool in self.overlap:
            results[f"{tool} calls overlap"] = recorder.any_overlap(tool)
        for tool in self.no_overlap:
            results[f"{tool} calls never overlap"] = not recorder.any_overlap(tool)
        for tool, limit in self.max_concurrency.items():
            results[f"{tool} concurrency at most {limit}"] = recorder.high_water(tool) <= limit
        for tool, count in self.called.items():
            results[f"{tool} called {count} times"] = len(recorder.calls_of(tool)) == count
        return results


@dataclass
class Scenario:  # pylint: disable=too-many-instance-attributes
    """A parsed scenario document."""

    name: str
    document: dict[str, Any]
    task: str = ""
    seed: int = 0
    runs: int = 1
    tools: list[SyntheticToolSpec] = field(default_factory=list)
    script: list[ScriptStep] = field(default_factory=list)
    attachments: list[Attachment] = field(default_factory=list)
    config: ServiceConfig = field(default_factory=ServiceConfig)
    assertions: Assertions = field(default_factory=Assertions)
    experiment: str | None = None

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base_dir: Path | None = None) -> Scenario:
        """
        Build a scenario from a parsed document.

        :param doc: The document.
        :param base_dir: Directory that relative attachment paths resolve against.
        :raises ConfigError: on unknown keys or a document of no known kind.
        """
        if not isinstance(doc, dict):
            raise ConfigError("a scenario must be a mapping")
        unknown = set(doc) - _SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario key '{sorted(unknown)[0]}'")
        experiment = doc.get("experiment")
        if experiment is not None and experiment != "cost" and experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{experiment}'")
        if experiment is None and not (doc.get("task") and doc.get("script")):
            raise ConfigError("a session scenario needs 'task' and 'script'")
        return cls(
            name=str(doc.get("name", experiment or "scenario")),
            document=doc,
            task=str(doc.get("task", "")),
            seed=int(doc.get("seed", 0)),
            runs=int(doc.get("runs", 1)),
            tools=[SyntheticToolSpec.from_dict(tool) for tool in doc.get("tools", [])],
            script=[ScriptStep.from_dict(step) for step in doc.get("script", [])],
            attachments=[
                attachment_from_dict(entry, base_dir or Path.cwd())
                for entry in doc.get("attachments", [])
            ],
            config=config_from_dict(doc.get("config") or {}),
            assertions=Assertions.from_dict(doc.get("assert")),
            experiment=experiment,
        )


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file."""
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read scenario {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"scenario {path} is not valid YAML: {err}") from err
    return Scenario.from_dict(document or {}, base_dir=path.parent)


def run_scenario(scenario: Scenario, seed: int | None = None) -> ExperimentReport:
    """
    Run a scenario.

    :param scenario: The scenario.
    :param seed: Replaces the scenario's own seed.
    :return: The report; session scenarios record every clause outcome in `facts`.
    """
    seed = scenario.seed if seed is None else seed
    logger.info("Running scenario %s with seed %d", scenario.name, seed)
    if scenario.experiment == "cost":
        return _run_cost(scenario)
    if scenario.experiment is not None:
        params = dict(scenario.document.get("params") or {})
        if scenario.experiment == "parallelism":
            params.setdefault("seeds", [seed])
        else:
            params["seed"] = seed
        report = EXPERIMENTS[scenario.experiment](**params)
        report.scenario = scenario.name
        return report
    return _run_sessions(scenario, seed)


def _run_sessions(scenario: Scenario, seed: int) -> ExperimentReport:
    report = ExperimentReport(scenario=scenario.name)
    for index in range(scenario.runs):
        run_seed = seed + index
        session, elapsed, recorder = _run_once(scenario, run_seed)
        checks = scenario.assertions.check(session, recorder)
        report.runs.append(
            RunRecord(
                config="session",
                seed=run_seed,
                wall_time=elapsed,
                dollars=session.cost.dollars,
                success=all(checks.values()),
                turns=session.turn,
                backend_calls=session.backend_calls,
            )
        )
        report.facts[f"run {run_seed}"] = {
            "status": session.status.value,
            "answer": session.final_answer,
            "checks": checks,
            "transcript": [entry.render() for entry in session.scratchpad],
        }
    return report


def _run_once(scenario: Scenario, seed: int) -> tuple[SessionState, float, CallRecorder]:
    engine = Engine(
        scenario.config,
        backend=ScriptedBackend(scenario.script),
        fault_injector=spec_fault_injector(scenario.tools, seed),
    )
    recorder = CallRecorder()
    try:
        for descriptor in install_tools(scenario.tools, engine.inproc, recorder, seed):
            engine.registry.add(descriptor)
        started = recorder.clock()
        session = engine.planner.run(scenario.task, scenario.attachments)
        elapsed = recorder.clock() - started
    finally:
        engine.shutdown()
    if session.status is SessionStatus.FAILED:
        logger.info("Scenario %s seed %d failed: %s", scenario.name, seed, session.failure)
    return session, elapsed, recorder


def _run_cost(scenario: Scenario) -> ExperimentReport:
    doc = scenario.document
    trace_doc = doc.get("trace") or {}
    tool_tokens = trace_doc.get("tool_tokens") or {}
    trace = TokenTrace(
        calls=tuple(
            (int(prompt), int(completion)) for prompt, completion in trace_doc.get("calls", [])
        ),
        tool_tokens={str(tool): int(tokens) for tool, tokens in tool_tokens.items()},
    )
    configs = [_cost_config(entry) for entry in doc.get("configs") or []]
    report = run_cost_experiment(trace, configs or None)
    report.scenario = scenario.name
    return report


def _cost_config(entry: Any) -> CostConfig:
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"a cost config needs a name: {entry!r}")
    tool_rates = entry.get("tool_rates") or {}
    return CostConfig(
        name=str(entry["name"]),
        rates=PricingRates.of(
            entry.get("prompt_rate", "0.005"), entry.get("completion_rate", "0.015")
        ),
        tool_rates={str(tool): Decimal(str(rate)) for tool, rate in tool_rates.items()},
    )
