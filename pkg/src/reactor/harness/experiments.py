"""
Experiment runners reproducing the engine's mechanism claims at desk scale.

* parallelism: one group of independent calls, dispatched in parallel and
  forced-sequential; the report carries the wall-time ratio.
* robustness: many seeded sessions under injected tool failures, with and
  without replanning to an alternative tool.
* cost: the same token trace priced under a uniform expensive rate and under
  a cheap planner with an expensive remote tool.
* scalability: one wide group spread over worker pools of growing size.

Every run owns its engine, so quarantines never leak between runs. Reports
are deterministic for a seed once timing fields are left out.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

from reactor.backends.base import PlannerBackend, RecordingBackend
from reactor.backends.scripted import ScriptedBackend, ScriptStep
from reactor.config import DispatcherConfig, ServiceConfig, SessionConfig
from reactor.dispatcher.faults import FaultInjector
from reactor.harness.policies import FallbackPolicyBackend
from reactor.harness.synthetic import (
    CallRecorder,
    Latency,
    SyntheticToolSpec,
    install_tools,
    spec_fault_injector,
)
from reactor.planner.cost import CostLedger, PricingRates
from reactor.planner.actions import Action
from reactor.planner.grammar import render_call
from reactor.planner.session import SessionState, SessionStatus
from reactor.registry.descriptors import ParamSpec, SemanticType
from reactor.runtime import Engine


logger = logging.getLogger(__name__)

ROBUSTNESS_ANSWER = "answer-42"
EXPENSIVE_RATES = PricingRates.of("0.005", "0.015")
CHEAP_RATES = PricingRates.of("0.0005", "0.0015")


@dataclass(frozen=True)
class RunRecord:
    """One session of an experiment."""

    config: str
    seed: int
    wall_time: float
    dollars: Decimal
    success: bool
    turns: int = 0
    backend_calls: int = 0

    def to_dict(self, include_timings: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "config": self.config,
            "seed": self.seed,
            "dollars": str(self.dollars),
            "success": self.success,
            "turns": self.turns,
            "backend_calls": self.backend_calls,
        }
        if include_timings:
            doc["wall_time"] = round(self.wall_time, 6)
        return doc


@dataclass
class ExperimentReport:
    """Runs of an experiment with per-configuration aggregates and comparison ratios."""

    scenario: str
    runs: list[RunRecord] = field(default_factory=list)
    ratios: dict[str, float] = field(default_factory=dict)
    timing_ratios: dict[str, float] = field(default_factory=dict)
    facts: dict[str, Any] = field(default_factory=dict)

    @property
    def configs(self) -> list[str]:
        """Configuration names in first-run order."""
        return list(dict.fromkeys(run.config for run in self.runs))

    def runs_of(self, config: str) -> list[RunRecord]:
        return [run for run in self.runs if run.config == config]

    def success_rate(self, config: str) -> float:
        runs = self.runs_of(config)
        return sum(run.success for run in runs) / len(runs) if runs else 0.0

    def mean_wall_time(self, config: str) -> float:
        return statistics.mean(run.wall_time for run in self.runs_of(config))

    def median_wall_time(self, config: str) -> float:
        return statistics.median(run.wall_time for run in self.runs_of(config))

    def total_dollars(self, config: str) -> Decimal:
        return sum((run.dollars for run in self.runs_of(config)), Decimal(0))

    def aggregates(self, include_timings: bool = False) -> dict[str, dict[str, Any]]:
        result = {}
        for config in self.configs:
            aggregate: dict[str, Any] = {
                "runs": len(self.runs_of(config)),
                "success_rate": round(self.success_rate(config), 6),
                "dollars": str(self.total_dollars(config)),
            }
            if include_timings:
                aggregate["mean_wall_time"] = round(self.mean_wall_time(config), 6)
                aggregate["median_wall_time"] = round(self.median_wall_time(config), 6)
            result[config] = aggregate
        return result

    def to_dict(self, include_timings: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "scenario": self.scenario,
            "aggregates": self.aggregates(include_timings),
            "ratios": {name: round(value, 6) for name, value in self.ratios.items()},
            "facts": self.facts,
            "runs": [run.to_dict(include_timings) for run in self.runs],
        }
        if include_timings:
            doc["timing_ratios"] = {
                name: round(value, 6) for name, value in self.timing_ratios.items()
            }
        return doc

    def to_json(self, include_timings: bool = False) -> str:
        """Machine-readable report; byte-identical for a seed without timings."""
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True, default=str)

    def render_table(self, include_timings: bool = True) -> str:
        """Plain text table of the aggregates and ratios."""
        columns = ["config", "runs", "success", "dollars"]
        if include_timings:
            columns += ["mean s", "median s"]
        rows = []
        for config, aggregate in self.aggregates(include_timings).items():
            row = [
                config,
                str(aggregate["runs"]),
                f"{aggregate['success_rate']:.3f}",
                aggregate["dollars"],
            ]
            if include_timings:
                row += [
                    f"{aggregate['mean_wall_time']:.3f}",
                    f"{aggregate['median_wall_time']:.3f}",
                ]
            rows.append(row)
        widths = [
            max([len(col), *(len(row[i]) for row in rows)]) for i, col in enumerate(columns)
        ]
        lines = [f"# {self.scenario}"]
        lines.append("  ".join(col.ljust(width) for col, width in zip(columns, widths)))
        lines.append("  ".join("-" * width for width in widths))
        lines.extend(
            "  ".join(cell.ljust(width) for cell, width in zip(row, widths)) for row in rows
        )
        ratios = dict(self.ratios)
        if include_timings:
            ratios.update(self.timing_ratios)
        lines.extend(f"{name}: {value:.3f}" for name, value in ratios.items())
        return "\n".join(lines)


def run_session_with(
    specs: Sequence[SyntheticToolSpec],
    backend: PlannerBackend,
    config: ServiceConfig,
    task: str,
    seed: int = 0,
    fault_injector: FaultInjector | None = None,
) -> tuple[SessionState, float, CallRecorder]:
    """
    Run one session on a fresh engine with synthetic tools.

    :return: The finished session, its wall time in seconds and the call recorder.
    """
    if fault_injector is None:
        fault_injector = spec_fault_injector(list(specs), seed)
    engine = Engine(config, backend=backend, fault_injector=fault_injector)
    recorder = CallRecorder()
    try:
        for descriptor in install_tools(list(specs), engine.inproc, recorder, seed):
            engine.registry.add(descriptor)
        started = time.perf_counter()
        session = engine.planner.run(task)
        elapsed = time.perf_counter() - started
    finally:
        engine.shutdown()
    return session, elapsed, recorder


def group_script(calls: Sequence[Action], answer: str = "all tasks done") -> list[ScriptStep]:
    """Script issuing one action group, then answering."""
    line = " && ".join(render_call(call) for call in calls)
    return [
        ScriptStep(response=f"Thought: These tasks are independent.\nAction: {line}"),
        ScriptStep(response=f"Thought: Every task finished.\nFinal Answer: {answer}"),
    ]


def worker_spec(name: str, latency: Latency, max_parallel: int) -> SyntheticToolSpec:
    return SyntheticToolSpec(
        name=name,
        latency=latency,
        max_parallel=max_parallel,
        params=(ParamSpec("task", SemanticType.INTEGER),),
        response_template="{tool} finished task {task}",
    )


def run_parallelism_experiment(
    n_tasks: int = 2,
    latency: float | Latency = 1.0,
    seeds: Sequence[int] = (0,),
    capacity: int | None = None,
) -> ExperimentReport:
    """
    Run one group of `n_tasks` calls in parallel and forced-sequential mode.

    :param n_tasks: Calls in the group.
    :param latency: Per-call latency of the worker tool.
    :param seeds: One parallel and one sequential run per seed.
    :param capacity: max_parallel of the worker; `n_tasks` when None.
    """
    if n_tasks < 1:
        raise ValueError("the parallelism experiment needs at least one task")
    latency = Latency.parse(latency)
    capacity = capacity or n_tasks
    specs = [worker_spec("Worker", latency, capacity)]
    calls = [Action("Worker", {"task": index}, group="g0") for index in range(1, n_tasks + 1)]
    report = ExperimentReport(scenario=f"parallelism n={n_tasks} c={capacity}")
    for seed in seeds:
        for name, sequential in (("parallel", False), ("sequential", True)):
            config = ServiceConfig(dispatcher=DispatcherConfig(sequential=sequential))
            session, elapsed, _recorder = run_session_with(
                specs, ScriptedBackend(group_script(calls)), config, "Run every task.", seed
            )
            report.runs.append(_record(name, seed, elapsed, session))
    report.timing_ratios["sequential/parallel"] = (
        report.mean_wall_time("sequential") / report.mean_wall_time("parallel")
    )
    per_call = latency.high or latency.low
    report.facts["expected_parallel_seconds"] = math.ceil(n_tasks / capacity) * per_call
    report.facts["expected_sequential_seconds"] = n_tasks * per_call
    return report


def robustness_specs(alternatives: bool, latency: float = 0.0) -> list[SyntheticToolSpec]:
    names = ["Primary", "Backup"] if alternatives else ["Primary"]
    return [
        SyntheticToolSpec(
            name=name,
            latency=Latency(latency),
            params=(ParamSpec("query", SemanticType.STRING),),
            response_template=ROBUSTNESS_ANSWER,
            max_parallel=4,
        )
        for name in names
    ]


def run_robustness_experiment(
    failure_probability: float = 0.2,
    runs: int = 200,
    seed: int = 0,
    alternatives: bool = True,
    max_turns: int = 10,
    workers: int = 8,
) -> ExperimentReport:
    """
    Compare completion rates under injected tool failures.

    Three configurations share the seeds: `baseline` (no failures, replanning),
    `replan` and `no-replan` (both at `failure_probability`).

    :param failure_probability: Chance that a call fails at the invocation boundary.
    :param runs: Sessions per configuration.
    :param seed: First seed; run i uses `seed + i`.
    :param alternatives: Register a backup tool next to the primary one.
    :param max_turns: Turn cap of each session.
    :param workers: Sessions run concurrently.
    """
    specs = robustness_specs(alternatives)
    tool_names = [spec.name for spec in specs]
    config = ServiceConfig(session=SessionConfig(max_turns=max_turns))
    configurations = (
        ("baseline", 0.0, True),
        ("replan", failure_probability, True),
        ("no-replan", failure_probability, False),
    )
    report = ExperimentReport(scenario=f"robustness p={failure_probability:g}")

    def one_run(name: str, probability: float, replan: bool, run_seed: int) -> RunRecord:
        session, elapsed, _recorder = run_session_with(
            specs,
            FallbackPolicyBackend(tool_names, replan=replan),
            config,
            "Look up the answer.",
            run_seed,
            fault_injector=FaultInjector(probability, seed=run_seed),
        )
        return _record(name, run_seed, elapsed, session, ROBUSTNESS_ANSWER)

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="reactor-run") as pool:
        for name, probability, replan in configurations:
            futures = [
                pool.submit(one_run, name, probability, replan, seed + index)
                for index in range(runs)
            ]
            report.runs.extend(future.result() for future in futures)

    baseline = report.success_rate("baseline")
    report.ratios["replan/baseline"] = report.success_rate("replan") / baseline if baseline else 0.0
    report.ratios["no-replan/baseline"] = (
        report.success_rate("no-replan") / baseline if baseline else 0.0
    )
    report.timing_ratios["replan overhead seconds"] = (
        report.mean_wall_time("replan") - report.mean_wall_time("baseline")
    )
    report.facts["max_backend_calls"] = max(run.backend_calls for run in report.runs)
    return report


@dataclass(frozen=True)
class TokenTrace:
    """Planner calls and tool token usage of a workload."""

    calls: tuple[tuple[int, int], ...]
    tool_tokens: dict[str, int] = field(default_factory=dict)

    @classmethod
    def of_ledger(cls, ledger: CostLedger) -> TokenTrace:
        return cls(ledger.calls, ledger.tool_tokens)


@dataclass(frozen=True)
class CostConfig:
    """Planner rates plus per-tool rates, all per 1000 tokens."""

    name: str
    rates: PricingRates
    tool_rates: dict[str, Decimal] = field(default_factory=dict)


def default_cost_configs(remote_tool: str = "Summarizer") -> tuple[CostConfig, CostConfig]:
    """Every token at the expensive rate, versus a cheap planner with an expensive remote tool."""
    expensive = EXPENSIVE_RATES.completion
    return (
        CostConfig("uniform", EXPENSIVE_RATES, {remote_tool: expensive}),
        CostConfig("split", CHEAP_RATES, {remote_tool: expensive}),
    )


def hand_cost(trace: TokenTrace, config: CostConfig) -> Decimal:
    """Price a trace by the formula, without a ledger."""
    thousand = Decimal(1000)
    planner = sum(
        (
            Decimal(prompt) / thousand * config.rates.prompt
            + Decimal(completion) / thousand * config.rates.completion
            for prompt, completion in trace.calls
        ),
        Decimal(0),
    )
    tools = sum(
        (
            Decimal(tokens) / thousand * config.tool_rates[tool]
            for tool, tokens in trace.tool_tokens.items()
            if tool in config.tool_rates
        ),
        Decimal(0),
    )
    return planner + tools


def run_cost_experiment(
    trace: TokenTrace,
    configs: Sequence[CostConfig] | None = None,
) -> ExperimentReport:
    """
    Price one token trace under several rate configurations.

    Each ledger total is checked against `hand_cost`; the report's facts hold
    the totals and whether every ledger matched.
    """
    configs = list(configs or default_cost_configs())
    report = ExperimentReport(scenario="cost")
    matches = {}
    for config in configs:
        ledger = CostLedger(config.rates)
        for prompt, completion in trace.calls:
            ledger.record(prompt, completion)
        for tool, tokens in trace.tool_tokens.items():
            ledger.record_tool(tool, tokens, config.tool_rates.get(tool))
        expected = hand_cost(trace, config)
        matches[config.name] = ledger.dollars == expected
        report.runs.append(
            RunRecord(
                config=config.name,
                seed=0,
                wall_time=0.0,
                dollars=ledger.dollars,
                success=matches[config.name],
                backend_calls=ledger.backend_calls,
            )
        )
    report.facts["ledger_matches_hand_sum"] = all(matches.values())
    if len(configs) >= 2:
        first, second = configs[0].name, configs[1].name
        first_cost = report.total_dollars(first)
        if first_cost:
            report.ratios[f"{second}/{first}"] = float(report.total_dollars(second) / first_cost)
    return report


def run_scalability_experiment(
    pool_sizes: Sequence[int] = (2, 5, 10, 15),
    n_subtasks: int = 15,
    latency: float = 0.1,
    seed: int = 0,
) -> ExperimentReport:
    """
    Spread one group of `n_subtasks` calls over pools of single-slot workers.

    Facts record each pool's prompt size in characters.
    """
    report = ExperimentReport(scenario=f"scalability n={n_subtasks}")
    for size in pool_sizes:
        specs = [worker_spec(f"Worker{index}", Latency(latency), 1) for index in range(1, size + 1)]
        calls = [
            Action(f"Worker{task % size + 1}", {"task": task + 1}, group="g0")
            for task in range(n_subtasks)
        ]
        backend = RecordingBackend(ScriptedBackend(group_script(calls)))
        session, elapsed, _recorder = run_session_with(
            specs, backend, ServiceConfig(), "Run every task.", seed
        )
        report.runs.append(_record(f"pool-{size}", seed, elapsed, session))
        report.facts[f"pool-{size} prompt chars"] = len(backend.prompts[0])
    return report


def _record(
    config: str,
    seed: int,
    elapsed: float,
    session: SessionState,
    expected: str | None = None,
) -> RunRecord:
    done = session.status is SessionStatus.DONE
    success = done and (expected is None or expected in (session.final_answer or ""))
    return RunRecord(
        config=config,
        seed=seed,
        wall_time=elapsed,
        dollars=session.cost.dollars,
        success=success,
        turns=session.turn,
        backend_calls=session.backend_calls,
    )


EXPERIMENTS: dict[str, Callable[..., ExperimentReport]] = {
    "parallelism": run_parallelism_experiment,
    "robustness": run_robustness_experiment,
    "scalability": run_scalability_experiment,
}
