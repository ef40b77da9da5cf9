"""
Golden trace: a scripted PDF question answered end to end, fully offline.

The planner script looks up where a 100-page report mentions the Q1 ARR,
reads pages 45 and 88 in parallel, asks a remote summarizer to compare the
two figures and answers. The run passes when the transcript equals the
golden transcript, the event stream replays it exactly, both page reads ran
concurrently (or strictly one after the other at capacity 1) and no tool saw
more than a single page of the report.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Any

from reactor.backends.scripted import ScriptedBackend, ScriptStep
from reactor.config import ServiceConfig, SessionConfig
from reactor.dispatcher.privacy import PAGE_BREAK, Attachment
from reactor.errors import ToolInvocationError
from reactor.harness.synthetic import CallRecorder, Latency, SyntheticTool, SyntheticToolSpec
from reactor.observability.events import SCRATCHPAD_EVENT_TYPES
from reactor.planner.scratchpad import ScratchpadEntry
from reactor.planner.session import SessionState, SessionStatus
from reactor.registry.descriptors import Locality, ParamSpec, SemanticType
from reactor.runtime import Engine


logger = logging.getLogger(__name__)

REPORT_NAME = "report.pdf"
REPORT_PAGES = 100
ARR_PAGES = {45: "Q1 2014 ARR: $5.2M", 88: "Q1 2013 ARR: $4.6M"}
PAGE_READ_SECONDS = 0.2

GOLDEN_TASK = "Compare the ARR of Q1 2014 with that of Q1 2013 in the attached report."

GOLDEN_SCRIPT = (
    ScriptStep(
        expect="Task: Compare the ARR",
        response=(
            "Thought: I need to find where the report states the Q1 ARR.\n"
            'Action: DocIndex(query="ARR Q1")'
        ),
    ),
    ScriptStep(
        expect="matches pages 45, 88",
        response=(
            "Thought: Both pages are needed, so I will read them in parallel.\n"
            'Action: PDFParser(page=45, query="Extract ARR Q1 2014") && '
            'PDFParser(page=88, query="Extract ARR Q1 2013")'
        ),
    ),
    ScriptStep(
        expect="Q1 2013 ARR: $4.6M",
        response=(
            "Thought: Now compare the two figures.\n"
            'Action: Summarizer(contents=["Q1 2014 ARR: $5.2M", "Q1 2013 ARR: $4.6M"], '
            'instruction="compare these metrics")'
        ),
    ),
    ScriptStep(
        expect="~13% higher",
        response=(
            "Thought: I can answer now.\n"
            "Final Answer: In Q1 2014 the ARR was $5.2M, which is about 13% higher "
            "than the $4.6M in Q1 2013."
        ),
    ),
)

GOLDEN_TRANSCRIPT = (
    "Thought: I need to find where the report states the Q1 ARR.",
    'Action: DocIndex(query="ARR Q1")',
    "Observation: DocIndex: query 'ARR Q1' matches pages 45, 88",
    "Thought: Both pages are needed, so I will read them in parallel.",
    'Action: PDFParser(page=45, query="Extract ARR Q1 2014")',
    'Action: PDFParser(page=88, query="Extract ARR Q1 2013")',
    "Observation: PDFParser: Q1 2014 ARR: $5.2M",
    "Observation: PDFParser: Q1 2013 ARR: $4.6M",
    "Thought: Now compare the two figures.",
    'Action: Summarizer(contents=["Q1 2014 ARR: $5.2M", "Q1 2013 ARR: $4.6M"], '
    'instruction="compare these metrics")',
    "Observation: Summarizer: ARR in Q1 2014 was $5.2M, ~13% higher than Q1 2013's $4.6M.",
    "Thought: I can answer now.",
    "Final Answer: In Q1 2014 the ARR was $5.2M, which is about 13% higher "
    "than the $4.6M in Q1 2013.",
)

REQUIRED_ANSWER_PARTS = ("$5.2M", "$4.6M", "13%")

_ARR_LINE = re.compile(r"Q1 (\d{4}) ARR: \$([0-9.]+)M")


class GoldenVariant(str, Enum):
    NOMINAL = "nominal"
    SINGLE_READER = "single-reader"
    MISSING_PAGE = "missing-page"


@dataclass
class GoldenReport:
    """Outcome of a golden run."""

    variant: GoldenVariant
    passed: bool
    divergence: str | None
    transcript: list[str]
    session: SessionState
    recorder: CallRecorder
    checks: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant.value,
            "passed": self.passed,
            "divergence": self.divergence,
            "checks": self.checks,
            "answer": self.session.final_answer,
            "status": self.session.status.value,
        }


def build_report() -> Attachment:
    """The 100-page report; only pages 45 and 88 mention the ARR."""
    pages = [
        ARR_PAGES.get(number, f"Page {number}: operational notes, nothing about revenue.")
        for number in range(1, REPORT_PAGES + 1)
    ]
    return Attachment.from_text(REPORT_NAME, PAGE_BREAK.join(pages))


def golden_tool_specs(pdf_parallel: int = 4) -> list[SyntheticToolSpec]:
    """Specs of DocIndex, PDFParser and Summarizer."""
    return [
        SyntheticToolSpec(
            name="DocIndex",
            description="find the pages of the attached document that mention every query word",
            params=(ParamSpec("query", SemanticType.STRING),),
            max_parallel=2,
        ),
        SyntheticToolSpec(
            name="PDFParser",
            description="extract the lines answering a query from one page of the attachment",
            params=(
                ParamSpec("page", SemanticType.INTEGER),
                ParamSpec("query", SemanticType.STRING),
            ),
            latency=Latency(PAGE_READ_SECONDS),
            max_parallel=pdf_parallel,
            accepts_attachments=True,
        ),
        SyntheticToolSpec(
            name="Summarizer",
            description="summarize or compare short texts",
            params=(
                ParamSpec("contents", SemanticType.STRING_LIST),
                ParamSpec("instruction", SemanticType.STRING),
            ),
            locality=Locality.REMOTE,
            cost_per_1k_tokens=Decimal("0.01"),
        ),
    ]


def doc_index(report: Attachment):
    """Handler body of DocIndex: pages whose text contains every query word."""

    def respond(document: dict[str, Any]) -> str:
        query = str(document["args"]["query"])
        words = query.split()
        pages = [
            str(number)
            for number, text in enumerate(report.pages, start=1)
            if all(word in text for word in words)
        ]
        return f"query '{query}' matches pages {', '.join(pages) or 'none'}"

    return respond


def pdf_parser(document: dict[str, Any]) -> str:
    """Handler body of PDFParser: the ARR line of the page it received."""
    context = document.get("context") or {}
    lines = [line for line in str(context.get("text", "")).splitlines() if "ARR:" in line]
    return "\n".join(lines) or "no matching line"


def summarizer(document: dict[str, Any]) -> str:
    """Handler body of Summarizer: compare two ARR figures."""
    figures = {}
    for content in document["args"].get("contents", []):
        match = _ARR_LINE.search(content)
        if match:
            figures[match.group(1)] = Decimal(match.group(2))
    if len(figures) != 2:
        return "cannot compare: expected two ARR figures"
    (old_year, old), (new_year, new) = sorted(figures.items())
    growth = ((new - old) / old * 100).quantize(Decimal(1))
    return (
        f"ARR in Q1 {new_year} was ${new}M, ~{growth}% higher than Q1 {old_year}'s ${old}M."
    )


def _missing_page(handler: SyntheticTool, page: int):
    def call(document: dict[str, Any]) -> dict[str, Any]:
        if document["args"].get("page") == page:
            raise ToolInvocationError(f"no reader for page {page}", unavailable=True)
        return handler(document)

    return call


def build_golden_engine(
    variant: GoldenVariant = GoldenVariant.NOMINAL,
    stream: bool = False,
) -> tuple[Engine, CallRecorder, Attachment]:
    """Engine with the golden script and the three fake tools installed."""
    session_config = SessionConfig(stream=stream)
    engine = Engine(
        ServiceConfig(session=session_config),
        backend=ScriptedBackend(GOLDEN_SCRIPT, chunk_size=7 if stream else None),
    )
    recorder = CallRecorder()
    report = build_report()
    responders = {
        "DocIndex": doc_index(report),
        "PDFParser": pdf_parser,
        "Summarizer": summarizer,
    }
    pdf_parallel = 1 if variant is GoldenVariant.SINGLE_READER else 4
    for spec in golden_tool_specs(pdf_parallel):
        tool = SyntheticTool(spec, recorder, respond=responders[spec.name])
        handler = tool
        if variant is GoldenVariant.MISSING_PAGE and spec.name == "PDFParser":
            handler = _missing_page(tool, 88)
        endpoint = engine.inproc.register(spec.name, handler)
        engine.registry.add(spec.descriptor(endpoint))
    return engine, recorder, report


def run_golden_trace(
    variant: GoldenVariant = GoldenVariant.NOMINAL,
    stream: bool = False,
) -> GoldenReport:
    """
    Run the golden session and check it.

    :param variant: Nominal run, PDFParser at capacity 1, or page 88 unreadable.
    :param stream: Drive the planner through the streaming path.
    :return: The report; `divergence` names the first failed check.
    """
    engine, recorder, report = build_golden_engine(variant, stream)
    try:
        session = engine.planner.new_session(GOLDEN_TASK, [report])
        engine.bus.open_session(session.session_id)
        engine.planner.run_session(session)
        engine.bus.close_session(session.session_id)
        replayed = [
            ScratchpadEntry.from_dict(event.content)
            for event in engine.bus.events(session.session_id)
            if event.event_type in SCRATCHPAD_EVENT_TYPES
        ]
    finally:
        engine.shutdown()

    transcript = [entry.render() for entry in session.scratchpad]
    checks: dict[str, bool] = {}
    divergences: list[str] = []

    def check(name: str, passed: bool, detail: str) -> None:
        checks[name] = passed
        if not passed:
            divergences.append(detail)

    mismatch = first_divergence(GOLDEN_TRANSCRIPT, transcript)
    check("transcript", mismatch is None, mismatch or "")
    check(
        "event stream",
        replayed == list(session.scratchpad.entries),
        "event stream does not replay the scratchpad",
    )
    answer = session.final_answer or ""
    check(
        "answer",
        session.status is SessionStatus.DONE
        and all(part in answer for part in REQUIRED_ANSWER_PARTS),
        f"answer {answer!r} lacks one of {', '.join(REQUIRED_ANSWER_PARTS)}",
    )
    pdf_actions = [
        entry for entry in session.scratchpad if entry.render().startswith("Action: PDFParser(")
    ]
    check(
        "shared group",
        len(pdf_actions) == 2 and len({entry.group for entry in pdf_actions}) == 1,
        "the two PDFParser actions are not one group",
    )
    overlapped = recorder.any_overlap("PDFParser")
    expect_overlap = variant is not GoldenVariant.SINGLE_READER
    check(
        "overlap",
        overlapped == expect_overlap,
        "PDFParser calls " + ("did not overlap" if expect_overlap else "overlapped at capacity 1"),
    )
    check(
        "single pages",
        all(
            call.context is None
            or ("-" not in call.context["pages"] and PAGE_BREAK not in call.context["text"])
            for call in recorder.calls
        ),
        "a tool received more than one page",
    )
    check(
        "remote context",
        all(call.context is None for call in recorder.calls_of("Summarizer")),
        "the remote summarizer received attachment content",
    )

    passed = not divergences
    if not passed:
        logger.info("Golden run %s failed: %s", variant.value, divergences[0])
    return GoldenReport(
        variant=variant,
        passed=passed,
        divergence=divergences[0] if divergences else None,
        transcript=transcript,
        session=session,
        recorder=recorder,
        checks=checks,
    )


def first_divergence(expected: tuple[str, ...] | list[str], actual: list[str]) -> str | None:
    """Describe the first entry where two transcripts differ."""
    for index, (want, got) in enumerate(zip(expected, actual)):
        if want != got:
            return f"entry {index}: expected {want!r}, got {got!r}"
    if len(expected) != len(actual):
        if len(actual) < len(expected):
            return f"entry {len(actual)}: expected {expected[len(actual)]!r}, transcript ended"
        return f"entry {len(expected)}: unexpected {actual[len(expected)]!r}"
    return None
