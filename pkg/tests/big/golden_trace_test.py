"""
End-to-end runs of the golden trace.

Covers:
- The scripted report comparison, batch and streaming, checked entry by entry.
- The capacity-1 rerun, which must still answer without overlapping page reads.
- The negative control where page 88 has no reader.
"""

import time

import pytest

from reactor.harness.golden import GOLDEN_TRANSCRIPT, GoldenVariant, run_golden_trace
from reactor.planner.session import SessionStatus


@pytest.mark.parametrize("stream", [False, True])
def test_golden_trace(stream: bool):
    """Should reproduce the golden transcript with overlapping single-page reads."""
    started = time.monotonic()

    report = run_golden_trace(stream=stream)

    assert time.monotonic() - started < 5
    assert report.passed, report.divergence
    assert all(report.checks.values())
    assert report.transcript == list(GOLDEN_TRANSCRIPT)
    first, second = report.recorder.calls_of("PDFParser")
    assert first.overlaps(second)
    assert {call.context["pages"] for call in (first, second)} == {"45", "88"}


def test_single_reader():
    """Should answer the same way at PDFParser capacity 1, reading one page at a time."""
    report = run_golden_trace(GoldenVariant.SINGLE_READER)

    assert report.passed, report.divergence
    assert not report.recorder.any_overlap("PDFParser")
    assert report.recorder.high_water("PDFParser") == 1
    assert "13%" in report.session.final_answer


def test_missing_page():
    """Should fail at the unavailable observation when page 88 cannot be read."""
    report = run_golden_trace(GoldenVariant.MISSING_PAGE)

    assert not report.passed
    assert report.divergence.startswith("entry 7:")
    assert "tool unavailable" in report.divergence
    assert report.session.status is SessionStatus.FAILED
    assert report.transcript[:7] == list(GOLDEN_TRANSCRIPT[:7])
