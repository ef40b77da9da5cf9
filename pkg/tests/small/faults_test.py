"""Unit tests for the FaultInjector."""

from reactor.dispatcher.faults import FaultInjector


def test_same_seed_same_decisions():
    """Should fail the same calls for the same seed."""
    first = FaultInjector(0.3, seed=42)
    second = FaultInjector(0.3, seed=42)

    decisions = [first.should_fail("Lookup") for _ in range(200)]

    assert decisions == [second.should_fail("Lookup") for _ in range(200)]
    assert first.injected == sum(decisions)
    assert 30 <= first.injected <= 90


def test_per_tool_probabilities():
    """Should only fail tools with a configured probability."""
    injector = FaultInjector({"Flaky": 1.0}, seed=0)

    assert injector.should_fail("Flaky")
    assert not injector.should_fail("Solid")
    assert injector.probability("Solid") == 0.0


def test_zero_probability_never_fails():
    """Should never fail with probability zero."""
    injector = FaultInjector(0.0, seed=1)

    assert not any(injector.should_fail("Lookup") for _ in range(100))
    assert injector.injected == 0
