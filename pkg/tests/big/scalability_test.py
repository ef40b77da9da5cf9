"""Spreading one group of subtasks over growing pools of single-slot workers."""

import math

import pytest

from reactor.harness.scenarios import load_scenario, run_scenario
from tests.big.conftest import SCENARIOS_DIR

POOL_SIZES = (2, 5, 10, 15)


@pytest.fixture(scope="module")
def report():
    """Run the bundled scalability scenario once for every test of the module."""
    return run_scenario(load_scenario(SCENARIOS_DIR / "scalability.scenario.yaml"))


def test_every_pool_completes(report):
    """Should finish the group with every pool size."""
    assert report.configs == [f"pool-{size}" for size in POOL_SIZES]
    assert all(report.success_rate(config) == 1.0 for config in report.configs)


def test_wall_time_follows_pool_size(report):
    """Should take about ceil(15 / pool) latencies for each pool."""
    for size in POOL_SIZES:
        expected = math.ceil(15 / size) * 0.1
        assert report.mean_wall_time(f"pool-{size}") == pytest.approx(expected, rel=0.25, abs=0.05)


def test_prompt_grows_with_pool(report):
    """Should list every worker in the prompt, so the prompt grows with the pool."""
    sizes = [report.facts[f"pool-{size} prompt chars"] for size in POOL_SIZES]

    assert sizes == sorted(sizes)
    assert len(set(sizes)) == len(sizes)
