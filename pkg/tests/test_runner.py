import time

import pytest

from cv_teleport import config
from cv_teleport.errors import SweepError
from cv_teleport.runner import evaluate_grid, run_grid, run_sync


def slow_square(x: float) -> float:
    # later points finish first
    time.sleep(0.001 * (10 - x))
    return x * x


def test_results_in_grid_order(monkeypatch):
    monkeypatch.setattr(config, 'MAX_CONCURRENT_POINTS', 4)
    assert run_grid(list(range(10)), slow_square) == [x * x for x in range(10)]


def test_empty_grid():
    with pytest.raises(SweepError):
        run_grid([], slow_square)


def test_worker_errors_propagate():
    def fail(x):
        raise ValueError(f"bad point {x}")

    with pytest.raises(ValueError):
        run_grid([1, 2], fail)


async def test_inside_running_loop():
    assert await evaluate_grid([1, 2, 3], lambda x: -x) == [-1, -2, -3]
    # helper-thread path used by the MCP server
    assert run_sync(evaluate_grid([2], lambda x: x + 1)) == [3]


def test_progress_logging(caplog):
    with caplog.at_level('INFO', logger='cv_teleport.runner'):
        run_grid(list(range(20)), lambda x: x, 'unit')
    assert 'Progress: 20/20 unit points evaluated' in caplog.text
