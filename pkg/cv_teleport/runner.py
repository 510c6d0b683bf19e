"""Async fan-out of sweep grid points over a thread pool."""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Awaitable, Callable, Sequence, TypeVar

try:
    import uvloop
    asyncio.set_event_loop_policy(uvloop.EventLoopPolicy())
except ImportError:
    pass

from . import config
from .errors import SweepError

logger = logging.getLogger(__name__)

P = TypeVar('P')
R = TypeVar('R')


async def evaluate_grid(points: Sequence[P], fn: Callable[[P], R], label: str = 'sweep') -> list[R]:
    """Evaluate fn at every grid point; results come back in grid order.

    Args:
        points: Grid points
        fn: Blocking per-point evaluation, run on the worker pool
        label: Name used in progress logs

    Returns:
        List of results, one per point
    """
    if not points:
        raise SweepError(f"Empty grid for {label}")

    semaphore = asyncio.Semaphore(config.MAX_CONCURRENT_POINTS)
    loop = asyncio.get_running_loop()
    completed_count = 0
    total_count = len(points)

    with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:

        async def evaluate_with_semaphore(point: P) -> R:
            nonlocal completed_count
            async with semaphore:
                result = await loop.run_in_executor(pool, fn, point)
            completed_count += 1
            if completed_count % 10 == 0 or completed_count == total_count:
                logger.info(f"Progress: {completed_count}/{total_count} {label} points evaluated")
            return result

        return list(await asyncio.gather(*(evaluate_with_semaphore(p) for p in points)))


def run_sync(coro: Awaitable[R]) -> R:
    """Run a coroutine to completion from synchronous code.

    Inside a running event loop (the MCP server) the coroutine gets its own
    loop on a helper thread.
    """
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return asyncio.run(coro)
    with ThreadPoolExecutor(max_workers=1, thread_name_prefix='cv-teleport-loop') as helper:
        return helper.submit(asyncio.run, coro).result()


def run_grid(points: Sequence[P], fn: Callable[[P], R], label: str = 'sweep') -> list[R]:
    return run_sync(evaluate_grid(points, fn, label))
