"""
Ordered task execution over a process pool.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from tqdm import tqdm

logger = logging.getLogger(__name__)

WORKERS_ENV = "EPF_WORKERS"


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count from the argument, then EPF_WORKERS, then 1."""
    if workers is None:
        env = os.getenv(WORKERS_ENV)
        workers = int(env) if env else 1
    return max(1, int(workers))


def run_parallel(
    func: Callable[[Any], Any],
    tasks: Sequence[Any],
    workers: Optional[int] = None,
    desc: Optional[str] = None,
    progress: bool = False,
) -> List[Any]:
    """
    Run func over tasks and return results in task order.

    Args:
        func: Picklable module-level callable taking one task
        tasks: Task payloads
        workers: Process count (1 runs inline)
        desc: Progress bar label
        progress: Show a tqdm progress bar

    Returns:
        List of results aligned with tasks
    """
    workers = resolve_workers(workers)
    tasks = list(tasks)
    if not tasks:
        return []
    logger.debug(f"Running {len(tasks)} task(s) '{desc or func.__name__}' on {workers} worker(s)")

    if workers == 1 or len(tasks) == 1:
        iterator = tqdm(tasks, desc=desc, disable=not progress)
        return [func(task) for task in iterator]

    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
        iterator = executor.map(func, tasks)
        return list(tqdm(iterator, total=len(tasks), desc=desc, disable=not progress))
