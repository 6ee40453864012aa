"""Single-machine analog of a cluster executor model.

Executors are slot groups inside one process: total concurrency is
numExecutors x executorCores thread slots over a single shared FIFO queue.
Input corpora are split into blocks of whole records (records never straddle
blocks), each block becoming one task.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .audio_ingest import AudioFileMeta, RecordPlan
from .errors import BlockTooSmall, InvariantViolation

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 64 * 2 ** 20


@dataclass(frozen=True)
class ExecutorConfig:
    """Worker-pool shape, mirroring the num-executors / executor-cores /
    block-size knobs."""

    num_executors: int = 1
    executor_cores: int = 1
    block_size_bytes: int = DEFAULT_BLOCK_SIZE
    max_retries: int = 2
    reserved_cores: int = 1

    def __post_init__(self):
        if self.num_executors < 1 or self.executor_cores < 1:
            raise InvariantViolation("executors and cores must be >= 1")
        if self.block_size_bytes < 1:
            raise InvariantViolation("block size must be positive")
        if self.max_retries < 0:
            raise InvariantViolation("max retries must be >= 0")

    @property
    def total_slots(self) -> int:
        return self.num_executors * self.executor_cores


@dataclass(frozen=True)
class TaskDescriptor:
    file_id: str
    record_start: int  # inclusive
    record_end: int  # exclusive
    block_id: int
    attempt: int = 1  # 1-based; a task retried twice completes with attempt=3

    @property
    def record_count(self) -> int:
        return self.record_end - self.record_start


@dataclass
class TaskFailure:
    task: TaskDescriptor
    error: str
    attempts: int


@dataclass
class RunOutcome:
    """Results aligned with the input task order, plus a failure manifest."""

    results: list
    failures: list[TaskFailure]
    peak_in_flight: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def split_into_blocks(
    files: Sequence[tuple[AudioFileMeta, RecordPlan]], cfg: ExecutorConfig
) -> list[TaskDescriptor]:
    """Assign contiguous runs of whole records to blocks of at most
    blockSizeBytes. Every record lands in exactly one task."""
    tasks: list[TaskDescriptor] = []
    block_id = 0
    for meta, plan in files:
        record_bytes = plan.record_size_samples * meta.bytes_per_frame
        if record_bytes > cfg.block_size_bytes:
            raise BlockTooSmall(
                f"{meta.path}: record of {record_bytes} B exceeds block size "
                f"{cfg.block_size_bytes} B"
            )
        if plan.record_count == 0:
            continue
        per_block = cfg.block_size_bytes // record_bytes
        start = 0
        while start < plan.record_count:
            end = min(start + per_block, plan.record_count)
            tasks.append(
                TaskDescriptor(
                    file_id=meta.path,
                    record_start=start,
                    record_end=end,
                    block_id=block_id,
                )
            )
            block_id += 1
            start = end
    return tasks


def effective_parallelism(cfg: ExecutorConfig, host_cores: int,
                          task_count: int | None = None) -> int:
    """Usable concurrency after reserving daemon cores; never below 1."""
    if host_cores < 1:
        raise InvariantViolation("host must have at least one core")
    limit = min(cfg.total_slots, max(host_cores - cfg.reserved_cores, 1))
    if task_count is not None:
        limit = min(limit, max(task_count, 1))
    return max(limit, 1)


class _InFlightGauge:
    """Atomic counter with a high-water mark, for the no-over-subscription
    invariant."""

    def __init__(self):
        self._lock = threading.Lock()
        self._current = 0
        self.peak = 0

    def __enter__(self):
        with self._lock:
            self._current += 1
            self.peak = max(self.peak, self._current)
        return self

    def __exit__(self, *exc):
        with self._lock:
            self._current -= 1
        return False


def run(
    tasks: Sequence[TaskDescriptor],
    cfg: ExecutorConfig,
    task_fn: Callable[[TaskDescriptor], object],
) -> RunOutcome:
    """Execute tasks with exactly numExecutors x executorCores concurrent
    slots. task_fn must be pure per task. Failed tasks are retried up to
    maxRetries, then reported in the failure manifest.
    """
    results: list = [None] * len(tasks)
    failures: list[TaskFailure] = []
    gauge = _InFlightGauge()

    def _attempt(index: int, task: TaskDescriptor):
        with gauge:
            return task_fn(task)

    if not tasks:
        return RunOutcome(results=[], failures=[])

    with ThreadPoolExecutor(max_workers=cfg.total_slots) as pool:
        pending = {}
        for i, task in enumerate(tasks):
            fut = pool.submit(_attempt, i, task)
            pending[fut] = (i, task)
        while pending:
            done, _ = wait(list(pending), return_when=FIRST_COMPLETED)
            for fut in done:
                i, task = pending.pop(fut)
                exc = fut.exception()
                if exc is None:
                    results[i] = (task, fut.result())
                    continue
                if task.attempt <= cfg.max_retries:
                    retry = replace(task, attempt=task.attempt + 1)
                    log.warning("task %s failed (%s), attempt %d of %d",
                                task.block_id, exc, retry.attempt,
                                cfg.max_retries + 1)
                    new_fut = pool.submit(_attempt, i, retry)
                    pending[new_fut] = (i, retry)
                else:
                    log.error("task %s failed permanently: %s", task.block_id, exc)
                    failures.append(
                        TaskFailure(task=task, error=str(exc),
                                    attempts=task.attempt)
                    )
    results = [r for r in results if r is not None]
    return RunOutcome(results=results, failures=failures,
                      peak_in_flight=gauge.peak)
