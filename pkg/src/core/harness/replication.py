"""
Replication Queue - runs independent episodes on a bounded worker pool
and reduces them, in replication order, into per-round summaries.
"""
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..logging_utils import get_logger
from .config import ExperimentConfig
from .episode import PolicyFactory, RegretTrace, run_episode
from .seeding import episode_streams, replication_seed

logger = get_logger(__name__)

ProgressCallback = Callable[[int, int], None]


class TaskStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class ReplicationTask:
    """One episode of a replicated experiment."""
    id: int
    seed: int
    status: TaskStatus = TaskStatus.PENDING
    progress: int = 0
    error: Optional[str] = None
    result: Optional[RegretTrace] = None
    exception: Optional[BaseException] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "status": self.status.value,
            "progress": self.progress,
            "error": self.error,
        }


def resolve_workers(n_tasks: int, max_workers: Optional[int] = None) -> int:
    if max_workers is None:
        env = os.getenv("CMNL_THREADS", "").strip()
        try:
            max_workers = int(env) if env else (os.cpu_count() or 1)
        except ValueError:
            logger.warning("Ignoring non-integer CMNL_THREADS=%r", env)
            max_workers = os.cpu_count() or 1
    return max(1, min(max_workers, n_tasks))


class ReplicationQueue:
    """Holds replication tasks and executes them sequentially or on a thread pool."""

    def __init__(self, max_workers: Optional[int] = None):
        self._tasks: List[ReplicationTask] = []
        self._lock = threading.Lock()
        self._max_workers = max_workers

    def add_task(self, rep: int, seed: int) -> ReplicationTask:
        task = ReplicationTask(id=rep, seed=seed)
        with self._lock:
            self._tasks.append(task)
        logger.debug("Replication queued: rep=%s seed=%s", rep, seed)
        return task

    def get_task(self, task_id: int) -> Optional[ReplicationTask]:
        for task in self._tasks:
            if task.id == task_id:
                return task
        return None

    def get_all_tasks(self) -> List[ReplicationTask]:
        return self._tasks.copy()

    def get_stats(self) -> Dict[str, int]:
        counts = {status.value: 0 for status in TaskStatus}
        for task in self._tasks:
            counts[task.status.value] += 1
        counts["total"] = len(self._tasks)
        return counts

    def _process_task(self, task: ReplicationTask, handler: Callable[[int], RegretTrace]) -> None:
        task.status = TaskStatus.RUNNING
        try:
            task.result = handler(task.seed)
            task.status = TaskStatus.COMPLETED
            task.progress = 100
        except Exception as e:
            task.status = TaskStatus.FAILED
            task.error = str(e)
            task.exception = e
            logger.exception("Replication %s (seed=%s) failed", task.id, task.seed)

    def run(
        self,
        handler: Callable[[int], RegretTrace],
        parallel: bool = True,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> List[RegretTrace]:
        """Run every pending task; results come back ordered by task id."""
        pending = [t for t in self._tasks if t.status == TaskStatus.PENDING]
        total = len(pending)
        workers = resolve_workers(total, self._max_workers) if parallel else 1

        done = 0
        if workers == 1:
            for task in pending:
                self._process_task(task, handler)
                done += 1
                if progress_callback:
                    progress_callback(done, total)
        else:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="replication") as pool:
                futures = [pool.submit(self._process_task, task, handler) for task in pending]
                for future in as_completed(futures):
                    future.result()
                    done += 1
                    if progress_callback:
                        progress_callback(done, total)

        failed = [t for t in self._tasks if t.status == TaskStatus.FAILED]
        if failed:
            raise failed[0].exception
        return [t.result for t in sorted(self._tasks, key=lambda t: t.id)]


def _per_round_fraction(flags: np.ndarray) -> np.ndarray:
    """Mean over replications ignoring NaN entries; NaN where no replication reports."""
    counts = np.sum(~np.isnan(flags), axis=0)
    totals = np.nansum(flags, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)


@dataclass(eq=False)
class ReplicationSummary:
    config: ExperimentConfig
    seeds: List[int]
    traces: List[RegretTrace]
    regret_mean: np.ndarray
    regret_std: np.ndarray
    oracle_rev_mean: np.ndarray
    policy_rev_mean: np.ndarray
    tau_mean: np.ndarray
    good_event_frac: np.ndarray
    wall_time: float = 0.0

    @property
    def algorithm(self) -> str:
        return self.config.algorithms[0]

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def final_regret_mean(self) -> float:
        return float(self.regret_mean[-1])

    @property
    def final_regret_std(self) -> float:
        return float(self.regret_std[-1])

    @property
    def fit_warnings(self) -> int:
        return sum(1 for trace in self.traces if trace.fit_warning)

    @classmethod
    def from_traces(cls, config: ExperimentConfig, traces: Sequence[RegretTrace], wall_time: float = 0.0):
        cumulative = np.vstack([trace.cumulative_regret for trace in traces])
        return cls(
            config=config,
            seeds=[trace.seed for trace in traces],
            traces=list(traces),
            regret_mean=cumulative.mean(axis=0),
            regret_std=cumulative.std(axis=0),
            oracle_rev_mean=np.vstack([t.oracle_revenue for t in traces]).mean(axis=0),
            policy_rev_mean=np.vstack([t.policy_revenue for t in traces]).mean(axis=0),
            tau_mean=np.vstack([t.tau for t in traces]).mean(axis=0),
            good_event_frac=_per_round_fraction(np.vstack([t.good_event for t in traces])),
            wall_time=wall_time,
        )

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "N": self.N,
            "replications": len(self.traces),
            "final_regret_mean": self.final_regret_mean,
            "final_regret_std": self.final_regret_std,
            "fit_warnings": self.fit_warnings,
            "wall_time": self.wall_time,
        }


def replicate(
    config: ExperimentConfig,
    parallel: bool = True,
    progress_callback: Optional[ProgressCallback] = None,
    policy_factory: Optional[PolicyFactory] = None,
    max_workers: Optional[int] = None,
) -> ReplicationSummary:
    if len(config.algorithms) != 1:
        raise ConfigError("algorithm", "a single algorithm is required here; use a sweep for several")
    single = config.with_overrides(algorithm=config.algorithms[0])

    queue = ReplicationQueue(max_workers=max_workers)
    for rep in range(single.replications):
        queue.add_task(rep, replication_seed(single.base_seed, rep))

    def handler(seed: int) -> RegretTrace:
        return run_episode(single, policy_factory, streams=episode_streams(seed))

    started = time.perf_counter()
    traces = queue.run(handler, parallel=parallel, progress_callback=progress_callback)
    summary = ReplicationSummary.from_traces(single, traces, time.perf_counter() - started)
    logger.info(
        "Replicated %s x%s at N=%s: final regret %.4f +/- %.4f",
        summary.algorithm, len(traces), single.N, summary.final_regret_mean, summary.final_regret_std,
    )
    return summary


@dataclass(eq=False)
class SweepRow:
    N: int
    algorithm: str
    summary: ReplicationSummary

    @property
    def final_regret_mean(self) -> float:
        return self.summary.final_regret_mean

    @property
    def final_regret_std(self) -> float:
        return self.summary.final_regret_std


def sweep(
    config: ExperimentConfig,
    n_values: Sequence[int],
    parallel: bool = True,
    progress_callback: Optional[ProgressCallback] = None,
    max_workers: Optional[int] = None,
) -> List[SweepRow]:
    """One replicate() per (N, algorithm); every N shares the base seed."""
    if not n_values:
        raise ConfigError("N", "sweep needs at least one N value")
    rows = []
    for n in n_values:
        for algorithm in config.algorithms:
            point = config.with_overrides(N=int(n), algorithm=algorithm)
            summary = replicate(point, parallel=parallel, progress_callback=progress_callback, max_workers=max_workers)
            rows.append(SweepRow(N=int(n), algorithm=algorithm, summary=summary))
    return rows
