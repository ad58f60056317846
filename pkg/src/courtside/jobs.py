"""In-process asynchronous job runner for training and label generation.

Jobs move Queued -> Running -> Succeeded | Failed, never backwards.
Training and generation run on separate bounded pools so a long training
run cannot starve generation requests.
"""

from __future__ import annotations

import enum
import threading
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


class JobKind(enum.Enum):
    TRAIN = "train"
    GENERATE = "generate"


class JobState(enum.Enum):
    QUEUED = "queued"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


_ALLOWED = {
    JobState.QUEUED: {JobState.RUNNING},
    JobState.RUNNING: {JobState.SUCCEEDED, JobState.FAILED},
    JobState.SUCCEEDED: set(),
    JobState.FAILED: set(),
}


@dataclass
class Job:
    job_id: str
    kind: JobKind
    state: JobState = JobState.QUEUED
    progress: float = 0.0
    message: str = ""
    result: Optional[Any] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transition(self, state: JobState, message: str = "") -> None:
        with self._lock:
            if state not in _ALLOWED[self.state]:
                raise RuntimeError(f"illegal job transition {self.state} -> {state}")
            self.state = state
            if message:
                self.message = message

    def set_progress(self, progress: float, message: str = "") -> None:
        with self._lock:
            self.progress = min(max(progress, 0.0), 1.0)
            if message:
                self.message = message

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind.value,
            "state": self.state.value,
            "progress": self.progress,
            "message": self.message,
        }


class QueueFullError(RuntimeError):
    pass


class JobRunner:
    def __init__(
        self,
        train_workers: int = 1,
        generate_workers: int = 2,
        max_pending: int = 32,
    ):
        self._pools = {
            JobKind.TRAIN: ThreadPoolExecutor(
                max_workers=train_workers, thread_name_prefix="train-job"
            ),
            JobKind.GENERATE: ThreadPoolExecutor(
                max_workers=generate_workers, thread_name_prefix="generate-job"
            ),
        }
        self._jobs: dict[str, Job] = {}
        self._guard = threading.Lock()
        self.max_pending = max_pending

    def submit(self, kind: JobKind, fn: Callable[[Job], Any]) -> Job:
        with self._guard:
            pending = sum(
                1
                for j in self._jobs.values()
                if j.state in (JobState.QUEUED, JobState.RUNNING)
            )
            if pending >= self.max_pending:
                raise QueueFullError("job queue full")
            job = Job(job_id=uuid.uuid4().hex, kind=kind)
            self._jobs[job.job_id] = job

        def run():
            job.transition(JobState.RUNNING)
            try:
                job.result = fn(job)
            except Exception as exc:  # job failures are reported, not raised
                job.transition(JobState.FAILED, f"{type(exc).__name__}: {exc}")
                job.result = traceback.format_exc()
            else:
                job.set_progress(1.0)
                job.transition(JobState.SUCCEEDED, job.message or "done")

        self._pools[kind].submit(run)
        return job

    def get(self, job_id: str) -> Optional[Job]:
        return self._jobs.get(job_id)

    def shutdown(self) -> None:
        for pool in self._pools.values():
            pool.shutdown(wait=False, cancel_futures=True)
